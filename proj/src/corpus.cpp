#include "bridger/corpus.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "bridger/rng.h"

namespace bridger {

using nlohmann::json;

int relation_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (s == kRelationNames[i]) return static_cast<int>(i);
  }
  throw DataError("unknown bridging relation label: " + s);
}

int Corpus::total_mentions() const {
  int n = 0;
  for (const auto& d : docs) n += static_cast<int>(d.mentions.size());
  return n;
}

int Corpus::total_links() const {
  int n = 0;
  for (const auto& d : docs) n += static_cast<int>(d.bridging.size());
  return n;
}

int Corpus::total_clusters() const {
  int n = 0;
  for (const auto& d : docs) n += static_cast<int>(d.clusters.size());
  return n;
}

const Document* Corpus::find(const std::string& doc_id) const {
  for (const auto& d : docs) {
    if (d.id == doc_id) return &d;
  }
  return nullptr;
}

DocGold build_doc_gold(const Document& doc) {
  DocGold gold;
  const int n = static_cast<int>(doc.mentions.size());
  gold.cluster_of.assign(n, -1);
  gold.bridging_antecedent.assign(n, -1);
  gold.bridging_relation.assign(n, -1);
  for (std::size_t c = 0; c < doc.clusters.size(); ++c) {
    for (int m : doc.clusters[c]) gold.cluster_of[m] = static_cast<int>(c);
  }
  for (const auto& link : doc.bridging) {
    gold.bridging_antecedent[link.anaphor] = link.antecedent;
    gold.bridging_relation[link.anaphor] = link.relation;
  }
  return gold;
}

namespace {

DataError error_at(std::size_t line, const std::string& origin, const std::string& msg) {
  return DataError(origin + ":" + std::to_string(line) + ": " + msg);
}

bool mention_before(const Mention& a, const Mention& b) {
  return a.start != b.start ? a.start < b.start : a.end < b.end;
}

Document parse_document(const json& rec, std::size_t line, const std::string& origin) {
  auto fail = [&](const std::string& msg) { return error_at(line, origin, msg); };
  if (!rec.is_object()) throw fail("document record must be a JSON object");
  Document doc;
  try {
    doc.id = rec.at("doc_id").get<std::string>();
    if (doc.id.empty()) throw fail("doc_id must be non-empty");
    for (const auto& sent : rec.at("sentences")) {
      std::vector<std::string> toks = sent.get<std::vector<std::string>>();
      if (toks.empty()) throw fail("document " + doc.id + " has an empty sentence");
      for (auto& t : toks) doc.tokens.push_back(t);
      doc.sentences.push_back(std::move(toks));
    }
    const int t_count = doc.token_count();

    std::unordered_map<std::string, int> by_id;
    std::set<std::pair<int, int>> spans;
    if (rec.contains("mentions")) {
      for (const auto& m : rec.at("mentions")) {
        Mention mention;
        mention.id = m.at("id").get<std::string>();
        mention.start = m.at("start").get<int>();
        mention.end = m.at("end").get<int>();
        if (mention.id.empty()) throw fail("mention id must be non-empty");
        if (mention.start < 0 || mention.start > mention.end || mention.end >= t_count) {
          throw fail("mention " + mention.id + " span [" + std::to_string(mention.start) +
                     "," + std::to_string(mention.end) + "] out of range for " +
                     std::to_string(t_count) + " tokens");
        }
        if (!spans.emplace(mention.start, mention.end).second) {
          throw fail("duplicate mention span for " + mention.id);
        }
        doc.mentions.push_back(std::move(mention));
      }
    }
    std::sort(doc.mentions.begin(), doc.mentions.end(), mention_before);
    for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
      if (!by_id.emplace(doc.mentions[i].id, static_cast<int>(i)).second) {
        throw fail("duplicate mention id " + doc.mentions[i].id);
      }
    }
    auto resolve = [&](const std::string& id, const char* role) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw fail(std::string(role) + " references unknown mention id " + id);
      }
      return it->second;
    };

    std::vector<char> in_cluster(doc.mentions.size(), 0);
    if (rec.contains("clusters")) {
      for (const auto& cl : rec.at("clusters")) {
        std::vector<int> members;
        for (const auto& id : cl) members.push_back(resolve(id.get<std::string>(), "cluster"));
        if (members.empty()) throw fail("empty coreference cluster");
        std::sort(members.begin(), members.end());
        for (int m : members) {
          if (in_cluster[static_cast<std::size_t>(m)]) {
            throw fail("mention " + doc.mentions[static_cast<std::size_t>(m)].id +
                       " appears in more than one cluster");
          }
          in_cluster[static_cast<std::size_t>(m)] = 1;
        }
        doc.clusters.push_back(std::move(members));
      }
    }

    std::vector<char> is_anaphor(doc.mentions.size(), 0);
    if (rec.contains("bridging")) {
      for (const auto& b : rec.at("bridging")) {
        BridgingLink link;
        link.anaphor = resolve(b.at("anaphor").get<std::string>(), "bridging link");
        link.antecedent = resolve(b.at("antecedent").get<std::string>(), "bridging link");
        if (b.contains("relation") && !b.at("relation").is_null()) {
          link.relation = relation_from_string(b.at("relation").get<std::string>());
        }
        const auto& ana = doc.mentions[static_cast<std::size_t>(link.anaphor)];
        const auto& ante = doc.mentions[static_cast<std::size_t>(link.antecedent)];
        if (!mention_before(ante, ana)) {
          throw fail("bridging antecedent " + ante.id + " does not precede anaphor " + ana.id);
        }
        if (is_anaphor[static_cast<std::size_t>(link.anaphor)]) {
          throw fail("mention " + ana.id + " is the anaphor of more than one bridging link");
        }
        is_anaphor[static_cast<std::size_t>(link.anaphor)] = 1;
        doc.bridging.push_back(link);
      }
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed document record: ") + e.what());
  }
  return doc;
}

}  // namespace

Corpus parse_corpus(std::istream& in, const std::string& origin) {
  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) {
      throw error_at(line_no, origin, "invalid JSON");
    }
    Document doc = parse_document(rec, line_no, origin);
    if (!seen_ids.insert(doc.id).second) {
      throw error_at(line_no, origin, "duplicate doc_id " + doc.id);
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return parse_corpus(in, path);
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& doc : corpus.docs) {
    json rec;
    rec["doc_id"] = doc.id;
    rec["sentences"] = doc.sentences;
    json mentions = json::array();
    for (const auto& m : doc.mentions) {
      mentions.push_back({{"id", m.id}, {"start", m.start}, {"end", m.end}});
    }
    rec["mentions"] = std::move(mentions);
    json clusters = json::array();
    for (const auto& cl : doc.clusters) {
      json ids = json::array();
      for (int m : cl) ids.push_back(doc.mentions[static_cast<std::size_t>(m)].id);
      clusters.push_back(std::move(ids));
    }
    rec["clusters"] = std::move(clusters);
    json bridging = json::array();
    for (const auto& link : doc.bridging) {
      json b = {{"anaphor", doc.mentions[static_cast<std::size_t>(link.anaphor)].id},
                {"antecedent", doc.mentions[static_cast<std::size_t>(link.antecedent)].id}};
      if (link.relation >= 0) {
        b["relation"] = kRelationNames[static_cast<std::size_t>(link.relation)];
      }
      bridging.push_back(std::move(b));
    }
    rec["bridging"] = std::move(bridging);
    out << rec.dump() << "\n";
  }
  return out.str();
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  out << corpus_to_jsonl(corpus);
}

std::vector<InfoStatus> classify_document(const Document& doc) {
  std::vector<InfoStatus> statuses(doc.mentions.size(), InfoStatus::kDiscourseNew);
  for (const auto& cl : doc.clusters) {
    if (cl.size() < 2) continue;  // a singleton cluster carries no prior mention
    for (std::size_t i = 1; i < cl.size(); ++i) {
      statuses[static_cast<std::size_t>(cl[i])] = InfoStatus::kDiscourseOld;
    }
  }
  for (const auto& link : doc.bridging) {
    statuses[static_cast<std::size_t>(link.anaphor)] = InfoStatus::kBridging;
  }
  return statuses;
}

std::vector<std::vector<InfoStatus>> classify_information_status(const Corpus& corpus) {
  std::vector<std::vector<InfoStatus>> all;
  all.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) all.push_back(classify_document(doc));
  return all;
}

StatusCounts count_statuses(const std::vector<std::vector<InfoStatus>>& statuses) {
  StatusCounts counts;
  for (const auto& doc : statuses) {
    for (InfoStatus s : doc) {
      switch (s) {
        case InfoStatus::kDiscourseNew: ++counts.discourse_new; break;
        case InfoStatus::kDiscourseOld: ++counts.discourse_old; break;
        case InfoStatus::kBridging: ++counts.bridging; break;
      }
    }
  }
  return counts;
}

std::vector<Fold> split_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  const int n = static_cast<int>(corpus.docs.size());
  if (k < 2 || k > n) {
    throw DataError("split_folds: k must be in [2, " + std::to_string(n) + "], got " +
                    std::to_string(k));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const int base = n / k, extra = n % k;
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.test_docs.assign(order.begin() + pos, order.begin() + pos + size);
    std::sort(fold.test_docs.begin(), fold.test_docs.end());
    pos += size;
  }
  for (int f = 0; f < k; ++f) {
    auto& fold = folds[static_cast<std::size_t>(f)];
    std::vector<char> in_test(static_cast<std::size_t>(n), 0);
    for (int d : fold.test_docs) in_test[static_cast<std::size_t>(d)] = 1;
    for (int d = 0; d < n; ++d) {
      if (!in_test[static_cast<std::size_t>(d)]) fold.train_docs.push_back(d);
    }
  }
  return folds;
}

}  // namespace bridger
