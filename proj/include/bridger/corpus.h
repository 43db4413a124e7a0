#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "bridger/error.h"

namespace bridger {

enum class InfoStatus { kDiscourseNew, kDiscourseOld, kBridging };

inline const char* info_status_name(InfoStatus s) {
  switch (s) {
    case InfoStatus::kDiscourseNew: return "DN";
    case InfoStatus::kDiscourseOld: return "DO";
    case InfoStatus::kBridging: return "BRIDGING";
  }
  return "?";
}

// Bridging relation labels; -1 everywhere means unlabeled.
inline constexpr std::array<const char*, 5> kRelationNames = {
    "SUBSET", "ELEMENT", "POSS", "OTHER", "UNDERSP-REL"};

int relation_from_string(const std::string& s);  // throws DataError on unknown

struct Mention {
  std::string id;
  int start = 0;  // document-level token index
  int end = 0;    // inclusive
  int width() const { return end - start + 1; }
};

struct BridgingLink {
  int anaphor = -1;     // index into Document::mentions
  int antecedent = -1;  // index into Document::mentions
  int relation = -1;    // index into kRelationNames, or -1
};

struct Document {
  std::string id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> tokens;  // flattened sentences
  std::vector<Mention> mentions;    // sorted by (start, end)
  std::vector<std::vector<int>> clusters;  // mention indices in document order
  std::vector<BridgingLink> bridging;

  int token_count() const { return static_cast<int>(tokens.size()); }
};

struct Corpus {
  std::vector<Document> docs;

  int total_mentions() const;
  int total_links() const;
  int total_clusters() const;
  const Document* find(const std::string& doc_id) const;
};

// Inverted per-document gold view used by training and evaluation.
struct DocGold {
  std::vector<int> cluster_of;           // mention -> cluster index or -1
  std::vector<int> bridging_antecedent;  // mention -> antecedent mention or -1
  std::vector<int> bridging_relation;    // mention -> relation or -1
};

DocGold build_doc_gold(const Document& doc);

// Line-delimited records, one document per line. All invariants are
// validated; errors carry the 1-based line number.
Corpus load_corpus(const std::string& path);
Corpus parse_corpus(std::istream& in, const std::string& origin);

std::string corpus_to_jsonl(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::string& path);

// BRIDGING if the mention anchors a bridging link; otherwise DO for a
// non-first member of a multi-mention cluster; otherwise DN. BRIDGING wins
// when a mention is both a bridging and a coreference anaphor.
std::vector<InfoStatus> classify_document(const Document& doc);
std::vector<std::vector<InfoStatus>> classify_information_status(const Corpus& corpus);

struct StatusCounts {
  int discourse_new = 0;
  int discourse_old = 0;
  int bridging = 0;
  int total() const { return discourse_new + discourse_old + bridging; }
};

StatusCounts count_statuses(const std::vector<std::vector<InfoStatus>>& statuses);

struct Fold {
  std::vector<int> train_docs;
  std::vector<int> test_docs;
};

// k disjoint test partitions covering all documents, sizes differing by at
// most one, deterministic in the seed.
std::vector<Fold> split_folds(const Corpus& corpus, int k, std::uint64_t seed);

}  // namespace bridger
