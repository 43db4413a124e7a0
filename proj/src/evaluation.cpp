#include "bridger/evaluation.h"

#include <map>

namespace bridger {

using nlohmann::json;

EvalSetting eval_setting_from_string(const std::string& s) {
  if (s == "keep") return EvalSetting::kKeep;
  if (s == "remove") return EvalSetting::kRemove;
  throw UsageError("unknown evaluation setting: " + s + " (expected keep|remove)");
}

json EvalReport::to_json() const {
  json j;
  j["task"] = task;
  j["setting"] = setting;
  j["counts"] = {{"gold", counts.gold},
                 {"predicted", counts.predicted},
                 {"correct", counts.correct}};
  if (uses_accuracy) {
    j["accuracy"] = accuracy;
  } else {
    j["precision"] = precision;
    j["recall"] = recall;
    j["f1"] = f1;
  }
  if (task == "antecedent_selection" && setting == "relations") {
    if (relations_available) {
      json rows = json::array();
      for (const auto& r : relations) {
        rows.push_back({{"relation", kRelationNames[static_cast<std::size_t>(r.relation)]},
                        {"gold", r.gold_count},
                        {"correct", r.correct},
                        {"accuracy", r.accuracy}});
      }
      j["relations"] = std::move(rows);
    } else {
      j["relations"] = "unavailable";
    }
  }
  return j;
}

std::vector<int> query_mentions(const Document& doc, const std::vector<InfoStatus>& statuses,
                                EvalSetting setting) {
  std::vector<int> queries;
  for (std::size_t i = 0; i < doc.mentions.size(); ++i) {
    if (setting == EvalSetting::kRemove && statuses[i] == InfoStatus::kDiscourseOld) continue;
    queries.push_back(static_cast<int>(i));
  }
  return queries;
}

bool antecedent_correct(const DocGold& gold, int predicted_antecedent, int gold_antecedent) {
  if (predicted_antecedent < 0 || gold_antecedent < 0) return false;
  if (predicted_antecedent == gold_antecedent) return true;
  const int gold_cluster = gold.cluster_of[static_cast<std::size_t>(gold_antecedent)];
  return gold_cluster >= 0 &&
         gold.cluster_of[static_cast<std::size_t>(predicted_antecedent)] == gold_cluster;
}

namespace {

void finish_prf(EvalReport& report) {
  const auto& c = report.counts;
  report.precision = c.predicted > 0 ? static_cast<double>(c.correct) / c.predicted : 0.0;
  report.recall = c.gold > 0 ? static_cast<double>(c.correct) / c.gold : 0.0;
  report.f1 = (report.precision + report.recall) > 0.0
                  ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                  : 0.0;
}

}  // namespace

EvalReport evaluate_anaphor_recognition(const std::vector<PredictedLink>& links,
                                        const Corpus& corpus, EvalSetting setting) {
  EvalReport report;
  report.task = "anaphor_recognition";
  report.setting = eval_setting_name(setting);
  report.counts.gold = corpus.total_links();
  std::vector<DocGold> golds;
  golds.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) golds.push_back(build_doc_gold(doc));
  for (const auto& link : links) {
    if (link.antecedent < 0) continue;
    ++report.counts.predicted;
    const DocGold& gold = golds[static_cast<std::size_t>(link.doc)];
    if (gold.bridging_antecedent[static_cast<std::size_t>(link.anaphor)] >= 0) {
      ++report.counts.correct;
    }
  }
  finish_prf(report);
  return report;
}

EvalReport evaluate_full_bridging(const std::vector<PredictedLink>& links, const Corpus& corpus,
                                  EvalSetting setting) {
  EvalReport report;
  report.task = "full_bridging";
  report.setting = eval_setting_name(setting);
  report.counts.gold = corpus.total_links();
  std::vector<DocGold> golds;
  golds.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) golds.push_back(build_doc_gold(doc));
  for (const auto& link : links) {
    if (link.antecedent < 0) continue;
    ++report.counts.predicted;
    const DocGold& gold = golds[static_cast<std::size_t>(link.doc)];
    const int gold_ante = gold.bridging_antecedent[static_cast<std::size_t>(link.anaphor)];
    if (gold_ante >= 0 && antecedent_correct(gold, link.antecedent, gold_ante)) {
      ++report.counts.correct;
    }
  }
  finish_prf(report);
  return report;
}

EvalReport evaluate_antecedent_selection(const std::vector<PredictedLink>& picks,
                                         const Corpus& corpus, bool include_epsilon) {
  EvalReport report;
  report.task = "antecedent_selection";
  report.setting = include_epsilon ? "with-epsilon" : "forced";
  report.uses_accuracy = true;
  report.counts.gold = corpus.total_links();
  for (const auto& pick : picks) {
    ++report.counts.predicted;
    const DocGold gold = build_doc_gold(corpus.docs[static_cast<std::size_t>(pick.doc)]);
    const int gold_ante = gold.bridging_antecedent[static_cast<std::size_t>(pick.anaphor)];
    if (gold_ante >= 0 && antecedent_correct(gold, pick.antecedent, gold_ante)) {
      ++report.counts.correct;
    }
  }
  report.accuracy = report.counts.gold > 0
                        ? static_cast<double>(report.counts.correct) / report.counts.gold
                        : 0.0;
  return report;
}

EvalReport relation_breakdown(const std::vector<PredictedLink>& picks, const Corpus& corpus) {
  EvalReport report;
  report.task = "antecedent_selection";
  report.setting = "relations";
  report.uses_accuracy = true;

  std::map<int, RelationRow> rows;
  for (const auto& doc : corpus.docs) {
    for (const auto& link : doc.bridging) {
      if (link.relation < 0) continue;
      auto& row = rows[link.relation];
      row.relation = link.relation;
      ++row.gold_count;
    }
  }
  if (rows.empty()) {
    report.relations_available = false;
    return report;
  }
  for (const auto& pick : picks) {
    const auto& doc = corpus.docs[static_cast<std::size_t>(pick.doc)];
    const DocGold gold = build_doc_gold(doc);
    const int relation = gold.bridging_relation[static_cast<std::size_t>(pick.anaphor)];
    if (relation < 0) continue;
    const int gold_ante = gold.bridging_antecedent[static_cast<std::size_t>(pick.anaphor)];
    if (gold_ante >= 0 && antecedent_correct(gold, pick.antecedent, gold_ante)) {
      ++rows[relation].correct;
    }
  }
  report.relations_available = true;
  for (auto& [rel, row] : rows) {
    row.accuracy = row.gold_count > 0 ? static_cast<double>(row.correct) / row.gold_count : 0.0;
    report.relations.push_back(row);
  }
  return report;
}

}  // namespace bridger
