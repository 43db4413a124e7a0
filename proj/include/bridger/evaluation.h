#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bridger/corpus.h"

namespace bridger {

enum class EvalSetting { kKeep, kRemove };

inline const char* eval_setting_name(EvalSetting s) {
  return s == EvalSetting::kKeep ? "keep" : "remove";
}

EvalSetting eval_setting_from_string(const std::string& s);

// One predicted link or forced antecedent pick. `antecedent` is -1 when the
// model abstained (forced mode with the artificial antecedent allowed).
struct PredictedLink {
  int doc = -1;         // index into Corpus::docs
  int anaphor = -1;     // mention index within the document
  int antecedent = -1;  // mention index within the document
  double score = 0.0;
};

struct EvalCounts {
  int gold = 0;
  int predicted = 0;
  int correct = 0;
};

struct RelationRow {
  int relation = -1;  // index into kRelationNames
  int gold_count = 0;
  int correct = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::string task;
  std::string setting = "-";
  bool uses_accuracy = false;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  EvalCounts counts;
  bool relations_available = false;
  std::vector<RelationRow> relations;

  nlohmann::json to_json() const;
};

// Queryable anaphor mentions under a setting: every mention under "keep";
// under "remove", mentions classified DO (gold coreferent anaphors that are
// not bridging anaphors) are dropped. Gold bridging anaphors are never
// dropped because BRIDGING takes precedence in the classification.
std::vector<int> query_mentions(const Document& doc, const std::vector<InfoStatus>& statuses,
                                EvalSetting setting);

// A predicted antecedent is correct when it is the gold antecedent or lies
// in the gold antecedent's coreference cluster.
bool antecedent_correct(const DocGold& gold, int predicted_antecedent, int gold_antecedent);

// P/R/F1 over predicted anaphors: correct iff the anaphor is a gold
// bridging anaphor. Micro-averaged over the corpus.
EvalReport evaluate_anaphor_recognition(const std::vector<PredictedLink>& links,
                                        const Corpus& corpus, EvalSetting setting);

// P/R/F1 over predicted links with cluster-equivalent antecedent
// correctness. Micro-averaged over the corpus.
EvalReport evaluate_full_bridging(const std::vector<PredictedLink>& links, const Corpus& corpus,
                                  EvalSetting setting);

// Accuracy over gold bridging anaphors given one pick per anaphor.
EvalReport evaluate_antecedent_selection(const std::vector<PredictedLink>& picks,
                                         const Corpus& corpus, bool include_epsilon);

// Per-relation gold counts and antecedent-selection accuracy. If no gold
// link carries a relation label the table is marked unavailable.
EvalReport relation_breakdown(const std::vector<PredictedLink>& picks, const Corpus& corpus);

}  // namespace bridger
