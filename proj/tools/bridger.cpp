#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bridger/checkpoint.h"
#include "bridger/evaluation.h"
#include "bridger/training.h"
#include "bridger/verification.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bridger;

namespace {

struct LoadedData {
  Corpus corpus;
  StaticVectors statics{1};
  ContextualVectors contextual;
  bool has_contextual = false;

  const ContextualVectors* contextual_ptr() const {
    return has_contextual ? &contextual : nullptr;
  }
};

LoadedData load_data(RunConfig& cfg, bool need_statics = true) {
  if (cfg.corpus_path.empty()) throw UsageError("missing --corpus");
  LoadedData data;
  data.corpus = load_corpus(cfg.corpus_path);
  if (need_statics) {
    if (cfg.static_vectors_path.empty()) throw UsageError("missing --static-vectors");
    data.statics = StaticVectors::load(cfg.static_vectors_path, cfg.encoder.static_dim);
  }
  if (!cfg.contextual_vectors_path.empty()) {
    if (cfg.encoder.contextual_mode == ContextualMode::kOff) {
      throw UsageError(
          "--contextual-vectors given but contextual_mode is off; set contextual_mode");
    }
    data.contextual = load_contextual_vectors(cfg.contextual_vectors_path, data.corpus);
    data.has_contextual = true;
    if (cfg.encoder.contextual_file_dim == 0) {
      cfg.encoder.contextual_file_dim = data.contextual.dim();
    }
  } else if (cfg.encoder.contextual_mode != ContextualMode::kOff) {
    throw UsageError("contextual_mode is enabled but no --contextual-vectors path was given");
  }
  return data;
}

json header_record(const RunConfig& cfg, const std::string& command) {
  return json{{"type", "header"}, {"command", command}, {"config", cfg.to_json()},
              {"seed", cfg.train.seed}};
}

json link_record(const Corpus& corpus, const PredictedLink& link, const std::string& task) {
  const auto& doc = corpus.docs[static_cast<std::size_t>(link.doc)];
  const auto& ana = doc.mentions[static_cast<std::size_t>(link.anaphor)];
  json rec;
  rec["doc_id"] = doc.id;
  rec["anaphor"] = {{"start", ana.start}, {"end", ana.end}};
  if (link.antecedent >= 0) {
    const auto& ante = doc.mentions[static_cast<std::size_t>(link.antecedent)];
    rec["antecedent"] = {{"start", ante.start}, {"end", ante.end}};
  } else {
    rec["antecedent"] = nullptr;
  }
  rec["score"] = link.score;
  rec["task"] = task;
  return rec;
}

Task task_from_config(const RunConfig& cfg) {
  return cfg.task == "coreference" ? Task::kCoreference : Task::kBridging;
}

int cmd_validate(RunConfig& cfg) {
  if (cfg.corpus_path.empty()) throw UsageError("missing --corpus");
  const Corpus corpus = load_corpus(cfg.corpus_path);
  const auto counts = count_statuses(classify_information_status(corpus));
  json out;
  out["valid"] = true;
  out["docs"] = corpus.docs.size();
  out["mentions"] = corpus.total_mentions();
  out["clusters"] = corpus.total_clusters();
  out["bridging_links"] = corpus.total_links();
  out["info_status"] = {{"DN", counts.discourse_new},
                        {"DO", counts.discourse_old},
                        {"BRIDGING", counts.bridging}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_train(RunConfig& cfg) {
  cfg.validate();
  if (cfg.output_path.empty()) throw UsageError("missing --output directory");
  LoadedData data = load_data(cfg);
  fs::create_directories(cfg.output_path);

  std::ofstream log(fs::path(cfg.output_path) / "loss_log.jsonl");
  if (!log) throw DataError("cannot write loss log in " + cfg.output_path);
  log << header_record(cfg, "train").dump() << "\n";

  const json run_json = cfg.to_json();
  auto on_epoch = [&](const Model<float>& model, const EpochLog& entry) {
    log << json{{"epoch", entry.epoch},
                {"bridging_loss", entry.bridging_loss},
                {"coref_loss", entry.coref_loss},
                {"queries", entry.queries}}
               .dump()
        << "\n";
    if (cfg.train.checkpoint_every > 0 && (entry.epoch + 1) % cfg.train.checkpoint_every == 0) {
      const auto path =
          fs::path(cfg.output_path) / ("checkpoint_epoch" + std::to_string(entry.epoch + 1) + ".bin");
      save_checkpoint(model, cfg.train, path.string(), &run_json);
    }
  };

  auto result = train_model<float>(data.corpus, data.statics, data.contextual_ptr(),
                                   cfg.encoder, cfg.sharing, cfg.train, on_epoch);
  const auto final_path = fs::path(cfg.output_path) / "checkpoint.bin";
  save_checkpoint(result.model, cfg.train, final_path.string(), &run_json);

  json summary;
  summary["checkpoint"] = final_path.string();
  summary["epochs"] = result.log.size();
  if (!result.log.empty()) {
    summary["final_bridging_loss"] = result.log.back().bridging_loss;
    summary["final_coref_loss"] = result.log.back().coref_loss;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_predict(RunConfig& cfg) {
  cfg.validate();
  if (cfg.checkpoint_path.empty()) throw UsageError("missing --checkpoint");
  if (cfg.output_path.empty()) throw UsageError("missing --output file");

  TrainConfig saved_train;
  Model<float> model = load_checkpoint<float>(cfg.checkpoint_path, &saved_train);
  cfg.encoder = model.encoder_config();
  cfg.sharing = model.sharing();
  cfg.train = saved_train;

  LoadedData data = load_data(cfg);
  CorpusFeatures<float> features(data.corpus, data.statics, data.contextual_ptr(),
                                 model.char_vocab(), model.encoder_config());
  const auto links =
      predict_corpus_links(model, data.corpus, features, task_from_config(cfg),
                           eval_setting_from_string(cfg.setting), cfg.train.max_antecedents);

  std::ofstream out(cfg.output_path);
  if (!out) throw DataError("cannot write predictions to " + cfg.output_path);
  out << header_record(cfg, "predict").dump() << "\n";
  for (const auto& link : links) {
    out << link_record(data.corpus, link, cfg.task).dump() << "\n";
  }
  std::cout << json{{"links", links.size()}, {"output", cfg.output_path}}.dump() << "\n";
  return 0;
}

json evaluate_reports(const Model<float>& model, const Corpus& corpus,
                      const CorpusFeatures<float>& features, const RunConfig& cfg) {
  const auto setting = eval_setting_from_string(cfg.setting);
  const auto links = predict_corpus_links(model, corpus, features, Task::kBridging, setting,
                                          cfg.train.max_antecedents);
  const auto picks = predict_corpus_forced(model, corpus, features, Task::kBridging,
                                           cfg.train.max_antecedents, cfg.include_epsilon);
  json reports = json::array();
  reports.push_back(evaluate_anaphor_recognition(links, corpus, setting).to_json());
  reports.push_back(evaluate_full_bridging(links, corpus, setting).to_json());
  reports.push_back(evaluate_antecedent_selection(picks, corpus, cfg.include_epsilon).to_json());
  reports.push_back(relation_breakdown(picks, corpus).to_json());
  return reports;
}

int cmd_evaluate(RunConfig& cfg) {
  cfg.validate();
  if (cfg.checkpoint_path.empty()) throw UsageError("missing --checkpoint");
  TrainConfig saved_train;
  Model<float> model = load_checkpoint<float>(cfg.checkpoint_path, &saved_train);
  cfg.encoder = model.encoder_config();
  cfg.sharing = model.sharing();
  cfg.train = saved_train;

  LoadedData data = load_data(cfg);
  CorpusFeatures<float> features(data.corpus, data.statics, data.contextual_ptr(),
                                 model.char_vocab(), model.encoder_config());
  json out;
  out["header"] = header_record(cfg, "evaluate");
  out["reports"] = evaluate_reports(model, data.corpus, features, cfg);

  if (cfg.output_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::ofstream f(cfg.output_path);
    if (!f) throw DataError("cannot write report to " + cfg.output_path);
    f << out.dump(2) << "\n";
    std::cout << json{{"output", cfg.output_path}}.dump() << "\n";
  }
  return 0;
}

int cmd_crossval(RunConfig& cfg) {
  cfg.validate();
  LoadedData data = load_data(cfg);
  const auto folds = split_folds(data.corpus, cfg.folds, cfg.train.seed);
  const auto setting = eval_setting_from_string(cfg.setting);

  struct FoldOutput {
    std::vector<PredictedLink> links;   // doc indices remapped to the full corpus
    std::vector<PredictedLink> picks;
    json report;
  };
  std::vector<FoldOutput> outputs(folds.size());

  auto run_fold = [&](int f) {
    const auto& fold = folds[static_cast<std::size_t>(f)];
    Corpus train_corpus, test_corpus;
    for (int d : fold.train_docs) train_corpus.docs.push_back(data.corpus.docs[static_cast<std::size_t>(d)]);
    for (int d : fold.test_docs) test_corpus.docs.push_back(data.corpus.docs[static_cast<std::size_t>(d)]);

    TrainConfig fold_train = cfg.train;
    fold_train.seed = cfg.train.seed + static_cast<std::uint64_t>(f);
    auto result = train_model<float>(train_corpus, data.statics, data.contextual_ptr(),
                                     cfg.encoder, cfg.sharing, fold_train);

    CorpusFeatures<float> features(test_corpus, data.statics, data.contextual_ptr(),
                                   result.model.char_vocab(), cfg.encoder);
    auto links = predict_corpus_links(result.model, test_corpus, features, Task::kBridging,
                                      setting, cfg.train.max_antecedents);
    auto picks = predict_corpus_forced(result.model, test_corpus, features, Task::kBridging,
                                       cfg.train.max_antecedents, cfg.include_epsilon);
    auto& out = outputs[static_cast<std::size_t>(f)];
    json fold_report;
    fold_report["fold"] = f;
    fold_report["test_docs"] = json::array();
    for (int d : fold.test_docs) fold_report["test_docs"].push_back(data.corpus.docs[static_cast<std::size_t>(d)].id);
    json reports = json::array();
    reports.push_back(evaluate_anaphor_recognition(links, test_corpus, setting).to_json());
    reports.push_back(evaluate_full_bridging(links, test_corpus, setting).to_json());
    reports.push_back(
        evaluate_antecedent_selection(picks, test_corpus, cfg.include_epsilon).to_json());
    fold_report["reports"] = std::move(reports);
    out.report = std::move(fold_report);

    for (auto link : links) {
      link.doc = fold.test_docs[static_cast<std::size_t>(link.doc)];
      out.links.push_back(link);
    }
    for (auto pick : picks) {
      pick.doc = fold.test_docs[static_cast<std::size_t>(pick.doc)];
      out.picks.push_back(pick);
    }
  };

  if (cfg.parallel_folds) {
    std::vector<std::thread> threads;
    for (int f = 0; f < static_cast<int>(folds.size()); ++f) {
      threads.emplace_back(run_fold, f);
    }
    for (auto& t : threads) t.join();
  } else {
    for (int f = 0; f < static_cast<int>(folds.size()); ++f) run_fold(f);
  }

  // Pool all test predictions, then score once against the whole corpus.
  std::vector<PredictedLink> pooled_links, pooled_picks;
  json fold_reports = json::array();
  for (const auto& out : outputs) {
    pooled_links.insert(pooled_links.end(), out.links.begin(), out.links.end());
    pooled_picks.insert(pooled_picks.end(), out.picks.begin(), out.picks.end());
    fold_reports.push_back(out.report);
  }
  json pooled = json::array();
  pooled.push_back(evaluate_anaphor_recognition(pooled_links, data.corpus, setting).to_json());
  pooled.push_back(evaluate_full_bridging(pooled_links, data.corpus, setting).to_json());
  pooled.push_back(
      evaluate_antecedent_selection(pooled_picks, data.corpus, cfg.include_epsilon).to_json());
  pooled.push_back(relation_breakdown(pooled_picks, data.corpus).to_json());

  json out;
  out["header"] = header_record(cfg, "crossval");
  out["folds"] = std::move(fold_reports);
  out["pooled"] = std::move(pooled);

  if (cfg.output_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::ofstream f(cfg.output_path);
    if (!f) throw DataError("cannot write report to " + cfg.output_path);
    f << out.dump(2) << "\n";
    std::cout << json{{"output", cfg.output_path}}.dump() << "\n";
  }
  return 0;
}

int cmd_gradcheck(RunConfig& cfg) {
  const auto result = run_verification_suite();
  json checks = json::array();
  for (const auto& [name, report] : result.reports) {
    std::cout << (report.pass ? "pass " : "FAIL ") << name << ": max-rel-err="
              << report.max_rel_error << " max-abs-gap=" << report.max_abs_disagreement
              << "\n";
    checks.push_back({{"name", name},
                      {"pass", report.pass},
                      {"max_rel_error", report.max_rel_error},
                      {"max_abs_disagreement", report.max_abs_disagreement},
                      {"noise_floor", report.noise_floor}});
  }
  std::cout << (result.pass ? "pass" : "FAIL") << " overall max-rel-err=" << result.max_rel_error
            << " tolerance=1e-4\n";
  if (!cfg.output_path.empty()) {
    json out;
    out["header"] = header_record(cfg, "gradcheck");
    out["checks"] = std::move(checks);
    out["pass"] = result.pass;
    std::ofstream f(cfg.output_path);
    if (!f) throw DataError("cannot write report to " + cfg.output_path);
    f << out.dump(2) << "\n";
  }
  if (!result.pass) throw NumericError("gradient verification failed");
  return 0;
}

void emit_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    // Config file first, so command-line flags override its values.
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") cfg.apply_file(argv[i + 1]);
    }

    CLI::App app{"multi-task mention-pair model for bridging and coreference resolution"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "flat key=value configuration file");

    app.add_option("--corpus", cfg.corpus_path, "canonical corpus (JSON lines)");
    app.add_option("--static-vectors", cfg.static_vectors_path, "static word vector file");
    app.add_option("--contextual-vectors", cfg.contextual_vectors_path,
                   "precomputed contextual vector file");
    app.add_option("--checkpoint", cfg.checkpoint_path, "model checkpoint to load");
    app.add_option("--output", cfg.output_path, "output file or directory");
    app.add_option("--setting", cfg.setting, "evaluation setting: keep|remove");
    app.add_option("--task", cfg.task, "prediction task: bridging|coreference");
    app.add_option("--folds", cfg.folds, "number of cross-validation folds");
    app.add_flag("--include-epsilon", cfg.include_epsilon,
                 "allow abstention in antecedent selection");
    app.add_flag("--parallel-folds", cfg.parallel_folds, "run cross-validation folds in threads");

    app.add_option("--seed", cfg.train.seed, "run seed");
    app.add_option("--epochs", cfg.train.epochs, "training epochs");
    app.add_option("--learning-rate", cfg.train.learning_rate, "optimizer learning rate");
    app.add_option("--gamma", cfg.train.gamma, "negative example ratio");
    app.add_option("--undersample", cfg.train.undersample, "undersample DN/DO queries");
    app.add_option("--resample-each-epoch", cfg.train.resample_each_epoch,
                   "redraw the undersampled query set every epoch");
    app.add_option("--max-antecedents", cfg.train.max_antecedents,
                   "candidate antecedent window");
    app.add_option("--bridging-loss-weight", cfg.train.bridging_loss_weight,
                   "bridging task loss weight");
    app.add_option("--coref-loss-weight", cfg.train.coref_loss_weight,
                   "coreference task loss weight");
    app.add_option("--checkpoint-every", cfg.train.checkpoint_every,
                   "save a checkpoint every N epochs (0 = final only)");

    std::string sharing_name;
    app.add_option("--sharing", sharing_name,
                   "tower sharing: encoder_only|share_ffnn_1|share_ffnn_2");
    app.add_option("--static-dim", cfg.encoder.static_dim, "static embedding width");
    app.add_option("--char-emb-dim", cfg.encoder.char_emb_dim, "character embedding width");
    app.add_option("--char-filters", cfg.encoder.char_filters, "CNN filters per width");
    app.add_option("--lstm-layers", cfg.encoder.lstm_layers, "encoder depth");
    app.add_option("--lstm-hidden", cfg.encoder.lstm_hidden, "encoder hidden size per direction");
    app.add_option("--ffnn-hidden", cfg.encoder.ffnn_hidden, "scoring tower hidden size");
    app.add_option("--feature-dim", cfg.encoder.feature_dim, "width/distance feature size");
    std::string contextual_mode_name_str;
    app.add_option("--contextual-mode", contextual_mode_name_str,
                   "contextual channel: off|concat|mean4");
    app.add_option("--contextual-file-dim", cfg.encoder.contextual_file_dim,
                   "declared dimension of the contextual vector file");

    auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints");
    auto* predict_cmd = app.add_subcommand("predict", "write link records for a corpus");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on a corpus");
    auto* crossval_cmd = app.add_subcommand("crossval", "k-fold cross-validation with pooling");
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "verify gradients numerically");
    auto* validate_cmd = app.add_subcommand("validate-corpus", "validate a corpus file");
    for (auto* sub : {train_cmd, predict_cmd, evaluate_cmd, crossval_cmd, gradcheck_cmd,
                      validate_cmd}) {
      sub->fallthrough();
    }

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      throw UsageError(e.what());
    }
    if (!sharing_name.empty()) cfg.sharing = sharing_mode_from_string(sharing_name);
    if (!contextual_mode_name_str.empty()) {
      cfg.encoder.contextual_mode = contextual_mode_from_string(contextual_mode_name_str);
    }

    if (train_cmd->parsed()) return cmd_train(cfg);
    if (predict_cmd->parsed()) return cmd_predict(cfg);
    if (evaluate_cmd->parsed()) return cmd_evaluate(cfg);
    if (crossval_cmd->parsed()) return cmd_crossval(cfg);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(cfg);
    if (validate_cmd->parsed()) return cmd_validate(cfg);
    throw UsageError("no command given");
  } catch (const UsageError& e) {
    emit_error("usage", e.what());
    return 1;
  } catch (const NumericError& e) {
    emit_error("numeric", e.what());
    return 3;
  } catch (const DataError& e) {
    emit_error("data", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 2;
  }
}
