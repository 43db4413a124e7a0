#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bridger/gradcheck.h"
#include "bridger/training.h"

namespace bridger {

// Deterministic gradient-verification suite: every primitive backward rule
// against central finite differences, then the complete model graph
// (character CNN, stacked BiLSTM, head attention, both scoring towers and
// the combined loss) under each sharing mode. Runs at 64-bit with weights
// re-drawn at verification scale.

using NamedReport = std::pair<std::string, ad::GradCheckReport>;

inline std::vector<NamedReport> verify_primitives() {
  using ad::ParameterSet;
  using ad::Tape;
  std::vector<NamedReport> reports;

  auto run = [&](const std::string& name, auto setup) {
    ParameterSet<double> params;
    Rng rng(1301);
    auto eval = setup(params, rng);
    reports.emplace_back(name, finite_difference_check(params, eval));
  };

  auto fill = [](ad::Parameter<double>& p, Rng& rng, double scale = 1.0) {
    for (auto& v : p.value.values) v = rng.uniform(-scale, scale);
  };

  run("matmul", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {3, 4});
    auto& b = params.create("b", {4, 2});
    fill(a, rng);
    fill(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.matmul(t.param(a), t.param(b)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("add", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {2, 3});
    auto& b = params.create("b", {3});
    fill(a, rng);
    fill(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.tanh_(t.add(t.param(a), t.param(b))));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("multiply-elementwise", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {6});
    auto& b = params.create("b", {6});
    fill(a, rng);
    fill(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.mul(t.param(a), t.param(b)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("concat", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {2, 2});
    auto& b = params.create("b", {2, 3});
    fill(a, rng);
    fill(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.tanh_(t.concat({t.param(a), t.param(b)}, 1)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("tanh", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {5});
    fill(a, rng, 2.0);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.tanh_(t.param(a)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("sigmoid", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {5});
    fill(a, rng, 2.0);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.sigmoid(t.param(a)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("relu", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {8});
    fill(a, rng, 2.0);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.mul(t.relu(t.param(a)), t.param(a)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("softmax-over-axis", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {2, 4});
    fill(a, rng, 2.0);
    return [&](bool g) {
      Tape<double> t;
      auto sm = t.softmax(t.param(a), 1);
      auto loss = t.sum(t.mul(sm, sm));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("log", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {5});
    for (auto& v : a.value.values) v = 0.2 + rng.uniform() * 2.0;
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.log_(t.param(a)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("dropout", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {8});
    fill(a, rng);
    return [&](bool g) {
      Tape<double> t;
      const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 1, 1, 0};
      auto loss = t.sum(t.tanh_(t.dropout(t.param(a), mask, 0.6)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("embedding-lookup", [&](ParameterSet<double>& params, Rng& rng) {
    auto& table = params.create("table", {6, 3});
    fill(table, rng);
    return [&](bool g) {
      Tape<double> t;
      auto rows = t.gather_rows(t.param(table), {1, 4, 4, 0});
      auto loss = t.sum(t.tanh_(rows));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("conv1d-with-max-pool", [&](ParameterSet<double>& params, Rng& rng) {
    auto& w = params.create("w", {3 * 2, 4});
    auto& b = params.create("b", {4});
    auto& x = params.create("x", {6, 2});
    fill(w, rng);
    fill(b, rng);
    fill(x, rng);
    return [&](bool g) {
      Tape<double> t;
      auto out = t.conv1d_max_pool(t.param(x), t.param(w), t.param(b), 3);
      auto loss = t.sum(t.tanh_(out));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("lstm-cell-step", [&](ParameterSet<double>& params, Rng& rng) {
    const int hid = 3, in = 2;
    auto& x = params.create("x", {in});
    auto& h = params.create("h", {hid});
    auto& c = params.create("c", {hid});
    auto& w = params.create("w", {4 * hid, in + hid});
    auto& b = params.create("b", {4 * hid});
    for (auto* p : {&x, &h, &c, &w, &b}) fill(*p, rng, 0.8);
    return [&, hid](bool g) {
      Tape<double> t;
      auto hc = t.lstm_cell(t.param(x), t.param(h), t.param(c), t.param(w), t.param(b));
      auto loss = t.sum(t.mul(hc, hc));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("slice-reshape-scale", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {7});
    fill(a, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.scale(t.sum(t.reshape(t.slice(t.param(a), 1, 5), {2, 2})), 1.5);
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  run("log-sum-exp", [&](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {6});
    fill(a, rng, 3.0);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.logsumexp(t.param(a));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });
  return reports;
}

// A compact document whose spans exercise every component of the graph.
inline Corpus verification_corpus() {
  static const char* kDoc =
      R"({"doc_id":"g0","sentences":[["a","big","red","dog","saw","the","old","cat"],)"
      R"(["the","small","bird","flew","over","town"],["it","sang"]],)"
      R"("mentions":[{"id":"m1","start":0,"end":3},{"id":"m2","start":5,"end":7},)"
      R"({"id":"m3","start":8,"end":10},{"id":"m4","start":11,"end":13},)"
      R"({"id":"m5","start":14,"end":14},{"id":"m6","start":14,"end":15}],)"
      R"("clusters":[["m1","m5"],["m2","m6"]],)"
      R"("bridging":[{"anaphor":"m3","antecedent":"m1"},{"anaphor":"m4","antecedent":"m2"}]})";
  std::istringstream in(kDoc);
  return parse_corpus(in, "<verification>");
}

inline EncoderConfig verification_encoder() {
  EncoderConfig cfg;
  cfg.static_dim = 6;
  cfg.char_emb_dim = 3;
  cfg.char_filter_widths = {2, 3, 4};
  cfg.char_filters = 2;
  cfg.lstm_layers = 3;
  cfg.lstm_hidden = 4;
  cfg.ffnn_hidden = 5;
  cfg.feature_dim = 3;
  return cfg;
}

// Finite differences over the complete graph and combined two-task loss.
inline ad::GradCheckReport verify_model_graph(SharingMode sharing, std::uint64_t seed,
                                              bool with_dropout) {
  const Corpus corpus = verification_corpus();
  const EncoderConfig cfg = verification_encoder();
  Rng init(3);
  Model<double> model(cfg, sharing, CharVocab::build(corpus), init);
  Rng weight_rng(seed);
  ad::randomize_for_gradcheck(model.params(), weight_rng);

  StaticVectors statics(cfg.static_dim);
  Rng vec_rng(seed + 1);
  for (const auto& tok : corpus.docs[0].tokens) {
    if (statics.contains(tok)) continue;
    std::vector<double> v(static_cast<std::size_t>(cfg.static_dim));
    for (auto& x : v) x = vec_rng.uniform(-1.0, 1.0);
    statics.set(tok, std::move(v));
  }
  const auto inputs =
      prepare_doc_inputs<double>(corpus.docs[0], statics, nullptr, model.char_vocab(), cfg);
  const DocGold gold = build_doc_gold(corpus.docs[0]);
  TrainConfig tc;
  std::vector<int> queries;
  for (std::size_t m = 0; m < corpus.docs[0].mentions.size(); ++m) {
    queries.push_back(static_cast<int>(m));
  }

  auto eval = [&](bool need_grad) {
    Rng mask_rng(seed + 2);
    Rng* masks = with_dropout ? &mask_rng : nullptr;
    DocGraph<double> g = build_doc_graph(model, inputs, masks);
    const int loss = document_loss(g, model, corpus.docs[0], gold, queries, tc, masks,
                                   nullptr, nullptr);
    const double v = g.tape.val(loss)[0];
    if (need_grad) g.tape.backward(loss);
    return v;
  };
  return finite_difference_check(model.params(), eval);
}

struct VerificationResult {
  std::vector<NamedReport> reports;
  bool pass = true;
  double max_rel_error = 0.0;
};

inline VerificationResult run_verification_suite() {
  VerificationResult result;
  result.reports = verify_primitives();
  int idx = 0;
  for (SharingMode mode : {SharingMode::kEncoderOnly, SharingMode::kShareFfnn1,
                           SharingMode::kShareFfnn2}) {
    const bool with_dropout = mode == SharingMode::kShareFfnn1;
    result.reports.emplace_back(
        std::string("model-graph/") + sharing_mode_name(mode) + (with_dropout ? "+dropout" : ""),
        verify_model_graph(mode, 17 + static_cast<std::uint64_t>(idx), with_dropout));
    ++idx;
  }
  for (const auto& [name, report] : result.reports) {
    result.pass = result.pass && report.pass;
    result.max_rel_error = std::max(result.max_rel_error, report.max_rel_error);
  }
  return result;
}

}  // namespace bridger
