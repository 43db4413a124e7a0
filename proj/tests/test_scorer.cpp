#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "bridger/gradcheck.h"
#include "bridger/inference.h"
#include "support/fixtures.h"

using namespace bridger;

TEST_CASE("candidate sets hold the nearest preceding mentions, capped") {
  CHECK(candidate_antecedents(0, 5, 150).empty());

  const auto ten = candidate_antecedents(10, 20, 150);
  CHECK(ten.size() == 10);
  CHECK(ten.front() == 0);
  CHECK(ten.back() == 9);

  const auto capped = candidate_antecedents(200, 300, 150);
  CHECK(capped.size() == 150);
  CHECK(capped.front() == 50);  // the 150 closest, farthest first
  CHECK(capped.back() == 199);
}

TEST_CASE("candidate set size never exceeds the cap and always precedes the query") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + rng.uniform_int(400);
    const int q = rng.uniform_int(n);
    const int cap = 1 + rng.uniform_int(200);
    const auto c = candidate_antecedents(q, n, cap);
    CHECK(static_cast<int>(c.size()) <= cap);
    CHECK(static_cast<int>(c.size()) == std::min(q, cap));
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i] < q);
      if (i > 0) CHECK(c[i] == c[i - 1] + 1);
    }
  }
}

namespace {

struct PairSetup {
  Corpus corpus = fixtures::corpus_from(fixtures::kSmallDoc);
  EncoderConfig cfg = fixtures::tiny_encoder();
  Model<double> model;

  explicit PairSetup(SharingMode sharing = SharingMode::kShareFfnn1)
      : model([&] {
          Rng rng(21);
          return Model<double>(cfg, sharing, CharVocab::build(corpus), rng);
        }()) {}

  // A fake mention matrix as tape input, bypassing the encoder.
  int fake_mentions(ad::Tape<double>& tape, int n, Rng& rng) {
    ad::Tensor<double> m({n, cfg.mention_dim()});
    for (auto& v : m.values) v = rng.uniform(-1.0, 1.0);
    return tape.input(m);
  }
};

}  // namespace

TEST_CASE("pair rows are [antecedent, anaphor, product, distance-feature]") {
  PairSetup s;
  Rng rng(3);
  ad::Tape<double> tape;
  const int mentions = s.fake_mentions(tape, 4, rng);
  const int pairs = pair_matrix(tape, s.model, mentions, 3, {0, 1, 2});
  const auto& p = tape.val(pairs);
  const int md = s.cfg.mention_dim();
  REQUIRE(p.shape == std::vector<int>{3, s.cfg.pair_dim()});
  const auto& m = tape.val(mentions);
  for (int row = 0; row < 3; ++row) {
    for (int j = 0; j < md; ++j) {
      CHECK(p.at(row, j) == m.at(row, j));                      // M_i
      CHECK(p.at(row, md + j) == m.at(3, j));                   // M_j
      CHECK(p.at(row, 2 * md + j) == m.at(row, j) * m.at(3, j));  // product
    }
    // distance feature: query 3 minus candidate row index
    const int b = bucket(3 - row);
    for (int j = 0; j < s.cfg.feature_dim; ++j) {
      CHECK(p.at(row, 3 * md + j) ==
            s.model.distance_embedding->value.at(b, j));
    }
  }
}

TEST_CASE("identical mention vectors square elementwise; zero antecedent zeroes two blocks") {
  PairSetup s;
  ad::Tape<double> tape;
  const int md = s.cfg.mention_dim();
  ad::Tensor<double> m({2, md});
  for (int j = 0; j < md; ++j) {
    m.at(0, j) = 0.0;         // zero antecedent mention
    m.at(1, j) = 0.5 + 0.1 * j;
  }
  const int mentions = tape.input(m);
  const int pairs = pair_matrix(tape, s.model, mentions, 1, {0});
  const auto& p = tape.val(pairs);
  for (int j = 0; j < md; ++j) {
    CHECK(p.at(0, j) == 0.0);            // M_i block zero
    CHECK(p.at(0, md + j) == m.at(1, j));  // M_j intact
    CHECK(p.at(0, 2 * md + j) == 0.0);   // product zero
  }

  ad::Tensor<double> same({2, md});
  for (int j = 0; j < md; ++j) same.at(0, j) = same.at(1, j) = 0.25 * (j + 1);
  const int mentions2 = tape.input(same);
  const int pairs2 = pair_matrix(tape, s.model, mentions2, 1, {0});
  for (int j = 0; j < md; ++j) {
    CHECK(tape.val(pairs2).at(0, 2 * md + j) ==
          doctest::Approx(same.at(0, j) * same.at(0, j)));
  }
}

TEST_CASE("zero towers score zero everywhere, tying with the artificial antecedent") {
  PairSetup s;
  for (auto* p : {s.model.bridging_tower.w1, s.model.bridging_tower.w2,
                  s.model.bridging_tower.wo}) {
    std::fill(p->value.values.begin(), p->value.values.end(), 0.0);
  }
  Rng rng(9);
  ad::Tape<double> tape;
  const int mentions = s.fake_mentions(tape, 5, rng);
  const int pairs = pair_matrix(tape, s.model, mentions, 4, {0, 1, 2, 3});
  const int scores = score_pairs(tape, s.model, Task::kBridging, pairs, nullptr);
  for (double v : tape.val(scores).values) CHECK(v == 0.0);
  const auto all = tape.val(scores).values;
  CHECK_FALSE(decide_link(std::vector<double>(all.begin(), all.end())).link);
}

TEST_CASE("fully shared towers differ only in their output heads") {
  PairSetup s(SharingMode::kShareFfnn2);
  CHECK(s.model.bridging_tower.w1 == s.model.coref_tower.w1);
  CHECK(s.model.bridging_tower.b1 == s.model.coref_tower.b1);
  CHECK(s.model.bridging_tower.w2 == s.model.coref_tower.w2);
  CHECK(s.model.bridging_tower.b2 == s.model.coref_tower.b2);
  CHECK(s.model.bridging_tower.wo != s.model.coref_tower.wo);
  CHECK(s.model.bridging_tower.bo != s.model.coref_tower.bo);

  // With equal heads the two tasks produce identical scores on the same P.
  s.model.coref_tower.wo->value = s.model.bridging_tower.wo->value;
  s.model.coref_tower.bo->value = s.model.bridging_tower.bo->value;
  Rng rng(33);
  ad::Tape<double> tape;
  const int mentions = s.fake_mentions(tape, 4, rng);
  const int pairs = pair_matrix(tape, s.model, mentions, 3, {0, 1, 2});
  const int sb = score_pairs(tape, s.model, Task::kBridging, pairs, nullptr);
  const int sc = score_pairs(tape, s.model, Task::kCoreference, pairs, nullptr);
  CHECK(tape.val(sb).values == tape.val(sc).values);
}

TEST_CASE("sharing modes split hidden layers as configured") {
  PairSetup enc_only(SharingMode::kEncoderOnly);
  CHECK(enc_only.model.bridging_tower.w1 != enc_only.model.coref_tower.w1);
  CHECK(enc_only.model.bridging_tower.w2 != enc_only.model.coref_tower.w2);

  PairSetup share1(SharingMode::kShareFfnn1);
  CHECK(share1.model.bridging_tower.w1 == share1.model.coref_tower.w1);
  CHECK(share1.model.bridging_tower.w2 != share1.model.coref_tower.w2);
}

TEST_CASE("gradients flow through pair scoring") {
  PairSetup s;
  Rng rng(41);
  ad::Tensor<double> m({4, s.cfg.mention_dim()});
  for (auto& v : m.values) v = rng.uniform(-1.0, 1.0);
  auto eval = [&](bool need_grad) {
    ad::Tape<double> tape;
    const int mentions = tape.input(m);
    const int pairs = pair_matrix(tape, s.model, mentions, 3, {0, 1, 2});
    const int scores = score_pairs(tape, s.model, Task::kBridging, pairs, nullptr);
    const int loss = tape.sum(tape.tanh_(scores));
    const double v = tape.val(loss)[0];
    if (need_grad) tape.backward(loss);
    return v;
  };
  auto report = ad::finite_difference_check(s.model.params(), eval);
  CHECK_MESSAGE(report.pass, report.summary());
}

TEST_CASE("link decisions: abstain on non-positive scores, nearest wins ties") {
  CHECK_FALSE(decide_link({-0.5, -2.0, -0.1}).link);  // epsilon wins at 0

  const auto hit = decide_link({-1.0, 5.0, 0.5});
  CHECK(hit.link);
  CHECK(hit.candidate == 1);
  CHECK(hit.score == 5.0);

  const auto tie = decide_link({1.0, 0.3, 1.0});
  CHECK(tie.link);
  CHECK(tie.candidate == 2);  // nearest candidate (latest position)

  CHECK_FALSE(decide_link({0.0, 0.0}).link);  // exact tie with epsilon
  CHECK_FALSE(decide_link({}).link);
}

TEST_CASE("forced choice always picks a candidate, nearest on ties") {
  CHECK(forced_choice({-3.0, -1.0, -2.0}) == 1);
  CHECK(forced_choice({2.0, 2.0}) == 1);
  CHECK(forced_choice({}) == -1);
}

TEST_CASE("pinned-epsilon argmax is equivalent to max-score-positive") {
  Rng rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = rng.uniform_int(6);
    std::vector<double> scores(static_cast<std::size_t>(k));
    for (auto& v : scores) {
      v = rng.uniform(-2.0, 2.0);
      if (rng.uniform() < 0.2) v = 0.0;  // force exact ties with epsilon
    }
    const auto d = decide_link(scores);
    const double max_score =
        scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
    CHECK(d.link == (max_score > 0.0));
    if (d.link) {
      CHECK(scores[static_cast<std::size_t>(d.candidate)] == max_score);
      // nearest among the maxima
      for (std::size_t i = static_cast<std::size_t>(d.candidate) + 1; i < scores.size(); ++i) {
        CHECK(scores[i] < max_score);
      }
    }
  }
}

TEST_CASE("predicted links always point backwards and respect the cap") {
  Corpus corpus = fixtures::corpus_from(fixtures::kSmallDoc);
  EncoderConfig cfg = fixtures::tiny_encoder();
  Rng rng(77);
  Model<double> model(cfg, SharingMode::kShareFfnn1, CharVocab::build(corpus), rng);
  auto statics = fixtures::random_statics(corpus, cfg.static_dim, 3);
  CorpusFeatures<double> features(corpus, statics, nullptr, model.char_vocab(), cfg);

  const auto links = predict_corpus_links(model, corpus, features, Task::kBridging,
                                          EvalSetting::kKeep, 150);
  for (const auto& link : links) {
    CHECK(link.antecedent < link.anaphor);
    CHECK(link.antecedent >= 0);
  }

  // Identical candidate objects for both tasks on the same anaphor.
  const auto n = static_cast<int>(corpus.docs[0].mentions.size());
  for (int q = 0; q < n; ++q) {
    CHECK(candidate_antecedents(q, n, 150) == candidate_antecedents(q, n, 150));
  }
}
