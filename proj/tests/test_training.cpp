#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bridger/checkpoint.h"
#include "bridger/gradcheck.h"
#include "bridger/training.h"
#include "support/fixtures.h"

using namespace bridger;

// Brute-force reference: plain softmax in double, no log-sum-exp fusion.
static double oracle_marginal_nll(const std::vector<double>& scores_with_eps,
                                  const std::vector<int>& targets) {
  double denom = 0.0;
  for (double s : scores_with_eps) denom += std::exp(s);
  double num = 0.0;
  for (int t : targets) num += std::exp(scores_with_eps[static_cast<std::size_t>(t)]);
  return -std::log(num / denom);
}

static double run_marginal_nll(const std::vector<double>& scores_with_eps,
                               const std::vector<int>& targets) {
  ad::Tape<double> tape;
  const int s = tape.input(ad::Tensor<double>::from(
      {static_cast<int>(scores_with_eps.size())}, std::vector<double>(scores_with_eps)));
  return tape.val(marginal_nll(tape, s, targets))[0];
}

TEST_CASE("two equal scores, one target: loss is log 2") {
  CHECK(run_marginal_nll({0.0, 0.0}, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("targets covering all candidates give zero loss") {
  CHECK(run_marginal_nll({1.3, -0.2, 4.0}, {0, 1, 2}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("worked three-candidate example matches the closed form") {
  // scores {c1: 2, c2: -1, eps: 0}, target c1
  const double expected = -std::log(std::exp(2.0) / (1.0 + std::exp(2.0) + std::exp(-1.0)));
  const double got = run_marginal_nll({2.0, -1.0, 0.0}, {0});
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.1698460195562856).epsilon(1e-12));
  CHECK(got == doctest::Approx(oracle_marginal_nll({2.0, -1.0, 0.0}, {0})).epsilon(1e-12));
}

TEST_CASE("loss matches the brute-force softmax oracle on random instances") {
  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + rng.uniform_int(12);
    std::vector<double> scores(static_cast<std::size_t>(k + 1));
    for (auto& s : scores) s = rng.uniform(-6.0, 6.0);
    scores.back() = 0.0;  // pinned artificial antecedent
    const int n_targets = 1 + rng.uniform_int(k);
    auto targets = rng.sample_without_replacement(k + 1, n_targets);
    const double mine = run_marginal_nll(scores, targets);
    const double ref = oracle_marginal_nll(scores, targets);
    CHECK(std::abs(mine - ref) <= 1e-6);
    CHECK(mine >= -1e-12);  // non-negativity
  }
}

TEST_CASE("gold targets: cluster mates of the antecedent count as correct") {
  DocGold gold;
  gold.cluster_of = {0, -1, -1, 0, -1, -1, -1, -1, -1};
  gold.bridging_antecedent.assign(9, -1);
  gold.bridging_relation.assign(9, -1);
  gold.bridging_antecedent[8] = 0;  // anaphor 8 bridges to mention 0; cluster {0, 3}
  const auto candidates = candidate_antecedents(8, 9, 150);  // 0..7
  const auto targets = gold_targets(8, candidates, gold, Task::kBridging);
  CHECK(targets == std::vector<int>{0, 3});
}

TEST_CASE("gold antecedent outside the window falls back to a window cluster mate or epsilon") {
  DocGold gold;
  gold.cluster_of.assign(10, -1);
  gold.bridging_antecedent.assign(10, -1);
  gold.bridging_relation.assign(10, -1);
  gold.bridging_antecedent[9] = 0;

  // window of 3: candidates {6,7,8}; antecedent 0 unreachable, no cluster
  auto targets = gold_targets(9, candidate_antecedents(9, 10, 3), gold, Task::kBridging);
  CHECK(targets == std::vector<int>{3});  // epsilon = |candidates|

  // a cluster mate inside the window becomes the target
  gold.cluster_of[0] = 2;
  gold.cluster_of[7] = 2;
  targets = gold_targets(9, candidate_antecedents(9, 10, 3), gold, Task::kBridging);
  CHECK(targets == std::vector<int>{1});  // candidate position of mention 7
}

TEST_CASE("non-anaphors target epsilon for both tasks") {
  DocGold gold;
  gold.cluster_of.assign(5, -1);
  gold.bridging_antecedent.assign(5, -1);
  gold.bridging_relation.assign(5, -1);
  const auto candidates = candidate_antecedents(4, 5, 150);
  CHECK(gold_targets(4, candidates, gold, Task::kBridging) == std::vector<int>{4});
  CHECK(gold_targets(4, candidates, gold, Task::kCoreference) == std::vector<int>{4});
}

TEST_CASE("coreference targets are the query's own preceding cluster mates") {
  DocGold gold;
  gold.cluster_of = {1, -1, 1, -1, 1};
  gold.bridging_antecedent.assign(5, -1);
  gold.bridging_relation.assign(5, -1);
  CHECK(gold_targets(4, candidate_antecedents(4, 5, 150), gold, Task::kCoreference) ==
        std::vector<int>{0, 2});
  // first mention of its cluster: nothing precedes, epsilon
  CHECK(gold_targets(0, candidate_antecedents(0, 5, 150), gold, Task::kCoreference) ==
        std::vector<int>{0});
}

namespace {

std::vector<std::vector<InfoStatus>> make_statuses(int bridging, int dn, int do_count) {
  // spread across two pseudo-documents to exercise corpus-level counting
  std::vector<std::vector<InfoStatus>> statuses(2);
  auto push = [&](InfoStatus s, int count) {
    for (int i = 0; i < count; ++i) statuses[static_cast<std::size_t>(i % 2)].push_back(s);
  };
  push(InfoStatus::kBridging, bridging);
  push(InfoStatus::kDiscourseNew, dn);
  push(InfoStatus::kDiscourseOld, do_count);
  return statuses;
}

StatusCounts kept_counts(const std::vector<std::vector<InfoStatus>>& statuses,
                         const std::vector<std::vector<char>>& kept) {
  StatusCounts counts;
  for (std::size_t d = 0; d < statuses.size(); ++d) {
    for (std::size_t m = 0; m < statuses[d].size(); ++m) {
      if (!kept[d][m]) continue;
      switch (statuses[d][m]) {
        case InfoStatus::kDiscourseNew: ++counts.discourse_new; break;
        case InfoStatus::kDiscourseOld: ++counts.discourse_old; break;
        case InfoStatus::kBridging: ++counts.bridging; break;
      }
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("undersampling keeps exact quotas every epoch") {
  const auto statuses = make_statuses(30, 450, 240);
  Rng rng(77);
  for (int epoch = 0; epoch < 25; ++epoch) {
    const auto kept = undersample_queries(statuses, 2.0, rng);
    const auto counts = kept_counts(statuses, kept);
    CHECK(counts.bridging == 30);  // every bridging query, every epoch
    CHECK(counts.discourse_new == 60);
    CHECK(counts.discourse_old == 60);
  }
}

TEST_CASE("gamma 0 keeps only bridging queries") {
  const auto statuses = make_statuses(5, 40, 30);
  Rng rng(1);
  const auto counts = kept_counts(statuses, undersample_queries(statuses, 0.0, rng));
  CHECK(counts.bridging == 5);
  CHECK(counts.discourse_new == 0);
  CHECK(counts.discourse_old == 0);
}

TEST_CASE("a small class is kept whole when under quota") {
  const auto statuses = make_statuses(10, 7, 50);
  Rng rng(2);
  const auto counts = kept_counts(statuses, undersample_queries(statuses, 2.0, rng));
  CHECK(counts.discourse_new == 7);  // |DN| < gamma * bridging
  CHECK(counts.discourse_old == 20);
}

TEST_CASE("combined document loss passes the finite-difference check with fixed masks") {
  Corpus corpus = fixtures::corpus_from(fixtures::kGradCheckDoc);
  EncoderConfig cfg = fixtures::tiny_encoder();
  Rng init(3);
  Model<double> model(cfg, SharingMode::kShareFfnn1, CharVocab::build(corpus), init);
  Rng weight_rng(17);
  ad::randomize_for_gradcheck(model.params(), weight_rng);
  auto statics = fixtures::random_statics(corpus, cfg.static_dim, 8);
  auto inputs = prepare_doc_inputs<double>(corpus.docs[0], statics, nullptr,
                                           model.char_vocab(), cfg);
  const DocGold gold = build_doc_gold(corpus.docs[0]);
  TrainConfig tc;
  tc.max_antecedents = 150;
  const std::vector<int> queries = {0, 1, 2, 3, 4, 5};

  auto eval = [&](bool need_grad) {
    Rng mask_rng(911);  // identical dropout masks on every evaluation
    DocGraph<double> g = build_doc_graph(model, inputs, &mask_rng);
    const int loss =
        document_loss(g, model, corpus.docs[0], gold, queries, tc, &mask_rng, nullptr, nullptr);
    const double v = g.tape.val(loss)[0];
    if (need_grad) g.tape.backward(loss);
    return v;
  };
  auto report = ad::finite_difference_check(model.params(), eval);
  CHECK_MESSAGE(report.pass, report.summary());
  CHECK(report.max_rel_error <= 1e-4);
}

namespace {

struct TrainFixture {
  Corpus corpus = fixtures::corpus_from(fixtures::two_doc_corpus());
  EncoderConfig cfg = fixtures::tiny_encoder();
  StaticVectors statics = fixtures::random_statics(corpus, cfg.static_dim, 19);

  TrainConfig config(int epochs, std::uint64_t seed = 7) const {
    TrainConfig tc;
    tc.seed = seed;
    tc.epochs = epochs;
    tc.undersample = false;
    return tc;
  }
};

}  // namespace

TEST_CASE("training reduces the loss on a tiny fixture") {
  TrainFixture f;
  auto result = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                                   SharingMode::kShareFfnn1, f.config(60));
  REQUIRE(result.log.size() == 60);
  double best_late = 1e18;
  for (std::size_t i = result.log.size() - 10; i < result.log.size(); ++i) {
    best_late = std::min(best_late, result.log[i].total());
  }
  CHECK(best_late < result.log.front().total());
}

TEST_CASE("identical seeds give bitwise-identical loss logs") {
  TrainFixture f;
  auto a = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                              SharingMode::kShareFfnn1, f.config(5));
  auto b = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                              SharingMode::kShareFfnn1, f.config(5));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].bridging_loss == b.log[i].bridging_loss);
    CHECK(a.log[i].coref_loss == b.log[i].coref_loss);
    CHECK(a.log[i].queries == b.log[i].queries);
  }
}

TEST_CASE("bridging-only training never touches the coreference tower") {
  TrainFixture f;
  TrainConfig tc = f.config(4, 55);
  tc.coref_loss_weight = 0.0;
  auto result = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                                   SharingMode::kEncoderOnly, tc);

  // Reconstructing the model with the same seed reproduces the initial values.
  Rng rng(tc.seed);
  Model<float> fresh(f.cfg, SharingMode::kEncoderOnly, CharVocab::build(f.corpus), rng);
  const auto& trained = result.model;
  for (const char* name :
       {"tower.coref.h1.w", "tower.coref.h1.b", "tower.coref.h2.w", "tower.coref.h2.b",
        "tower.coref.out.w", "tower.coref.out.b"}) {
    CHECK(trained.params().get(name).value.values == fresh.params().get(name).value.values);
    for (float g : trained.params().get(name).grad.values) CHECK(g == 0.0f);
  }
  // and the bridging tower did move
  CHECK(trained.params().get("tower.bridging.h1.w").value.values !=
        fresh.params().get("tower.bridging.h1.w").value.values);
}

TEST_CASE("checkpoints round-trip bitwise and reproduce predictions") {
  TrainFixture f;
  auto result = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                                   SharingMode::kShareFfnn1, f.config(3));
  const std::string path = "/tmp/bridger_test_ckpt.bin";
  TrainConfig tc = f.config(3);
  save_checkpoint(result.model, tc, path);

  TrainConfig loaded_tc;
  Model<float> loaded = load_checkpoint<float>(path, &loaded_tc);
  CHECK(loaded_tc.seed == tc.seed);
  CHECK(loaded.sharing() == SharingMode::kShareFfnn1);
  REQUIRE(loaded.params().size() == result.model.params().size());
  for (std::size_t i = 0; i < loaded.params().size(); ++i) {
    const auto& a = *loaded.params().items()[i];
    const auto& b = *result.model.params().items()[i];
    CHECK(a.name == b.name);
    CHECK(a.value.values == b.value.values);  // bitwise
  }

  CorpusFeatures<float> features(f.corpus, f.statics, nullptr, loaded.char_vocab(), f.cfg);
  const auto before = predict_corpus_links(result.model, f.corpus, features, Task::kBridging,
                                           EvalSetting::kKeep, 150);
  const auto after =
      predict_corpus_links(loaded, f.corpus, features, Task::kBridging, EvalSetting::kKeep, 150);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].doc == after[i].doc);
    CHECK(before[i].anaphor == after[i].anaphor);
    CHECK(before[i].antecedent == after[i].antecedent);
    CHECK(before[i].score == after[i].score);
  }
  std::remove(path.c_str());
}

TEST_CASE("corrupted or mismatched checkpoints are rejected") {
  TrainFixture f;
  auto result = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                                   SharingMode::kShareFfnn1, f.config(1));
  const std::string path = "/tmp/bridger_test_ckpt2.bin";
  TrainConfig tc = f.config(1);
  save_checkpoint(result.model, tc, path);

  // truncation
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    std::ofstream out(path + ".trunc", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint<float>(path + ".trunc"), DataError);

  // wrong dtype
  CHECK_THROWS_WITH_AS(load_checkpoint<double>(path), doctest::Contains("dtype"), DataError);

  // mismatched sharing configuration is rejected naming the field
  const SharingMode expected = SharingMode::kEncoderOnly;
  CHECK_THROWS_WITH_AS(load_checkpoint<float>(path, nullptr, &expected),
                       doctest::Contains("sharing"), DataError);

  std::remove(path.c_str());
  std::remove((path + ".trunc").c_str());
}

TEST_CASE("training aborts with context when the loss turns non-finite") {
  TrainFixture f;
  TrainConfig tc = f.config(3, 7);
  tc.learning_rate = 1e18;  // drive the parameters to overflow
  try {
    auto result = train_model<float>(f.corpus, f.statics, nullptr, f.cfg,
                                     SharingMode::kShareFfnn1, tc);
    // Divergence is not guaranteed at every scale, but if it happens the
    // error must name the epoch and document.
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("document") != std::string::npos);
  }
}
