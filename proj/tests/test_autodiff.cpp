#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bridger/gradcheck.h"
#include "bridger/rng.h"
#include "bridger/tape.h"

using bridger::Rng;
using bridger::ad::finite_difference_check;
using bridger::ad::ParameterSet;
using bridger::ad::Tape;
using bridger::ad::Tensor;

namespace {

Tensor<double> random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values) v = rng.uniform(-scale, scale);
  return t;
}

void fill_random(bridger::ad::Parameter<double>& p, Rng& rng, double scale = 1.0) {
  for (auto& v : p.value.values) v = rng.uniform(-scale, scale);
}

}  // namespace

TEST_CASE("matmul by identity returns the same matrix") {
  Rng rng(7);
  Tape<double> tape;
  auto a = tape.input(random_tensor({2, 2}, rng));
  auto eye = tape.input(Tensor<double>::from({2, 2}, {1, 0, 0, 1}));
  auto out = tape.matmul(eye, a);
  CHECK(tape.val(out).values == tape.val(a).values);
}

TEST_CASE("softmax of a constant vector is uniform") {
  Tape<double> tape;
  auto x = tape.input(Tensor<double>::from({3}, {0, 0, 0}));
  auto y = tape.softmax(x);
  for (double v : tape.val(y).values) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("softmax shift invariance and row normalization") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + rng.uniform_int(4), c = 1 + rng.uniform_int(8);
    Tape<double> tape;
    auto x = tape.input(random_tensor({r, c}, rng, 5.0));
    auto y = tape.softmax(x, 1);
    Tensor<double> shifted = tape.val(x);
    const double k = rng.uniform(-100.0, 100.0);
    for (auto& v : shifted.values) v += k;
    auto y2 = tape.softmax(tape.input(shifted), 1);
    for (int i = 0; i < r; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < c; ++j) {
        row_sum += tape.val(y).at(i, j);
        CHECK(tape.val(y).at(i, j) == doctest::Approx(tape.val(y2).at(i, j)).epsilon(1e-9));
      }
      CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("log-softmax via logsumexp stays finite for extreme finite inputs") {
  Tape<double> tape;
  auto x = tape.input(Tensor<double>::from({3}, {-1e300, 0.0, 700.0}));
  auto lse = tape.logsumexp(x);
  for (int i = 0; i < 3; ++i) {
    const double logp = tape.val(x)[i] - tape.val(lse)[0];
    CHECK(std::isfinite(logp));
  }
}

TEST_CASE("lstm cell with zero weights and zero state yields zero hidden state") {
  Tape<double> tape;
  const int hid = 4, in = 3;
  auto x = tape.input(Tensor<double>::from({in}, {0.3, -0.7, 1.1}));
  auto h = tape.input(Tensor<double>({hid}));
  auto c = tape.input(Tensor<double>({hid}));
  auto w = tape.input(Tensor<double>({4 * hid, in + hid}));
  auto b = tape.input(Tensor<double>({4 * hid}));
  auto hc = tape.lstm_cell(x, h, c, w, b);
  for (double v : tape.val(hc).values) CHECK(v == 0.0);
}

TEST_CASE("shape mismatch is rejected with the offending shapes") {
  Tape<double> tape;
  auto a = tape.input(Tensor<double>({2, 3}));
  auto b = tape.input(Tensor<double>({2, 3}));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("{2,3}"), bridger::Error);
}

TEST_CASE("non-finite output identifies the primitive") {
  Tape<double> tape;
  auto x = tape.input(Tensor<double>::from({2}, {1.0, 0.0}));
  CHECK_THROWS_WITH_AS(tape.log_(x), doctest::Contains("log"), bridger::NumericError);
}

TEST_CASE("backward of sum gives all-ones gradient") {
  ParameterSet<double> params;
  auto& p = params.create("p", {2, 3});
  Rng rng(3);
  fill_random(p, rng);
  Tape<double> tape;
  auto loss = tape.sum(tape.param(p));
  tape.backward(loss);
  for (double g : p.grad.values) CHECK(g == 1.0);
}

TEST_CASE("backward of sum of squares gives 2x") {
  ParameterSet<double> params;
  auto& p = params.create("p", {3});
  p.value.values = {1, 2, 3};
  Tape<double> tape;
  auto n = tape.param(p);
  auto loss = tape.sum(tape.mul(n, n));
  tape.backward(loss);
  CHECK(p.grad.values == std::vector<double>{2, 4, 6});
}

TEST_CASE("backward rejects a non-scalar loss") {
  ParameterSet<double> params;
  auto& p = params.create("p", {3});
  Tape<double> tape;
  auto n = tape.param(p);
  CHECK_THROWS_AS(tape.backward(n), bridger::Error);
}

TEST_CASE("unreachable parameters keep zero gradient") {
  ParameterSet<double> params;
  auto& a = params.create("a", {2});
  auto& b = params.create("b", {2});
  a.value.values = {1, 2};
  b.value.values = {3, 4};
  Tape<double> tape;
  auto na = tape.param(a);
  tape.param(b);  // on tape but not connected to the loss
  tape.backward(tape.sum(na));
  CHECK(a.grad.values == std::vector<double>{1, 1});
  CHECK(b.grad.values == std::vector<double>{0, 0});
}

TEST_CASE("two-layer ffnn gradient matches central finite differences") {
  ParameterSet<double> params;
  Rng rng(17);
  auto& w1 = params.create("w1", {4, 5});
  auto& b1 = params.create("b1", {5});
  auto& w2 = params.create("w2", {5, 1});
  auto& b2 = params.create("b2", {1});
  for (auto* p : {&w1, &b1, &w2, &b2}) fill_random(*p, rng, 0.8);
  const Tensor<double> x = random_tensor({1, 4}, rng);

  auto eval = [&](bool need_grad) {
    Tape<double> tape;
    auto h = tape.tanh_(tape.add(tape.matmul(tape.input(x), tape.param(w1)), tape.param(b1)));
    auto out = tape.add(tape.matmul(h, tape.param(w2)), tape.param(b2));
    auto loss = tape.sum(out);
    const double v = tape.val(loss)[0];
    if (need_grad) tape.backward(loss);
    return v;
  };
  auto report = finite_difference_check(params, eval);
  CHECK(report.pass);
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("tanh at zero: analytic and numeric derivatives agree at 1") {
  ParameterSet<double> params;
  auto& p = params.create("x", {1});
  p.value.values = {0.0};
  auto eval = [&](bool need_grad) {
    Tape<double> tape;
    auto loss = tape.sum(tape.tanh_(tape.param(p)));
    const double v = tape.val(loss)[0];
    if (need_grad) tape.backward(loss);
    return v;
  };
  auto report = finite_difference_check(params, eval);
  CHECK(report.pass);
  params.zero_grads();
  eval(true);
  CHECK(p.grad.values[0] == doctest::Approx(1.0).epsilon(1e-12));  // analytic
  const double h = 1e-5;
  p.value.values = {h};
  const double f_plus = eval(false);
  p.value.values = {-h};
  const double f_minus = eval(false);
  CHECK((f_plus - f_minus) / (2 * h) == doctest::Approx(1.0).epsilon(1e-8));  // numeric
}

TEST_CASE("a sign-flipped backward rule is caught with relative error near 2") {
  ParameterSet<double> params;
  Rng rng(23);
  auto& p = params.create("p", {4});
  fill_random(p, rng);
  auto eval = [&](bool need_grad) {
    Tape<double> tape;
    auto n = tape.param(p);
    auto loss = tape.sum(tape.mul(n, n));
    const double v = tape.val(loss)[0];
    if (need_grad) {
      tape.backward(loss);
      for (auto& g : p.grad.values) g = -g;  // deliberately corrupted rule
    }
    return v;
  };
  auto report = finite_difference_check(params, eval);
  CHECK_FALSE(report.pass);
  CHECK(report.max_rel_error == doctest::Approx(2.0).epsilon(1e-3));
}

// Every primitive with parameters feeding it passes the finite-difference
// check on random small inputs.
TEST_CASE("per-primitive gradient checks") {
  Rng seed_rng(101);

  auto run = [](const char* name, auto build) {
    CAPTURE(name);
    ParameterSet<double> params;
    Rng rng(401);
    auto eval = build(params, rng);
    auto report = finite_difference_check(params, eval);
    CHECK_MESSAGE(report.pass, name, ": ", report.summary());
  };

  run("matmul", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {3, 4});
    auto& b = params.create("b", {4, 2});
    fill_random(a, rng);
    fill_random(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.matmul(t.param(a), t.param(b)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("add-broadcast", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {3, 4});
    auto& b = params.create("b", {4});
    fill_random(a, rng);
    fill_random(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.tanh_(t.add(t.param(a), t.param(b))));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("mul-sigmoid-relu", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {6});
    auto& b = params.create("b", {6});
    fill_random(a, rng);
    fill_random(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.sum(t.relu(t.mul(t.sigmoid(t.param(a)), t.param(b))));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("concat-slice-reshape", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {3});
    auto& b = params.create("b", {4});
    fill_random(a, rng);
    fill_random(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto cat = t.concat({t.param(a), t.param(b)}, 0);
      auto sl = t.slice(cat, 1, 6);
      auto m = t.reshape(sl, {1, 5});
      auto loss = t.sum(t.tanh_(m));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("concat-axis1", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {2, 3});
    auto& b = params.create("b", {2, 2});
    fill_random(a, rng);
    fill_random(b, rng);
    return [&](bool g) {
      Tape<double> t;
      auto cat = t.concat({t.param(a), t.param(b)}, 1);
      auto loss = t.sum(t.tanh_(cat));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("softmax-log", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {5});
    fill_random(a, rng, 2.0);
    return [&](bool g) {
      Tape<double> t;
      auto sm = t.softmax(t.param(a));
      auto loss = t.sum(t.mul(sm, t.log_(sm)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("dropout", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {8});
    fill_random(a, rng);
    return [&](bool g) {
      Tape<double> t;
      const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 1, 1, 0};
      auto loss = t.sum(t.tanh_(t.dropout(t.param(a), mask, 0.5)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("gather-rows", [](ParameterSet<double>& params, Rng& rng) {
    auto& table = params.create("table", {5, 3});
    fill_random(table, rng);
    return [&](bool g) {
      Tape<double> t;
      auto rows = t.gather_rows(t.param(table), {0, 2, 2, 4});
      auto loss = t.sum(t.tanh_(rows));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("conv1d-max-pool", [](ParameterSet<double>& params, Rng& rng) {
    auto& w = params.create("w", {3 * 2, 4});
    auto& b = params.create("b", {4});
    auto& x = params.create("x", {5, 2});
    fill_random(w, rng);
    fill_random(b, rng);
    fill_random(x, rng);
    return [&](bool g) {
      Tape<double> t;
      auto out = t.conv1d_max_pool(t.param(x), t.param(w), t.param(b), 3);
      auto loss = t.sum(t.tanh_(out));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("conv1d-max-pool-short-input", [](ParameterSet<double>& params, Rng& rng) {
    auto& w = params.create("w", {4 * 2, 3});
    auto& b = params.create("b", {3});
    auto& x = params.create("x", {1, 2});  // shorter than the filter width
    fill_random(w, rng);
    fill_random(b, rng);
    fill_random(x, rng);
    return [&](bool g) {
      Tape<double> t;
      auto out = t.conv1d_max_pool(t.param(x), t.param(w), t.param(b), 4);
      auto loss = t.sum(t.tanh_(out));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("lstm-cell", [](ParameterSet<double>& params, Rng& rng) {
    const int hid = 3, in = 2;
    auto& x = params.create("x", {in});
    auto& h = params.create("h", {hid});
    auto& c = params.create("c", {hid});
    auto& w = params.create("w", {4 * hid, in + hid});
    auto& b = params.create("b", {4 * hid});
    for (auto* p : {&x, &h, &c, &w, &b}) fill_random(*p, rng, 0.7);
    return [&, hid](bool g) {
      Tape<double> t;
      auto hc = t.lstm_cell(t.param(x), t.param(h), t.param(c), t.param(w), t.param(b));
      auto h2 = t.slice(hc, 0, hid);
      auto c2 = t.slice(hc, hid, 2 * hid);
      auto loss = t.sum(t.add(t.tanh_(h2), t.mul(c2, c2)));
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  run("logsumexp-scale", [](ParameterSet<double>& params, Rng& rng) {
    auto& a = params.create("a", {7});
    fill_random(a, rng, 3.0);
    return [&](bool g) {
      Tape<double> t;
      auto loss = t.scale(t.logsumexp(t.param(a)), -2.5);
      double v = t.val(loss)[0];
      if (g) t.backward(loss);
      return v;
    };
  });

  (void)seed_rng;
}

TEST_CASE("stacked lstm chain with attention head matches finite differences") {
  // Three stacked cells over a 5-step input, a softmax attention pool and a
  // small ffnn head; exercises the composition the encoder relies on.
  ParameterSet<double> params;
  Rng rng(2029);
  const int in = 3, hid = 4, steps = 5;
  std::vector<bridger::ad::Parameter<double>*> ws, bs;
  for (int layer = 0; layer < 3; ++layer) {
    const int lin = layer == 0 ? in : hid;
    ws.push_back(&params.create("w" + std::to_string(layer), {4 * hid, lin + hid}));
    bs.push_back(&params.create("b" + std::to_string(layer), {4 * hid}));
    fill_random(*ws.back(), rng, 0.5);
    fill_random(*bs.back(), rng, 0.3);
  }
  auto& wa = params.create("wa", {hid, 1});
  fill_random(wa, rng, 0.8);
  auto& wo = params.create("wo", {hid, 1});
  fill_random(wo, rng, 0.8);
  std::vector<Tensor<double>> xs;
  for (int t = 0; t < steps; ++t) xs.push_back(random_tensor({in}, rng));

  auto eval = [&](bool need_grad) {
    Tape<double> tape;
    std::vector<Tape<double>::Id> seq;
    for (const auto& x : xs) seq.push_back(tape.input(x));
    for (int layer = 0; layer < 3; ++layer) {
      auto w = tape.param(*ws[layer]);
      auto b = tape.param(*bs[layer]);
      auto h = tape.input(Tensor<double>({hid}));
      auto c = tape.input(Tensor<double>({hid}));
      std::vector<Tape<double>::Id> next;
      for (auto x : seq) {
        auto hc = tape.lstm_cell(x, h, c, w, b);
        h = tape.slice(hc, 0, hid);
        c = tape.slice(hc, hid, 2 * hid);
        next.push_back(h);
      }
      seq = next;
    }
    std::vector<Tape<double>::Id> rows;
    for (auto h : seq) rows.push_back(tape.reshape(h, {1, hid}));
    auto m = tape.concat(rows, 0);
    auto alpha = tape.reshape(tape.matmul(m, tape.param(wa)), {steps});
    auto a = tape.reshape(tape.softmax(alpha), {1, steps});
    auto pooled = tape.matmul(a, m);
    auto loss = tape.sum(tape.matmul(tape.tanh_(pooled), tape.param(wo)));
    const double v = tape.val(loss)[0];
    if (need_grad) tape.backward(loss);
    return v;
  };
  auto report = finite_difference_check(params, eval);
  CHECK_MESSAGE(report.pass, report.summary());
  CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("identical inputs give bitwise identical forward values and gradients") {
  auto run = [](std::vector<double>* grads) {
    ParameterSet<double> params;
    Rng rng(555);
    auto& w = params.create("w", {6, 6});
    auto& b = params.create("b", {6});
    fill_random(w, rng);
    fill_random(b, rng);
    Tape<double> tape;
    auto x = tape.input(random_tensor({2, 6}, rng));
    auto h = tape.tanh_(tape.add(tape.matmul(x, tape.param(w)), tape.param(b)));
    auto loss = tape.sum(h);
    tape.backward(loss);
    *grads = w.grad.values;
    return tape.val(loss)[0];
  };
  std::vector<double> g1, g2;
  const double v1 = run(&g1);
  const double v2 = run(&g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("conv1d-with-max-pool output size is independent of input length") {
  Rng rng(77);
  Tape<double> tape;
  auto w = tape.input(random_tensor({3 * 2, 5}, rng));
  auto b = tape.input(random_tensor({5}, rng));
  for (int len : {1, 2, 3, 10, 40}) {
    auto x = tape.input(random_tensor({len, 2}, rng));
    auto out = tape.conv1d_max_pool(x, w, b, 3);
    CHECK(tape.val(out).shape == std::vector<int>{5});
  }
}

TEST_CASE("dropout mask must match the input size") {
  Tape<double> tape;
  auto x = tape.input(Tensor<double>({4}));
  CHECK_THROWS_AS(tape.dropout(x, {1, 1}, 0.5), bridger::Error);
}
