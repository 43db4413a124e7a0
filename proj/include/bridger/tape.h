#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bridger/error.h"
#include "bridger/params.h"
#include "bridger/tensor.h"

namespace bridger::ad {

enum class Op : std::uint8_t {
  kInput,
  kParam,
  kMatmul,
  kAdd,
  kMul,
  kConcat,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kLog,
  kDropout,
  kGatherRows,
  kConv1dMaxPool,
  kLstmCell,
  kSlice,
  kReshape,
  kSum,
  kLogSumExp,
  kScale,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "multiply-elementwise";
    case Op::kConcat: return "concat";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax-over-axis";
    case Op::kLog: return "log";
    case Op::kDropout: return "dropout";
    case Op::kGatherRows: return "embedding-lookup";
    case Op::kConv1dMaxPool: return "conv1d-with-max-pool";
    case Op::kLstmCell: return "lstm-cell-step";
    case Op::kSlice: return "slice";
    case Op::kReshape: return "reshape";
    case Op::kSum: return "sum";
    case Op::kLogSumExp: return "log-sum-exp";
    case Op::kScale: return "scale";
  }
  return "?";
}

template <class T>
struct TapeNode {
  Op op;
  std::vector<int> inputs;
  Tensor<T> value;
  Tensor<T> grad;         // empty until touched by backward
  std::vector<int> ints;  // op-specific integer state (ids, bounds, argmax)
  std::vector<T> saved;   // op-specific saved activations
  Parameter<T>* param = nullptr;
};

// Records primitive applications in topological order and replays them in
// reverse for exact gradients. One tape per forward pass; backward may be
// called once and accumulates into Parameter::grad.
template <class T>
class Tape {
 public:
  using Id = int;

  Id input(Tensor<T> v) {
    TapeNode<T> n;
    n.op = Op::kInput;
    n.value = std::move(v);
    return push(std::move(n));
  }

  Id param(Parameter<T>& p) {
    TapeNode<T> n;
    n.op = Op::kParam;
    n.value = p.value;
    n.param = &p;
    return push(std::move(n));
  }

  Id matmul(Id a, Id b) {
    const auto& ta = val(a);
    const auto& tb = val(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[0]) {
      throw shape_error(Op::kMatmul, {&ta, &tb});
    }
    const int m = ta.shape[0], k = ta.shape[1], p = tb.shape[1];
    Tensor<T> out({m, p});
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        const T aij = ta.at(i, j);
        if (aij == T(0)) continue;
        const T* brow = &tb.values[static_cast<std::size_t>(j) * p];
        T* orow = &out.values[static_cast<std::size_t>(i) * p];
        for (int c = 0; c < p; ++c) orow[c] += aij * brow[c];
      }
    }
    return push(make(Op::kMatmul, {a, b}, std::move(out)));
  }

  // Same-shape addition, or rank-2 + rank-1 with the vector added to every
  // row (bias broadcast).
  Id add(Id a, Id b) {
    const auto& ta = val(a);
    const auto& tb = val(b);
    Tensor<T> out = ta;
    if (ta.shape == tb.shape) {
      for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    } else if (ta.rank() == 2 && tb.rank() == 1 && tb.shape[0] == ta.shape[1]) {
      const int r = ta.shape[0], c = ta.shape[1];
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.at(i, j) += tb[j];
    } else {
      throw shape_error(Op::kAdd, {&ta, &tb});
    }
    return push(make(Op::kAdd, {a, b}, std::move(out)));
  }

  Id mul(Id a, Id b) {
    const auto& ta = val(a);
    const auto& tb = val(b);
    if (ta.shape != tb.shape) throw shape_error(Op::kMul, {&ta, &tb});
    Tensor<T> out = ta;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
    return push(make(Op::kMul, {a, b}, std::move(out)));
  }

  // axis 0: stack along rows (rank-1 inputs give one longer vector);
  // axis 1: rank-2 inputs side by side.
  Id concat(const std::vector<Id>& xs, int axis) {
    if (xs.empty()) throw Error("concat: no inputs");
    const auto& t0 = val(xs[0]);
    Tensor<T> out;
    if (t0.rank() == 1) {
      if (axis != 0) throw Error("concat: rank-1 inputs require axis 0");
      int total = 0;
      for (Id x : xs) {
        if (val(x).rank() != 1) throw shape_error(Op::kConcat, {&t0, &val(x)});
        total += val(x).shape[0];
      }
      out = Tensor<T>({total});
      std::int64_t off = 0;
      for (Id x : xs) {
        const auto& t = val(x);
        std::copy(t.values.begin(), t.values.end(), out.values.begin() + off);
        off += t.numel();
      }
    } else if (t0.rank() == 2 && axis == 0) {
      const int c = t0.shape[1];
      int r = 0;
      for (Id x : xs) {
        if (val(x).rank() != 2 || val(x).shape[1] != c) {
          throw shape_error(Op::kConcat, {&t0, &val(x)});
        }
        r += val(x).shape[0];
      }
      out = Tensor<T>({r, c});
      std::int64_t off = 0;
      for (Id x : xs) {
        const auto& t = val(x);
        std::copy(t.values.begin(), t.values.end(), out.values.begin() + off);
        off += t.numel();
      }
    } else if (t0.rank() == 2 && axis == 1) {
      const int r = t0.shape[0];
      int c = 0;
      for (Id x : xs) {
        if (val(x).rank() != 2 || val(x).shape[0] != r) {
          throw shape_error(Op::kConcat, {&t0, &val(x)});
        }
        c += val(x).shape[1];
      }
      out = Tensor<T>({r, c});
      int coff = 0;
      for (Id x : xs) {
        const auto& t = val(x);
        const int tc = t.shape[1];
        for (int i = 0; i < r; ++i)
          std::copy(&t.values[static_cast<std::size_t>(i) * tc],
                    &t.values[static_cast<std::size_t>(i) * tc] + tc,
                    &out.values[static_cast<std::size_t>(i) * c + coff]);
        coff += tc;
      }
    } else {
      throw Error("concat: unsupported axis/rank");
    }
    TapeNode<T> n = make(Op::kConcat, xs, std::move(out));
    n.ints = {axis};
    return push(std::move(n));
  }

  Id tanh_(Id x) { return unary(Op::kTanh, x, [](T v) { return std::tanh(v); }); }

  Id sigmoid(Id x) {
    return unary(Op::kSigmoid, x, [](T v) { return T(1) / (T(1) + std::exp(-v)); });
  }

  Id relu(Id x) { return unary(Op::kRelu, x, [](T v) { return v > T(0) ? v : T(0); }); }

  Id log_(Id x) { return unary(Op::kLog, x, [](T v) { return std::log(v); }); }

  // Max-subtracted softmax over a rank-1 vector or over each row of a
  // rank-2 matrix (axis must be 1 for matrices).
  Id softmax(Id x, int axis = 0) {
    const auto& tx = val(x);
    Tensor<T> out = tx;
    if (tx.rank() == 1) {
      softmax_row(out.values.data(), tx.shape[0]);
    } else if (tx.rank() == 2 && axis == 1) {
      for (int i = 0; i < tx.shape[0]; ++i)
        softmax_row(&out.values[static_cast<std::size_t>(i) * tx.shape[1]], tx.shape[1]);
    } else {
      throw Error(std::string("softmax: unsupported axis for shape ") + tx.shape_str());
    }
    TapeNode<T> n = make(Op::kSoftmax, {x}, std::move(out));
    n.ints = {axis};
    return push(std::move(n));
  }

  // keep_mask holds one byte per element; kept entries are scaled by
  // 1/keep_prob so expectations match inference.
  Id dropout(Id x, const std::vector<std::uint8_t>& keep_mask, double keep_prob) {
    const auto& tx = val(x);
    if (static_cast<std::int64_t>(keep_mask.size()) != tx.numel()) {
      throw Error("dropout: mask size " + std::to_string(keep_mask.size()) +
                  " does not match input " + tx.shape_str());
    }
    if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
      throw Error("dropout: keep_prob must be in (0,1]");
    }
    const T inv = static_cast<T>(1.0 / keep_prob);
    TapeNode<T> n;
    n.op = Op::kDropout;
    n.inputs = {x};
    n.saved.resize(keep_mask.size());
    Tensor<T> out = tx;
    for (std::int64_t i = 0; i < tx.numel(); ++i) {
      const T f = keep_mask[static_cast<std::size_t>(i)] ? inv : T(0);
      n.saved[static_cast<std::size_t>(i)] = f;
      out[i] *= f;
    }
    n.value = std::move(out);
    return push(std::move(n));
  }

  // Row lookup: rank-2 input gathers rows, rank-1 input gathers elements.
  // This is the embedding-lookup primitive; it also serves as token/row
  // selection anywhere a subset of rows is needed.
  Id gather_rows(Id m, std::vector<int> ids) {
    const auto& tm = val(m);
    Tensor<T> out;
    if (tm.rank() == 2) {
      const int r = tm.shape[0], c = tm.shape[1];
      out = Tensor<T>({static_cast<int>(ids.size()), c});
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || id >= r) {
          throw Error("embedding-lookup: index " + std::to_string(id) +
                      " out of range for " + tm.shape_str());
        }
        std::copy(&tm.values[static_cast<std::size_t>(id) * c],
                  &tm.values[static_cast<std::size_t>(id) * c] + c,
                  &out.values[i * static_cast<std::size_t>(c)]);
      }
    } else if (tm.rank() == 1) {
      out = Tensor<T>({static_cast<int>(ids.size())});
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || id >= tm.shape[0]) {
          throw Error("embedding-lookup: index " + std::to_string(id) +
                      " out of range for " + tm.shape_str());
        }
        out.values[i] = tm[id];
      }
    } else {
      throw Error("embedding-lookup: unsupported input rank");
    }
    TapeNode<T> n = make(Op::kGatherRows, {m}, std::move(out));
    n.ints = std::move(ids);
    return push(std::move(n));
  }

  // seq {L,C} convolved with flattened-window weights w {width*C, F} plus
  // bias b {F}, max-pooled over window positions -> {F}. Sequences shorter
  // than the filter width are zero-padded (split left/right) so at least
  // one window exists; the output size never depends on L.
  Id conv1d_max_pool(Id seq, Id w, Id b, int width) {
    const auto& ts = val(seq);
    const auto& tw = val(w);
    const auto& tb = val(b);
    if (ts.rank() != 2 || tw.rank() != 2 || tb.rank() != 1 || width < 1 ||
        tw.shape[0] != width * ts.shape[1] || tb.shape[0] != tw.shape[1]) {
      throw shape_error(Op::kConv1dMaxPool, {&ts, &tw, &tb});
    }
    const int len = ts.shape[0], ch = ts.shape[1], filters = tw.shape[1];
    const int padded = std::max(len, width);
    const int pad_left = (padded - len) / 2;
    const int windows = padded - width + 1;

    Tensor<T> out({filters});
    TapeNode<T> n;
    n.op = Op::kConv1dMaxPool;
    n.inputs = {seq, w, b};
    n.ints.assign(static_cast<std::size_t>(filters) + 2, 0);
    n.ints[0] = width;
    n.ints[1] = pad_left;
    for (int f = 0; f < filters; ++f) {
      T best = T(0);
      int best_t = 0;
      for (int t = 0; t < windows; ++t) {
        T z = tb[f];
        for (int dw = 0; dw < width; ++dw) {
          const int src = t + dw - pad_left;
          if (src < 0 || src >= len) continue;  // zero padding
          const T* xrow = &ts.values[static_cast<std::size_t>(src) * ch];
          const T* wrow = &tw.values[static_cast<std::size_t>(dw * ch) * filters];
          for (int c = 0; c < ch; ++c) z += xrow[c] * wrow[static_cast<std::size_t>(c) * filters + f];
        }
        if (t == 0 || z > best) {
          best = z;
          best_t = t;
        }
      }
      out[f] = best;
      n.ints[static_cast<std::size_t>(f) + 2] = best_t;
    }
    n.value = std::move(out);
    return push(std::move(n));
  }

  // One LSTM step. x {I}, h {H}, c {H}, w {4H, I+H} with gate rows ordered
  // [input; forget; output; candidate], b {4H}. Output {2H} = [h_new; c_new];
  // callers slice the halves apart.
  Id lstm_cell(Id x, Id h, Id c, Id w, Id b) {
    const auto& tx = val(x);
    const auto& th = val(h);
    const auto& tc = val(c);
    const auto& tw = val(w);
    const auto& tb = val(b);
    const int hid = th.rank() == 1 ? th.shape[0] : -1;
    const int in = tx.rank() == 1 ? tx.shape[0] : -1;
    if (hid <= 0 || in <= 0 || tc.shape != th.shape || tw.rank() != 2 ||
        tw.shape[0] != 4 * hid || tw.shape[1] != in + hid || tb.rank() != 1 ||
        tb.shape[0] != 4 * hid) {
      throw shape_error(Op::kLstmCell, {&tx, &th, &tc, &tw, &tb});
    }
    // z = w [x;h] + b
    std::vector<T> z(static_cast<std::size_t>(4 * hid));
    for (int r = 0; r < 4 * hid; ++r) {
      T acc = tb[r];
      const T* wrow = &tw.values[static_cast<std::size_t>(r) * (in + hid)];
      for (int j = 0; j < in; ++j) acc += wrow[j] * tx[j];
      for (int j = 0; j < hid; ++j) acc += wrow[in + j] * th[j];
      z[static_cast<std::size_t>(r)] = acc;
    }
    TapeNode<T> n;
    n.op = Op::kLstmCell;
    n.inputs = {x, h, c, w, b};
    n.ints = {hid, in};
    n.saved.resize(static_cast<std::size_t>(5 * hid));
    Tensor<T> out({2 * hid});
    for (int j = 0; j < hid; ++j) {
      const T gi = sigmoid_of(z[static_cast<std::size_t>(j)]);
      const T gf = sigmoid_of(z[static_cast<std::size_t>(hid + j)]);
      const T go = sigmoid_of(z[static_cast<std::size_t>(2 * hid + j)]);
      const T gg = std::tanh(z[static_cast<std::size_t>(3 * hid + j)]);
      const T cn = gf * tc[j] + gi * gg;
      const T tn = std::tanh(cn);
      n.saved[static_cast<std::size_t>(j)] = gi;
      n.saved[static_cast<std::size_t>(hid + j)] = gf;
      n.saved[static_cast<std::size_t>(2 * hid + j)] = go;
      n.saved[static_cast<std::size_t>(3 * hid + j)] = gg;
      n.saved[static_cast<std::size_t>(4 * hid + j)] = tn;
      out[j] = go * tn;
      out[hid + j] = cn;
    }
    n.value = std::move(out);
    return push(std::move(n));
  }

  Id slice(Id x, int begin, int end) {
    const auto& tx = val(x);
    if (tx.rank() != 1 || begin < 0 || end > tx.shape[0] || begin >= end) {
      throw Error("slice: bad range [" + std::to_string(begin) + "," +
                  std::to_string(end) + ") for " + tx.shape_str());
    }
    Tensor<T> out({end - begin});
    std::copy(tx.values.begin() + begin, tx.values.begin() + end, out.values.begin());
    TapeNode<T> n = make(Op::kSlice, {x}, std::move(out));
    n.ints = {begin, end};
    return push(std::move(n));
  }

  Id reshape(Id x, std::vector<int> shape) {
    const auto& tx = val(x);
    if (Tensor<T>::numel_of(shape) != tx.numel()) {
      throw Error("reshape: cannot view " + tx.shape_str() + " as " +
                  Tensor<T>::shape_str_of(shape));
    }
    Tensor<T> out;
    out.shape = std::move(shape);
    out.values = tx.values;
    return push(make(Op::kReshape, {x}, std::move(out)));
  }

  Id sum(Id x) {
    const auto& tx = val(x);
    T acc = T(0);
    for (const T& v : tx.values) acc += v;
    return push(make(Op::kSum, {x}, Tensor<T>::scalar(acc)));
  }

  // Stable log(sum(exp(x))) over a rank-1 vector.
  Id logsumexp(Id x) {
    const auto& tx = val(x);
    if (tx.rank() != 1 || tx.shape[0] == 0) {
      throw Error("log-sum-exp: need a non-empty vector, got " + tx.shape_str());
    }
    const T m = *std::max_element(tx.values.begin(), tx.values.end());
    T acc = T(0);
    for (const T& v : tx.values) acc += std::exp(v - m);
    return push(make(Op::kLogSumExp, {x}, Tensor<T>::scalar(m + std::log(acc))));
  }

  Id scale(Id x, T k) {
    Tensor<T> out = val(x);
    for (auto& v : out.values) v *= k;
    TapeNode<T> n = make(Op::kScale, {x}, std::move(out));
    n.saved = {k};
    return push(std::move(n));
  }

  const Tensor<T>& val(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor<T>& grad(Id id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse pass from a scalar loss. Every parameter reachable from the
  // loss gets its gradient accumulated; unreachable ones are left alone.
  void backward(Id loss) {
    auto& ln = nodes_[static_cast<std::size_t>(loss)];
    if (!ln.value.is_scalar()) {
      throw Error(std::string("backward: loss must be scalar, got ") + ln.value.shape_str());
    }
    if (backward_done_) throw Error("backward: tape already differentiated");
    backward_done_ = true;
    ensure_grad(loss)[0] = T(1);
    for (int k = loss; k >= 0; --k) {
      TapeNode<T>& n = nodes_[static_cast<std::size_t>(k)];
      if (n.grad.values.empty()) continue;
      backward_node(n);
    }
  }

 private:
  std::vector<TapeNode<T>> nodes_;
  bool backward_done_ = false;

  static T sigmoid_of(T v) { return T(1) / (T(1) + std::exp(-v)); }

  static void softmax_row(T* x, int n) {
    T m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    T acc = T(0);
    for (int i = 0; i < n; ++i) {
      x[i] = std::exp(x[i] - m);
      acc += x[i];
    }
    for (int i = 0; i < n; ++i) x[i] /= acc;
  }

  TapeNode<T> make(Op op, std::vector<int> inputs, Tensor<T> value) {
    TapeNode<T> n;
    n.op = op;
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    return n;
  }

  Id push(TapeNode<T> n) {
    if (!all_finite(n.value)) {
      throw NumericError(std::string("non-finite output from primitive ") + op_name(n.op));
    }
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  template <class F>
  Id unary(Op op, Id x, F f) {
    Tensor<T> out = val(x);
    for (auto& v : out.values) v = f(v);
    return push(make(op, {x}, std::move(out)));
  }

  Error shape_error(Op op, std::initializer_list<const Tensor<T>*> ts) const {
    std::string msg = std::string(op_name(op)) + ": incompatible shapes";
    for (const auto* t : ts) msg += " " + t->shape_str();
    return Error(msg);
  }

  Tensor<T>& ensure_grad(Id id) {
    TapeNode<T>& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.values.empty()) n.grad = Tensor<T>(n.value.shape);
    return n.grad;
  }

  void backward_node(TapeNode<T>& n) {
    const Tensor<T>& gy = n.grad;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kParam:
        for (std::int64_t i = 0; i < gy.numel(); ++i) n.param->grad[i] += gy[i];
        break;
      case Op::kMatmul: {
        const Tensor<T>& a = val(n.inputs[0]);
        const Tensor<T>& b = val(n.inputs[1]);
        Tensor<T>& ga = ensure_grad(n.inputs[0]);
        Tensor<T>& gb = ensure_grad(n.inputs[1]);
        const int m = a.shape[0], k = a.shape[1], p = b.shape[1];
        // ga += gy * b^T ; gb += a^T * gy
        for (int i = 0; i < m; ++i) {
          const T* gyrow = &gy.values[static_cast<std::size_t>(i) * p];
          for (int j = 0; j < k; ++j) {
            const T* brow = &b.values[static_cast<std::size_t>(j) * p];
            T acc = T(0);
            for (int c = 0; c < p; ++c) acc += gyrow[c] * brow[c];
            ga.at(i, j) += acc;
          }
          const T* arow = &a.values[static_cast<std::size_t>(i) * k];
          for (int j = 0; j < k; ++j) {
            const T aij = arow[j];
            if (aij == T(0)) continue;
            T* gbrow = &gb.values[static_cast<std::size_t>(j) * p];
            for (int c = 0; c < p; ++c) gbrow[c] += aij * gyrow[c];
          }
        }
        break;
      }
      case Op::kAdd: {
        const Tensor<T>& a = val(n.inputs[0]);
        const Tensor<T>& b = val(n.inputs[1]);
        Tensor<T>& ga = ensure_grad(n.inputs[0]);
        Tensor<T>& gb = ensure_grad(n.inputs[1]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i];
        if (a.shape == b.shape) {
          for (std::int64_t i = 0; i < gy.numel(); ++i) gb[i] += gy[i];
        } else {  // bias broadcast over rows
          const int r = a.shape[0], c = a.shape[1];
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) gb[j] += gy.at(i, j);
        }
        break;
      }
      case Op::kMul: {
        const Tensor<T>& a = val(n.inputs[0]);
        const Tensor<T>& b = val(n.inputs[1]);
        Tensor<T>& ga = ensure_grad(n.inputs[0]);
        Tensor<T>& gb = ensure_grad(n.inputs[1]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) {
          ga[i] += gy[i] * b[i];
          gb[i] += gy[i] * a[i];
        }
        break;
      }
      case Op::kConcat: {
        const int axis = n.ints[0];
        if (val(n.inputs[0]).rank() == 1 || axis == 0) {
          std::int64_t off = 0;
          for (Id x : n.inputs) {
            Tensor<T>& gx = ensure_grad(x);
            for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += gy[off + i];
            off += gx.numel();
          }
        } else {  // axis 1
          const int r = n.value.shape[0], c = n.value.shape[1];
          int coff = 0;
          for (Id x : n.inputs) {
            Tensor<T>& gx = ensure_grad(x);
            const int tc = gx.shape[1];
            for (int i = 0; i < r; ++i)
              for (int j = 0; j < tc; ++j)
                gx.at(i, j) += gy.values[static_cast<std::size_t>(i) * c + coff + j];
            coff += tc;
          }
        }
        break;
      }
      case Op::kTanh: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) {
          const T y = n.value[i];
          gx[i] += gy[i] * (T(1) - y * y);
        }
        break;
      }
      case Op::kSigmoid: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) {
          const T y = n.value[i];
          gx[i] += gy[i] * y * (T(1) - y);
        }
        break;
      }
      case Op::kRelu: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) {
          if (x[i] > T(0)) gx[i] += gy[i];
        }
        break;
      }
      case Op::kSoftmax: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        const int c = n.value.rank() == 1 ? n.value.shape[0] : n.value.shape[1];
        const int r = n.value.rank() == 1 ? 1 : n.value.shape[0];
        for (int i = 0; i < r; ++i) {
          const T* y = &n.value.values[static_cast<std::size_t>(i) * c];
          const T* g = &gy.values[static_cast<std::size_t>(i) * c];
          T dot = T(0);
          for (int j = 0; j < c; ++j) dot += g[j] * y[j];
          T* gxr = &gx.values[static_cast<std::size_t>(i) * c];
          for (int j = 0; j < c; ++j) gxr[j] += y[j] * (g[j] - dot);
        }
        break;
      }
      case Op::kLog: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) gx[i] += gy[i] / x[i];
        break;
      }
      case Op::kDropout: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) {
          gx[i] += gy[i] * n.saved[static_cast<std::size_t>(i)];
        }
        break;
      }
      case Op::kGatherRows: {
        Tensor<T>& gm = ensure_grad(n.inputs[0]);
        if (gm.rank() == 2) {
          const int c = gm.shape[1];
          for (std::size_t i = 0; i < n.ints.size(); ++i) {
            const int id = n.ints[i];
            for (int j = 0; j < c; ++j)
              gm.values[static_cast<std::size_t>(id) * c + j] +=
                  gy.values[i * static_cast<std::size_t>(c) + j];
          }
        } else {
          for (std::size_t i = 0; i < n.ints.size(); ++i) gm[n.ints[i]] += gy.values[i];
        }
        break;
      }
      case Op::kConv1dMaxPool: {
        const Tensor<T>& x = val(n.inputs[0]);
        const Tensor<T>& w = val(n.inputs[1]);
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        Tensor<T>& gw = ensure_grad(n.inputs[1]);
        Tensor<T>& gb = ensure_grad(n.inputs[2]);
        const int width = n.ints[0], pad_left = n.ints[1];
        const int len = x.shape[0], ch = x.shape[1], filters = w.shape[1];
        for (int f = 0; f < filters; ++f) {
          const T g = gy[f];
          if (g == T(0)) continue;
          gb[f] += g;
          const int t = n.ints[static_cast<std::size_t>(f) + 2];
          for (int dw = 0; dw < width; ++dw) {
            const int src = t + dw - pad_left;
            if (src < 0 || src >= len) continue;
            for (int c = 0; c < ch; ++c) {
              const std::size_t wi = static_cast<std::size_t>(dw * ch + c) * filters + f;
              gw.values[wi] += g * x.at(src, c);
              gx.at(src, c) += g * w.values[wi];
            }
          }
        }
        break;
      }
      case Op::kLstmCell: {
        const int hid = n.ints[0], in = n.ints[1];
        const Tensor<T>& x = val(n.inputs[0]);
        const Tensor<T>& h = val(n.inputs[1]);
        const Tensor<T>& c = val(n.inputs[2]);
        const Tensor<T>& w = val(n.inputs[3]);
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        Tensor<T>& gh = ensure_grad(n.inputs[1]);
        Tensor<T>& gc = ensure_grad(n.inputs[2]);
        Tensor<T>& gw = ensure_grad(n.inputs[3]);
        Tensor<T>& gb = ensure_grad(n.inputs[4]);
        std::vector<T> dz(static_cast<std::size_t>(4 * hid));
        for (int j = 0; j < hid; ++j) {
          const T gi = n.saved[static_cast<std::size_t>(j)];
          const T gf = n.saved[static_cast<std::size_t>(hid + j)];
          const T go = n.saved[static_cast<std::size_t>(2 * hid + j)];
          const T gg = n.saved[static_cast<std::size_t>(3 * hid + j)];
          const T tn = n.saved[static_cast<std::size_t>(4 * hid + j)];
          const T dh = gy[j];
          const T dc_out = gy[hid + j];
          const T dc = dc_out + dh * go * (T(1) - tn * tn);
          const T dout = dh * tn;
          dz[static_cast<std::size_t>(j)] = dc * gg * gi * (T(1) - gi);
          dz[static_cast<std::size_t>(hid + j)] = dc * c[j] * gf * (T(1) - gf);
          dz[static_cast<std::size_t>(2 * hid + j)] = dout * go * (T(1) - go);
          dz[static_cast<std::size_t>(3 * hid + j)] = dc * gi * (T(1) - gg * gg);
          gc[j] += dc * gf;
        }
        for (int r = 0; r < 4 * hid; ++r) {
          const T d = dz[static_cast<std::size_t>(r)];
          gb[r] += d;
          if (d == T(0)) continue;
          const T* wrow = &w.values[static_cast<std::size_t>(r) * (in + hid)];
          T* gwrow = &gw.values[static_cast<std::size_t>(r) * (in + hid)];
          for (int j = 0; j < in; ++j) {
            gwrow[j] += d * x[j];
            gx[j] += d * wrow[j];
          }
          for (int j = 0; j < hid; ++j) {
            gwrow[in + j] += d * h[j];
            gh[j] += d * wrow[in + j];
          }
        }
        break;
      }
      case Op::kSlice: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        const int begin = n.ints[0];
        for (std::int64_t i = 0; i < gy.numel(); ++i) gx[begin + i] += gy[i];
        break;
      }
      case Op::kReshape: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        for (std::int64_t i = 0; i < gy.numel(); ++i) gx[i] += gy[i];
        break;
      }
      case Op::kSum: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        const T g = gy[0];
        for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g;
        break;
      }
      case Op::kLogSumExp: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        const T y = n.value[0];
        const T g = gy[0];
        for (std::int64_t i = 0; i < x.numel(); ++i) gx[i] += g * std::exp(x[i] - y);
        break;
      }
      case Op::kScale: {
        Tensor<T>& gx = ensure_grad(n.inputs[0]);
        const T k = n.saved[0];
        for (std::int64_t i = 0; i < gy.numel(); ++i) gx[i] += k * gy[i];
        break;
      }
    }
  }
};

}  // namespace bridger::ad
