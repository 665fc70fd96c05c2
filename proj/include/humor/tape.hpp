#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "humor/param_store.hpp"
#include "humor/tensor.hpp"

namespace humor {

struct TapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised whenever a forward op produces NaN/Inf. Non-finite values are an
// error state everywhere in the library.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode gradient tape over dense double tensors.
//
// Nodes are appended in topological order; values live in one arena so a
// training step does a single pass of small kernels with no per-node
// allocation. backward() may be called more than once (gradients are reset
// each call), and nodes may be appended after a backward(); the trainer
// uses this to read the embedding gradient mid-graph before building the
// adversarial branch.
//
// Broadcasting is limited to scalar-with-tensor (mul) and row-vector-plus-
// matrix (add); any other shape mismatch throws.
class Tape {
 public:
  Tape() { buf_.reserve(1 << 14); }

  // ---- leaves ----

  Var input(const Tensor& t) { return make_leaf(t); }
  Var constant(const Tensor& t) { return make_leaf(t); }
  Var constant(double x) { return make_leaf(Tensor::scalar(x)); }

  // Leaf bound to a named parameter; its gradient is reported by
  // param_grads(). Each name may be bound once per tape.
  Var param(const ParamStore& ps, const std::string& name) {
    for (const auto& [n, _] : params_)
      if (n == name) throw TapeError("parameter bound twice: " + name);
    Var v = make_leaf(ps.at(name));
    params_.emplace_back(name, v);
    return v;
  }

  // Copy of another node's current value with the gradient link cut.
  Var detach(Var a) { return make_leaf(val_tensor(a)); }

  // ---- element/shape ops ----

  Var add(Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa == sb) {
      Var out = new_node(Op::kAdd, sa, a, b);
      binary_loop(out, a, b, [](double x, double y) { return x + y; });
      return finish(out);
    }
    if (sa.rank == 2 && sb.rank == 1 && sb.d0 == sa.d1) {
      Var out = new_node(Op::kAddRow, sa, a, b);
      double* o = ptr(out);
      const double* x = ptr(a);
      const double* r = ptr(b);
      for (int i = 0; i < sa.d0; ++i)
        for (int j = 0; j < sa.d1; ++j) o[i * sa.d1 + j] = x[i * sa.d1 + j] + r[j];
      return finish(out);
    }
    throw TapeError("add: shape mismatch " + sa.str() + " vs " + sb.str());
  }

  Var sub(Var a, Var b) {
    require_same(a, b, "sub");
    Var out = new_node(Op::kSub, shape(a), a, b);
    binary_loop(out, a, b, [](double x, double y) { return x - y; });
    return finish(out);
  }

  Var mul(Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa == sb) {
      Var out = new_node(Op::kMul, sa, a, b);
      binary_loop(out, a, b, [](double x, double y) { return x * y; });
      return finish(out);
    }
    if (sa.rank == 0 || sb.rank == 0) {
      Var s = sa.rank == 0 ? a : b;
      Var t = sa.rank == 0 ? b : a;
      Var out = new_node(Op::kMulScalar, shape(t), s, t);
      double* o = ptr(out);
      const double c = ptr(s)[0];
      const double* x = ptr(t);
      for (int i = 0, n = shape(t).size(); i < n; ++i) o[i] = c * x[i];
      return finish(out);
    }
    throw TapeError("mul: shape mismatch " + sa.str() + " vs " + sb.str());
  }

  // c * x, elementwise, with a compile-time constant factor.
  Var scale(Var a, double c) { return affine(a, c, 0.0); }

  // k * x + c, elementwise.
  Var affine(Var a, double k, double c) {
    Var out = new_node(Op::kAffine, shape(a), a);
    nodes_[out.id].c0 = k;
    nodes_[out.id].c1 = c;
    unary_loop(out, a, [k, c](double x) { return k * x + c; });
    return finish(out);
  }

  // ---- linear algebra ----

  // (p x q)(q x r) -> (p x r), or (p x q)(q) -> (p).
  Var matmul(Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.rank == 2 && sb.rank == 2 && sa.d1 == sb.d0) {
      Var out = new_node(Op::kMatMul, mat_shape(sa.d0, sb.d1), a, b);
      double* o = ptr(out);
      const double* A = ptr(a);
      const double* B = ptr(b);
      const int p = sa.d0, q = sa.d1, r = sb.d1;
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < r; ++j) {
          double s = 0.0;
          for (int k = 0; k < q; ++k) s += A[i * q + k] * B[k * r + j];
          o[i * r + j] = s;
        }
      return finish(out);
    }
    if (sa.rank == 2 && sb.rank == 1 && sa.d1 == sb.d0) {
      Var out = new_node(Op::kMatVec, vec_shape(sa.d0), a, b);
      double* o = ptr(out);
      const double* W = ptr(a);
      const double* x = ptr(b);
      const int p = sa.d0, q = sa.d1;
      for (int i = 0; i < p; ++i) {
        double s = 0.0;
        const double* row = W + static_cast<std::size_t>(i) * q;
        for (int k = 0; k < q; ++k) s += row[k] * x[k];
        o[i] = s;
      }
      return finish(out);
    }
    throw TapeError("matmul: incompatible shapes " + sa.str() + " vs " + sb.str());
  }

  // 1-D concatenation.
  Var concat(Var a, Var b) {
    const Shape sa = shape(a), sb = shape(b);
    if (sa.rank != 1 || sb.rank != 1) throw TapeError("concat: 1-D operands required");
    Var out = new_node(Op::kConcat, vec_shape(sa.d0 + sb.d0), a, b);
    double* o = ptr(out);
    std::copy_n(ptr(a), sa.d0, o);
    std::copy_n(ptr(b), sb.d0, o + sa.d0);
    return finish(out);
  }

  // 1-D slice of length len starting at from.
  Var slice(Var a, int from, int len) {
    const Shape sa = shape(a);
    if (sa.rank != 1 || from < 0 || len < 1 || from + len > sa.d0)
      throw TapeError("slice: bad range");
    Var out = new_node(Op::kSlice, vec_shape(len), a);
    nodes_[out.id].i0 = from;
    std::copy_n(ptr(a) + from, len, ptr(out));
    return finish(out);
  }

  // Split a vector at index at into (prefix, suffix).
  std::pair<Var, Var> split(Var a, int at) {
    const int n = shape(a).d0;
    return {slice(a, 0, at), slice(a, at, n - at)};
  }

  // Gather rows of a matrix: out[t, :] = m[idx[t], :].
  Var rows(Var m, const std::vector<int>& idx) {
    const Shape sm = shape(m);
    if (sm.rank != 2) throw TapeError("rows: matrix required");
    for (int i : idx)
      if (i < 0 || i >= sm.d0) throw TapeError("rows: index out of range");
    Var out = new_node(Op::kRows, mat_shape(static_cast<int>(idx.size()), sm.d1), m);
    nodes_[out.id].idx_off = idx_buf_.size();
    nodes_[out.id].idx_len = static_cast<int>(idx.size());
    idx_buf_.insert(idx_buf_.end(), idx.begin(), idx.end());
    double* o = ptr(out);
    const double* M = ptr(m);
    for (std::size_t t = 0; t < idx.size(); ++t)
      std::copy_n(M + static_cast<std::size_t>(idx[t]) * sm.d1, sm.d1, o + t * sm.d1);
    return finish(out);
  }

  // Single row of a matrix as a vector.
  Var row(Var m, int i) {
    const Shape sm = shape(m);
    if (sm.rank != 2 || i < 0 || i >= sm.d0) throw TapeError("row: bad index");
    Var out = new_node(Op::kRowVec, vec_shape(sm.d1), m);
    nodes_[out.id].i0 = i;
    std::copy_n(ptr(m) + static_cast<std::size_t>(i) * sm.d1, sm.d1, ptr(out));
    return finish(out);
  }

  // ---- nonlinearities ----

  Var tanh(Var a) {
    Var out = new_node(Op::kTanh, shape(a), a);
    unary_loop(out, a, [](double x) { return std::tanh(x); });
    return finish(out);
  }

  Var sigmoid(Var a) {
    Var out = new_node(Op::kSigmoid, shape(a), a);
    unary_loop(out, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return finish(out);
  }

  Var exp(Var a) {
    Var out = new_node(Op::kExp, shape(a), a);
    unary_loop(out, a, [](double x) { return std::exp(x); });
    return finish(out);
  }

  Var log(Var a) {
    Var out = new_node(Op::kLog, shape(a), a);
    unary_loop(out, a, [](double x) { return std::log(x); });
    return finish(out);
  }

  Var clamp_min(Var a, double floor) {
    Var out = new_node(Op::kClampMin, shape(a), a);
    nodes_[out.id].c0 = floor;
    unary_loop(out, a, [floor](double x) { return x < floor ? floor : x; });
    return finish(out);
  }

  // Row-wise softmax with max-subtraction; a vector is one row.
  Var softmax(Var a) {
    const Shape sa = shape(a);
    if (sa.rank == 0) throw TapeError("softmax: vector or matrix required");
    if (!std::all_of(ptr(a), ptr(a) + sa.size(), [](double x) { return std::isfinite(x); }))
      throw NonFiniteError("softmax of non-finite input");
    Var out = new_node(Op::kSoftmax, sa, a);
    const int nrows = sa.rank == 1 ? 1 : sa.d0;
    const int ncols = sa.rank == 1 ? sa.d0 : sa.d1;
    double* o = ptr(out);
    const double* x = ptr(a);
    for (int i = 0; i < nrows; ++i) {
      const double* xr = x + static_cast<std::size_t>(i) * ncols;
      double* orow = o + static_cast<std::size_t>(i) * ncols;
      double m = xr[0];
      for (int j = 1; j < ncols; ++j) m = std::max(m, xr[j]);
      double z = 0.0;
      for (int j = 0; j < ncols; ++j) {
        orow[j] = std::exp(xr[j] - m);
        z += orow[j];
      }
      for (int j = 0; j < ncols; ++j) orow[j] /= z;
    }
    return finish(out);
  }

  // ---- reductions ----

  Var sum(Var a) {
    Var out = new_node(Op::kSum, scalar_shape(), a);
    double s = 0.0;
    const double* x = ptr(a);
    for (int i = 0, n = shape(a).size(); i < n; ++i) s += x[i];
    ptr(out)[0] = s;
    return finish(out);
  }

  Var mean(Var a) {
    Var out = new_node(Op::kMean, scalar_shape(), a);
    double s = 0.0;
    const int n = shape(a).size();
    const double* x = ptr(a);
    for (int i = 0; i < n; ++i) s += x[i];
    ptr(out)[0] = s / n;
    return finish(out);
  }

  Var square(Var a) {
    Var out = new_node(Op::kSquare, shape(a), a);
    unary_loop(out, a, [](double x) { return x * x; });
    return finish(out);
  }

  Var l2norm(Var a) {
    Var out = new_node(Op::kL2Norm, scalar_shape(), a);
    double s = 0.0;
    const double* x = ptr(a);
    for (int i = 0, n = shape(a).size(); i < n; ++i) s += x[i] * x[i];
    ptr(out)[0] = std::sqrt(s);
    return finish(out);
  }

  // ---- access ----

  const Shape& shape(Var v) const { return node(v).shape; }

  std::span<const double> val(Var v) const {
    const Node& n = node(v);
    return {buf_.data() + n.off, static_cast<std::size_t>(n.shape.size())};
  }

  double val_scalar(Var v) const {
    const Node& n = node(v);
    if (n.shape.size() != 1) throw TapeError("val_scalar: node is not scalar");
    return buf_[n.off];
  }

  Tensor val_tensor(Var v) const {
    const Node& n = node(v);
    Tensor t(n.shape);
    std::copy_n(buf_.data() + n.off, t.v.size(), t.v.data());
    return t;
  }

  std::span<const double> grad(Var v) const {
    require_backward();
    const Node& n = node(v);
    return {gbuf_.data() + n.off, static_cast<std::size_t>(n.shape.size())};
  }

  Tensor grad_tensor(Var v) const {
    require_backward();
    const Node& n = node(v);
    Tensor t(n.shape);
    std::copy_n(gbuf_.data() + n.off, t.v.size(), t.v.data());
    return t;
  }

  // ---- reverse pass ----

  // Accumulates d(root)/d(node) for every node on the tape. root must be a
  // scalar. Unreached nodes (parameters included) keep a zero gradient.
  void backward(Var root) {
    const Node& r = node(root);
    if (r.shape.size() != 1) throw TapeError("backward: root must be scalar");
    gbuf_.assign(buf_.size(), 0.0);
    gbuf_[r.off] = 1.0;
    backward_done_ = true;

    for (int id = root.id; id >= 0; --id) {
      const Node& n = nodes_[static_cast<std::size_t>(id)];
      const double* g = gbuf_.data() + n.off;
      const int sz = n.shape.size();
      switch (n.op) {
        case Op::kLeaf:
          break;
        case Op::kAdd: {
          accumulate(n.a, g, sz);
          accumulate(n.b, g, sz);
          break;
        }
        case Op::kAddRow: {
          accumulate(n.a, g, sz);
          double* gb = gbuf_.data() + nodes_[n.b].off;
          const int rws = n.shape.d0, cls = n.shape.d1;
          for (int i = 0; i < rws; ++i)
            for (int j = 0; j < cls; ++j) gb[j] += g[i * cls + j];
          break;
        }
        case Op::kSub: {
          accumulate(n.a, g, sz);
          double* gb = gbuf_.data() + nodes_[n.b].off;
          for (int i = 0; i < sz; ++i) gb[i] -= g[i];
          break;
        }
        case Op::kMul: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          double* gb = gbuf_.data() + nodes_[n.b].off;
          const double* va = buf_.data() + nodes_[n.a].off;
          const double* vb = buf_.data() + nodes_[n.b].off;
          for (int i = 0; i < sz; ++i) {
            ga[i] += g[i] * vb[i];
            gb[i] += g[i] * va[i];
          }
          break;
        }
        case Op::kMulScalar: {
          // a is the scalar side, b the tensor side.
          double* gs = gbuf_.data() + nodes_[n.a].off;
          double* gt = gbuf_.data() + nodes_[n.b].off;
          const double c = buf_[nodes_[n.a].off];
          const double* vt = buf_.data() + nodes_[n.b].off;
          for (int i = 0; i < sz; ++i) {
            gs[0] += g[i] * vt[i];
            gt[i] += c * g[i];
          }
          break;
        }
        case Op::kAffine: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          for (int i = 0; i < sz; ++i) ga[i] += n.c0 * g[i];
          break;
        }
        case Op::kMatMul: {
          const Node& na = nodes_[n.a];
          const Node& nb = nodes_[n.b];
          const int p = na.shape.d0, q = na.shape.d1, r2 = nb.shape.d1;
          double* gA = gbuf_.data() + na.off;
          double* gB = gbuf_.data() + nb.off;
          const double* A = buf_.data() + na.off;
          const double* B = buf_.data() + nb.off;
          for (int i = 0; i < p; ++i)
            for (int j = 0; j < r2; ++j) {
              const double gij = g[i * r2 + j];
              if (gij == 0.0) continue;
              for (int k = 0; k < q; ++k) {
                gA[i * q + k] += gij * B[k * r2 + j];
                gB[k * r2 + j] += A[i * q + k] * gij;
              }
            }
          break;
        }
        case Op::kMatVec: {
          const Node& nw = nodes_[n.a];
          const int p = nw.shape.d0, q = nw.shape.d1;
          double* gW = gbuf_.data() + nw.off;
          double* gx = gbuf_.data() + nodes_[n.b].off;
          const double* W = buf_.data() + nw.off;
          const double* x = buf_.data() + nodes_[n.b].off;
          for (int i = 0; i < p; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            double* gWrow = gW + static_cast<std::size_t>(i) * q;
            const double* Wrow = W + static_cast<std::size_t>(i) * q;
            for (int k = 0; k < q; ++k) {
              gWrow[k] += gi * x[k];
              gx[k] += Wrow[k] * gi;
            }
          }
          break;
        }
        case Op::kConcat: {
          const int la = nodes_[n.a].shape.d0;
          accumulate(n.a, g, la);
          accumulate(n.b, g + la, nodes_[n.b].shape.d0);
          break;
        }
        case Op::kSlice: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          for (int i = 0; i < sz; ++i) ga[n.i0 + i] += g[i];
          break;
        }
        case Op::kRows: {
          double* gm = gbuf_.data() + nodes_[n.a].off;
          const int cls = n.shape.d1;
          for (int t = 0; t < n.idx_len; ++t) {
            const int src = idx_buf_[n.idx_off + static_cast<std::size_t>(t)];
            for (int j = 0; j < cls; ++j)
              gm[static_cast<std::size_t>(src) * cls + j] += g[t * cls + j];
          }
          break;
        }
        case Op::kRowVec: {
          double* gm = gbuf_.data() + nodes_[n.a].off;
          const int cls = nodes_[n.a].shape.d1;
          for (int j = 0; j < cls; ++j) gm[static_cast<std::size_t>(n.i0) * cls + j] += g[j];
          break;
        }
        case Op::kTanh: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* y = buf_.data() + n.off;
          for (int i = 0; i < sz; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
          break;
        }
        case Op::kSigmoid: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* y = buf_.data() + n.off;
          for (int i = 0; i < sz; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
          break;
        }
        case Op::kExp: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* y = buf_.data() + n.off;
          for (int i = 0; i < sz; ++i) ga[i] += g[i] * y[i];
          break;
        }
        case Op::kLog: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* x = buf_.data() + nodes_[n.a].off;
          for (int i = 0; i < sz; ++i) ga[i] += g[i] / x[i];
          break;
        }
        case Op::kClampMin: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* x = buf_.data() + nodes_[n.a].off;
          for (int i = 0; i < sz; ++i)
            if (x[i] >= n.c0) ga[i] += g[i];
          break;
        }
        case Op::kSoftmax: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* y = buf_.data() + n.off;
          const int nrows = n.shape.rank == 1 ? 1 : n.shape.d0;
          const int ncols = n.shape.rank == 1 ? n.shape.d0 : n.shape.d1;
          for (int i = 0; i < nrows; ++i) {
            const double* yr = y + static_cast<std::size_t>(i) * ncols;
            const double* gr = g + static_cast<std::size_t>(i) * ncols;
            double dot = 0.0;
            for (int j = 0; j < ncols; ++j) dot += gr[j] * yr[j];
            double* gar = ga + static_cast<std::size_t>(i) * ncols;
            for (int j = 0; j < ncols; ++j) gar[j] += yr[j] * (gr[j] - dot);
          }
          break;
        }
        case Op::kSum: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const int na = nodes_[n.a].shape.size();
          for (int i = 0; i < na; ++i) ga[i] += g[0];
          break;
        }
        case Op::kMean: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const int na = nodes_[n.a].shape.size();
          const double s = g[0] / na;
          for (int i = 0; i < na; ++i) ga[i] += s;
          break;
        }
        case Op::kSquare: {
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* x = buf_.data() + nodes_[n.a].off;
          for (int i = 0; i < sz; ++i) ga[i] += 2.0 * x[i] * g[i];
          break;
        }
        case Op::kL2Norm: {
          const double norm = buf_[n.off];
          if (norm == 0.0) break;
          double* ga = gbuf_.data() + nodes_[n.a].off;
          const double* x = buf_.data() + nodes_[n.a].off;
          const int na = nodes_[n.a].shape.size();
          for (int i = 0; i < na; ++i) ga[i] += g[0] * x[i] / norm;
          break;
        }
      }
    }
  }

  // Gradient of every bound parameter after backward(); zeros for
  // parameters the root does not reach.
  std::map<std::string, Tensor> param_grads() const {
    require_backward();
    std::map<std::string, Tensor> out;
    for (const auto& [name, v] : params_) out.emplace(name, grad_tensor(v));
    return out;
  }

  const std::vector<std::pair<std::string, Var>>& bound_params() const { return params_; }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdd, kAddRow, kSub, kMul, kMulScalar, kAffine, kMatMul, kMatVec,
    kConcat, kSlice, kRows, kRowVec, kTanh, kSigmoid, kExp, kLog, kClampMin,
    kSoftmax, kSum, kMean, kSquare, kL2Norm,
  };

  struct Node {
    Op op = Op::kLeaf;
    Shape shape;
    std::size_t off = 0;
    int a = -1;
    int b = -1;
    int i0 = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    std::size_t idx_off = 0;
    int idx_len = 0;
  };

  const Node& node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
      throw TapeError("invalid tape handle");
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  Var make_leaf(const Tensor& t) {
    Var v = new_node(Op::kLeaf, t.shape);
    std::copy_n(t.v.data(), t.v.size(), ptr(v));
    return finish(v);
  }

  Var new_node(Op op, Shape s, Var a = {}, Var b = {}) {
    Node n;
    n.op = op;
    n.shape = s;
    n.off = buf_.size();
    n.a = a.id;
    n.b = b.id;
    buf_.resize(buf_.size() + static_cast<std::size_t>(s.size()), 0.0);
    nodes_.push_back(n);
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  double* ptr(Var v) { return buf_.data() + node(v).off; }
  const double* ptr(Var v) const { return buf_.data() + node(v).off; }

  template <class F>
  void unary_loop(Var out, Var a, F f) {
    double* o = ptr(out);
    const double* x = ptr(a);
    for (int i = 0, n = shape(a).size(); i < n; ++i) o[i] = f(x[i]);
  }

  template <class F>
  void binary_loop(Var out, Var a, Var b, F f) {
    double* o = ptr(out);
    const double* x = ptr(a);
    const double* y = ptr(b);
    for (int i = 0, n = shape(a).size(); i < n; ++i) o[i] = f(x[i], y[i]);
  }

  void require_same(Var a, Var b, const char* op) const {
    if (!(shape(a) == shape(b)))
      throw TapeError(std::string(op) + ": shape mismatch " + shape(a).str() +
                      " vs " + shape(b).str());
  }

  Var finish(Var v) {
    const Node& n = node(v);
    const double* x = buf_.data() + n.off;
    for (int i = 0, sz = n.shape.size(); i < sz; ++i)
      if (!std::isfinite(x[i])) throw NonFiniteError("non-finite forward value");
    return v;
  }

  void accumulate(int target, const double* g, int n) {
    double* gt = gbuf_.data() + nodes_[static_cast<std::size_t>(target)].off;
    for (int i = 0; i < n; ++i) gt[i] += g[i];
  }

  void require_backward() const {
    if (!backward_done_) throw TapeError("backward() has not run");
  }

  std::vector<Node> nodes_;
  std::vector<double> buf_;
  std::vector<double> gbuf_;
  std::vector<int> idx_buf_;
  std::vector<std::pair<std::string, Var>> params_;
  bool backward_done_ = false;
};

}  // namespace humor
