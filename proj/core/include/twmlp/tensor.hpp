#pragma once

// Minimal dense 2-D tensor with reverse-mode automatic differentiation.
//
// A Graph owns every node created through it. Ops evaluate eagerly and the
// node list is topologically ordered by construction, so backward() is a
// single reverse sweep. All kernels sum sequentially over the contraction
// axis, which makes forward results bit-identical across repeated calls —
// the streaming runtime relies on this.
//
// The scalar type is a template parameter: float is the compute default,
// double is used by the gradient-check suites.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "twmlp/errors.hpp"

namespace twmlp {

struct TensorId {
  int v = -1;
  bool valid() const { return v >= 0; }
  friend bool operator==(TensorId a, TensorId b) { return a.v == b.v; }
};

enum class Op {
  kLeaf,
  kMatmul,
  kLinear,      // x * w^T (+ optional row-broadcast bias)
  kAdd,
  kSub,
  kMul,
  kScale,
  kAbs,
  kExp,
  kSilu,
  kLayerNorm,
  kConcatRows,
  kSliceRows,
  kMeanRows,
  kBroadcastRows,
  kConcatCols,
  kSum,
};

template <typename T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) noexcept = default;
  Graph& operator=(Graph&&) noexcept = default;

  // ---- leaves ------------------------------------------------------------

  TensorId leaf(int rows, int cols, std::span<const T> data, bool requires_grad) {
    if (rows <= 0 || cols <= 0) throw ShapeError("leaf: non-positive dims");
    if (data.size() != static_cast<std::size_t>(rows) * cols) {
      throw ShapeError("leaf: data length " + std::to_string(data.size()) +
                       " != rows*cols " + std::to_string(std::size_t(rows) * cols));
    }
    Node n;
    n.op = Op::kLeaf;
    n.rows = rows;
    n.cols = cols;
    n.value.assign(data.begin(), data.end());
    n.requires_grad = requires_grad;
    return push(std::move(n), "leaf");
  }

  TensorId constant(int rows, int cols, std::span<const T> data) {
    return leaf(rows, cols, data, false);
  }

  TensorId zeros(int rows, int cols, bool requires_grad = false) {
    std::vector<T> z(static_cast<std::size_t>(rows) * cols, T(0));
    return leaf(rows, cols, z, requires_grad);
  }

  // ---- ops ---------------------------------------------------------------

  /// C[m x n] = A[m x k] * B[k x n]. Gradients: dA = dC*B^T, dB = A^T*dC.
  TensorId matmul(TensorId a, TensorId b) {
    const Node& na = at(a);
    const Node& nb = at(b);
    if (na.cols != nb.rows) {
      throw ShapeError("matmul: inner dims " + std::to_string(na.cols) + " vs " +
                       std::to_string(nb.rows));
    }
    Node n = make(Op::kMatmul, na.rows, nb.cols, {a.v, b.v});
    matmul_kernel(n.value.data(), na.value.data(), nb.value.data(), na.rows, na.cols, nb.cols);
    return push(std::move(n), "matmul");
  }

  /// Learned linear map along the time axis: row i of the result is
  /// sum_j W[i,j] * X[j,:]. Equivalent to matmul(W, X).
  TensorId time_mix(TensorId x, TensorId w) {
    const Node& nw = at(w);
    const Node& nx = at(x);
    if (nw.cols != nx.rows) {
      throw ShapeError("time_mix: W cols " + std::to_string(nw.cols) + " != X rows " +
                       std::to_string(nx.rows));
    }
    return matmul(w, x);
  }

  /// Y[t x out] = X[t x in] * W[out x in]^T, plus optional bias (1 x out)
  /// broadcast over rows.
  TensorId linear(TensorId x, TensorId w, TensorId bias = {}) {
    const Node& nx = at(x);
    const Node& nw = at(w);
    if (nx.cols != nw.cols) {
      throw ShapeError("linear: X cols " + std::to_string(nx.cols) + " != W cols " +
                       std::to_string(nw.cols));
    }
    if (bias.valid()) {
      const Node& nb = at(bias);
      if (nb.rows != 1 || nb.cols != nw.rows) throw ShapeError("linear: bias must be 1 x out");
    }
    Node n = make(Op::kLinear, nx.rows, nw.rows, {x.v, w.v, bias.v});
    const T* bp = bias.valid() ? at(bias).value.data() : nullptr;
    for (int i = 0; i < nx.rows; ++i) {
      const T* xi = nx.value.data() + static_cast<std::size_t>(i) * nx.cols;
      T* yi = n.value.data() + static_cast<std::size_t>(i) * nw.rows;
      for (int j = 0; j < nw.rows; ++j) {
        const T* wj = nw.value.data() + static_cast<std::size_t>(j) * nw.cols;
        T acc = bp ? bp[j] : T(0);
        for (int k = 0; k < nw.cols; ++k) acc += xi[k] * wj[k];
        yi[j] = acc;
      }
    }
    return push(std::move(n), "linear");
  }

  TensorId add(TensorId a, TensorId b) { return binary(Op::kAdd, a, b, "add"); }
  TensorId sub(TensorId a, TensorId b) { return binary(Op::kSub, a, b, "sub"); }
  TensorId mul(TensorId a, TensorId b) { return binary(Op::kMul, a, b, "mul"); }

  TensorId scale(TensorId a, T c) {
    const Node& na = at(a);
    Node n = make(Op::kScale, na.rows, na.cols, {a.v});
    n.scalar = c;
    for (std::size_t i = 0; i < na.value.size(); ++i) n.value[i] = c * na.value[i];
    return push(std::move(n), "scale");
  }

  TensorId abs(TensorId a) {
    const Node& na = at(a);
    Node n = make(Op::kAbs, na.rows, na.cols, {a.v});
    for (std::size_t i = 0; i < na.value.size(); ++i) n.value[i] = std::abs(na.value[i]);
    return push(std::move(n), "abs");
  }

  TensorId exp(TensorId a) {
    const Node& na = at(a);
    Node n = make(Op::kExp, na.rows, na.cols, {a.v});
    for (std::size_t i = 0; i < na.value.size(); ++i) n.value[i] = std::exp(na.value[i]);
    return push(std::move(n), "exp");
  }

  /// Elementwise x * sigmoid(x).
  TensorId silu(TensorId a) {
    const Node& na = at(a);
    Node n = make(Op::kSilu, na.rows, na.cols, {a.v});
    for (std::size_t i = 0; i < na.value.size(); ++i) {
      const T x = na.value[i];
      n.value[i] = x * sigmoid(x);
    }
    return push(std::move(n), "silu");
  }

  /// Per-row standardization over the feature axis, then affine gain/bias.
  /// gain and bias are 1 x D.
  TensorId layer_norm(TensorId x, TensorId gain, TensorId bias, T eps = T(1e-5)) {
    const Node& nx = at(x);
    const Node& ng = at(gain);
    const Node& nb = at(bias);
    if (nx.cols < 2) throw ShapeError("layer_norm: feature dim must be >= 2");
    if (ng.rows != 1 || ng.cols != nx.cols || nb.rows != 1 || nb.cols != nx.cols) {
      throw ShapeError("layer_norm: gain/bias must be 1 x D");
    }
    Node n = make(Op::kLayerNorm, nx.rows, nx.cols, {x.v, gain.v, bias.v});
    n.scalar = eps;
    const int d = nx.cols;
    for (int i = 0; i < nx.rows; ++i) {
      const T* xi = nx.value.data() + static_cast<std::size_t>(i) * d;
      T* yi = n.value.data() + static_cast<std::size_t>(i) * d;
      T mean = T(0);
      for (int j = 0; j < d; ++j) mean += xi[j];
      mean /= T(d);
      T var = T(0);
      for (int j = 0; j < d; ++j) {
        const T t = xi[j] - mean;
        var += t * t;
      }
      var /= T(d);
      const T rstd = T(1) / std::sqrt(var + eps);
      for (int j = 0; j < d; ++j) {
        yi[j] = (xi[j] - mean) * rstd * ng.value[j] + nb.value[j];
      }
    }
    return push(std::move(n), "layer_norm");
  }

  /// Row-wise stacking in argument order. All parts must share the column
  /// count; backward splits the gradient by row ranges.
  TensorId concat_rows(std::span<const TensorId> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const int cols = at(parts[0]).cols;
    int rows = 0;
    for (TensorId p : parts) {
      if (at(p).cols != cols) throw ShapeError("concat_rows: column mismatch");
      rows += at(p).rows;
    }
    Node n;
    n.op = Op::kConcatRows;
    n.rows = rows;
    n.cols = cols;
    n.value.resize(static_cast<std::size_t>(rows) * cols);
    for (TensorId p : parts) {
      n.inputs.push_back(p.v);
      n.requires_grad = n.requires_grad || at(p).requires_grad;
    }
    std::size_t off = 0;
    for (TensorId p : parts) {
      const Node& np = at(p);
      std::copy(np.value.begin(), np.value.end(), n.value.begin() + off);
      off += np.value.size();
    }
    return push(std::move(n), "concat_rows");
  }

  TensorId concat_rows(TensorId a, TensorId b) {
    std::array<TensorId, 2> ps{a, b};
    return concat_rows(std::span<const TensorId>(ps));
  }

  /// Rows [row0, row1) of x.
  TensorId slice_rows(TensorId x, int row0, int row1) {
    const Node& nx = at(x);
    if (row0 < 0 || row1 > nx.rows || row0 >= row1) {
      throw ShapeError("slice_rows: bad range [" + std::to_string(row0) + ", " +
                       std::to_string(row1) + ") for " + std::to_string(nx.rows) + " rows");
    }
    Node n = make(Op::kSliceRows, row1 - row0, nx.cols, {x.v});
    n.p0 = row0;
    n.p1 = row1;
    const std::size_t off = static_cast<std::size_t>(row0) * nx.cols;
    std::copy(nx.value.begin() + off, nx.value.begin() + off + n.value.size(), n.value.begin());
    return push(std::move(n), "slice_rows");
  }

  /// Mean over rows: T x D -> 1 x D. Rows are summed in index order.
  TensorId mean_rows(TensorId x) {
    const Node& nx = at(x);
    Node n = make(Op::kMeanRows, 1, nx.cols, {x.v});
    const T inv = T(1) / T(nx.rows);
    for (int j = 0; j < nx.cols; ++j) n.value[j] = T(0);
    for (int i = 0; i < nx.rows; ++i) {
      const T* xi = nx.value.data() + static_cast<std::size_t>(i) * nx.cols;
      for (int j = 0; j < nx.cols; ++j) n.value[j] += xi[j];
    }
    for (int j = 0; j < nx.cols; ++j) n.value[j] *= inv;
    return push(std::move(n), "mean_rows");
  }

  /// Repeat a 1 x D row down to rows x D. Backward sums over rows.
  TensorId broadcast_rows(TensorId x, int rows) {
    const Node& nx = at(x);
    if (nx.rows != 1) throw ShapeError("broadcast_rows: input must be 1 x D");
    if (rows < 1) throw ShapeError("broadcast_rows: rows must be >= 1");
    Node n = make(Op::kBroadcastRows, rows, nx.cols, {x.v});
    for (int i = 0; i < rows; ++i) {
      std::copy(nx.value.begin(), nx.value.end(),
                n.value.begin() + static_cast<std::size_t>(i) * nx.cols);
    }
    return push(std::move(n), "broadcast_rows");
  }

  /// Column-wise concatenation of two tensors with equal row counts.
  TensorId concat_cols(TensorId a, TensorId b) {
    const Node& na = at(a);
    const Node& nb = at(b);
    if (na.rows != nb.rows) throw ShapeError("concat_cols: row mismatch");
    Node n = make(Op::kConcatCols, na.rows, na.cols + nb.cols, {a.v, b.v});
    for (int i = 0; i < na.rows; ++i) {
      T* out = n.value.data() + static_cast<std::size_t>(i) * n.cols;
      const T* pa = na.value.data() + static_cast<std::size_t>(i) * na.cols;
      const T* pb = nb.value.data() + static_cast<std::size_t>(i) * nb.cols;
      std::copy(pa, pa + na.cols, out);
      std::copy(pb, pb + nb.cols, out + na.cols);
    }
    return push(std::move(n), "concat_cols");
  }

  /// Sum of all entries -> 1 x 1.
  TensorId sum(TensorId x) {
    const Node& nx = at(x);
    Node n = make(Op::kSum, 1, 1, {x.v});
    T acc = T(0);
    for (const T v : nx.value) acc += v;
    n.value[0] = acc;
    return push(std::move(n), "sum");
  }

  TensorId mean(TensorId x) {
    const Node& nx = at(x);
    return scale(sum(x), T(1) / T(static_cast<std::size_t>(nx.rows) * nx.cols));
  }

  // ---- backward ----------------------------------------------------------

  /// Reverse-mode sweep from a scalar loss. Gradients of every
  /// requires_grad node are zeroed first unless `accumulate` is set, in
  /// which case leaf gradients are kept and added to.
  void backward(TensorId loss, bool accumulate = false) {
    const Node& nl = at(loss);
    if (nl.rows != 1 || nl.cols != 1) {
      throw ContractError("backward: loss must be a 1x1 scalar");
    }
    for (Node& n : nodes_) {
      if (!n.requires_grad) continue;
      const bool keep = accumulate && n.op == Op::kLeaf;
      if (n.grad.empty()) {
        n.grad.assign(n.value.size(), T(0));
      } else if (!keep) {
        std::fill(n.grad.begin(), n.grad.end(), T(0));
      }
    }
    if (!nl.requires_grad) return;  // loss independent of leaves: all grads zero
    nodes_[loss.v].grad[0] += T(1);
    for (int id = loss.v; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.empty()) continue;
      backprop(n);
    }
  }

  // ---- access ------------------------------------------------------------

  int rows(TensorId id) const { return at(id).rows; }
  int cols(TensorId id) const { return at(id).cols; }
  bool requires_grad(TensorId id) const { return at(id).requires_grad; }
  std::span<const T> value(TensorId id) const { return at(id).value; }
  std::span<const T> grad(TensorId id) const {
    const Node& n = at(id);
    if (n.grad.empty()) throw ContractError("grad: no gradient recorded for node");
    return n.grad;
  }
  T item(TensorId id) const {
    const Node& n = at(id);
    if (n.value.size() != 1) throw ContractError("item: tensor is not 1x1");
    return n.value[0];
  }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op = Op::kLeaf;
    int rows = 0, cols = 0;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    T scalar = T(0);  // Scale factor / LayerNorm eps
    int p0 = 0, p1 = 0;  // SliceRows range
  };

  static T sigmoid(T x) { return T(1) / (T(1) + std::exp(-x)); }

  Node make(Op op, int rows, int cols, std::initializer_list<int> ins) {
    Node n;
    n.op = op;
    n.rows = rows;
    n.cols = cols;
    n.value.resize(static_cast<std::size_t>(rows) * cols);
    for (int i : ins) {
      if (i < 0) continue;
      n.inputs.push_back(i);
      n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
    }
    return n;
  }

  TensorId binary(Op op, TensorId a, TensorId b, const char* name) {
    const Node& na = at(a);
    const Node& nb = at(b);
    if (na.rows != nb.rows || na.cols != nb.cols) {
      throw ShapeError(std::string(name) + ": shape mismatch " + shape_str(na) + " vs " +
                       shape_str(nb));
    }
    Node n = make(op, na.rows, na.cols, {a.v, b.v});
    for (std::size_t i = 0; i < na.value.size(); ++i) {
      switch (op) {
        case Op::kAdd: n.value[i] = na.value[i] + nb.value[i]; break;
        case Op::kSub: n.value[i] = na.value[i] - nb.value[i]; break;
        default: n.value[i] = na.value[i] * nb.value[i]; break;
      }
    }
    return push(std::move(n), name);
  }

  TensorId push(Node&& n, const char* name) {
    for (const T v : n.value) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string(name) + ": non-finite value in output");
      }
    }
    nodes_.push_back(std::move(n));
    return TensorId{static_cast<int>(nodes_.size()) - 1};
  }

  const Node& at(TensorId id) const {
    if (!id.valid() || id.v >= static_cast<int>(nodes_.size())) {
      throw ContractError("tensor id out of range");
    }
    return nodes_[id.v];
  }

  static std::string shape_str(const Node& n) {
    return std::to_string(n.rows) + "x" + std::to_string(n.cols);
  }

  // C[m x n] = A[m x k] * B[k x n]; per output element the k-sum runs in
  // ascending order (i,k,j loop order keeps B access contiguous without
  // changing the summation sequence for any single element).
  static void matmul_kernel(T* c, const T* a, const T* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
      T* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] = T(0);
      for (int kk = 0; kk < k; ++kk) {
        const T aik = a[static_cast<std::size_t>(i) * k + kk];
        const T* bk = b + static_cast<std::size_t>(kk) * n;
        for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
      }
    }
  }

  Node* input_node(Node& n, std::size_t idx) {
    Node& in = nodes_[n.inputs[idx]];
    return in.requires_grad ? &in : nullptr;
  }

  void backprop(Node& n) {
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        Node& a = nodes_[n.inputs[0]];
        Node& b = nodes_[n.inputs[1]];
        const int m = a.rows, k = a.cols, nn = b.cols;
        if (a.requires_grad) {
          // dA[i,kk] += sum_j dC[i,j] * B[kk,j]
          for (int i = 0; i < m; ++i) {
            const T* gi = n.grad.data() + static_cast<std::size_t>(i) * nn;
            T* dai = a.grad.data() + static_cast<std::size_t>(i) * k;
            for (int kk = 0; kk < k; ++kk) {
              const T* bk = b.value.data() + static_cast<std::size_t>(kk) * nn;
              T acc = T(0);
              for (int j = 0; j < nn; ++j) acc += gi[j] * bk[j];
              dai[kk] += acc;
            }
          }
        }
        if (b.requires_grad) {
          // dB[kk,j] += sum_i A[i,kk] * dC[i,j]
          for (int i = 0; i < m; ++i) {
            const T* ai = a.value.data() + static_cast<std::size_t>(i) * k;
            const T* gi = n.grad.data() + static_cast<std::size_t>(i) * nn;
            for (int kk = 0; kk < k; ++kk) {
              T* dbk = b.grad.data() + static_cast<std::size_t>(kk) * nn;
              const T aik = ai[kk];
              for (int j = 0; j < nn; ++j) dbk[j] += aik * gi[j];
            }
          }
        }
        break;
      }
      case Op::kLinear: {
        Node& x = nodes_[n.inputs[0]];
        Node& w = nodes_[n.inputs[1]];
        Node* bias = n.inputs.size() > 2 ? &nodes_[n.inputs[2]] : nullptr;
        const int t = x.rows, in = x.cols, out = w.rows;
        if (x.requires_grad) {
          // dX = dY * W
          for (int i = 0; i < t; ++i) {
            const T* gi = n.grad.data() + static_cast<std::size_t>(i) * out;
            T* dxi = x.grad.data() + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < out; ++j) {
              const T* wj = w.value.data() + static_cast<std::size_t>(j) * in;
              const T g = gi[j];
              for (int k = 0; k < in; ++k) dxi[k] += g * wj[k];
            }
          }
        }
        if (w.requires_grad) {
          // dW[j,k] += sum_i dY[i,j] * X[i,k]
          for (int i = 0; i < t; ++i) {
            const T* gi = n.grad.data() + static_cast<std::size_t>(i) * out;
            const T* xi = x.value.data() + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < out; ++j) {
              T* dwj = w.grad.data() + static_cast<std::size_t>(j) * in;
              const T g = gi[j];
              for (int k = 0; k < in; ++k) dwj[k] += g * xi[k];
            }
          }
        }
        if (bias && bias->requires_grad) {
          for (int i = 0; i < t; ++i) {
            const T* gi = n.grad.data() + static_cast<std::size_t>(i) * out;
            for (int j = 0; j < out; ++j) bias->grad[j] += gi[j];
          }
        }
        break;
      }
      case Op::kAdd: {
        for (int s = 0; s < 2; ++s) {
          if (Node* in = input_node(n, s)) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) in->grad[i] += n.grad[i];
          }
        }
        break;
      }
      case Op::kSub: {
        if (Node* a = input_node(n, 0)) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.grad[i];
        }
        if (Node* b = input_node(n, 1)) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) b->grad[i] -= n.grad[i];
        }
        break;
      }
      case Op::kMul: {
        Node& a = nodes_[n.inputs[0]];
        Node& b = nodes_[n.inputs[1]];
        if (a.requires_grad) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) a.grad[i] += n.grad[i] * b.value[i];
        }
        if (b.requires_grad) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) b.grad[i] += n.grad[i] * a.value[i];
        }
        break;
      }
      case Op::kScale: {
        if (Node* a = input_node(n, 0)) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad[i] += n.scalar * n.grad[i];
        }
        break;
      }
      case Op::kAbs: {
        Node& a = nodes_[n.inputs[0]];
        if (a.requires_grad) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T x = a.value[i];
            const T s = x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0));
            a.grad[i] += s * n.grad[i];
          }
        }
        break;
      }
      case Op::kExp: {
        Node& a = nodes_[n.inputs[0]];
        if (a.requires_grad) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) a.grad[i] += n.value[i] * n.grad[i];
        }
        break;
      }
      case Op::kSilu: {
        Node& a = nodes_[n.inputs[0]];
        if (a.requires_grad) {
          for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T x = a.value[i];
            const T sg = sigmoid(x);
            a.grad[i] += sg * (T(1) + x * (T(1) - sg)) * n.grad[i];
          }
        }
        break;
      }
      case Op::kLayerNorm: {
        Node& x = nodes_[n.inputs[0]];
        Node& gain = nodes_[n.inputs[1]];
        Node& bias = nodes_[n.inputs[2]];
        const int d = x.cols;
        const T eps = n.scalar;
        for (int i = 0; i < x.rows; ++i) {
          const T* xi = x.value.data() + static_cast<std::size_t>(i) * d;
          const T* gi = n.grad.data() + static_cast<std::size_t>(i) * d;
          T mean = T(0);
          for (int j = 0; j < d; ++j) mean += xi[j];
          mean /= T(d);
          T var = T(0);
          for (int j = 0; j < d; ++j) {
            const T t = xi[j] - mean;
            var += t * t;
          }
          var /= T(d);
          const T rstd = T(1) / std::sqrt(var + eps);
          if (bias.requires_grad) {
            for (int j = 0; j < d; ++j) bias.grad[j] += gi[j];
          }
          if (gain.requires_grad) {
            for (int j = 0; j < d; ++j) gain.grad[j] += gi[j] * (xi[j] - mean) * rstd;
          }
          if (x.requires_grad) {
            // g = dy .* gain; dx = rstd*(g - mean(g) - xhat*mean(g .* xhat))
            T gm = T(0), gxm = T(0);
            for (int j = 0; j < d; ++j) {
              const T g = gi[j] * gain.value[j];
              const T xh = (xi[j] - mean) * rstd;
              gm += g;
              gxm += g * xh;
            }
            gm /= T(d);
            gxm /= T(d);
            T* dxi = x.grad.data() + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) {
              const T g = gi[j] * gain.value[j];
              const T xh = (xi[j] - mean) * rstd;
              dxi[j] += rstd * (g - gm - xh * gxm);
            }
          }
        }
        break;
      }
      case Op::kConcatRows: {
        std::size_t off = 0;
        for (std::size_t s = 0; s < n.inputs.size(); ++s) {
          Node& in = nodes_[n.inputs[s]];
          if (in.requires_grad) {
            for (std::size_t i = 0; i < in.value.size(); ++i) in.grad[i] += n.grad[off + i];
          }
          off += in.value.size();
        }
        break;
      }
      case Op::kSliceRows: {
        if (Node* in = input_node(n, 0)) {
          const std::size_t off = static_cast<std::size_t>(n.p0) * n.cols;
          for (std::size_t i = 0; i < n.grad.size(); ++i) in->grad[off + i] += n.grad[i];
        }
        break;
      }
      case Op::kMeanRows: {
        if (Node* in = input_node(n, 0)) {
          const T inv = T(1) / T(in->rows);
          for (int i = 0; i < in->rows; ++i) {
            T* gi = in->grad.data() + static_cast<std::size_t>(i) * in->cols;
            for (int j = 0; j < in->cols; ++j) gi[j] += inv * n.grad[j];
          }
        }
        break;
      }
      case Op::kBroadcastRows: {
        if (Node* in = input_node(n, 0)) {
          for (int i = 0; i < n.rows; ++i) {
            const T* gi = n.grad.data() + static_cast<std::size_t>(i) * n.cols;
            for (int j = 0; j < n.cols; ++j) in->grad[j] += gi[j];
          }
        }
        break;
      }
      case Op::kConcatCols: {
        Node& a = nodes_[n.inputs[0]];
        Node& b = nodes_[n.inputs[1]];
        for (int i = 0; i < n.rows; ++i) {
          const T* gi = n.grad.data() + static_cast<std::size_t>(i) * n.cols;
          if (a.requires_grad) {
            T* ga = a.grad.data() + static_cast<std::size_t>(i) * a.cols;
            for (int j = 0; j < a.cols; ++j) ga[j] += gi[j];
          }
          if (b.requires_grad) {
            T* gb = b.grad.data() + static_cast<std::size_t>(i) * b.cols;
            for (int j = 0; j < b.cols; ++j) gb[j] += gi[a.cols + j];
          }
        }
        break;
      }
      case Op::kSum: {
        if (Node* in = input_node(n, 0)) {
          const T g = n.grad[0];
          for (std::size_t i = 0; i < in->grad.size(); ++i) in->grad[i] += g;
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace twmlp
