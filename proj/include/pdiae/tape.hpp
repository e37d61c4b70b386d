#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pdiae/array.hpp"
#include "pdiae/fft.hpp"
#include "pdiae/grid.hpp"

namespace pdiae {

// Named float64 parameter slots. Insertion into an ordered map keeps
// checkpoint layout and gradient iteration deterministic.
struct ParamStore {
  std::map<std::string, RealArray> slots;

  void add(const std::string& name, RealArray value) {
    if (slots.count(name)) throw Error("ParamStore: duplicate slot " + name);
    slots.emplace(name, std::move(value));
  }
  RealArray& at(const std::string& name) {
    auto it = slots.find(name);
    if (it == slots.end()) throw Error("ParamStore: no slot " + name);
    return it->second;
  }
  const RealArray& at(const std::string& name) const {
    auto it = slots.find(name);
    if (it == slots.end()) throw Error("ParamStore: no slot " + name);
    return it->second;
  }
  std::size_t total_params() const {
    std::size_t n = 0;
    for (const auto& [name, arr] : slots) n += arr.numel();
    return n;
  }
};

using Gradients = std::map<std::string, RealArray>;

using Var = int;

// A complex tensor on the tape: two real nodes, treated as independent real
// degrees of freedom throughout differentiation.
struct CVar {
  Var re = -1;
  Var im = -1;
};

// Reverse-mode tape. Nodes are appended in forward order (define-by-run) and
// reference strictly earlier nodes; forward values are computed eagerly and
// saved, so a backward pass never recomputes.
class Tape {
 public:
  enum class Op {
    Leaf,    // parameter or constant
    Add, Sub, Mul,
    MulS,    // elementwise array * scalar node
    AddS,    // array + scalar node (broadcast)
    Scale,   // array * compile-time constant
    Tanh, Relu,
    MatMul,  // [p,q] x ([q,r] | [q])
    Sum,     // -> scalar
    Slice,   // contiguous flat range, reshaped
    Gather,  // out[i] = in[map[i]]
    Embed,   // out[map[i]] = in[i], zeros elsewhere
    Concat,  // flat concatenation, reshaped
    Fft,     // packed [2,...] unnormalized DFT over trailing axes
    Part,    // half of a packed [2,...] value
  };

  struct Node {
    Op op;
    int in0 = -1, in1 = -1;
    std::vector<int> many;   // Concat inputs
    RealArray value;
    double scalar = 0.0;     // Scale factor
    std::size_t offset = 0;  // Slice
    int index = 0;           // Part
    int sign = 0;            // Fft direction
    int ndims = 0;           // Fft trailing axes
    IndexMap map;            // Gather/Embed
    std::string pname;       // Leaf parameter name, empty for constants
  };

  explicit Tape(const ParamStore* store = nullptr) : store_(store) {}

  std::size_t size() const { return nodes_.size(); }
  const RealArray& val(Var v) const { return nodes_[check(v)].value; }
  double scalar_val(Var v) const {
    const RealArray& a = val(v);
    if (a.numel() != 1) throw Error("scalar_val: node is not scalar");
    return a[0];
  }

  Var param(const std::string& name) {
    if (!store_) throw Error("Tape: no parameter store attached");
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return it->second;
    Node n;
    n.op = Op::Leaf;
    n.pname = name;
    n.value = store_->at(name);
    Var v = push(std::move(n));
    param_nodes_.emplace(name, v);
    return v;
  }

  Var constant(RealArray value) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var add(Var a, Var b) { return binary(Op::Add, a, b); }
  Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
  Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }

  Var muls(Var a, Var s) {
    require_scalar(s, "muls");
    Node n;
    n.op = Op::MulS;
    n.in0 = a;
    n.in1 = s;
    n.value = val(a);
    const double c = scalar_val(s);
    for (auto& v : n.value.data) v *= c;
    return push(std::move(n));
  }

  Var adds(Var a, Var s) {
    require_scalar(s, "adds");
    Node n;
    n.op = Op::AddS;
    n.in0 = a;
    n.in1 = s;
    n.value = val(a);
    const double c = scalar_val(s);
    for (auto& v : n.value.data) v += c;
    return push(std::move(n));
  }

  Var scale(Var a, double c) {
    Node n;
    n.op = Op::Scale;
    n.in0 = a;
    n.scalar = c;
    n.value = val(a);
    for (auto& v : n.value.data) v *= c;
    return push(std::move(n));
  }

  Var tanh_op(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.in0 = a;
    n.value = val(a);
    for (auto& v : n.value.data) v = std::tanh(v);
    return push(std::move(n));
  }

  Var relu_op(Var a) {
    Node n;
    n.op = Op::Relu;
    n.in0 = a;
    n.value = val(a);
    for (auto& v : n.value.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
  }

  Var matmul(Var a, Var b) {
    const RealArray& A = val(a);
    const RealArray& B = val(b);
    if (A.shape.size() != 2)
      throw Error("matmul: lhs must be 2-d, got " + shape_str(A.shape));
    if (B.shape.size() != 1 && B.shape.size() != 2)
      throw Error("matmul: rhs must be 1-d or 2-d, got " + shape_str(B.shape));
    const std::size_t p = A.shape[0], q = A.shape[1];
    const std::size_t qb = B.shape[0];
    const std::size_t r = B.shape.size() == 2 ? B.shape[1] : 1;
    if (q != qb)
      throw Error("matmul: inner dims disagree " + shape_str(A.shape) +
                  " vs " + shape_str(B.shape));
    Node n;
    n.op = Op::MatMul;
    n.in0 = a;
    n.in1 = b;
    n.value = RealArray(B.shape.size() == 2 ? Shape{p, r} : Shape{p});
    matmul_kernel(A.data.data(), B.data.data(), n.value.data.data(), p, q, r);
    return push(std::move(n));
  }

  Var sum(Var a) {
    Node n;
    n.op = Op::Sum;
    n.in0 = a;
    double t = 0.0;
    for (double v : val(a).data) t += v;
    n.value = RealArray::scalar(t);
    return push(std::move(n));
  }

  Var slice(Var a, std::size_t offset, Shape out_shape) {
    const RealArray& A = val(a);
    const std::size_t len = shape_numel(out_shape);
    if (offset + len > A.numel())
      throw Error("slice: range [" + std::to_string(offset) + "," +
                  std::to_string(offset + len) + ") exceeds " +
                  std::to_string(A.numel()) + " elements");
    Node n;
    n.op = Op::Slice;
    n.in0 = a;
    n.offset = offset;
    n.value = RealArray(std::move(out_shape));
    for (std::size_t i = 0; i < len; ++i) n.value[i] = A[offset + i];
    return push(std::move(n));
  }

  Var gather(Var a, IndexMap map, Shape out_shape) {
    const RealArray& A = val(a);
    if (map->size() != shape_numel(out_shape))
      throw Error("gather: map size != output numel");
    Node n;
    n.op = Op::Gather;
    n.in0 = a;
    n.map = std::move(map);
    n.value = RealArray(std::move(out_shape));
    for (std::size_t i = 0; i < n.map->size(); ++i)
      n.value[i] = A[(*n.map)[i]];
    return push(std::move(n));
  }

  Var embed(Var a, IndexMap map, Shape out_shape) {
    const RealArray& A = val(a);
    if (map->size() != A.numel())
      throw Error("embed: map size != input numel");
    Node n;
    n.op = Op::Embed;
    n.in0 = a;
    n.map = std::move(map);
    n.value = RealArray(std::move(out_shape));
    for (std::size_t i = 0; i < n.map->size(); ++i)
      n.value[(*n.map)[i]] = A[i];
    return push(std::move(n));
  }

  Var concat(const std::vector<Var>& parts, Shape out_shape) {
    std::size_t total = 0;
    for (Var p : parts) total += val(p).numel();
    if (total != shape_numel(out_shape))
      throw Error("concat: parts hold " + std::to_string(total) +
                  " values, output wants " +
                  std::to_string(shape_numel(out_shape)));
    Node n;
    n.op = Op::Concat;
    n.many = parts;
    n.value = RealArray(std::move(out_shape));
    std::size_t at = 0;
    for (Var p : parts) {
      const RealArray& P = val(p);
      for (std::size_t i = 0; i < P.numel(); ++i) n.value[at++] = P[i];
    }
    return push(std::move(n));
  }

  // Unnormalized DFT over the trailing `ndims` axes; leading axes batch.
  // Output is packed as [2, ...input shape], real block then imaginary.
  Var fft(Var re, Var im, int ndims, int sign) {
    const RealArray& R = val(re);
    const RealArray& I = val(im);
    check_same_shape(R, I, "fft");
    if (ndims <= 0 || (std::size_t)ndims > R.shape.size())
      throw Error("fft: bad trailing axis count");
    Node n;
    n.op = Op::Fft;
    n.in0 = re;
    n.in1 = im;
    n.sign = sign;
    n.ndims = ndims;
    Shape out_shape = R.shape;
    out_shape.insert(out_shape.begin(), 2);
    n.value = RealArray(out_shape);
    const std::size_t sz = R.numel();
    for (std::size_t i = 0; i < sz; ++i) {
      n.value[i] = R[i];
      n.value[sz + i] = I[i];
    }
    batched_fft(n.value.data.data(), n.value.data.data() + sz, R.shape, ndims,
                sign);
    return push(std::move(n));
  }

  Var part(Var packed, int index) {
    const RealArray& P = val(packed);
    if (P.shape.empty() || P.shape[0] != 2)
      throw Error("part: input is not a packed pair");
    if (index < 0 || index > 1) throw Error("part: index must be 0 or 1");
    Node n;
    n.op = Op::Part;
    n.in0 = packed;
    n.index = index;
    Shape out_shape(P.shape.begin() + 1, P.shape.end());
    const std::size_t sz = shape_numel(out_shape);
    n.value = RealArray(std::move(out_shape));
    for (std::size_t i = 0; i < sz; ++i)
      n.value[i] = P[(std::size_t)index * sz + i];
    return push(std::move(n));
  }

  // Re-runs the forward pass over the recorded graph in place. Leaves reload
  // from the parameter store, so the tape doubles as a replayable program.
  void recompute() {
    for (Node& n : nodes_) recompute_node(n);
  }

  // Reverse sweep from a scalar loss. Returns one gradient per store slot;
  // slots the graph never touched get zeros.
  Gradients backprop(Var loss) {
    if (val(loss).numel() != 1)
      throw Error("backprop: loss must be scalar, got shape " +
                  shape_str(val(loss).shape));
    std::vector<RealArray> grads(nodes_.size());
    grads[loss] = RealArray::scalar(1.0);
    for (int i = loss; i >= 0; --i) {
      if (grads[i].data.empty()) continue;
      backward_node(i, grads);
    }
    Gradients out;
    if (store_) {
      for (const auto& [name, arr] : store_->slots) {
        auto it = param_nodes_.find(name);
        if (it != param_nodes_.end() && !grads[it->second].data.empty())
          out[name] = std::move(grads[it->second]);
        else
          out[name] = RealArray(arr.shape);
      }
    }
    return out;
  }

 private:
  Var check(Var v) const {
    if (v < 0 || (std::size_t)v >= nodes_.size())
      throw Error("Tape: invalid node id " + std::to_string(v));
    return v;
  }

  void require_scalar(Var s, const char* op) {
    if (val(s).numel() != 1)
      throw Error(std::string(op) + ": second operand must be scalar");
  }

  Var binary(Op op, Var a, Var b) {
    const RealArray& A = val(a);
    const RealArray& B = val(b);
    check_same_shape(A, B, op == Op::Add ? "add" : op == Op::Sub ? "sub" : "mul");
    Node n;
    n.op = op;
    n.in0 = a;
    n.in1 = b;
    n.value = A;
    double* out = n.value.data.data();
    const double* pb = B.data.data();
    const std::size_t sz = A.numel();
    switch (op) {
      case Op::Add: for (std::size_t i = 0; i < sz; ++i) out[i] += pb[i]; break;
      case Op::Sub: for (std::size_t i = 0; i < sz; ++i) out[i] -= pb[i]; break;
      default:      for (std::size_t i = 0; i < sz; ++i) out[i] *= pb[i]; break;
    }
    return push(std::move(n));
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return (Var)nodes_.size() - 1;
  }

  static void matmul_kernel(const double* A, const double* B, double* C,
                            std::size_t p, std::size_t q, std::size_t r) {
    for (std::size_t i = 0; i < p; ++i) {
      double* crow = C + i * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] = 0.0;
      for (std::size_t k = 0; k < q; ++k) {
        const double aik = A[i * q + k];
        const double* brow = B + k * r;
        for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
      }
    }
  }

  static void batched_fft(double* re, double* im, const Shape& shape,
                          int ndims, int sign) {
    Shape tail(shape.end() - ndims, shape.end());
    const std::size_t block = shape_numel(tail);
    const std::size_t batches = shape_numel(shape) / block;
    for (std::size_t b = 0; b < batches; ++b)
      fft::transform_nd(re + b * block, im + b * block, tail, sign);
  }

  void recompute_node(Node& n) {
    const std::size_t sz = n.value.numel();
    switch (n.op) {
      case Op::Leaf:
        if (!n.pname.empty()) n.value = store_->at(n.pname);
        break;
      case Op::Add: case Op::Sub: case Op::Mul: {
        const RealArray& A = val(n.in0);
        const RealArray& B = val(n.in1);
        for (std::size_t i = 0; i < sz; ++i)
          n.value[i] = n.op == Op::Add ? A[i] + B[i]
                     : n.op == Op::Sub ? A[i] - B[i]
                                       : A[i] * B[i];
        break;
      }
      case Op::MulS: {
        const double c = scalar_val(n.in1);
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i) n.value[i] = A[i] * c;
        break;
      }
      case Op::AddS: {
        const double c = scalar_val(n.in1);
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i) n.value[i] = A[i] + c;
        break;
      }
      case Op::Scale: {
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i) n.value[i] = A[i] * n.scalar;
        break;
      }
      case Op::Tanh: {
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i) n.value[i] = std::tanh(A[i]);
        break;
      }
      case Op::Relu: {
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i)
          n.value[i] = A[i] > 0.0 ? A[i] : 0.0;
        break;
      }
      case Op::MatMul: {
        const RealArray& A = val(n.in0);
        const RealArray& B = val(n.in1);
        const std::size_t p = A.shape[0], q = A.shape[1];
        const std::size_t r = B.shape.size() == 2 ? B.shape[1] : 1;
        matmul_kernel(A.data.data(), B.data.data(), n.value.data.data(), p, q,
                      r);
        break;
      }
      case Op::Sum: {
        double t = 0.0;
        for (double v : val(n.in0).data) t += v;
        n.value[0] = t;
        break;
      }
      case Op::Slice: {
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i) n.value[i] = A[n.offset + i];
        break;
      }
      case Op::Gather: {
        const RealArray& A = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i) n.value[i] = A[(*n.map)[i]];
        break;
      }
      case Op::Embed: {
        const RealArray& A = val(n.in0);
        std::fill(n.value.data.begin(), n.value.data.end(), 0.0);
        for (std::size_t i = 0; i < A.numel(); ++i)
          n.value[(*n.map)[i]] = A[i];
        break;
      }
      case Op::Concat: {
        std::size_t at = 0;
        for (Var p : n.many)
          for (double v : val(p).data) n.value[at++] = v;
        break;
      }
      case Op::Fft: {
        const RealArray& R = val(n.in0);
        const RealArray& I = val(n.in1);
        const std::size_t half = R.numel();
        for (std::size_t i = 0; i < half; ++i) {
          n.value[i] = R[i];
          n.value[half + i] = I[i];
        }
        batched_fft(n.value.data.data(), n.value.data.data() + half, R.shape,
                    n.ndims, n.sign);
        break;
      }
      case Op::Part: {
        const RealArray& P = val(n.in0);
        for (std::size_t i = 0; i < sz; ++i)
          n.value[i] = P[(std::size_t)n.index * sz + i];
        break;
      }
    }
  }

  void accum(std::vector<RealArray>& grads, Var v, const RealArray& g) {
    if (grads[v].data.empty()) {
      grads[v] = g;
      return;
    }
    for (std::size_t i = 0; i < g.numel(); ++i) grads[v][i] += g[i];
  }

  RealArray& grad_slot(std::vector<RealArray>& grads, Var v) {
    if (grads[v].data.empty()) grads[v] = RealArray(val(v).shape);
    return grads[v];
  }

  void backward_node(int i, std::vector<RealArray>& grads) {
    Node& n = nodes_[i];
    const RealArray& g = grads[i];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add: {
        accum(grads, n.in0, g);
        accum(grads, n.in1, g);
        break;
      }
      case Op::Sub: {
        accum(grads, n.in0, g);
        RealArray& gb = grad_slot(grads, n.in1);
        for (std::size_t k = 0; k < g.numel(); ++k) gb[k] -= g[k];
        break;
      }
      case Op::Mul: {
        const RealArray& A = val(n.in0);
        const RealArray& B = val(n.in1);
        RealArray& ga = grad_slot(grads, n.in0);
        RealArray& gb = grad_slot(grads, n.in1);
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga[k] += g[k] * B[k];
          gb[k] += g[k] * A[k];
        }
        break;
      }
      case Op::MulS: {
        const RealArray& A = val(n.in0);
        const double c = scalar_val(n.in1);
        RealArray& ga = grad_slot(grads, n.in0);
        RealArray& gs = grad_slot(grads, n.in1);
        double t = 0.0;
        for (std::size_t k = 0; k < g.numel(); ++k) {
          ga[k] += g[k] * c;
          t += g[k] * A[k];
        }
        gs[0] += t;
        break;
      }
      case Op::AddS: {
        accum(grads, n.in0, g);
        RealArray& gs = grad_slot(grads, n.in1);
        double t = 0.0;
        for (std::size_t k = 0; k < g.numel(); ++k) t += g[k];
        gs[0] += t;
        break;
      }
      case Op::Scale: {
        RealArray& ga = grad_slot(grads, n.in0);
        for (std::size_t k = 0; k < g.numel(); ++k) ga[k] += g[k] * n.scalar;
        break;
      }
      case Op::Tanh: {
        RealArray& ga = grad_slot(grads, n.in0);
        for (std::size_t k = 0; k < g.numel(); ++k)
          ga[k] += g[k] * (1.0 - n.value[k] * n.value[k]);
        break;
      }
      case Op::Relu: {
        const RealArray& A = val(n.in0);
        RealArray& ga = grad_slot(grads, n.in0);
        for (std::size_t k = 0; k < g.numel(); ++k)
          if (A[k] > 0.0) ga[k] += g[k];
        break;
      }
      case Op::MatMul: {
        const RealArray& A = val(n.in0);
        const RealArray& B = val(n.in1);
        const std::size_t p = A.shape[0], q = A.shape[1];
        const std::size_t r = B.shape.size() == 2 ? B.shape[1] : 1;
        RealArray& ga = grad_slot(grads, n.in0);
        RealArray& gb = grad_slot(grads, n.in1);
        // dA = G B^T, dB = A^T G
        for (std::size_t ii = 0; ii < p; ++ii) {
          const double* grow = g.data.data() + ii * r;
          const double* arow = A.data.data() + ii * q;
          for (std::size_t k = 0; k < q; ++k) {
            const double* brow = B.data.data() + k * r;
            double t = 0.0;
            for (std::size_t j = 0; j < r; ++j) t += grow[j] * brow[j];
            ga[ii * q + k] += t;
            const double aik = arow[k];
            double* gbrow = gb.data.data() + k * r;
            for (std::size_t j = 0; j < r; ++j) gbrow[j] += aik * grow[j];
          }
        }
        break;
      }
      case Op::Sum: {
        RealArray& ga = grad_slot(grads, n.in0);
        const double gv = g[0];
        for (auto& v : ga.data) v += gv;
        break;
      }
      case Op::Slice: {
        RealArray& ga = grad_slot(grads, n.in0);
        for (std::size_t k = 0; k < g.numel(); ++k) ga[n.offset + k] += g[k];
        break;
      }
      case Op::Gather: {
        RealArray& ga = grad_slot(grads, n.in0);
        for (std::size_t k = 0; k < g.numel(); ++k) ga[(*n.map)[k]] += g[k];
        break;
      }
      case Op::Embed: {
        RealArray& ga = grad_slot(grads, n.in0);
        for (std::size_t k = 0; k < ga.numel(); ++k) ga[k] += g[(*n.map)[k]];
        break;
      }
      case Op::Concat: {
        std::size_t at = 0;
        for (Var p : n.many) {
          RealArray& gp = grad_slot(grads, p);
          for (std::size_t k = 0; k < gp.numel(); ++k) gp[k] += g[at++];
        }
        break;
      }
      case Op::Fft: {
        // The unnormalized DFT is linear over the re/im pairs; its real
        // adjoint is the opposite-sign transform.
        RealArray adj = g;
        const std::size_t half = adj.numel() / 2;
        const RealArray& R = val(n.in0);
        batched_fft(adj.data.data(), adj.data.data() + half, R.shape, n.ndims,
                    -n.sign);
        RealArray& gr = grad_slot(grads, n.in0);
        RealArray& gi = grad_slot(grads, n.in1);
        for (std::size_t k = 0; k < half; ++k) {
          gr[k] += adj[k];
          gi[k] += adj[half + k];
        }
        break;
      }
      case Op::Part: {
        RealArray& gp = grad_slot(grads, n.in0);
        const std::size_t sz = g.numel();
        for (std::size_t k = 0; k < sz; ++k)
          gp[(std::size_t)n.index * sz + k] += g[k];
        break;
      }
    }
  }

  const ParamStore* store_;
  std::vector<Node> nodes_;
  std::map<std::string, Var> param_nodes_;
};

// ---- complex helpers -------------------------------------------------------

inline CVar cconstant(Tape& t, const ComplexArray& a) {
  return {t.constant(a.re), t.constant(a.im)};
}

inline CVar cparam(Tape& t, const std::string& prefix) {
  return {t.param(prefix + ".re"), t.param(prefix + ".im")};
}

inline ComplexArray cval(const Tape& t, CVar a) {
  return ComplexArray(t.val(a.re), t.val(a.im));
}

inline CVar cadd(Tape& t, CVar a, CVar b) {
  return {t.add(a.re, b.re), t.add(a.im, b.im)};
}

inline CVar csub(Tape& t, CVar a, CVar b) {
  return {t.sub(a.re, b.re), t.sub(a.im, b.im)};
}

// (a + bi)(c + di) = (ac - bd) + (ad + bc)i
inline CVar cmul(Tape& t, CVar a, CVar b) {
  Var re = t.sub(t.mul(a.re, b.re), t.mul(a.im, b.im));
  Var im = t.add(t.mul(a.re, b.im), t.mul(a.im, b.re));
  return {re, im};
}

// Complex scalar node times complex array.
inline CVar cmul_scalar(Tape& t, CVar a, CVar s) {
  Var re = t.sub(t.muls(a.re, s.re), t.muls(a.im, s.im));
  Var im = t.add(t.muls(a.re, s.im), t.muls(a.im, s.re));
  return {re, im};
}

inline CVar cadd_scalar(Tape& t, CVar a, CVar s) {
  return {t.adds(a.re, s.re), t.adds(a.im, s.im)};
}

inline CVar cscale(Tape& t, CVar a, double c) {
  return {t.scale(a.re, c), t.scale(a.im, c)};
}

inline CVar cslice(Tape& t, CVar a, std::size_t offset, Shape out_shape) {
  return {t.slice(a.re, offset, out_shape), t.slice(a.im, offset, out_shape)};
}

inline CVar cgather(Tape& t, CVar a, IndexMap map, Shape out_shape) {
  return {t.gather(a.re, map, out_shape), t.gather(a.im, map, out_shape)};
}

inline CVar cembed(Tape& t, CVar a, IndexMap map, Shape out_shape) {
  return {t.embed(a.re, map, out_shape), t.embed(a.im, map, out_shape)};
}

inline CVar cconcat(Tape& t, const std::vector<CVar>& parts, Shape out_shape) {
  std::vector<Var> res, ims;
  res.reserve(parts.size());
  ims.reserve(parts.size());
  for (CVar p : parts) {
    res.push_back(p.re);
    ims.push_back(p.im);
  }
  return {t.concat(res, out_shape), t.concat(ims, out_shape)};
}

inline CVar cfft(Tape& t, CVar a, int ndims, int sign) {
  Var packed = t.fft(a.re, a.im, ndims, sign);
  return {t.part(packed, 0), t.part(packed, 1)};
}

// sum over |a_i|^2 as a real scalar node.
inline Var csqnorm(Tape& t, CVar a) {
  return t.add(t.sum(t.mul(a.re, a.re)), t.sum(t.mul(a.im, a.im)));
}

// The spec's elementwise entry point for real arrays; cmul above covers the
// complex kind.
enum class Elementwise { add, sub, scale, tanh, relu };

inline Var elementwise(Tape& t, Elementwise kind, Var a, Var b = -1,
                       double c = 1.0) {
  switch (kind) {
    case Elementwise::add: return t.add(a, b);
    case Elementwise::sub: return t.sub(a, b);
    case Elementwise::scale: return t.scale(a, c);
    case Elementwise::tanh: return t.tanh_op(a);
    case Elementwise::relu: return t.relu_op(a);
  }
  throw Error("elementwise: unknown kind");
}

}  // namespace pdiae
