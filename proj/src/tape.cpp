#include "gannoise/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace gannoise::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw ShapeError("matmul needs rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  if (a.cols() != b.rows())
    throw ShapeError("matmul inner dimensions differ: " + shape_str(a.shape()) + " * " +
                     shape_str(b.shape()));
  Tensor out = Tensor::zeros({a.rows(), b.cols()});
  MutMap(out.data().data(), static_cast<long>(a.rows()), static_cast<long>(b.cols())).noalias() =
      ConstMap(a.data().data(), static_cast<long>(a.rows()), static_cast<long>(a.cols())) *
      ConstMap(b.data().data(), static_cast<long>(b.rows()), static_cast<long>(b.cols()));
  return out;
}

// Shape of an elementwise binary result; scalars broadcast against anything,
// everything else must match exactly.
const Shape& binary_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.same_shape(b)) return a.shape();
  if (a.is_scalar()) return b.shape();
  if (b.is_scalar()) return a.shape();
  throw ShapeError(std::string(what) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

template <class F>
Tensor elementwise2(const Tensor& a, const Tensor& b, const char* what, F f) {
  Tensor out = Tensor::zeros(binary_shape(a, b, what));
  const bool as = a.is_scalar(), bs = b.is_scalar();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = f(a[as ? 0 : i], b[bs ? 0 : i]);
  return out;
}

template <class F>
Tensor elementwise1(const Tensor& a, F f) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t leading_rows(const Tensor& t) { return t.shape().at(0); }

std::size_t trailing_size(const Tensor& t) {
  std::size_t n = 1;
  for (std::size_t i = 1; i < t.rank(); ++i) n *= t.shape()[i];
  return n;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::matmul: return "matmul";
    case Op::transpose: return "transpose";
    case Op::relu: return "relu";
    case Op::leaky_relu: return "leaky_relu";
    case Op::step_mask: return "step_mask";
    case Op::clamp: return "clamp";
    case Op::clamp_mask: return "clamp_mask";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh_fn: return "tanh";
    case Op::log_fn: return "log";
    case Op::exp_fn: return "exp";
    case Op::square: return "square";
    case Op::sqrt_fn: return "sqrt";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::l2_norm: return "l2_norm";
    case Op::affine: return "affine";
    case Op::concat0: return "concat0";
    case Op::slice_rows: return "slice_rows";
    case Op::pad_rows: return "pad_rows";
    case Op::broadcast_to: return "broadcast_to";
  }
  return "?";
}

void Tape::check_id(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    throw ContractError("node id " + std::to_string(id) + " is not on this tape");
}

const Node& Tape::node(NodeId id) const {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)];
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

NodeId Tape::push(Node n) {
  if (n.op != Op::leaf) n.value = eval(n);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor Tape::eval(const Node& n) const {
  const Tensor& a = value(n.a);
  switch (n.op) {
    case Op::leaf:
      return n.value;
    case Op::add:
      return elementwise2(a, value(n.b), "add", [](double x, double y) { return x + y; });
    case Op::sub:
      return elementwise2(a, value(n.b), "sub", [](double x, double y) { return x - y; });
    case Op::mul:
      return elementwise2(a, value(n.b), "mul", [](double x, double y) { return x * y; });
    case Op::div: {
      const Tensor& b = value(n.b);
      for (double v : b.data())
        if (v == 0.0) throw DomainError("div: division by zero");
      return elementwise2(a, b, "div", [](double x, double y) { return x / y; });
    }
    case Op::matmul:
      return matmul_values(a, value(n.b));
    case Op::transpose: {
      if (a.rank() != 2) throw ShapeError("transpose needs a rank-2 tensor");
      Tensor out = Tensor::zeros({a.cols(), a.rows()});
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
      return out;
    }
    case Op::relu:
      return elementwise1(a, [](double x) { return x > 0.0 ? x : 0.0; });
    case Op::leaky_relu: {
      double alpha = n.d0;
      return elementwise1(a, [alpha](double x) { return x > 0.0 ? x : alpha * x; });
    }
    case Op::step_mask: {
      double alpha = n.d0;
      return elementwise1(a, [alpha](double x) { return x > 0.0 ? 1.0 : alpha; });
    }
    case Op::clamp: {
      double lo = n.d0, hi = n.d1;
      return elementwise1(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); });
    }
    case Op::clamp_mask: {
      double lo = n.d0, hi = n.d1;
      return elementwise1(a, [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
    }
    case Op::sigmoid:
      return elementwise1(a, stable_sigmoid);
    case Op::tanh_fn:
      return elementwise1(a, [](double x) { return std::tanh(x); });
    case Op::log_fn:
      for (double v : a.data())
        if (v <= 0.0) throw DomainError("log of non-positive value " + std::to_string(v));
      return elementwise1(a, [](double x) { return std::log(x); });
    case Op::exp_fn: {
      Tensor out = elementwise1(a, [](double x) { return std::exp(x); });
      if (!out.all_finite()) throw DomainError("exp overflow");
      return out;
    }
    case Op::square:
      return elementwise1(a, [](double x) { return x * x; });
    case Op::sqrt_fn:
      for (double v : a.data())
        if (v < 0.0) throw DomainError("sqrt of negative value " + std::to_string(v));
      return elementwise1(a, [](double x) { return std::sqrt(x); });
    case Op::sum: {
      double s = 0.0;
      for (double v : a.data()) s += v;
      return Tensor::scalar(s);
    }
    case Op::mean: {
      double s = 0.0;
      for (double v : a.data()) s += v;
      return Tensor::scalar(s / static_cast<double>(a.size()));
    }
    case Op::l2_norm: {
      double s = 0.0;
      for (double v : a.data()) s += v * v;
      return Tensor::scalar(std::sqrt(s));
    }
    case Op::affine:
      return elementwise1(a, [&n](double x) { return n.d0 * x + n.d1; });
    case Op::concat0: {
      const Tensor& b = value(n.b);
      if (a.rank() != b.rank() || trailing_size(a) != trailing_size(b))
        throw ShapeError("concat0: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
      Shape s = a.shape();
      s[0] = leading_rows(a) + leading_rows(b);
      Tensor out = Tensor::zeros(std::move(s));
      std::copy(a.data().begin(), a.data().end(), out.data().begin());
      std::copy(b.data().begin(), b.data().end(),
                out.data().begin() + static_cast<long>(a.size()));
      return out;
    }
    case Op::slice_rows: {
      long rows = static_cast<long>(leading_rows(a));
      if (n.i0 < 0 || n.i1 <= n.i0 || n.i1 > rows)
        throw ShapeError("slice_rows: bad range [" + std::to_string(n.i0) + "," +
                         std::to_string(n.i1) + ") for " + std::to_string(rows) + " rows");
      std::size_t width = trailing_size(a);
      Shape s = a.shape();
      s[0] = static_cast<std::size_t>(n.i1 - n.i0);
      Tensor out = Tensor::zeros(std::move(s));
      std::copy(a.data().begin() + n.i0 * static_cast<long>(width),
                a.data().begin() + n.i1 * static_cast<long>(width), out.data().begin());
      return out;
    }
    case Op::pad_rows: {
      long rows = static_cast<long>(leading_rows(a));
      if (n.i0 < 0 || n.i0 + rows > n.i1)
        throw ShapeError("pad_rows: rows do not fit: offset " + std::to_string(n.i0) + " + " +
                         std::to_string(rows) + " > " + std::to_string(n.i1));
      std::size_t width = trailing_size(a);
      Shape s = a.shape();
      s[0] = static_cast<std::size_t>(n.i1);
      Tensor out = Tensor::zeros(std::move(s));
      std::copy(a.data().begin(), a.data().end(),
                out.data().begin() + n.i0 * static_cast<long>(width));
      return out;
    }
    case Op::broadcast_to: {
      if (!a.is_scalar()) throw ShapeError("broadcast_to needs a scalar input");
      return Tensor::full(n.aux_shape, a[0]);
    }
  }
  throw ContractError("unhandled op");
}

NodeId Tape::leaf(Tensor v) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(v);
  return push(std::move(n));
}

NodeId Tape::constant(Tensor v) {
  NodeId id = leaf(std::move(v));
  nodes_[static_cast<std::size_t>(id)].is_const = true;
  return id;
}

namespace {
Node make2(Op op, NodeId a, NodeId b) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  return n;
}
Node make1(Op op, NodeId a, double d0 = 0.0, double d1 = 0.0) {
  Node n;
  n.op = op;
  n.a = a;
  n.d0 = d0;
  n.d1 = d1;
  return n;
}
}  // namespace

NodeId Tape::add(NodeId a, NodeId b) { check_id(a); check_id(b); return push(make2(Op::add, a, b)); }
NodeId Tape::sub(NodeId a, NodeId b) { check_id(a); check_id(b); return push(make2(Op::sub, a, b)); }
NodeId Tape::mul(NodeId a, NodeId b) { check_id(a); check_id(b); return push(make2(Op::mul, a, b)); }
NodeId Tape::div(NodeId a, NodeId b) { check_id(a); check_id(b); return push(make2(Op::div, a, b)); }
NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  return push(make2(Op::matmul, a, b));
}
NodeId Tape::transpose(NodeId a) { check_id(a); return push(make1(Op::transpose, a)); }
NodeId Tape::relu(NodeId a) { check_id(a); return push(make1(Op::relu, a)); }
NodeId Tape::leaky_relu(NodeId a, double alpha) {
  check_id(a);
  return push(make1(Op::leaky_relu, a, alpha));
}
NodeId Tape::step_mask(NodeId a, double alpha) {
  check_id(a);
  return push(make1(Op::step_mask, a, alpha));
}
NodeId Tape::clamp(NodeId a, double lo, double hi) {
  check_id(a);
  if (lo > hi) throw ContractError("clamp: lo > hi");
  return push(make1(Op::clamp, a, lo, hi));
}
NodeId Tape::clamp_mask(NodeId a, double lo, double hi) {
  check_id(a);
  return push(make1(Op::clamp_mask, a, lo, hi));
}
NodeId Tape::sigmoid(NodeId a) { check_id(a); return push(make1(Op::sigmoid, a)); }
NodeId Tape::tanh_fn(NodeId a) { check_id(a); return push(make1(Op::tanh_fn, a)); }
NodeId Tape::log_fn(NodeId a) { check_id(a); return push(make1(Op::log_fn, a)); }
NodeId Tape::exp_fn(NodeId a) { check_id(a); return push(make1(Op::exp_fn, a)); }
NodeId Tape::square(NodeId a) { check_id(a); return push(make1(Op::square, a)); }
NodeId Tape::sqrt_fn(NodeId a) { check_id(a); return push(make1(Op::sqrt_fn, a)); }
NodeId Tape::sum(NodeId a) { check_id(a); return push(make1(Op::sum, a)); }
NodeId Tape::mean(NodeId a) { check_id(a); return push(make1(Op::mean, a)); }
NodeId Tape::l2_norm(NodeId a) { check_id(a); return push(make1(Op::l2_norm, a)); }
NodeId Tape::affine(NodeId a, double scale, double shift) {
  check_id(a);
  return push(make1(Op::affine, a, scale, shift));
}
NodeId Tape::concat0(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  return push(make2(Op::concat0, a, b));
}
NodeId Tape::slice_rows(NodeId a, long begin, long end) {
  check_id(a);
  Node n = make1(Op::slice_rows, a);
  n.i0 = begin;
  n.i1 = end;
  return push(std::move(n));
}
NodeId Tape::pad_rows(NodeId a, long begin, long total_rows) {
  check_id(a);
  Node n = make1(Op::pad_rows, a);
  n.i0 = begin;
  n.i1 = total_rows;
  return push(std::move(n));
}
NodeId Tape::broadcast_to(NodeId scalar, Shape shape) {
  check_id(scalar);
  Node n = make1(Op::broadcast_to, scalar);
  n.aux_shape = std::move(shape);
  return push(std::move(n));
}

NodeId Tape::forward(Op kind, std::span<const NodeId> inputs, double d0, double d1) {
  auto unary = [&]() {
    if (inputs.size() != 1)
      throw ContractError(std::string(op_name(kind)) + " takes one input");
    return inputs[0];
  };
  auto binary = [&]() {
    if (inputs.size() != 2)
      throw ContractError(std::string(op_name(kind)) + " takes two inputs");
    return std::pair(inputs[0], inputs[1]);
  };
  switch (kind) {
    case Op::add: { auto [a, b] = binary(); return add(a, b); }
    case Op::sub: { auto [a, b] = binary(); return sub(a, b); }
    case Op::mul: { auto [a, b] = binary(); return mul(a, b); }
    case Op::div: { auto [a, b] = binary(); return div(a, b); }
    case Op::matmul: { auto [a, b] = binary(); return matmul(a, b); }
    case Op::concat0: { auto [a, b] = binary(); return concat0(a, b); }
    case Op::transpose: return transpose(unary());
    case Op::relu: return relu(unary());
    case Op::leaky_relu: return leaky_relu(unary(), d0);
    case Op::clamp: return clamp(unary(), d0, d1);
    case Op::sigmoid: return sigmoid(unary());
    case Op::tanh_fn: return tanh_fn(unary());
    case Op::log_fn: return log_fn(unary());
    case Op::exp_fn: return exp_fn(unary());
    case Op::square: return square(unary());
    case Op::sqrt_fn: return sqrt_fn(unary());
    case Op::sum: return sum(unary());
    case Op::mean: return mean(unary());
    case Op::l2_norm: return l2_norm(unary());
    case Op::affine: return affine(unary(), d0, d1);
    default:
      throw ContractError(std::string(op_name(kind)) +
                          " cannot be built through the generic forward entry point");
  }
}

void Tape::contribute(NodeId input, NodeId contribution,
                      std::unordered_map<NodeId, NodeId>& adj) {
  if (node(input).is_const) return;
  // copy, not reference: pushes below reallocate the node store
  const Shape want = node(input).value.shape();
  // Scalar inputs broadcast forward, so their gradient is the total.
  if (value(contribution).size() > 1 && shape_numel(want) == 1)
    contribution = sum(contribution);
  if (value(contribution).shape() != want) {
    if (shape_numel(want) == 1 && value(contribution).size() == 1)
      contribution = broadcast_to(contribution, want);
    else
      throw ContractError("internal: gradient shape " +
                          shape_str(value(contribution).shape()) + " for node of shape " +
                          shape_str(want));
  }
  auto it = adj.find(input);
  if (it == adj.end())
    adj.emplace(input, contribution);
  else
    it->second = add(it->second, contribution);
}

void Tape::accumulate_vjps(NodeId id, NodeId g, std::unordered_map<NodeId, NodeId>& adj) {
  const Node n = node(id);  // copy: recording below may reallocate nodes_
  // Skip adjoint construction for constant inputs entirely; contribute()
  // would drop the result anyway and the wasted ops cost real evaluation.
  auto live = [this](NodeId in) { return !node(in).is_const; };
  switch (n.op) {
    case Op::leaf:
    case Op::step_mask:
    case Op::clamp_mask:
      return;  // no differentiable inputs
    case Op::add:
      if (live(n.a)) contribute(n.a, g, adj);
      if (live(n.b)) contribute(n.b, g, adj);
      return;
    case Op::sub:
      if (live(n.a)) contribute(n.a, g, adj);
      if (live(n.b)) contribute(n.b, neg(g), adj);
      return;
    case Op::mul:
      if (live(n.a)) contribute(n.a, mul(g, n.b), adj);
      if (live(n.b)) contribute(n.b, mul(g, n.a), adj);
      return;
    case Op::div: {
      if (live(n.a)) contribute(n.a, div(g, n.b), adj);
      if (live(n.b)) contribute(n.b, neg(div(mul(g, n.a), square(n.b))), adj);
      return;
    }
    case Op::matmul:
      if (live(n.a)) contribute(n.a, matmul(g, transpose(n.b)), adj);
      if (live(n.b)) contribute(n.b, matmul(transpose(n.a), g), adj);
      return;
    case Op::transpose:
      if (live(n.a)) contribute(n.a, transpose(g), adj);
      return;
    case Op::relu:
      if (live(n.a)) contribute(n.a, mul(g, step_mask(n.a, 0.0)), adj);
      return;
    case Op::leaky_relu:
      if (live(n.a)) contribute(n.a, mul(g, step_mask(n.a, n.d0)), adj);
      return;
    case Op::clamp:
      if (live(n.a)) contribute(n.a, mul(g, clamp_mask(n.a, n.d0, n.d1)), adj);
      return;
    case Op::sigmoid:
      if (live(n.a)) contribute(n.a, mul(g, mul(id, affine(id, -1.0, 1.0))), adj);
      return;
    case Op::tanh_fn:
      if (live(n.a)) contribute(n.a, mul(g, affine(square(id), -1.0, 1.0)), adj);
      return;
    case Op::log_fn:
      if (live(n.a)) contribute(n.a, div(g, n.a), adj);
      return;
    case Op::exp_fn:
      if (live(n.a)) contribute(n.a, mul(g, id), adj);
      return;
    case Op::square:
      if (live(n.a)) contribute(n.a, mul(g, affine(n.a, 2.0, 0.0)), adj);
      return;
    case Op::sqrt_fn:
      if (live(n.a)) contribute(n.a, div(g, affine(id, 2.0, 0.0)), adj);
      return;
    case Op::sum:
      if (live(n.a)) contribute(n.a, broadcast_to(g, node(n.a).value.shape()), adj);
      return;
    case Op::mean: {
      if (!live(n.a)) return;
      double inv = 1.0 / static_cast<double>(node(n.a).value.size());
      contribute(n.a, broadcast_to(affine(g, inv, 0.0), node(n.a).value.shape()), adj);
      return;
    }
    case Op::l2_norm: {
      // Subgradient 0 at the zero vector; the branch is taken on the cached
      // forward value, so the recorded graph never divides by zero.
      if (!live(n.a) || n.value[0] == 0.0) return;
      NodeId scale = broadcast_to(div(g, id), node(n.a).value.shape());
      contribute(n.a, mul(n.a, scale), adj);
      return;
    }
    case Op::affine:
      if (live(n.a)) contribute(n.a, affine(g, n.d0, 0.0), adj);
      return;
    case Op::concat0: {
      long na = static_cast<long>(node(n.a).value.shape().at(0));
      long nb = static_cast<long>(node(n.b).value.shape().at(0));
      if (live(n.a)) contribute(n.a, slice_rows(g, 0, na), adj);
      if (live(n.b)) contribute(n.b, slice_rows(g, na, na + nb), adj);
      return;
    }
    case Op::slice_rows:
      if (live(n.a))
        contribute(n.a, pad_rows(g, n.i0, static_cast<long>(node(n.a).value.shape().at(0))), adj);
      return;
    case Op::pad_rows:
      if (live(n.a))
        contribute(n.a, slice_rows(g, n.i0, n.i0 + static_cast<long>(node(n.a).value.shape().at(0))),
                   adj);
      return;
    case Op::broadcast_to:
      if (live(n.a)) contribute(n.a, sum(g), adj);
      return;
  }
}

std::unordered_map<NodeId, NodeId> Tape::backward_nodes(NodeId root) {
  check_id(root);
  if (node(root).value.size() != 1)
    throw ContractError("backward root must be scalar, got shape " +
                        shape_str(node(root).value.shape()));
  std::unordered_map<NodeId, NodeId> adj;
  adj.emplace(root, constant(Tensor::full(node(root).value.shape(), 1.0)));
  for (NodeId id = root; id >= 0; --id) {
    auto it = adj.find(id);
    if (it == adj.end()) continue;
    accumulate_vjps(id, it->second, adj);
  }
  return adj;
}

GradientMap Tape::backward(NodeId root) {
  auto adj = backward_nodes(root);
  // Ancestor scan over all input edges; ancestors reachable only through
  // derivative-free edges still appear, with zero gradient.
  std::vector<char> anc(static_cast<std::size_t>(root) + 1, 0);
  anc[static_cast<std::size_t>(root)] = 1;
  for (NodeId id = root; id >= 0; --id) {
    if (!anc[static_cast<std::size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.a >= 0) anc[static_cast<std::size_t>(n.a)] = 1;
    if (n.b >= 0) anc[static_cast<std::size_t>(n.b)] = 1;
  }
  GradientMap out;
  for (NodeId id = 0; id <= root; ++id) {
    if (!anc[static_cast<std::size_t>(id)]) continue;
    auto it = adj.find(id);
    if (it != adj.end())
      out.emplace(id, value(it->second));
    else
      out.emplace(id, Tensor::zeros(node(id).value.shape()));
  }
  return out;
}

Tensor Tape::grad_of_grad(NodeId root, NodeId wrt_first, NodeId wrt_second, long probe) {
  check_id(wrt_first);
  check_id(wrt_second);
  auto g1 = backward_nodes(root);
  auto it = g1.find(wrt_first);
  if (it == g1.end()) return Tensor::zeros(node(wrt_second).value.shape());
  NodeId head = it->second;
  if (value(head).size() != 1) {
    if (probe < 0)
      throw ContractError(
          "grad_of_grad: inner gradient is not scalar; pass a probe index to select a component");
    head = slice_rows(head, probe, probe + 1);
    if (value(head).size() != 1)
      throw ContractError("grad_of_grad: probe did not select a scalar component");
  }
  auto g2 = backward_nodes(head);
  auto it2 = g2.find(wrt_second);
  if (it2 == g2.end()) return Tensor::zeros(node(wrt_second).value.shape());
  return value(it2->second);
}

void Tape::replay() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::leaf) continue;
    nodes_[i].value = eval(nodes_[i]);
  }
}

double finite_diff_check(const ScalarTapeFn& f, const Tensor& point, double h) {
  if (h <= 0.0) throw ContractError("finite_diff_check needs h > 0");
  Tape tape;
  NodeId x = tape.leaf(point);
  NodeId root = f(tape, x);
  if (tape.value(root).size() != 1)
    throw ContractError("finite_diff_check: f must produce a scalar");
  GradientMap grads = tape.backward(root);
  Tensor analytic =
      grads.count(x) ? grads.at(x) : Tensor::zeros(point.shape());

  auto value_at = [&f](Tensor p) {
    Tape t;
    NodeId leaf_id = t.leaf(std::move(p));
    return t.value(f(t, leaf_id)).scalar_value();
  };

  double max_err = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    Tensor plus = point, minus = point;
    plus[i] += h;
    minus[i] -= h;
    double fp = value_at(std::move(plus));
    double fm = value_at(std::move(minus));
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw DomainError("finite_diff_check: f is not finite near the point");
    double central = (fp - fm) / (2.0 * h);
    double err = std::abs(analytic[i] - central) / (std::abs(analytic[i]) + 1e-12);
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace gannoise::ad
