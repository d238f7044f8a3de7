#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gannoise/tensor.hpp"

namespace gannoise::ad {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

enum class Op {
  leaf,
  add,
  sub,
  mul,        // elementwise
  div,        // elementwise
  matmul,
  transpose,
  relu,
  leaky_relu,  // d0 = slope alpha
  step_mask,   // 1 where input > 0, else d0; derivative zero everywhere
  clamp,       // d0 = lo, d1 = hi
  clamp_mask,  // 1 strictly inside (lo, hi), else 0; derivative zero
  sigmoid,
  tanh_fn,
  log_fn,
  exp_fn,
  square,
  sqrt_fn,
  sum,     // all elements -> scalar
  mean,    // all elements -> scalar
  l2_norm, // sqrt(sum of squares) -> scalar
  affine,  // d0 * x + d1 elementwise
  concat0,     // stack two tensors along the first axis
  slice_rows,  // rows [i0, i1) of the first axis
  pad_rows,    // place rows at offset i0 inside i1 zero rows
  broadcast_to  // scalar -> aux_shape, every entry equal
};

const char* op_name(Op op);

struct Node {
  Op op = Op::leaf;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  Tensor value;
  double d0 = 0.0;
  double d1 = 0.0;
  long i0 = 0;
  long i1 = 0;
  Shape aux_shape;      // broadcast_to target
  bool is_const = false;  // constants never receive gradients
};

/// Gradient of a scalar root with respect to tape nodes. Shapes mirror the
/// differentiated values.
using GradientMap = std::unordered_map<NodeId, Tensor>;

/// Append-only record of a computation. Node ids are topologically ordered:
/// inputs always precede consumers. Forward values are cached at record time;
/// replay() recomputes them and must reproduce the cache bit-exactly.
///
/// The backward pass is itself recorded as ordinary tape operations, so
/// gradients are differentiable again (double backward) without any symbolic
/// machinery.
class Tape {
 public:
  NodeId leaf(Tensor value);
  NodeId constant(Tensor value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId relu(NodeId a);
  NodeId leaky_relu(NodeId a, double alpha = 0.2);
  NodeId step_mask(NodeId a, double alpha);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId clamp_mask(NodeId a, double lo, double hi);
  NodeId sigmoid(NodeId a);
  NodeId tanh_fn(NodeId a);
  NodeId log_fn(NodeId a);
  NodeId exp_fn(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt_fn(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId l2_norm(NodeId a);
  NodeId affine(NodeId a, double scale, double shift);
  NodeId neg(NodeId a) { return affine(a, -1.0, 0.0); }
  NodeId concat0(NodeId a, NodeId b);
  NodeId slice_rows(NodeId a, long begin, long end);
  NodeId pad_rows(NodeId a, long begin, long total_rows);
  NodeId broadcast_to(NodeId scalar, Shape shape);

  /// Generic entry point: dispatches on kind. Unary kinds take one input id,
  /// binary kinds two. `d0`/`d1` carry the op parameter where one exists
  /// (leaky slope, affine scale/shift, clamp bounds).
  NodeId forward(Op kind, std::span<const NodeId> inputs, double d0 = 0.0, double d1 = 0.0);

  const Node& node(NodeId id) const;
  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// d(root)/d(node) for every ancestor of the scalar root, as plain tensors.
  /// Ancestors reached only through derivative-free edges get zeros.
  GradientMap backward(NodeId root);

  /// Same sweep, but each gradient is returned as a node id: the adjoint
  /// computation is appended to this tape, so gradients can be consumed by
  /// further ops and differentiated again.
  std::unordered_map<NodeId, NodeId> backward_nodes(NodeId root);

  /// Second-order: differentiate d(root)/d(wrt_first) with respect to
  /// wrt_second. The inner gradient must be scalar; for a vector-valued
  /// gradient pass `probe` to select one first-axis entry.
  Tensor grad_of_grad(NodeId root, NodeId wrt_first, NodeId wrt_second, long probe = -1);

  /// Recompute every non-leaf value from its inputs, in id order.
  void replay();

 private:
  NodeId push(Node n);
  void check_id(NodeId id) const;
  Tensor eval(const Node& n) const;
  // Adds the vjp contributions of `id` to its inputs, recording new ops.
  void accumulate_vjps(NodeId id, NodeId adjoint, std::unordered_map<NodeId, NodeId>& adj);
  void contribute(NodeId input, NodeId contribution, std::unordered_map<NodeId, NodeId>& adj);

  std::vector<Node> nodes_;
};

/// Builds a scalar root from a leaf holding the evaluation point.
using ScalarTapeFn = std::function<NodeId(Tape&, NodeId)>;

/// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-12).
double finite_diff_check(const ScalarTapeFn& f, const Tensor& point, double h);

}  // namespace gannoise::ad
