#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "gannoise/rng.hpp"
#include "gannoise/tape.hpp"

using namespace gannoise;
using namespace gannoise::ad;

namespace {

Tensor col(std::vector<double> v) {
  std::size_t n = v.size();
  return Tensor({n, 1}, std::move(v));
}

}  // namespace

TEST_CASE("forward examples") {
  Tape t;
  NodeId a = t.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  NodeId b = t.leaf(col({1, 1}));
  NodeId m = t.matmul(a, b);
  CHECK(t.value(m).shape() == Shape{2, 1});
  CHECK(t.value(m)[0] == 3.0);
  CHECK(t.value(m)[1] == 7.0);

  NodeId x = t.leaf(Tensor({3}, {-1, 0, 2}));
  NodeId r = t.relu(x);
  CHECK(t.value(r)[0] == 0.0);
  CHECK(t.value(r)[1] == 0.0);
  CHECK(t.value(r)[2] == 2.0);

  NodeId s = t.sigmoid(t.leaf(Tensor::scalar(0.0)));
  CHECK(t.value(s).scalar_value() == 0.5);
}

TEST_CASE("generic forward dispatch matches builders") {
  Tape t;
  NodeId a = t.leaf(Tensor({2}, {1.5, -2.0}));
  NodeId b = t.leaf(Tensor({2}, {0.5, 3.0}));
  std::vector<NodeId> two{a, b};
  NodeId via_generic = t.forward(Op::add, two);
  NodeId via_builder = t.add(a, b);
  CHECK(t.value(via_generic)[0] == t.value(via_builder)[0]);
  CHECK(t.value(via_generic)[1] == t.value(via_builder)[1]);

  std::vector<NodeId> one{a};
  NodeId lr = t.forward(Op::leaky_relu, one, 0.1);
  CHECK(t.value(lr)[1] == doctest::Approx(-0.2));

  CHECK_THROWS_AS(t.forward(Op::slice_rows, one), ContractError);
  CHECK_THROWS_AS(t.forward(Op::add, one), ContractError);
}

TEST_CASE("forward error surface") {
  Tape t;
  NodeId bad = t.leaf(Tensor({2}, {1.0, -1.0}));
  CHECK_THROWS_AS(t.log_fn(bad), DomainError);
  CHECK_THROWS_AS(t.sqrt_fn(bad), DomainError);

  NodeId zero = t.leaf(Tensor({2}, {1.0, 0.0}));
  NodeId num = t.leaf(Tensor({2}, {1.0, 1.0}));
  CHECK_THROWS_AS(t.div(num, zero), DomainError);

  NodeId m1 = t.leaf(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  NodeId m2 = t.leaf(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  CHECK_THROWS_AS(t.matmul(m1, m2), ShapeError);

  NodeId v3 = t.leaf(Tensor({3}, {1, 2, 3}));
  NodeId v2 = t.leaf(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(t.add(v3, v2), ShapeError);

  NodeId big = t.leaf(Tensor({2}, {1000.0, 0.0}));
  CHECK_THROWS_AS(t.exp_fn(big), DomainError);
}

TEST_CASE("backward: x^2 at 3") {
  Tape t;
  NodeId x = t.leaf(Tensor::scalar(3.0));
  NodeId y = t.square(x);
  GradientMap g = t.backward(y);
  CHECK(g.at(x).scalar_value() == 6.0);
}

TEST_CASE("backward: sum(W [1,2]^T) over 2x2 W") {
  Tape t;
  NodeId w = t.leaf(Tensor::matrix(2, 2, {0.3, -1.2, 2.0, 0.7}));
  NodeId v = t.constant(col({1, 2}));
  NodeId y = t.sum(t.matmul(w, v));
  GradientMap g = t.backward(y);
  const Tensor& gw = g.at(w);
  CHECK(gw.shape() == Shape{2, 2});
  CHECK(gw.at(0, 0) == 1.0);
  CHECK(gw.at(0, 1) == 2.0);
  CHECK(gw.at(1, 0) == 1.0);
  CHECK(gw.at(1, 1) == 2.0);
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape t;
  NodeId x = t.leaf(Tensor({3}, {1, 2, 3}));
  NodeId y = t.square(x);
  CHECK_THROWS_AS(t.backward(y), ContractError);
}

TEST_CASE("non-ancestors are absent; derivative-free ancestors get zeros") {
  Tape t;
  NodeId x = t.leaf(Tensor({2}, {1.0, -2.0}));
  NodeId unused = t.leaf(Tensor({2}, {5.0, 5.0}));
  NodeId masked = t.leaf(Tensor({2}, {0.5, -0.5}));
  NodeId y = t.sum(t.mul(x, t.step_mask(masked, 0.2)));
  GradientMap g = t.backward(y);
  CHECK(g.count(unused) == 0);
  REQUIRE(g.count(masked) == 1);
  CHECK(g.at(masked)[0] == 0.0);
  CHECK(g.at(masked)[1] == 0.0);
  CHECK(g.at(x)[0] == 1.0);   // mask value at 0.5 > 0
  CHECK(g.at(x)[1] == 0.2);   // leaky slope at -0.5
}

TEST_CASE("backward of a 2-hidden-layer MLP matches finite differences") {
  // Fixed weights, gradient taken w.r.t. the input through tanh layers.
  RngStream rng(314, 0);
  Tensor w1 = rng.normal_tensor({4, 6});
  Tensor b1 = rng.normal_tensor({1, 6});
  Tensor w2 = rng.normal_tensor({6, 5});
  Tensor b2 = rng.normal_tensor({1, 5});
  Tensor w3 = rng.normal_tensor({5, 1});

  ScalarTapeFn f = [&](Tape& t, NodeId x) {
    NodeId h1 = t.tanh_fn(t.add(t.matmul(x, t.constant(w1)), t.constant(b1)));
    NodeId h2 = t.tanh_fn(t.add(t.matmul(h1, t.constant(w2)), t.constant(b2)));
    return t.sum(t.matmul(h2, t.constant(w3)));
  };
  for (int trial = 0; trial < 5; ++trial) {
    Tensor x = rng.normal_tensor({1, 4});
    CHECK(finite_diff_check(f, x, 1e-5) < 1e-4);
  }

  // Same check with a weight matrix as the differentiated leaf.
  Tensor x_fixed = rng.normal_tensor({1, 4});
  ScalarTapeFn f_w1 = [&](Tape& t, NodeId w) {
    NodeId h1 = t.tanh_fn(t.add(t.matmul(t.constant(x_fixed), w), t.constant(b1)));
    NodeId h2 = t.tanh_fn(t.add(t.matmul(h1, t.constant(w2)), t.constant(b2)));
    return t.sum(t.matmul(h2, t.constant(w3)));
  };
  CHECK(finite_diff_check(f_w1, w1, 1e-5) < 1e-4);
}

TEST_CASE("grad_of_grad: x^3 at 2 gives 12") {
  Tape t;
  NodeId x = t.leaf(Tensor::scalar(2.0));
  NodeId y = t.mul(t.square(x), x);
  Tensor h = t.grad_of_grad(y, x, x);
  CHECK(h.scalar_value() == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("grad_of_grad: linear critic gradient penalty, closed form") {
  // D(x) = w.x, p = (||grad_x D||_2 - 1)^2, dp/dw = 2(||w||-1) w/||w||.
  Tape t;
  NodeId w = t.leaf(col({3, 4}));
  NodeId x = t.leaf(Tensor::matrix(1, 2, {0.3, -0.9}));
  NodeId y = t.sum(t.matmul(x, w));
  auto g1 = t.backward_nodes(y);
  NodeId gx = g1.at(x);
  NodeId norm = t.l2_norm(gx);
  NodeId p = t.square(t.affine(norm, 1.0, -1.0));
  GradientMap g2 = t.backward(p);
  const Tensor& dpdw = g2.at(w);
  CHECK(dpdw.shape() == Shape{2, 1});
  CHECK(dpdw[0] == doctest::Approx(4.8).epsilon(1e-12));
  CHECK(dpdw[1] == doctest::Approx(6.4).epsilon(1e-12));
}

TEST_CASE("grad_of_grad: MLP critic penalty matches finite differences over theta") {
  // Pre-activations kept away from the leaky_relu kink so the finite
  // difference never crosses it.
  Tensor x0 = Tensor::matrix(1, 2, {0.7, -0.3});
  Tensor w1v = Tensor::matrix(2, 4, {0.6, -0.4, 0.9, 0.3, -0.5, 0.8, -0.7, 0.2});
  Tensor w2v = Tensor::matrix(4, 1, {0.8, -0.6, 0.4, 0.9});

  auto penalty_and_grad = [&](const Tensor& w1in, Tensor* grad_out) {
    Tape t;
    NodeId w1 = t.leaf(w1in);
    NodeId w2 = t.constant(w2v);
    NodeId x = t.leaf(x0);
    NodeId h = t.leaky_relu(t.matmul(x, w1), 0.2);
    NodeId y = t.sum(t.matmul(h, w2));
    auto g1 = t.backward_nodes(y);
    NodeId gx = g1.at(x);
    NodeId p = t.square(t.affine(t.l2_norm(gx), 1.0, -1.0));
    if (grad_out != nullptr) {
      GradientMap g2 = t.backward(p);
      *grad_out = g2.at(w1);
    }
    return t.value(p).scalar_value();
  };

  Tensor analytic = Tensor::zeros({2, 4});
  penalty_and_grad(w1v, &analytic);

  const double h = 1e-5;
  for (std::size_t i = 0; i < w1v.size(); ++i) {
    Tensor plus = w1v, minus = w1v;
    plus[i] += h;
    minus[i] -= h;
    double fd = (penalty_and_grad(plus, nullptr) - penalty_and_grad(minus, nullptr)) / (2 * h);
    double rel = std::abs(analytic[i] - fd) / (std::abs(analytic[i]) + 1e-12);
    CHECK(rel < 1e-3);
  }
}

TEST_CASE("finite_diff_check examples") {
  ScalarTapeFn sq = [](Tape& t, NodeId x) { return t.square(x); };
  CHECK(finite_diff_check(sq, Tensor::scalar(3.0), 1e-5) < 1e-8);

  RngStream rng(99, 0);
  Tensor c = rng.normal_tensor({3, 3});
  ScalarTapeFn sm = [&](Tape& t, NodeId x) {
    return t.sum(t.sigmoid(t.matmul(x, t.constant(c))));
  };
  CHECK(finite_diff_check(sm, rng.normal_tensor({3, 3}), 1e-5) < 1e-4);

  ScalarTapeFn constant_fn = [](Tape& t, NodeId x) {
    (void)x;
    return t.leaf(Tensor::scalar(5.0));
  };
  CHECK(finite_diff_check(constant_fn, Tensor::scalar(1.0), 1e-5) == 0.0);

  CHECK_THROWS_AS(finite_diff_check(sq, Tensor::scalar(3.0), 0.0), ContractError);
}

// ---------------------------------------------------------------------------
// Property: for every supported op kind, backward matches central finite
// differences within 1e-4 relative error at 100 random points.
// ---------------------------------------------------------------------------

namespace {

// Shift entries away from a kink at `k` so a +-h finite difference step
// cannot cross it.
Tensor away_from(Tensor t, double k, double margin) {
  for (double& v : t.data()) {
    if (std::abs(v - k) < margin) v = k + (v >= k ? margin : -margin);
  }
  return t;
}

void check_op_gradient(const char* name, const ScalarTapeFn& f,
                       const std::function<Tensor(RngStream&)>& draw_point) {
  RngStream rng(1234, 9);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Tensor p = draw_point(rng);
    worst = std::max(worst, finite_diff_check(f, p, 1e-5));
  }
  INFO("op: " << name);
  CHECK(worst < 1e-4);
}

}  // namespace

TEST_CASE("every op kind matches finite differences at 100 random points") {
  auto any23 = [](RngStream& r) { return r.normal_tensor({2, 3}); };
  auto pos23 = [](RngStream& r) { return r.uniform_tensor({2, 3}, 0.5, 2.0); };
  auto small23 = [](RngStream& r) { return r.uniform_tensor({2, 3}, -2.0, 2.0); };
  auto kinked = [](RngStream& r) { return away_from(r.normal_tensor({2, 3}), 0.0, 0.05); };

  Tensor cval = Tensor::matrix(2, 3, {0.7, -1.1, 0.6, 1.3, -0.8, 0.9});
  Tensor cmat = Tensor::matrix(3, 2, {0.4, 1.2, -0.9, 0.3, 0.8, -0.5});

  check_op_gradient("add", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.add(x, t.constant(cval))));
  }, any23);
  check_op_gradient("sub", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.sub(t.constant(cval), x)));
  }, any23);
  check_op_gradient("mul", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.mul(x, t.constant(cval))));
  }, any23);
  check_op_gradient("div_num", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.div(x, t.constant(cval))));
  }, any23);
  check_op_gradient("div_den", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.div(t.constant(cval), x)));
  }, pos23);
  check_op_gradient("matmul_lhs", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.matmul(x, t.constant(cmat))));
  }, any23);
  check_op_gradient("matmul_rhs", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.matmul(t.constant(cmat), x)));
  }, any23);
  check_op_gradient("transpose", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.matmul(t.transpose(x), t.constant(cval))));
  }, any23);
  check_op_gradient("relu", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.relu(x)));
  }, kinked);
  check_op_gradient("leaky_relu", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.leaky_relu(x, 0.2)));
  }, kinked);
  check_op_gradient("step_mask", [&](Tape& t, NodeId x) {
    return t.mean(t.mul(t.constant(cval), t.step_mask(x, 0.2)));
  }, kinked);
  check_op_gradient("clamp", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.clamp(x, -1.0, 1.0)));
  }, [](RngStream& r) {
    Tensor p = away_from(r.normal_tensor({2, 3}), 1.0, 0.05);
    return away_from(std::move(p), -1.0, 0.05);
  });
  check_op_gradient("clamp_mask", [&](Tape& t, NodeId x) {
    return t.mean(t.mul(t.constant(cval), t.clamp_mask(x, -1.0, 1.0)));
  }, [](RngStream& r) {
    Tensor p = away_from(r.normal_tensor({2, 3}), 1.0, 0.05);
    return away_from(std::move(p), -1.0, 0.05);
  });
  check_op_gradient("sigmoid", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.sigmoid(x)));
  }, any23);
  check_op_gradient("tanh", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.tanh_fn(x)));
  }, any23);
  check_op_gradient("log", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.log_fn(x)));
  }, pos23);
  check_op_gradient("exp", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.exp_fn(x)));
  }, small23);
  check_op_gradient("square", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.square(x)));
  }, pos23);
  check_op_gradient("sqrt", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.sqrt_fn(x)));
  }, pos23);
  check_op_gradient("sum", [&](Tape& t, NodeId x) {
    return t.square(t.sum(x));
  }, any23);
  check_op_gradient("mean", [&](Tape& t, NodeId x) {
    return t.square(t.mean(x));
  }, any23);
  check_op_gradient("l2_norm", [&](Tape& t, NodeId x) {
    return t.square(t.l2_norm(x));
  }, pos23);
  check_op_gradient("affine", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.affine(x, 1.7, -0.3)));
  }, any23);
  check_op_gradient("concat0", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.concat0(x, t.affine(x, 2.0, 1.0))));
  }, any23);
  check_op_gradient("slice_rows", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.slice_rows(x, 1, 2)));
  }, any23);
  check_op_gradient("pad_rows", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.add(t.pad_rows(x, 1, 4), t.constant(Tensor::full({4, 3}, 0.3)))));
  }, any23);
  check_op_gradient("broadcast_to", [&](Tape& t, NodeId x) {
    return t.mean(t.mul(t.constant(cval), t.broadcast_to(t.mean(x), Shape{2, 3})));
  }, any23);
  check_op_gradient("scalar_broadcast_mul", [&](Tape& t, NodeId x) {
    return t.mean(t.square(t.mul(x, t.constant(cval))));
  }, [](RngStream& r) { return r.normal_tensor({1}); });
}

TEST_CASE("gradient linearity is exact for power-of-two coefficients") {
  Tensor x0 = Tensor::matrix(2, 2, {0.37, -1.41, 2.23, 0.89});
  const double ca = 2.0, cb = 0.25;

  // combined root on one tape
  Tape ta;
  NodeId xa = ta.leaf(x0);
  NodeId fa = ta.mean(ta.square(xa));
  NodeId ga = ta.l2_norm(xa);
  NodeId root = ta.add(ta.mul(ta.constant(Tensor::scalar(ca)), fa),
                       ta.mul(ta.constant(Tensor::scalar(cb)), ga));
  GradientMap g_combined = ta.backward(root);

  // separate gradients on an identically-built tape
  Tape tb;
  NodeId xb = tb.leaf(x0);
  NodeId fb = tb.mean(tb.square(xb));
  NodeId gb = tb.l2_norm(xb);
  GradientMap gf = tb.backward(fb);
  GradientMap gg = tb.backward(gb);

  for (std::size_t i = 0; i < x0.size(); ++i) {
    double manual = ca * gf.at(xb)[i] + cb * gg.at(xb)[i];
    CHECK(g_combined.at(xa)[i] == manual);  // exact: pow2 scaling commutes with rounding
  }
}

TEST_CASE("double-backward of ||x||^2 probes to 2 on the diagonal") {
  Tape t;
  NodeId x = t.leaf(Tensor({3}, {1.0, -2.0, 3.0}));
  NodeId root = t.square(t.l2_norm(x));
  for (long i = 0; i < 3; ++i) {
    Tensor row = t.grad_of_grad(root, x, x, i);
    REQUIRE(row.shape() == Shape{3});
    for (long j = 0; j < 3; ++j)
      CHECK(row[static_cast<std::size_t>(j)] ==
            doctest::Approx(i == j ? 2.0 : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("grad_of_grad of an unrelated leaf is zero") {
  Tape t;
  NodeId x = t.leaf(Tensor::scalar(2.0));
  NodeId y = t.leaf(Tensor({2}, {1.0, 1.0}));
  NodeId root = t.square(x);
  Tensor gg = t.grad_of_grad(root, y, x);
  CHECK(gg.shape() == Shape{1});
  CHECK(gg[0] == 0.0);
}

TEST_CASE("grad_of_grad demands a probe for vector inner gradients") {
  Tape t;
  NodeId x = t.leaf(Tensor({3}, {1.0, -2.0, 3.0}));
  NodeId root = t.square(t.l2_norm(x));
  CHECK_THROWS_AS(t.grad_of_grad(root, x, x), ContractError);
}

TEST_CASE("replay after backward reproduces cached values bit-exactly") {
  Tape t;
  RngStream rng(55, 1);
  NodeId x = t.leaf(rng.normal_tensor({2, 4}));
  NodeId w = t.leaf(rng.normal_tensor({4, 3}));
  NodeId h = t.tanh_fn(t.matmul(x, w));
  NodeId y = t.mean(t.square(t.sigmoid(h)));
  (void)t.backward(y);

  std::vector<Tensor> snapshot;
  snapshot.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) snapshot.push_back(t.value(static_cast<NodeId>(i)));

  t.replay();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Tensor& now = t.value(static_cast<NodeId>(i));
    REQUIRE(now.size() == snapshot[i].size());
    for (std::size_t j = 0; j < now.size(); ++j) CHECK(now[j] == snapshot[i][j]);
  }
}

TEST_CASE("scalar broadcast reduces gradients correctly") {
  // f(s) = sum(s * C): df/ds = sum(C).
  Tape t;
  NodeId s = t.leaf(Tensor::scalar(1.5));
  Tensor c = Tensor::matrix(2, 2, {1, 2, 3, 4});
  NodeId y = t.sum(t.mul(s, t.constant(c)));
  GradientMap g = t.backward(y);
  CHECK(g.at(s).scalar_value() == 10.0);
}
