#include <cmath>

#include <gtest/gtest.h>

#include "../common/finite_diff.h"
#include "kpgen/autodiff.h"

namespace kpgen {
namespace {

using kpgen::testing::check_gradients;

TEST(Ops, SoftmaxOfConstantRowIsUniform) {
  Tape t;
  for (double c : {-5.0, 0.0, 3.7}) {
    auto s = softmax_rows(t.constant(Matrix::row({c, c, c})));
    for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.value()[i], 1.0 / 3.0, 1e-15);
  }
}

TEST(Ops, SigmoidAtZero) {
  Tape t;
  EXPECT_DOUBLE_EQ(sigmoid(t.constant(Matrix::row({0.0}))).scalar(), 0.5);
}

TEST(Ops, MatmulHandProduct) {
  Tape t;
  auto a = t.constant(Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  auto b = t.constant(Matrix(3, 2, {1, 0, 0, 1, 1, 1}));
  auto c = matmul(a, b);
  EXPECT_EQ(c.value().values(), (std::vector<double>{4, 5, 10, 11}));
}

TEST(Ops, ShapeMismatchNamesOpAndShapes) {
  Tape t;
  auto a = t.constant(Matrix(2, 3));
  auto b = t.constant(Matrix(2, 3));
  try {
    matmul(a, b);
    FAIL();
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("2x3"), std::string::npos);
  }
  EXPECT_THROW(add(a, t.constant(Matrix(3, 2))), ShapeError);
}

TEST(Ops, NonFiniteValueRejected) {
  Tape t;
  EXPECT_THROW(reciprocal(t.constant(Matrix::row({0.0}))), NumericError);
}

TEST(Ops, ScatterSumsRepeatedColumns) {
  Tape t;
  auto s = scatter_cols(t.constant(Matrix::row({0.2, 0.3, 0.5})), {7, 8, 7}, 10);
  EXPECT_DOUBLE_EQ(s.value()[7], 0.7);
  EXPECT_DOUBLE_EQ(s.value()[8], 0.3);
  EXPECT_DOUBLE_EQ(s.value()[0], 0.0);
}

TEST(Backward, SquareAtThree) {
  Tape t;
  auto x = t.variable(Matrix::row({3.0}));
  t.backward(mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Backward, SigmoidSlopeAtZero) {
  Tape t;
  auto x = t.variable(Matrix::row({0.0}));
  t.backward(sigmoid(x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 0.25);
}

TEST(Backward, NonScalarLossRejected) {
  Tape t;
  auto x = t.variable(Matrix::row({1.0, 2.0}));
  EXPECT_THROW(t.backward(x), ShapeError);
}

TEST(Backward, ThreeLayerCompositionMatchesFiniteDifferences) {
  ParameterStore ps;
  Rng rng(11);
  auto& w1 = ps.add("w1", 4, 5);
  auto& b1 = ps.add("b1", 1, 5);
  auto& w2 = ps.add("w2", 5, 3);
  auto& w3 = ps.add("w3", 3, 6);
  ps.init_uniform(rng, 0.8);
  Matrix x(2, 4);
  for (auto& v : x.values()) v = rng.uniform(-1, 1);
  auto loss = [&](Tape& t) {
    auto h1 = tanh(add_bias(matmul(t.constant(x), t.param(w1)), t.param(b1)));
    auto h2 = sigmoid(matmul(h1, t.param(w2)));
    auto p = softmax_rows(matmul(h2, t.param(w3)));
    return scale(sum(log(pick(p, 0, 2))), -1.0);
  };
  auto r = check_gradients(ps.all(), loss);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Backward, EveryOpMatchesFiniteDifferences) {
  ParameterStore ps;
  Rng rng(5);
  auto& a = ps.add("a", 3, 4);
  auto& b = ps.add("b", 3, 4);
  auto& s = ps.add("s", 1, 1);
  auto& emb = ps.add("emb", 5, 4);
  ps.init_uniform(rng, 0.9);
  auto loss = [&](Tape& t) {
    Var A = t.param(a), B = t.param(b);
    Var x = mul(sub(A, B), add(A, scale(B, 0.5)));
    x = affine(scale_by(x, t.param(s)), 2.0, 1.5);
    x = concat_rows({slice_rows(x, 0, 2), relu(slice_rows(A, 1, 2))});
    x = concat_cols({slice_cols(x, 0, 3), transpose(slice_rows(transpose(x), 3, 1))});
    Var e = embed(t.param(emb), {1, 3, 3, 0});
    Var row = mean_rows(add(x, e));
    Var pc = pad_cols(softmax_rows(row), 6);
    Var sc = scatter_cols(reciprocal(affine(sigmoid(row), 1.0, 1.0)), {0, 2, 0, 5}, 6);
    return add(mean(log(affine(add(pc, sc), 1.0, 0.1))), mean(tanh(x)));
  };
  auto r = check_gradients(ps.all(), loss);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter p("p", 1, 3);
  p.value = Matrix::row({1.0, -2.0, 0.5});
  Adam adam;
  adam.step({&p});
  EXPECT_EQ(p.value.values(), (std::vector<double>{1.0, -2.0, 0.5}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", 1, 2);
  p.grad = Matrix::row({0.3, -7.0});
  Adam adam(AdamConfig{0.01, 0.9, 0.999, 1e-8});
  adam.step({&p});
  // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps).
  EXPECT_NEAR(p.value[0], -0.01 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value[1], 0.01 * 7.0 / (7.0 + 1e-8), 1e-15);
}

TEST(Adam, TwoStepTrace) {
  Parameter p("p", 1, 1);
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  Adam adam(cfg);
  const double g = 2.0;
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 2; ++t) {
    p.grad = Matrix::row({g});
    adam.step({&p});
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    x -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
  }
  EXPECT_EQ(adam.steps(), 2);
  EXPECT_NEAR(adam.first_moment(&p)[0], 0.38, 1e-15);
  EXPECT_NEAR(adam.second_moment(&p)[0], 0.999 * 0.004 + 0.004, 1e-15);
  EXPECT_NEAR(p.value[0], x, 1e-15);
}

TEST(Adam, NonFiniteGradientRejected) {
  Parameter p("p", 1, 1);
  p.grad = Matrix::row({NAN});
  Adam adam;
  EXPECT_THROW(adam.step({&p}), NumericError);
}

TEST(Clip, BelowThresholdUnchanged) {
  Parameter p("p", 1, 2);
  p.grad = Matrix::row({0.3, 0.4});
  EXPECT_DOUBLE_EQ(clip_global_norm({&p}, 1.0), 0.5);
  EXPECT_EQ(p.grad.values(), (std::vector<double>{0.3, 0.4}));
}

TEST(Clip, ScalesToMaxNorm) {
  Parameter p("p", 1, 2);
  p.grad = Matrix::row({3.0, 4.0});
  EXPECT_DOUBLE_EQ(clip_global_norm({&p}, 1.0), 5.0);
  EXPECT_NEAR(p.grad[0], 0.6, 1e-15);
  EXPECT_NEAR(p.grad[1], 0.8, 1e-15);
}

TEST(Clip, ZeroGradientsUnchanged) {
  Parameter p("p", 1, 2);
  EXPECT_DOUBLE_EQ(clip_global_norm({&p}, 1.0), 0.0);
  EXPECT_EQ(p.grad.values(), (std::vector<double>{0.0, 0.0}));
}

TEST(Gru, ZeroWeightsHalveState) {
  ParameterStore ps;
  auto w = GruWeights::create(ps, "g", 2, 3);
  Tape t;
  auto h = gru_cell(t.constant(Matrix::row({0.4, -1.0})), t.constant(Matrix::row({1.0, -2.0, 0.5})), w);
  EXPECT_EQ(h.value().values(), (std::vector<double>{0.5, -1.0, 0.25}));
  auto h0 = gru_cell(t.constant(Matrix::row({0.4, -1.0})), t.constant(Matrix(1, 3)), w);
  EXPECT_EQ(h0.value().values(), (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Gru, ShapeMismatchRejected) {
  ParameterStore ps;
  auto w = GruWeights::create(ps, "g", 2, 3);
  Tape t;
  EXPECT_THROW(gru_cell(t.constant(Matrix::row({1.0})), t.constant(Matrix(1, 3)), w), ShapeError);
}

TEST(Gru, CellMatchesFiniteDifferences) {
  ParameterStore ps;
  auto w = GruWeights::create(ps, "g", 3, 4);
  auto& x = ps.add("x", 1, 3);
  auto& h = ps.add("h", 1, 4);
  Rng rng(9);
  ps.init_uniform(rng, 0.7);
  auto loss = [&](Tape& t) { return sum(mul(gru_cell(t.param(x), t.param(h), w), t.constant(Matrix::row({1, -2, 3, 0.5})))); };
  auto r = check_gradients(ps.all(), loss);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Gru, ScanMatchesStepwiseCells) {
  ParameterStore ps;
  auto w = GruWeights::create(ps, "g", 3, 4);
  auto& xs = ps.add("xs", 5, 3);
  Rng rng(2);
  ps.init_uniform(rng, 0.7);
  for (bool reverse : {false, true}) {
    Tape t;
    auto states = gru_scan(t.param(xs), w, reverse);
    Var h = t.constant(Matrix(1, 4));
    for (size_t step = 0; step < 5; ++step) {
      const size_t i = reverse ? 4 - step : step;
      h = gru_cell(slice_rows(t.param(xs), i, 1), h, w);
      for (size_t j = 0; j < 4; ++j) EXPECT_NEAR(states[i].value()[j], h.value()[j], 1e-14);
    }
  }
}

TEST(Gru, ScanMatchesFiniteDifferences) {
  ParameterStore ps;
  auto w = GruWeights::create(ps, "g", 2, 3);
  auto& xs = ps.add("xs", 4, 2);
  Rng rng(4);
  ps.init_uniform(rng, 0.8);
  auto loss = [&](Tape& t) {
    auto fwd = gru_scan(t.param(xs), w, false);
    auto bwd = gru_scan(t.param(xs), w, true);
    return add(sum(mul(fwd.back(), fwd[1])), sum(bwd.front()));
  };
  auto r = check_gradients(ps.all(), loss);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Tape, GradDisabledParamsAreConstants) {
  Parameter p("p", 1, 1);
  p.value = Matrix::row({2.0});
  Tape t;
  t.set_grad_enabled(false);
  auto y = mul(t.param(p), t.param(p));
  EXPECT_FALSE(t.needs_grad(y.id));
}

TEST(Tape, TruncateDropsLaterNodes) {
  Parameter p("p", 1, 1);
  Tape t;
  t.param(p);
  const size_t base = t.size();
  auto y = scale(t.param(p), 2.0);
  EXPECT_GT(t.size(), base);
  (void)y;
  t.truncate(base);
  EXPECT_EQ(t.size(), base);
}

TEST(Dropout, IdentityOutsideTraining) {
  Tape t;
  Rng rng(1);
  auto x = t.constant(Matrix::row({1, 2, 3}));
  EXPECT_EQ(dropout(x, 0.5, &rng).value().values(), x.value().values());
  t.set_training(true);
  EXPECT_EQ(dropout(x, 0.5, nullptr).value().values(), x.value().values());
  auto d = dropout(x, 0.5, &rng).value();
  for (size_t i = 0; i < 3; ++i) EXPECT_TRUE(d[i] == 0.0 || d[i] == 2.0 * x.value()[i]);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.below(7), 7u);
  }
}

}  // namespace
}  // namespace kpgen
