#include <gtest/gtest.h>

#include <cmath>

#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/model/batch.hpp"
#include "gpcrfilter/nn/adam.hpp"
#include "gpcrfilter/nn/autograd.hpp"
#include "oracles/chem_oracles.hpp"
#include "oracles/dense_gcn.hpp"
#include "oracles/gradcheck.hpp"

using namespace gpcrfilter;
using namespace gpcrfilter::nn;

namespace {

constexpr double kTol = 1e-4;

Parameter<double> random_param(const std::string& name, std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.vec()) v = scale * rng.normal();
  return Parameter<double>(name, std::move(t));
}

Tensor<double> random_weights(std::size_t n, Rng& rng) {
  Tensor<double> w({static_cast<int>(n)});
  for (auto& v : w.vec()) v = rng.normal();
  return w;
}

}  // namespace

TEST(Autograd, Linear) {
  Rng rng(1);
  auto x = random_param("x", {2, 3, 4}, rng);
  auto w = random_param("w", {4, 5}, rng);
  auto b = random_param("b", {5}, rng);
  const auto proj = random_weights(30, rng);
  const auto r = oracle::grad_check({&x, &w, &b}, [&](Tape<double>& t) {
    return weighted_sum(t, linear(t, t.param(x), t.param(w), t.param(b)), proj);
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, LinearForwardValues) {
  Tape<double> t;
  const Var x = t.constant(Tensor<double>({1, 2}, std::vector<double>{1, 2}));
  const Var w = t.constant(Tensor<double>({2, 2}, std::vector<double>{1, 2, 3, 4}));
  const Var b = t.constant(Tensor<double>({2}, std::vector<double>{0.5, -0.5}));
  const auto& y = t.value(linear(t, x, w, b));
  EXPECT_EQ(y.vec(), (std::vector<double>{7.5, 9.5}));
}

TEST(Autograd, AddAndRelu) {
  Rng rng(2);
  auto a = random_param("a", {3, 4}, rng);
  auto b = random_param("b", {3, 4}, rng);
  const auto proj = random_weights(12, rng);
  const auto r = oracle::grad_check(
      {&a, &b}, [&](Tape<double>& t) { return weighted_sum(t, relu(t, add(t, t.param(a), t.param(b))), proj); });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, LayerNorm) {
  Rng rng(3);
  auto x = random_param("x", {2, 3, 6}, rng);
  auto g = random_param("gamma", {6}, rng);
  auto b = random_param("beta", {6}, rng);
  const auto proj = random_weights(36, rng);
  const auto r = oracle::grad_check({&x, &g, &b}, [&](Tape<double>& t) {
    return weighted_sum(t, layer_norm(t, t.param(x), t.param(g), t.param(b)), proj);
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, LayerNormNormalizesRows) {
  Tape<double> t;
  const Var x = t.constant(Tensor<double>({1, 4}, std::vector<double>{1, 2, 3, 4}));
  const Var g = t.constant(Tensor<double>({4}, 1.0));
  const Var b = t.constant(Tensor<double>({4}, 0.0));
  const auto& y = t.value(layer_norm(t, x, g, b, 0.0));
  double mean = 0, var = 0;
  for (double v : y.vec()) mean += v / 4;
  for (double v : y.vec()) var += (v - mean) * (v - mean) / 4;
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(var, 1.0, 1e-12);
}

TEST(Autograd, DropoutWithFixedMask) {
  Rng rng(4);
  auto x = random_param("x", {4, 5}, rng);
  const auto proj = random_weights(20, rng);
  const auto r = oracle::grad_check({&x}, [&](Tape<double>& t) {
    Rng mask_rng(17);
    return weighted_sum(t, dropout(t, t.param(x), 0.3, true, mask_rng), proj);
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, DropoutIsIdentityInEval) {
  Tape<double> t;
  Rng rng(1);
  const Var x = t.constant(Tensor<double>({3}, std::vector<double>{1, 2, 3}));
  EXPECT_EQ(dropout(t, x, 0.5, false, rng).id, x.id);
}

TEST(Autograd, DropoutKeepsExpectation) {
  Tape<double> t;
  Rng rng(5);
  const Var x = t.constant(Tensor<double>({100000}, 1.0));
  const auto& y = t.value(dropout(t, x, 0.1, true, rng));
  double mean = 0;
  for (double v : y.vec()) mean += v / 100000;
  EXPECT_NEAR(mean, 1.0, 0.01);
}

TEST(Autograd, AttentionChain) {
  Rng rng(6);
  const int heads = 2;
  auto q = random_param("q", {2, 3, 4}, rng);
  auto k = random_param("k", {2, 5, 4}, rng);
  auto v = random_param("v", {2, 5, 4}, rng);
  const std::vector<std::uint8_t> mask = {1, 1, 0, 1, 0, 1, 1, 1, 1, 1};
  const auto proj = random_weights(24, rng);
  const auto r = oracle::grad_check({&q, &k, &v}, [&](Tape<double>& t) {
    const Var s = head_scores(t, t.param(q), t.param(k), heads);
    const Var p = masked_softmax(t, s, mask, heads);
    return weighted_sum(t, head_mix(t, p, t.param(v), heads), proj);
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, MaskedSoftmaxRowsAndMask) {
  Rng rng(7);
  Tape<double> t;
  Tensor<double> s({4, 3, 5});
  for (auto& x : s.vec()) x = 3 * rng.normal();
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 0, 0, 0, 1, 0};
  const auto& p = t.value(masked_softmax(t, t.constant(s), mask, 2));
  for (int bh = 0; bh < 4; ++bh)
    for (int n = 0; n < 3; ++n) {
      double sum = 0;
      for (int m = 0; m < 5; ++m) {
        if (!mask[(bh / 2) * 5 + m]) { EXPECT_EQ(p.at(bh, n, m), 0.0); }
        sum += p.at(bh, n, m);
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  // A single unmasked key receives weight exactly 1.
  for (int n = 0; n < 3; ++n) EXPECT_EQ(p.at(2, n, 3), 1.0);
  const std::vector<std::uint8_t> none(10, 0);
  EXPECT_THROW(masked_softmax(t, t.constant(s), none, 2), InputError);
  // NaN scores on live keys propagate instead of looking like an empty mask.
  Tensor<double> bad = s;
  for (auto& x : bad.vec()) x = std::numeric_limits<double>::quiet_NaN();
  const auto& q = t.value(masked_softmax(t, t.constant(bad), mask, 2));
  EXPECT_TRUE(std::isnan(q.at(0, 0, 0)));
  EXPECT_EQ(q.at(0, 0, 1), 0.0);
}

TEST(Autograd, GraphAggregatePrependSelect) {
  Rng rng(8);
  auto x = random_param("x", {2, 3, 4}, rng);
  auto token = random_param("token", {4}, rng);
  const std::vector<WeightedEdge> edges = {{0, 0, 0, 0.5}, {0, 0, 1, 0.4}, {0, 1, 0, 0.4}, {0, 1, 1, 0.5},
                                           {0, 2, 2, 1.0}, {1, 0, 2, 0.7}, {1, 2, 0, 0.7}};
  const auto proj = random_weights(8, rng);
  const auto r = oracle::grad_check({&x, &token}, [&](Tape<double>& t) {
    const Var y = prepend_token(t, graph_aggregate(t, t.param(x), edges), t.param(token));
    return weighted_sum(t, add(t, select_row(t, y, 0), select_row(t, y, 2)), proj);
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, LookupRows) {
  Rng rng(9);
  auto table = random_param("table", {5, 3}, rng);
  const auto proj = random_weights(12, rng);
  const auto r = oracle::grad_check({&table}, [&](Tape<double>& t) {
    return weighted_sum(t, lookup_rows(t, t.param(table), {4, 0, 4, 2}), proj);
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, CrossEntropy) {
  Rng rng(10);
  auto logits = random_param("logits", {4, 2}, rng, 3.0);
  const auto r = oracle::grad_check({&logits}, [&](Tape<double>& t) {
    return cross_entropy(t, t.param(logits), {0, 1, 1, 0});
  });
  EXPECT_LT(r.max_rel_error, kTol) << r.worst;
}

TEST(Autograd, CrossEntropyValues) {
  Tape<double> t;
  const Var zero = t.constant(Tensor<double>({1, 2}, 0.0));
  EXPECT_NEAR(t.value(cross_entropy(t, zero, {1}))[0], std::log(2.0), 1e-15);
  const Var confident = t.constant(Tensor<double>({1, 2}, std::vector<double>{-10, 10}));
  // log(1 + e^-20)
  EXPECT_DOUBLE_EQ(t.value(cross_entropy(t, confident, {1}))[0], std::log1p(std::exp(-20.0)));
  EXPECT_NEAR(t.value(cross_entropy(t, confident, {1}))[0], 2.06e-9, 0.01e-9);
}

TEST(Autograd, CrossEntropyGradientIsSoftmaxMinusOneHot) {
  Parameter<double> logits("o", Tensor<double>({1, 2}, std::vector<double>{0.3, -1.2}));
  Tape<double> t;
  t.backward(cross_entropy(t, t.param(logits), {0}));
  const double p1 = 1.0 / (1.0 + std::exp(0.3 + 1.2));
  EXPECT_NEAR(logits.grad[0], (1 - p1) - 1.0, 1e-15);
  EXPECT_NEAR(logits.grad[1], p1, 1e-15);
}

TEST(Autograd, SharedInputsAccumulate) {
  Parameter<double> x("x", Tensor<double>({2}, std::vector<double>{1.5, -2.0}));
  Tape<double> t;
  const Var v = t.param(x);
  t.backward(weighted_sum(t, add(t, v, v), Tensor<double>({2}, std::vector<double>{1, 3})));
  EXPECT_EQ(x.grad.vec(), (std::vector<double>{2, 6}));
}

TEST(Gcn, PathOfTwoWithIdentityWeights) {
  const chem::MolGraph g = chem::parse_smiles("CC");
  Tape<double> t;
  Tensor<double> x({1, 2, 3}, std::vector<double>{0.5, 1, 2, 0.5, 1, 2});
  const auto edges = model::normalized_adjacency(g);
  const auto& y = t.value(relu(t, graph_aggregate(t, t.constant(x), edges)));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-15);
}

TEST(Gcn, IsolatedNodeIsRelu) {
  const chem::MolGraph g = chem::parse_smiles("C");
  Tape<double> t;
  Tensor<double> x({1, 1, 3}, std::vector<double>{-1, 0.25, 3});
  const auto& y = t.value(relu(t, graph_aggregate(t, t.constant(x), model::normalized_adjacency(g))));
  EXPECT_EQ(y.vec(), (std::vector<double>{0, 0.25, 3}));
}

TEST(Gcn, MatchesDenseOracle) {
  Rng rng(12);
  const int d = 5;
  for (int trial = 0; trial < 30; ++trial) {
    const auto mol = oracle::random_molecule(rng, 20);
    const chem::MolGraph g = chem::parse_smiles(
        oracle::naive_smiles(mol, oracle::identity_order(static_cast<int>(mol.atoms.size()))));
    const int n = g.atom_count();
    std::vector<double> x(static_cast<std::size_t>(n) * d), w(d * d);
    for (auto& v : x) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    Tape<double> t;
    const Var xw = linear(t, t.constant(Tensor<double>({1, n, d}, x)), t.constant(Tensor<double>({d, d}, w)));
    const auto& y = t.value(relu(t, graph_aggregate(t, xw, model::normalized_adjacency(g))));
    const auto expected = oracle::dense_gcn(g, x, w, d);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y[i], expected[i], 1e-9);
  }
}

TEST(Adam, MinimizesQuadratic) {
  // Gradient of 0.5 |x - c|^2: the residual weighted by its own detached value.
  Parameter<double> x("x", Tensor<double>({2}, std::vector<double>{3, -4}));
  Adam<double> opt({&x}, {0.1});
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    Tape<double> t;
    const Var diff = add(t, t.param(x), t.constant(Tensor<double>({2}, std::vector<double>{-1, -2})));
    t.backward(weighted_sum(t, diff, t.value(diff)));
    opt.step();
  }
  EXPECT_NEAR(x.value[0], 1.0, 1e-2);
  EXPECT_NEAR(x.value[1], 2.0, 1e-2);
  EXPECT_EQ(opt.steps(), 500);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> x("x", Tensor<double>({1}, 5.0));
  Adam<double> opt({&x}, {0.01});
  x.grad[0] = 123.0;
  opt.step();
  EXPECT_NEAR(x.value[0], 5.0 - 0.01, 1e-9);
}
