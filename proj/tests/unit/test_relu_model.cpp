#include <gtest/gtest.h>

#include <cmath>

#include "fixbias/eigen.hpp"
#include "fixbias/random.hpp"
#include "fixbias/relu_model.hpp"
#include "fixbias/spectral.hpp"

using namespace fixbias;

namespace {

ParamVector random_params(const ReluModel& m, Xoshiro256& rng, double scale = 1.0) {
  return ParamVector::with_affine(m.n_intervals(), rng.uniform_vector(m.param_dim() - 2, -scale, scale),
                                  rng.uniform(-scale, scale), rng.uniform(-scale, scale));
}

double max_abs_diff(const LatticeFunction& a, const LatticeFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(ReluModel, Dimension) {
  const ReluModel m(make_unit_grid(10));
  EXPECT_EQ(m.param_dim(), 11u);
  EXPECT_EQ(m.zero_params().weights().size(), 9u);
  EXPECT_THROW(ReluModel(make_lattice_grid(4)), InvalidArgument);
}

TEST(ReluModel, ForwardAffineOnly) {
  const ReluModel m(make_unit_grid(4));
  const auto c3 = m.forward(ParamVector::with_affine(4, {0, 0, 0}, 3.0, 0.0));
  for (std::size_t i = 0; i < c3.size(); ++i) EXPECT_EQ(c3[i], 3.0);
  const auto id = m.forward(ParamVector::with_affine(4, {0, 0, 0}, 0.0, 1.0));
  for (std::size_t i = 0; i < id.size(); ++i) EXPECT_EQ(id[i], m.grid().node(i));
}

TEST(ReluModel, ForwardSingleWeight) {
  // (1/4) * 16 * relu(t - 0.5) at t = 0, .25, .5, .75, 1
  const ReluModel m(make_unit_grid(4));
  const auto g = m.forward(ParamVector::with_affine(4, {0.0, 16.0, 0.0}, 0.0, 0.0));
  const std::vector<double> expected{0.0, 0.0, 0.0, 1.0, 2.0};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(g[i], expected[i]);
}

TEST(ReluModel, ForwardRejectsMismatch) {
  const ReluModel m(make_unit_grid(4));
  EXPECT_THROW(m.forward(ParamVector::with_affine(4, {0.0, 1.0}, 0.0, 0.0)), InvalidArgument);
  EXPECT_THROW(m.forward(ParamVector::weights_only(4, {0, 0, 0, 0, 0})), InvalidArgument);
  EXPECT_THROW(m.adjoint(LatticeFunction::zeros(make_unit_grid(5))), InvalidArgument);
}

TEST(ReluModel, AdjointExamples) {
  const ReluModel m(make_unit_grid(4));
  const auto z = m.adjoint(LatticeFunction::zeros(m.grid()));
  for (double v : z.coords()) EXPECT_EQ(v, 0.0);

  const auto p = m.adjoint(LatticeFunction(m.grid(), {1, 1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(p.bias(), 1.25);
  EXPECT_DOUBLE_EQ(p.slope(), 0.625);
  // (1/4) sum_l relu(t_l - t_j): (0.25+0.5+0.75)/4, (0.25+0.5)/4, 0.25/4
  EXPECT_DOUBLE_EQ(p.weights()[0], 0.375);
  EXPECT_DOUBLE_EQ(p.weights()[1], 0.1875);
  EXPECT_DOUBLE_EQ(p.weights()[2], 0.0625);
}

TEST(ReluModel, Adjointness) {
  Xoshiro256 rng(17);
  for (int n : {4, 16, 64}) {
    const ReluModel m(make_unit_grid(n));
    for (int trial = 0; trial < 1000; ++trial) {
      const ParamVector phi = random_params(m, rng);
      const LatticeFunction g(m.grid(), rng.uniform_vector(m.grid().size()));
      const double lhs = inner_product_X(m.forward(phi), g);
      const double rhs = inner_product_W(phi, m.adjoint(g));
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * (norm_W(phi) * norm_X(g) + 1.0));
    }
  }
}

TEST(DiscreteLaplacian, ReluSpike) {
  const int n = 8;
  const Grid g = make_unit_grid(n);
  for (int j0 = 1; j0 < n; ++j0) {
    const double t0 = g.node(j0);
    const auto f = LatticeFunction::sample(g, [&](double x) { return relu(x - t0); });
    const auto lap = discrete_laplacian(f);
    for (int j = 1; j < n; ++j) EXPECT_NEAR(lap[j - 1], j == j0 ? n : 0.0, 1e-12) << j0 << " " << j;
  }
}

TEST(DiscreteLaplacian, QuadraticAndLinear) {
  const Grid g = make_unit_grid(16);
  const auto sq = LatticeFunction::sample(g, [](double x) { return x * x; });
  for (double v : discrete_laplacian(sq)) EXPECT_NEAR(v, 2.0, 1e-11);
  const auto lin = LatticeFunction::sample(g, [](double x) { return 3.0 - 2.0 * x; });
  for (double v : discrete_laplacian(lin)) EXPECT_NEAR(v, 0.0, 1e-11);
}

TEST(ExactParams, Examples) {
  const ReluModel m4(make_unit_grid(4));
  const auto p = m4.exact_params(LatticeFunction(m4.grid(), {2.5, 2.5, 2.5, 2.5, 2.5}));
  for (double w : p.weights()) EXPECT_EQ(w, 0.0);
  EXPECT_EQ(p.bias(), 2.5);
  EXPECT_EQ(p.slope(), 0.0);

  const ReluModel m8(make_unit_grid(8));
  const auto q = m8.exact_params(LatticeFunction::sample(m8.grid(), [](double x) { return x * x; }));
  for (double w : q.weights()) EXPECT_NEAR(w, 2.0, 1e-12);
  EXPECT_EQ(q.bias(), 0.0);
  EXPECT_DOUBLE_EQ(q.slope(), 0.125);
}

TEST(ExactParams, RoundTrip) {
  Xoshiro256 rng(99);
  for (int n : {2, 4, 16, 64, 128, 256}) {
    const ReluModel m(make_unit_grid(n));
    for (int trial = 0; trial < 20; ++trial) {
      const LatticeFunction f(m.grid(), rng.uniform_vector(m.grid().size()));
      EXPECT_LE(max_abs_diff(m.forward(m.exact_params(f)), f), 1e-11) << "N=" << n;
    }
  }
}

TEST(ExactParams, LaplacianRecoversWeights) {
  Xoshiro256 rng(7);
  for (int n : {4, 32, 200}) {
    const ReluModel m(make_unit_grid(n));
    const ParamVector phi = random_params(m, rng, 5.0);
    const auto f = m.forward(phi);
    double sup = 0.0;
    for (double v : f.values()) sup = std::max(sup, std::abs(v));
    // the second difference amplifies rounding in f by about 4 N^2
    const double tol = 1e-14 * n * n * (sup + 1.0);
    const auto lap = discrete_laplacian(f);
    for (std::size_t j = 0; j < lap.size(); ++j) EXPECT_NEAR(lap[j], phi.weights()[j], tol);
  }
}

TEST(ReluModel, Injective) {
  for (int n : {4, 16, 64}) {
    const ReluModel m(make_unit_grid(n));
    JacobiOptions opt;
    opt.compute_vectors = false;
    EXPECT_GT(eigh(assemble_TstarT(m), opt).min_value(), 0.0) << "N=" << n;
    EXPECT_GT(eigh(assemble_TTstar(m), opt).min_value(), 0.0) << "N=" << n;
  }
}

TEST(MseLoss, Examples) {
  const Grid g = make_unit_grid(4);
  const LatticeFunction f(g, {0, 1, 0, 0, 0});
  const LatticeFunction z = LatticeFunction::zeros(g);
  EXPECT_EQ(mse_loss(f, f), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(LatticeFunction(g, {2, 2, 2, 2, 2}), LatticeFunction(g, {1, 1, 1, 1, 1})), 1.25);
  EXPECT_DOUBLE_EQ(mse_loss(f, z), 0.25);
  EXPECT_THROW(mse_loss(f, LatticeFunction::zeros(make_unit_grid(5))), InvalidArgument);
}

TEST(ReluModel, QuadratureVariantSharesOperator) {
  Xoshiro256 rng(3);
  const ReluModel d(make_unit_grid(12), ReluVariant::Discrete);
  const ReluModel q(make_unit_grid(12), ReluVariant::ContinuousQuadrature);
  const ParamVector phi = random_params(d, rng);
  EXPECT_EQ(max_abs_diff(d.forward(phi), q.forward(phi)), 0.0);
}

// Direct O(N^2) evaluation of the defining sums, independent of the
// cumulative-sum recursions used by the model.
TEST(ReluModel, MatchesDirectSums) {
  Xoshiro256 rng(314);
  for (int n : {2, 3, 9, 50}) {
    const ReluModel m(make_unit_grid(n));
    const Grid& g = m.grid();
    const ParamVector phi = random_params(m, rng);
    const LatticeFunction fw = m.forward(phi);
    for (int l = 0; l <= n; ++l) {
      double s = 0.0;
      for (int j = 1; j <= n - 1; ++j) s += phi.weights()[j - 1] * relu(g.node(l) - g.node(j));
      EXPECT_NEAR(fw[l], s / n + phi.bias() + phi.slope() * g.node(l), 1e-13);
    }
    const LatticeFunction h(g, rng.uniform_vector(g.size()));
    const ParamVector adj = m.adjoint(h);
    for (int j = 1; j <= n - 1; ++j) {
      double s = 0.0;
      for (int l = 0; l <= n; ++l) s += relu(g.node(l) - g.node(j)) * h[l];
      EXPECT_NEAR(adj.weights()[j - 1], s / n, 1e-13);
    }
  }
}
