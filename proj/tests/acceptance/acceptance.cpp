// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fixbias/fixbias.hpp"
#include "fixbias/report/commands.hpp"

using namespace fixbias;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

LatticeFunction sine(const Grid& g) {
  return LatticeFunction::sample(g, [](double x) { return std::sin(2.0 * std::numbers::pi * x); });
}

ParamVector random_params(const ReluModel& m, Xoshiro256& rng) {
  return ParamVector::with_affine(m.n_intervals(), rng.uniform_vector(m.param_dim() - 2), rng.uniform(-1, 1),
                                  rng.uniform(-1, 1));
}

double max_abs_diff(const LatticeFunction& a, const LatticeFunction& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

Outcome exact_representation() {
  Xoshiro256 rng(1);
  double worst = 0.0;
  for (int n : {4, 16, 64, 256}) {
    const ReluModel m(make_unit_grid(n));
    for (int trial = 0; trial < 100; ++trial) {
      const LatticeFunction f(m.grid(), rng.uniform_vector(m.grid().size()));
      worst = std::max(worst, max_abs_diff(apply_T(m, exact_params(m, f)), f));
    }
  }
  return {worst <= 1e-11, fmt("max node error %.3g over 400 targets", worst)};
}

Outcome gd_matches_closed_form() {
  const ReluModel m(make_unit_grid(16));
  const auto eig = eigh(assemble_TTstar(m));
  const double eps = 0.9 * 0.5 / eig.max_value();
  Xoshiro256 rng(2);
  double worst = 0.0;
  const std::vector<std::pair<LatticeFunction, ParamVector>> cases = {
      {sine(m.grid()), m.zero_params()},
      {LatticeFunction(m.grid(), rng.uniform_vector(m.grid().size())), random_params(m, rng)}};
  for (const auto& [f, phi0] : cases) {
    GdConfig cfg;
    cfg.learning_rate = eps;
    cfg.max_iters = 200;
    const auto t = train(m, f, phi0, cfg);
    const auto trained = f - m.forward(t.final_params);
    const auto predicted = closed_form_error(eig, f - m.forward(phi0), eps, 200);
    worst = std::max(worst, max_abs_diff(trained, predicted));
  }
  return {worst <= 1e-8, fmt("max node difference at n=200: %.3g", worst)};
}

Outcome monotone_geometric() {
  const ReluModel m(make_unit_grid(32));
  const auto eig = eigh(assemble_TTstar(m));
  const double eps = 0.9 * 0.5 / eig.max_value();
  const double alpha = eig.min_value();
  GdConfig cfg;
  cfg.learning_rate = eps;
  cfg.max_iters = 1000;
  cfg.stability_bound = 0.5 / eig.max_value();
  const auto t = train(m, sine(m.grid()), m.zero_params(), cfg);
  const double l0 = t.records[0].loss;
  bool monotone = true;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& r = t.records[i];
    if (i > 0 && r.loss > t.records[i - 1].loss) monotone = false;
    worst_ratio = std::max(worst_ratio, r.loss / (l0 * std::pow(1.0 - 2.0 * eps * alpha, 2.0 * r.n)));
  }
  const bool ok = monotone && t.records.size() == 1001 && worst_ratio <= 1.0 + 1e-6;
  return {ok, fmt("monotone=%s steps=%zu max loss/bound=%.6g", monotone ? "yes" : "no", t.records.size() - 1,
                  worst_ratio)};
}

Outcome eigen_decay() {
  const ReluModel m(make_unit_grid(256));
  JacobiOptions opt;
  opt.compute_vectors = false;
  const auto fit = eig_decay_fit(eigh(assemble_TTstar(m), opt), 8, 64);
  return {std::abs(fit.exponent + 4.0) <= 0.2, fmt("exponent %.4f over j in [8, 64]", fit.exponent)};
}

Outcome half_life_law() {
  const ReluModel m(make_unit_grid(128));
  JacobiOptions opt;
  opt.compute_vectors = false;
  const auto eig = eigh(assemble_TTstar(m), opt);
  const double eps = 0.9 * 0.5 / eig.max_value();
  const auto fit = half_life_fit(mode_half_lives(eig.values, eps), 4, 32);
  return {std::abs(fit.slope - 4.0) <= 0.5, fmt("slope %.4f over j in [4, 32]", fit.slope)};
}

// The bound itself is a theorem and must always hold. The fitted slope over a
// fixed window is not implied by it: a discrete spectrum makes the local slope
// depend on where the seed puts its energy, so it is reported per seed.
Outcome rate_law() {
  const ReluModel m(make_unit_grid(32));
  const double bound = stability_bound(m);
  const double eps = 0.9 * bound;
  std::string detail;
  bool all_slopes = true;
  bool all_bounds = true;
  for (int k : {1, 2}) {
    int passed = 0;
    std::vector<double> slopes;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Xoshiro256 rng(seed);
      const ParamVector s = report::detail::seed_params(m, rng, 1.0);
      const SmoothTarget st = smooth_target(m, s, k);
      GdConfig cfg;
      cfg.learning_rate = eps;
      cfg.max_iters = 10000;
      cfg.stability_bound = bound;
      const auto t = train(m, st.f, m.zero_params(), cfg, st.params);
      for (const auto& r : t.records) {
        if (r.n < 1) continue;
        const double b = std::exp(-k) * std::pow(k / (2.0 * eps * static_cast<double>(r.n)), k) * norm_W(s);
        if (*r.param_error > b * (1.0 + 1e-12)) all_bounds = false;
      }
      const double slope = rate_fit(t, 100, 10000, RateAxes::LogLog).slope;
      slopes.push_back(slope);
      if (slope <= -k + 0.15) ++passed;
    }
    std::sort(slopes.begin(), slopes.end());
    all_slopes = all_slopes && passed == 10;
    detail += fmt("k=%d: %d/10 seeds meet slope <= %.2f (slopes %.3f..%.3f, median %.3f); ", k, passed, -k + 0.15,
                  slopes.front(), slopes.back(), 0.5 * (slopes[4] + slopes[5]));
  }
  detail += fmt("error bound held for every seed and n: %s", all_bounds ? "yes" : "no");
  return {all_slopes && all_bounds, detail};
}

Outcome bvp() {
  std::array<double, 4> prev{};
  std::string detail;
  bool ok = true;
  for (int n : {128, 256}) {
    const ReluModel m(make_unit_grid(n));
    const auto f = sine(m.grid());
    const auto w = LatticeFunction(m.grid(), assemble_TTstar(m).multiply(f.values()));
    const auto r = bvp_residual(f, w);
    double sup = 0.0;
    for (double v : f.values()) sup = std::max(sup, std::abs(v));
    ok = ok && r.interior_max <= 0.05 * sup;
    double bc_max = 0.0;
    for (int i = 0; i < 4; ++i) {
      ok = ok && std::abs(r.bc[i]) <= 0.05;
      if (n == 256) ok = ok && std::abs(r.bc[i]) < std::abs(prev[i]);
      bc_max = std::max(bc_max, std::abs(r.bc[i]));
    }
    prev = r.bc;
    detail += fmt("N=%d interior %.3g max bc %.3g; ", n, r.interior_max, bc_max);
  }
  detail += "bc residuals shrink on doubling";
  return {ok, detail};
}

Outcome kernel_identity() {
  Xoshiro256 rng(8);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(0.0, 1.0);
    const double y = rng.uniform(0.0, 1.0);
    worst = std::max(worst, std::abs(kernel_K(x, y) - kernel_K_quadrature(x, y, 1'000'000)));
  }
  return {worst <= 1e-6, fmt("max |K - quadrature| = %.3g at 100 points", worst)};
}

Outcome fundamental_solution() {
  const int n = 32;
  const FrexLatticeModel m(make_lattice_grid(n, 8 * n));
  const auto f = LatticeFunction::sample(m.grid(), [](double x) { return frex(x); });
  const auto h = h0_apply(m, f);
  const std::size_t centre = m.grid().size() / 2;
  const double tol = std::exp(-(m.grid().half_width() - 3.0) / n) * n;
  double off = 0.0;
  for (std::size_t i = 1; i + 1 < f.size(); ++i)
    if (i != centre) off = std::max(off, std::abs(h.values[i]));
  const double centre_err = std::abs(h.values[centre] - n);
  return {centre_err <= 1e-10 && off <= tol,
          fmt("origin %.15g (target %d), max off-origin %.3g <= %.3g", h.values[centre], n, off, tol)};
}

Outcome multiplier_dynamics() {
  const int n = 32;
  const FrexLatticeModel m(make_lattice_grid(n), LatticeBoundary::Periodic);
  const double eps = default_lattice_learning_rate(n);
  const double p = static_cast<double>(m.grid().size());
  double worst = 0.0;
  for (long k : {1L, 10L, 100L}) {
    const double xi = static_cast<double>(k) * n / p;
    const auto f = LatticeFunction::sample(m.grid(), [xi](double z) { return std::cos(2.0 * std::numbers::pi * xi * z); });
    for (long steps = 1; steps <= 100; ++steps) {
      worst = std::max(worst, multiplier_check(m, m.zero_params(), f, eps, steps).max_mode_error);
    }
  }
  std::vector<double> xi;
  for (double x : window_frequencies(m.grid()))
    if (x >= 0.25 && x <= 4.0) xi.push_back(x);
  const double slope = front_fit(xi, frequency_half_lives(m, eps, xi)).slope;
  return {worst <= 1e-6 && std::abs(slope - 2.0) <= 0.2,
          fmt("max relative mode mismatch %.3g over n<=100; front slope %.4f", worst, slope)};
}

Outcome invariants() {
  Xoshiro256 rng(11);
  double adj = 0.0;
  for (int n : {4, 16, 64}) {
    const ReluModel m(make_unit_grid(n));
    for (int trial = 0; trial < 1000; ++trial) {
      const ParamVector phi = random_params(m, rng);
      const LatticeFunction g(m.grid(), rng.uniform_vector(m.grid().size()));
      const double lhs = inner_product_X(m.forward(phi), g);
      const double rhs = inner_product_W(phi, m.adjoint(g));
      adj = std::max(adj, std::abs(lhs - rhs) / (norm_W(phi) * norm_X(g) + 1.0));
    }
  }
  const FrexLatticeModel fm(make_lattice_grid(8), LatticeBoundary::Truncated);
  for (int trial = 0; trial < 1000; ++trial) {
    const ParamVector phi = fm.params(rng.uniform_vector(fm.grid().size()));
    const LatticeFunction g(fm.grid(), rng.uniform_vector(fm.grid().size()));
    const double lhs = inner_product_X(fm.forward(phi), g);
    const double rhs = inner_product_W(phi, fm.adjoint(g));
    adj = std::max(adj, std::abs(lhs - rhs) / (norm_W(phi) * norm_X(g) + 1.0));
  }
  double resid = 0.0;
  double ortho = 0.0;
  for (std::size_t dim : {2u, 16u, 64u, 128u, 256u, 512u}) {
    DenseMatrix a(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    const SymmetricMatrix s(a);
    const auto eig = eigh(s);
    const double scale = std::max(std::abs(eig.values.front()), std::abs(eig.values.back())) + 1.0;
    resid = std::max(resid, max_eigen_residual(s, eig) / scale);
    ortho = std::max(ortho, max_orthonormality_error(eig));
  }
  return {adj <= 1e-12 && resid <= 1e-10 && ortho <= 1e-10,
          fmt("adjointness %.3g (4000 pairs), eigen residual %.3g, orthonormality %.3g (dim <= 512)", adj, resid,
              ortho)};
}

// Every n up to 10^4 is covered by carrying (1 - 2 eps lambda)^n forward in n;
// the library ratio is cross-checked against it on log-spaced n.
Outcome smoothness_inequality() {
  const double eps = 0.25;
  const long n_max = 10000;
  const int points = 10000;
  double worst = 0.0;
  double drift = 0.0;
  for (int k : {1, 2, 3}) {
    std::vector<double> lambda(points);
    std::vector<double> base(points);
    std::vector<double> lhs(points);
    for (int i = 0; i < points; ++i) {
      lambda[i] = (0.5 / eps) * (i + 1) / points;
      base[i] = 1.0 - 2.0 * eps * lambda[i];
      lhs[i] = std::pow(lambda[i], k);
    }
    for (long n = 1; n <= n_max; ++n) {
      double peak = 0.0;
      for (int i = 0; i < points; ++i) {
        lhs[i] *= base[i];
        peak = std::max(peak, lhs[i]);
      }
      const double rhs = std::exp(-static_cast<double>(k)) * std::pow(k / (2.0 * eps * static_cast<double>(n)), k);
      worst = std::max(worst, peak / rhs);
      if (n == 1 || n == 10 || n == 100 || n == 1000 || n == n_max) {
        for (int i = 0; i < points; ++i) {
          const double lib = smoothness_estimate_ratio(lambda[i], eps, n, k);
          drift = std::max(drift, std::abs(lib - lhs[i] / rhs) / std::max(lib, 1e-300));
        }
      }
    }
  }
  return {worst <= 1.0 + 1e-12 && drift <= 1e-9,
          fmt("max lhs/rhs = %.15g over 10^4 lambdas, every n <= 10^4, k in {1,2,3}; library agreement %.3g", worst,
              drift)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact representation", 5, exact_representation},
      {2, "gradient descent matches closed form", 10, gd_matches_closed_form},
      {3, "monotone descent and geometric bound", 10, monotone_geometric},
      {4, "eigenvalue decay exponent", 60, eigen_decay},
      {5, "spectral-bias half-life law", 30, half_life_law},
      {6, "rate law for smooth targets", 120, rate_law},
      {7, "boundary value problem residuals", 60, bvp},
      {8, "kernel identity", 10, kernel_identity},
      {9, "FReX fundamental solution", 5, fundamental_solution},
      {10, "FReX multiplier dynamics", 60, multiplier_dynamics},
      {11, "adjointness and eigensolver invariants", 60, invariants},
      {12, "smoothness scalar inequality", 10, smoothness_inequality},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.2f s of %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
