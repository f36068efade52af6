#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fixbias/fixbias.hpp"
#include "fixbias/report/config.hpp"
#include "fixbias/report/csv.hpp"
#include "fixbias/report/svg.hpp"

namespace fixbias::report {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitMaxIters = 2, kExitDiverged = 3 };

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["N"] = c.n;
  if (!is_relu(c.model)) {
    j["M"] = c.m ? *c.m : 8 * c.n;
    if (c.model == ModelKind::FrexLattice) {
      j["boundary"] = c.boundary == LatticeBoundary::Periodic ? "periodic" : "truncated";
    }
  }
  j["target"] = c.target.text;
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json("default");
  j["max_iters"] = c.max_iters;
  j["tolerance"] = c.tolerance;
  j["record_every"] = c.effective_record_every();
  j["seed"] = c.seed;
  j["init"] = c.init == InitKind::Zero ? "zero" : "target";
  j["allow_unstable"] = c.allow_unstable;
  return j;
}

/// Collects outputs of one command; only files actually written are listed.
class Session {
 public:
  Session(std::string command, const ExperimentConfig& cfg, fs::path out_dir, std::ostream& log)
      : out_(std::move(out_dir)), log_(log) {
    report_["command"] = std::move(command);
    report_["config"] = config_to_json(cfg);
    report_["metrics"] = json::object();
    report_["pass_flags"] = json::object();
    report_["versions"] = {{"fixbias", kVersion},
                           {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                 std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                 std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    report_["files"] = json::array();
    report_["notices"] = json::array();
  }

  json& metrics() { return report_["metrics"]; }
  json& config() { return report_["config"]; }

  void flag(const std::string& name, bool pass) {
    report_["pass_flags"][name] = pass;
    log_ << "  " << (pass ? "pass" : "FAIL") << "  " << name << "\n";
  }

  void metric(const std::string& name, json value) {
    log_ << "  " << name << " = " << value.dump() << "\n";
    report_["metrics"][name] = std::move(value);
  }

  void notice(const std::string& text) {
    log_ << "  note: " << text << "\n";
    report_["notices"].push_back(text);
  }

  void write_csv(const std::string& name, const CsvTable& table) {
    table.write(out_ / name);
    report_["files"].push_back(name);
  }

  void write_json(const std::string& name, const json& j) {
    write_atomic(out_ / name, j.dump(2) + "\n");
    report_["files"].push_back(name);
  }

  /// Writes report.json and returns the full report.
  const json& finish(int exit_code) {
    report_["exit_code"] = exit_code;
    report_["files"].push_back("report.json");
    write_atomic(out_ / "report.json", report_.dump(2) + "\n");
    return report_;
  }

 private:
  json report_;
  fs::path out_;
  std::ostream& log_;
};

// ---------------------------------------------------------------------------
// Models and targets

using AnyModel = std::variant<ReluModel, FrexLatticeModel, FrexFourierModel>;

inline AnyModel make_model(const ExperimentConfig& c) {
  switch (c.model) {
    case ModelKind::ReluDiscrete: return ReluModel(make_unit_grid(c.n), ReluVariant::Discrete);
    case ModelKind::ReluQuadrature: return ReluModel(make_unit_grid(c.n), ReluVariant::ContinuousQuadrature);
    case ModelKind::FrexLattice: return FrexLatticeModel(make_lattice_grid(c.n, c.m.value_or(0)), c.boundary);
    case ModelKind::FrexFourier: return FrexFourierModel(make_lattice_grid(c.n, c.m.value_or(0)));
  }
  throw ConfigError("unknown model");
}

struct Target {
  LatticeFunction f;
  /// Parameters representing f exactly, when known.
  std::optional<ParamVector> params;
};

namespace detail {

inline std::vector<double> single_column(const CsvTable& t, const std::string& preferred, std::size_t expected,
                                         const std::string& path) {
  std::vector<std::optional<double>> col;
  if (t.column_index(preferred)) col = t.column(preferred);
  else if (t.header().size() == 1) col = t.column(t.header()[0]);
  else throw ConfigError(path + ": expected a column named '" + preferred + "'");
  if (col.size() != expected) {
    throw ConfigError(path + ": expected " + std::to_string(expected) + " values, found " + std::to_string(col.size()));
  }
  std::vector<double> out;
  for (const auto& v : col) {
    if (!v) throw ConfigError(path + ": missing value");
    out.push_back(*v);
  }
  return out;
}

inline ParamVector seed_params(const ReluModel& m, Xoshiro256& rng, double scale) {
  auto w = rng.uniform_vector(m.param_dim() - 2);
  const double b = rng.uniform(-1.0, 1.0);
  const double c = rng.uniform(-1.0, 1.0);
  for (double& v : w) v *= scale;
  return ParamVector::with_affine(m.n_intervals(), std::move(w), scale * b, scale * c);
}

template <class M>
ParamVector seed_params(const M& m, Xoshiro256& rng, double scale) {
  auto f = lattice_bumps(m.grid(), 3, rng);
  std::vector<double> w(f.values().begin(), f.values().end());
  for (double& v : w) v *= scale;
  return m.params(std::move(w));
}

inline ParamVector params_from_coords(const ReluModel& m, const std::vector<double>& x) {
  return m.zero_params().with_coords(x);
}

template <class M>
ParamVector params_from_coords(const M& m, const std::vector<double>& x) {
  return m.params(x);
}

}  // namespace detail

template <class M>
Target build_target(const M& model, const ExperimentConfig& c) {
  constexpr bool relu = std::is_same_v<M, ReluModel>;
  const Grid& g = model.grid();
  const TargetSpec& t = c.target;
  Xoshiro256 rng(c.seed);
  switch (t.kind) {
    case TargetKind::Sine: {
      const double k = t.frequency;
      if constexpr (relu) {
        return {LatticeFunction::sample(g, [k](double x) { return std::sin(2.0 * std::numbers::pi * k * x); }), {}};
      } else {
        return {LatticeFunction::sample(
                    g, [k](double x) { return std::sin(2.0 * std::numbers::pi * k * x) * std::exp(-0.5 * x * x); }),
                {}};
      }
    }
    case TargetKind::Poly: {
      if constexpr (!relu) throw ConfigError("poly targets need the unit interval (ReLU models)");
      const auto coeffs = t.coeffs;
      return {LatticeFunction::sample(g,
                                      [&coeffs](double x) {
                                        double s = 0.0;
                                        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * x + *it;
                                        return s;
                                      }),
              {}};
    }
    case TargetKind::Smooth: {
      const auto st = smooth_target(model, detail::seed_params(model, rng, 1.0), t.order);
      return {st.f, st.params};
    }
    case TargetKind::Bumps: {
      if constexpr (relu) throw ConfigError("bumps targets need a lattice model");
      return {lattice_bumps(g, t.count, rng), {}};
    }
    case TargetKind::Csv: {
      const auto v = detail::single_column(read_csv(t.path), "f", g.size(), t.path);
      return {LatticeFunction(g, v), {}};
    }
    case TargetKind::Params: {
      const auto v = detail::single_column(read_csv(t.path), "value", model.param_dim(), t.path);
      const ParamVector phi = detail::params_from_coords(model, v);
      return {model.forward(phi), phi};
    }
  }
  throw ConfigError("unknown target");
}

/// Parameters of f when the model can represent it exactly.
template <class M>
std::optional<ParamVector> exact_target_params(const M& model, const Target& t) {
  if (t.params) return t.params;
  if constexpr (std::is_same_v<M, ReluModel>) {
    if (model.variant() == ReluVariant::ContinuousQuadrature) return std::nullopt;
  }
  return model.exact_params(t.f);
}

inline double model_stability_bound(const ReluModel& m) { return stability_bound(m); }
template <SymbolModel M>
double model_stability_bound(const M& m) {
  return symbol_stability_bound(m);
}

inline double default_epsilon(const ReluModel&, double bound) { return 0.9 * bound; }
inline double default_epsilon(const FrexLatticeModel& m, double) {
  return default_lattice_learning_rate(m.n_intervals());
}
inline double default_epsilon(const FrexFourierModel&, double bound) { return 0.9 * bound; }

template <class M>
double resolve_epsilon(const M& model, const ExperimentConfig& c, double bound, Session& s) {
  const double eps = c.epsilon ? *c.epsilon : default_epsilon(model, bound);
  s.metric("epsilon", eps);
  s.metric("stability_bound", bound);
  if (eps >= bound && !c.allow_unstable) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "epsilon %.6g is not below the stability bound %.6g", eps, bound);
    throw ConfigError(msg);
  }
  return eps;
}

// ---------------------------------------------------------------------------
// train

template <class M>
int train_impl(const M& model, const ExperimentConfig& c, Session& s) {
  const Target target = build_target(model, c);
  const auto phi_star = exact_target_params(model, target);
  const double bound = model_stability_bound(model);
  const double eps = resolve_epsilon(model, c, bound, s);

  ParamVector phi0 = model.zero_params();
  if (c.init == InitKind::Target) {
    if (!phi_star) throw ConfigError("init = target needs a target with known parameters");
    phi0 = *phi_star;
  }
  if (!phi_star) s.notice("parameter error not recorded: the target has no exact parameter representation");

  GdConfig g;
  g.learning_rate = eps;
  g.max_iters = c.max_iters;
  g.loss_tolerance = c.tolerance;
  g.record_every = c.effective_record_every();
  g.enforce_stability = !c.allow_unstable;
  g.stability_bound = bound;

  std::optional<Trajectory> run;
  try {
    run = train(model, target.f, phi0, g, phi_star);
  } catch (const Divergence& e) {
    s.notice(std::string("diverged: ") + e.what());
    s.flag("converged", false);
    return kExitDiverged;
  }
  const Trajectory& t = *run;

  CsvTable table({"n", "loss", "param_error"});
  for (const auto& r : t.records) {
    table.add_row({static_cast<double>(r.n), r.loss, r.param_error});
  }
  s.write_csv("trajectory.csv", table);
  s.metric("iterations", t.iterations);
  s.metric("final_loss", t.final_loss());
  if (t.records.back().param_error) s.metric("final_param_error", *t.records.back().param_error);
  s.flag("converged", t.converged());
  return t.converged() ? kExitOk : kExitMaxIters;
}

inline int cmd_train(const ExperimentConfig& c, Session& s) {
  return std::visit([&](const auto& m) { return train_impl(m, c, s); }, make_model(c));
}

// ---------------------------------------------------------------------------
// spectrum

inline int cmd_spectrum(const ExperimentConfig& c, Session& s) {
  if (!is_relu(c.model)) throw ConfigError("spectrum needs a ReLU model");
  const ReluModel model = std::get<ReluModel>(make_model(c));
  const SymmetricMatrix a = assemble_TTstar(model);
  const EigenDecomposition eig = eigh(a);

  CsvTable table({"j", "lambda", "residual"});
  double worst = 0.0;
  for (std::size_t j = 0; j < eig.size(); ++j) {
    const auto u = eig.vector(j);
    const auto au = a.multiply(u);
    double r = 0.0;
    for (std::size_t i = 0; i < au.size(); ++i) r += (au[i] - eig.values[j] * u[i]) * (au[i] - eig.values[j] * u[i]);
    r = std::sqrt(r);
    worst = std::max(worst, r);
    table.add_row({static_cast<double>(j), eig.values[j], r});
  }
  s.write_csv("eigenvalues.csv", table);
  s.metric("lambda_max", eig.max_value());
  s.metric("lambda_min", eig.min_value());
  s.metric("max_eigen_residual", worst);
  s.metric("orthonormality_error", max_orthonormality_error(eig));
  s.flag("eigen_residual", worst <= 1e-10);
  s.flag("positive_spectrum", eig.min_value() > 0.0);

  const std::size_t last = eig.size() - 1;
  const std::size_t j_lo = c.j_lo.value_or(8);
  const std::size_t j_hi = std::min(c.j_hi.value_or(std::max<std::size_t>(c.n / 4, j_lo + 7)), last);
  if (j_lo >= 1 && j_hi >= j_lo + 7) {
    const DecayFit fit = eig_decay_fit(eig, j_lo, j_hi);
    s.write_json("decay_fit.json", {{"exponent", fit.exponent},
                                    {"constant", fit.constant},
                                    {"j_range", {fit.j_lo, fit.j_hi}}});
    s.metric("decay_exponent", fit.exponent);
    s.metric("decay_constant", fit.constant);
    s.flag("decay_exponent_near_minus_4", std::abs(fit.exponent + 4.0) <= 0.2);
  } else {
    s.notice("decay fit skipped: the index window needs at least 8 eigenvalues");
  }

  // head of the spectrum at twice the resolution
  if (2 * c.n <= 512) {
    JacobiOptions opt;
    opt.compute_vectors = false;
    const auto fine = eigh(assemble_TTstar(ReluModel(make_unit_grid(2 * c.n), model.variant())), opt);
    double rel = 0.0;
    const std::size_t head = std::min<std::size_t>(2, eig.size());
    for (std::size_t j = 0; j < head; ++j) rel = std::max(rel, std::abs(eig.values[j] - fine.values[j]) / fine.values[j]);
    s.metric("head_relative_difference_vs_2N", rel);
    s.flag("head_grid_independent", rel <= 0.05);
  }

  if (c.n < 8) {
    s.notice("BVP residuals skipped: N must be at least 8");
    return kExitOk;
  }
  ExperimentConfig bc = c;
  if (bc.target.kind != TargetKind::Sine && bc.target.kind != TargetKind::Poly) {
    s.notice("BVP residuals use sine:1 (the configured target is not a closed-form function)");
    bc.target = detail::parse_target("sine:1");
  }
  CsvTable bvp({"N", "interior_max", "f_sup", "bc_w3_plus_w_at_0", "bc_w2_minus_w1_at_0", "bc_w2_at_1",
                "bc_w3_at_1"});
  std::vector<BvpResidual> res;
  for (int n : {c.n, 2 * c.n}) {
    const ReluModel m(make_unit_grid(n), model.variant());
    const auto f = build_target(m, bc).f;
    const LatticeFunction w = m.forward(m.adjoint(f));
    const auto r = bvp_residual(f, w);
    double sup = 0.0;
    for (double v : f.values()) sup = std::max(sup, std::abs(v));
    bvp.add_row({static_cast<double>(n), r.interior_max, sup, r.bc[0], r.bc[1], r.bc[2], r.bc[3]});
    if (res.empty()) {
      bool ok = r.interior_max <= 0.05 * sup;
      for (double b : r.bc) ok = ok && std::abs(b) <= 0.05;
      s.flag("bvp_residuals_within_0.05", ok);
    }
    res.push_back(r);
  }
  s.write_csv("bvp_residuals.csv", bvp);
  bool shrink = true;
  for (int i = 0; i < 4; ++i) shrink = shrink && std::abs(res[1].bc[i]) <= std::abs(res[0].bc[i]);
  s.flag("bvp_bc_residuals_shrink", shrink);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bias

inline std::vector<long> decade_steps(long max_n) {
  std::vector<long> ns{0};
  for (long p = 1;; p *= 10) {
    for (long m : {1L, 2L, 5L})
      if (m * p <= max_n) ns.push_back(m * p);
    if (p > max_n / 10) break;
  }
  return ns;
}

inline int bias_relu(const ReluModel& model, const ExperimentConfig& c, Session& s) {
  const EigenDecomposition eig = eigh(assemble_TTstar(model));
  const double bound = 0.5 / eig.max_value();
  const double eps = resolve_epsilon(model, c, bound, s);
  if (eps >= bound) throw ConfigError("bias needs a stable learning rate");

  std::vector<double> e0;
  if (c.single_mode) {
    if (*c.single_mode < 0 || static_cast<std::size_t>(*c.single_mode) >= eig.size()) {
      throw ConfigError("single_mode must index an eigenvector (0.." + std::to_string(eig.size() - 1) + ")");
    }
    const auto u = eig.vector(static_cast<std::size_t>(*c.single_mode));
    e0.assign(u.begin(), u.end());
  } else {
    const auto f = build_target(model, c).f;
    e0.assign(f.values().begin(), f.values().end());
  }
  const auto ns = decade_steps(std::max(1L, c.max_iters));
  const DenseMatrix curve = mode_error_curve(eig, e0, eps, ns);
  double peak = 0.0;
  for (std::size_t j = 0; j < eig.size(); ++j) peak = std::max(peak, curve(j, 0));

  CsvTable table({"j", "lambda", "n", "error", "relative_error"});
  std::size_t active = 0;
  for (std::size_t j = 0; j < eig.size(); ++j) {
    const bool zero = curve(j, 0) <= 1e-12 * peak;
    if (!zero) ++active;
    for (std::size_t col = 0; col < ns.size(); ++col) {
      const double err = zero ? 0.0 : curve(j, col);
      std::optional<double> rel;
      if (!zero) rel = curve(j, col) / curve(j, 0);
      table.add_row({static_cast<double>(j), eig.values[j], static_cast<double>(ns[col]), err, rel});
    }
  }
  s.write_csv("mode_decay.csv", table);
  s.metric("active_modes", active);

  const auto hl = mode_half_lives(eig.values, eps);
  const std::size_t last = eig.size() - 1;
  const std::size_t j_lo = std::min(c.j_lo.value_or(4), last);
  const std::size_t j_hi = std::min(c.j_hi.value_or(32), last);
  if (j_hi < j_lo + 2) {
    s.notice("half-life fit skipped: index window too small for this N");
    return kExitOk;
  }
  const LineFit fit = half_life_fit(hl, j_lo, j_hi);
  s.write_json("front_fit.json", {{"law", "log n_j against log j"},
                                  {"slope", fit.slope},
                                  {"intercept", fit.intercept},
                                  {"j_range", {j_lo, j_hi}},
                                  {"expected_slope", 4.0},
                                  {"tolerance", 0.5}});
  s.metric("front_slope", fit.slope);
  s.flag("front_slope_near_4", std::abs(fit.slope - 4.0) <= 0.5);
  return kExitOk;
}

template <SymbolModel M>
int bias_symbol(const M& model, const ExperimentConfig& c, Session& s) {
  const double bound = symbol_stability_bound(model);
  const double eps = resolve_epsilon(model, c, bound, s);
  if (eps >= bound) throw ConfigError("bias needs a stable learning rate");
  const Grid& g = model.grid();

  LatticeFunction e0 = LatticeFunction::zeros(g);
  if (c.single_mode) {
    if (*c.single_mode < 0 || *c.single_mode > g.half_width()) {
      throw ConfigError("single_mode must be a window frequency index in 0.." + std::to_string(g.half_width()));
    }
    const double xi = static_cast<double>(*c.single_mode) * g.n_intervals() / static_cast<double>(g.size());
    e0 = LatticeFunction::sample(g, [xi](double z) { return std::cos(2.0 * std::numbers::pi * xi * z); });
  } else {
    e0 = build_target(model, c).f;
  }
  const FourierSpectrum spec = dft_lattice(e0);
  double peak = 0.0;
  for (const auto& v : spec.coefficients) peak = std::max(peak, std::abs(v));
  const auto ns = decade_steps(std::max(1L, c.max_iters));

  CsvTable table({"xi", "symbol", "n", "error", "relative_error"});
  std::size_t active = 0;
  for (std::size_t k = static_cast<std::size_t>(g.half_width()); k < spec.frequencies.size(); ++k) {
    const double xi = spec.frequencies[k];
    const double sym = model.symbol(xi);
    const double rho = 1.0 - 2.0 * eps * sym * sym;
    const double a0 = std::abs(spec.coefficients[k]);
    const bool zero = a0 <= 1e-12 * peak;
    if (!zero) ++active;
    for (long n : ns) {
      const double decay = std::pow(rho, static_cast<double>(n));
      std::optional<double> rel;
      if (!zero) rel = decay;
      table.add_row({xi, sym, static_cast<double>(n), zero ? 0.0 : a0 * decay, rel});
    }
  }
  s.write_csv("mode_decay.csv", table);
  s.metric("active_modes", active);

  if (c.check_iters > 0 && peak > 0.0) {
    const LatticeFunction f = e0;  // phi0 = 0, so e0 = f
    const auto chk = multiplier_check(model, model.zero_params(), f, eps, c.check_iters);
    s.metric("multiplier_max_mode_error", chk.max_mode_error);
    s.metric("multiplier_modes_compared", chk.modes_compared);
    s.flag("multiplier_matches_symbol", chk.max_mode_error <= 1e-6);
  }

  std::vector<double> xi;
  for (double x : window_frequencies(g))
    if (x >= 0.25 && x <= 4.0) xi.push_back(x);
  if (xi.size() < 3) {
    s.notice("front fit skipped: fewer than 3 window frequencies in [0.25, 4]");
    return kExitOk;
  }
  const auto hl = frequency_half_lives(model, eps, xi);
  const LineFit fit = front_fit(xi, hl);
  s.write_json("front_fit.json", {{"law", "log n_k against log(1 + (2 pi xi_k)^2)"},
                                  {"slope", fit.slope},
                                  {"intercept", fit.intercept},
                                  {"xi_range", {xi.front(), xi.back()}},
                                  {"expected_slope", 2.0},
                                  {"tolerance", 0.2}});
  s.metric("front_slope", fit.slope);
  s.flag("front_slope_near_2", std::abs(fit.slope - 2.0) <= 0.2);
  return kExitOk;
}

inline int cmd_bias(const ExperimentConfig& c, Session& s) {
  return std::visit(
      [&](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ReluModel>) return bias_relu(m, c, s);
        else return bias_symbol(m, c, s);
      },
      make_model(c));
}

// ---------------------------------------------------------------------------
// rates

inline int cmd_rates(const ExperimentConfig& c, Session& s) {
  if (c.model != ModelKind::ReluDiscrete) throw ConfigError("rates needs model = relu_discrete");
  if (c.k != 1 && c.k != 2) throw ConfigError("rates supports k = 1 or k = 2");
  const ReluModel model = std::get<ReluModel>(make_model(c));
  s.config()["k"] = c.k;
  s.config()["seed_scale"] = c.seed_scale;
  s.config()["rate_window"] = {c.rate_lo, c.rate_iters};

  Xoshiro256 rng(c.seed);
  const ParamVector seed = detail::seed_params(model, rng, c.seed_scale);
  const SmoothTarget st = smooth_target(model, seed, c.k);
  const double bound = model_stability_bound(model);
  const double eps = resolve_epsilon(model, c, bound, s);

  GdConfig g;
  g.learning_rate = eps;
  g.max_iters = c.rate_iters;
  g.loss_tolerance = 0.0;
  g.stability_bound = bound;
  g.enforce_stability = !c.allow_unstable;
  const Trajectory t = train(model, st.f, model.zero_params(), g, st.params);

  const double seed_norm = norm_W(seed);
  CsvTable table({"n", "param_error", "bound"});
  bool bound_ok = true;
  for (const auto& r : t.records) {
    std::optional<double> b;
    if (r.n >= 1) {
      b = std::exp(-c.k) * std::pow(c.k / (2.0 * eps * static_cast<double>(r.n)), c.k) * seed_norm;
      bound_ok = bound_ok && *r.param_error <= *b * (1.0 + 1e-12);
    }
    table.add_row({static_cast<double>(r.n), r.param_error, b});
  }
  s.write_csv("rate.csv", table);
  s.metric("iterations", t.iterations);
  s.metric("final_param_error", *t.records.back().param_error);

  if (seed_norm == 0.0) {
    s.notice("rate fit skipped: the seed parameters are zero, so f = 0 and training is trivial");
    s.flag("converged", t.converged());
    return kExitOk;
  }
  const RateFit fit = rate_fit(t, c.rate_lo, c.rate_iters, RateAxes::LogLog);
  s.metric("rate_slope", fit.slope);
  s.metric("rate_intercept", fit.intercept);
  s.metric("rate_points", fit.points);
  s.flag("error_below_smoothness_bound", bound_ok);
  s.flag("rate_slope_at_most_minus_k_plus_0.15", fit.slope <= -c.k + 0.15);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// kernel

inline int cmd_kernel(const ExperimentConfig& c, Session& s) {
  if (is_relu(c.model)) {
    const int p = c.kernel_points;
    CsvTable table({"x", "y", "K", "K_quadrature", "abs_error"});
    double worst = 0.0;
    bool first_column_one = true;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        const double x = static_cast<double>(i) / (p - 1);
        const double y = static_cast<double>(j) / (p - 1);
        const double k = kernel_K(x, y);
        const double q = kernel_K_quadrature(x, y, static_cast<std::size_t>(c.quadrature_points));
        worst = std::max(worst, std::abs(k - q));
        if (i == 0) first_column_one = first_column_one && k == 1.0;
        table.add_row({x, y, k, q, std::abs(k - q)});
      }
    }
    s.write_csv("kernel.csv", table);
    s.metric("max_abs_error_vs_quadrature", worst);
    s.metric("quadrature_points", c.quadrature_points);
    s.flag("kernel_matches_quadrature", worst <= 1e-6);
    s.flag("K_at_x0_is_one", first_column_one);
    return kExitOk;
  }
  if (c.model != ModelKind::FrexLattice) throw ConfigError("kernel supports relu_* and frex_lattice models");
  const FrexLatticeModel model = std::get<FrexLatticeModel>(make_model(c));
  const std::size_t steps = std::min<std::size_t>(4 * static_cast<std::size_t>(c.n), model.grid().size() / 2);
  const KernelProfile prof = frex_kernel_profile(model, steps);
  CsvTable table({"distance", "value", "law", "bound"});
  bool dominated = true;
  for (std::size_t d = 0; d < prof.distance.size(); ++d) {
    const double x = prof.distance[d];
    const double law = (1.0 + x) * std::exp(-x);
    dominated = dominated && prof.value[d] <= prof.fitted_constant * law * (1.0 + 1e-12);
    table.add_row({x, prof.value[d], law, prof.fitted_constant * law});
  }
  s.write_csv("kernel.csv", table);
  const double ratio = prof.fitted_constant / prof.value[0];
  s.metric("fitted_constant", prof.fitted_constant);
  s.metric("value_at_zero", prof.value[0]);
  s.metric("constant_ratio", ratio);
  s.flag("kernel_within_factor_2", dominated && ratio >= 0.5 && ratio <= 2.0);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// plot

inline int cmd_plot(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  if (c.csv.empty() || c.x.empty() || c.y.empty()) throw ConfigError("plot needs csv, x and y");
  PlotSpec spec{c.x, c.y, c.logx, c.logy, c.title};
  emit_svg(c.csv, spec, out / c.svg);
  log << "  wrote " << (out / c.svg).string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train", "spectrum", "bias", "rates", "kernel", "plot"};
  return names;
}

/// Runs one command, translating failures into the exit-code contract:
/// 0 success, 1 invalid configuration or input, 2 max iterations without
/// convergence, 3 divergence.
inline int run_command(const std::string& command, const ExperimentConfig& c, const fs::path& out,
                       std::ostream& log, std::ostream& err) {
  try {
    if (command == "plot") return cmd_plot(c, out, log);
    Session s(command, c, out, log);
    log << command << " (" << to_string(c.model) << ", N=" << c.n << ")\n";
    int code = kExitOk;
    if (command == "train") code = cmd_train(c, s);
    else if (command == "spectrum") code = cmd_spectrum(c, s);
    else if (command == "bias") code = cmd_bias(c, s);
    else if (command == "rates") code = cmd_rates(c, s);
    else if (command == "kernel") code = cmd_kernel(c, s);
    else throw ConfigError("unknown command '" + command + "'");
    s.finish(code);
    return code;
  } catch (const std::exception& e) {
    // bad keys, rejected rates, unreadable inputs and out-of-domain data alike
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace fixbias::report
