#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixbias/eigen.hpp"
#include "fixbias/fit.hpp"
#include "fixbias/grid.hpp"
#include "fixbias/model.hpp"
#include "fixbias/spectral.hpp"

namespace fixbias {

struct GdConfig {
  double learning_rate = 0.0;
  long max_iters = 10000;
  double loss_tolerance = 0.0;
  long record_every = 1;
  /// Reject learning rates at or above the stability bound before iterating.
  bool enforce_stability = true;
  /// Precomputed stability bound; computed from the model when absent.
  std::optional<double> stability_bound;
  /// Abort after this many consecutive iterations with growing loss. Counted
  /// per iteration rather than per record so sparse recording cannot let the
  /// loss overflow first.
  int divergence_window = 10;
};

struct TrajectoryRecord {
  long n = 0;
  double loss = 0.0;
  std::optional<double> param_error;
  std::optional<std::vector<double>> mode_coeffs;
};

enum class StopReason { Converged, MaxIters };

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  ParamVector final_params;
  long iterations = 0;
  StopReason stop = StopReason::MaxIters;

  bool converged() const noexcept { return stop == StopReason::Converged; }
  double final_loss() const { return records.back().loss; }
};

/// Largest eigenvalue of the assembled TT*.
template <NetworkModel M>
double max_ttstar_eigenvalue(const M& model) {
  JacobiOptions opt;
  opt.compute_vectors = false;
  return eigh(assemble_TTstar(model), opt).max_value();
}

/// 1 / (2 lambda_max(TT*)): the learning rate below which every mode of the
/// error contracts monotonically.
template <NetworkModel M>
double stability_bound(const M& model) {
  return 0.5 / max_ttstar_eigenvalue(model);
}

/// phi + 2 eps T*(f - T phi)
template <NetworkModel M>
ParamVector gd_step(const M& model, const ParamVector& phi, const LatticeFunction& f, double eps) {
  if (eps < 0.0) throw InvalidArgument("gd_step: negative learning rate");
  return phi.axpy(2.0 * eps, model.adjoint(f - model.forward(phi)));
}

namespace detail {

inline std::vector<double> project_modes(const EigenDecomposition& eig, std::span<const double> e) {
  std::vector<double> c(eig.size());
  for (std::size_t j = 0; j < eig.size(); ++j) c[j] = dot(eig.vector(j), e);
  return c;
}

}  // namespace detail

/// Runs gradient descent from phi0 toward f.
///
/// Each iteration applies T once (to get the residual and the loss) and T*
/// once (for the update). When `target` is given, the parameter error
/// ||phi_n - target|| is recorded; when `modes` is given, the Euclidean
/// projections of the residual onto its eigenvectors are recorded as well.
template <NetworkModel M>
Trajectory train(const M& model, const LatticeFunction& f, const ParamVector& phi0, const GdConfig& cfg,
                 const std::optional<ParamVector>& target = std::nullopt,
                 const EigenDecomposition* modes = nullptr) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw RejectedConfig("learning rate must be positive and finite");
  }
  if (cfg.max_iters < 0 || cfg.record_every < 1 || cfg.loss_tolerance < 0.0) {
    throw RejectedConfig("invalid iteration, recording or tolerance settings");
  }
  if (!(f.grid() == model.grid())) throw InvalidArgument("train: target is not on the model grid");
  if (phi0.dim() != model.param_dim()) throw InvalidArgument("train: initial parameters do not match model");
  if (target) phi0.check_layout(*target);
  if (modes && modes->size() != model.grid().size()) {
    throw InvalidArgument("train: mode basis does not match the grid");
  }
  if (cfg.enforce_stability) {
    const double bound = cfg.stability_bound ? *cfg.stability_bound : stability_bound(model);
    if (cfg.learning_rate >= bound) {
      throw RejectedConfig("learning rate " + std::to_string(cfg.learning_rate) +
                           " is not below the stability bound " + std::to_string(bound));
    }
  }

  Trajectory traj{{}, phi0, 0, StopReason::MaxIters};
  ParamVector phi = phi0;
  int growing = 0;
  double previous = 0.0;

  for (long n = 0;; ++n) {
    const LatticeFunction residual = f - model.forward(phi);
    const double loss = inner_product_X(residual, residual);
    if (n > 0) {
      growing = loss > previous ? growing + 1 : 0;
      if (growing >= cfg.divergence_window || !std::isfinite(loss)) {
        throw Divergence("loss grew for " + std::to_string(growing) + " consecutive iterations (n = " +
                         std::to_string(n) + ", loss = " + std::to_string(loss) + ")");
      }
    }
    previous = loss;
    const bool done = loss <= cfg.loss_tolerance;
    const bool last = done || n == cfg.max_iters;

    if (n % cfg.record_every == 0 || last) {
      TrajectoryRecord rec;
      rec.n = n;
      rec.loss = loss;
      if (target) rec.param_error = norm_W(phi - *target);
      if (modes) rec.mode_coeffs = detail::project_modes(*modes, residual.values());
      traj.records.push_back(std::move(rec));
    }

    if (last) {
      traj.iterations = n;
      traj.stop = done ? StopReason::Converged : StopReason::MaxIters;
      break;
    }
    phi = phi.axpy(2.0 * cfg.learning_rate, model.adjoint(residual));
  }
  traj.final_params = phi;
  return traj;
}

/// sum_j (1 - 2 eps lambda_j)^n <u_j, e0> u_j over the eigensystem of TT*.
inline LatticeFunction closed_form_error(const EigenDecomposition& eig, const LatticeFunction& e0,
                                         double eps, long n) {
  detail::require_contraction(eig.values, eps);
  if (e0.size() != eig.size()) throw InvalidArgument("closed_form_error: size mismatch");
  if (n < 0) throw InvalidArgument("closed_form_error: negative iteration count");
  std::vector<double> out(e0.size(), 0.0);
  for (std::size_t j = 0; j < eig.size(); ++j) {
    auto u = eig.vector(j);
    const double c = std::pow(1.0 - 2.0 * eps * eig.values[j], static_cast<double>(n)) * dot(u, e0.values());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * u[k];
  }
  return LatticeFunction(e0.grid(), std::move(out));
}

/// (1 - 2 eps T*T)^n delta, using the eigensystem of T*T in parameter-
/// orthonormal coordinates (see assemble_TstarT).
inline ParamVector closed_form_param_error(const EigenDecomposition& eig_tstar_t, const ParamVector& delta,
                                           double eps, long n) {
  detail::require_contraction(eig_tstar_t.values, eps);
  if (delta.dim() != eig_tstar_t.size()) throw InvalidArgument("closed_form_param_error: size mismatch");
  const std::vector<double> gram = delta.gram_diagonal();
  std::vector<double> y = delta.coords();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= std::sqrt(gram[i]);
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t j = 0; j < eig_tstar_t.size(); ++j) {
    auto u = eig_tstar_t.vector(j);
    const double c = std::pow(1.0 - 2.0 * eps * eig_tstar_t.values[j], static_cast<double>(n)) * dot(u, y);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * u[k];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= std::sqrt(gram[i]);
  return delta.with_coords(out);
}

// ---------------------------------------------------------------------------
// Convergence-rate measurement

enum class RateAxes { LogLog, SemiLog };
enum class RateMetric { ParamError, Loss };

struct RateFit {
  double slope;
  double intercept;
  std::size_t points;
};

/// Least-squares slope of log(error) against log(n) (LogLog) or n (SemiLog).
inline RateFit rate_fit(std::span<const double> n, std::span<const double> err, RateAxes axes) {
  if (n.size() != err.size()) throw InvalidArgument("rate_fit: size mismatch");
  if (n.size() < 5) throw InvalidArgument("rate_fit: need at least 5 points in the window");
  std::vector<double> x(n.size());
  std::vector<double> y(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(err[i] > 0.0)) throw InvalidArgument("rate_fit: nonpositive error value");
    if (axes == RateAxes::LogLog && !(n[i] > 0.0)) throw InvalidArgument("rate_fit: log axis needs n > 0");
    x[i] = axes == RateAxes::LogLog ? std::log(n[i]) : n[i];
    y[i] = std::log(err[i]);
  }
  const LineFit line = least_squares_line(x, y);
  return {line.slope, line.intercept, n.size()};
}

/// Fits the records with n in [n_lo, n_hi].
inline RateFit rate_fit(const Trajectory& traj, long n_lo, long n_hi, RateAxes axes,
                        RateMetric metric = RateMetric::ParamError) {
  std::vector<double> n;
  std::vector<double> err;
  for (const auto& r : traj.records) {
    if (r.n < n_lo || r.n > n_hi) continue;
    if (metric == RateMetric::ParamError) {
      if (!r.param_error) throw InvalidArgument("rate_fit: trajectory has no parameter error");
      err.push_back(*r.param_error);
    } else {
      err.push_back(r.loss);
    }
    n.push_back(static_cast<double>(r.n));
  }
  return rate_fit(n, err, axes);
}

/// (1 - 2 eps lambda)^n lambda^k divided by its bound e^{-k} (k / (2 eps n))^k.
/// The bound holds when the ratio is at most 1.
inline double smoothness_estimate_ratio(double lambda, double eps, long n, int k) {
  const double lhs = std::pow(1.0 - 2.0 * eps * lambda, static_cast<double>(n)) * std::pow(lambda, k);
  const double rhs = std::exp(-static_cast<double>(k)) * std::pow(k / (2.0 * eps * static_cast<double>(n)), k);
  return lhs / rhs;
}

/// Target of smoothness order k: phi = (T*T)^k seed and f = T phi.
struct SmoothTarget {
  LatticeFunction f;
  ParamVector params;
};

template <NetworkModel M>
SmoothTarget smooth_target(const M& model, const ParamVector& seed, int k) {
  if (k < 0) throw InvalidArgument("smooth_target: k must be nonnegative");
  ParamVector phi = seed;
  for (int i = 0; i < k; ++i) phi = model.adjoint(model.forward(phi));
  return {model.forward(phi), phi};
}

}  // namespace fixbias
