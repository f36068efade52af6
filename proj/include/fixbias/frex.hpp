#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "fixbias/fit.hpp"
#include "fixbias/gd.hpp"
#include "fixbias/grid.hpp"
#include "fixbias/random.hpp"
#include "fixbias/spectral.hpp"

namespace fixbias {

// ---------------------------------------------------------------------------
// Continuum FReX model in Fourier space

/// Fourier transform of exp(-|x|): 2 / (1 + (2 pi xi)^2).
inline double frex_symbol(double xi) {
  const double w = 2.0 * std::numbers::pi * xi;
  return 2.0 / (1.0 + w * w);
}

namespace detail {

inline void require_frex_rate(double eps) {
  if (!(eps > 0.0 && eps < 0.125)) throw RejectedConfig("FReX learning rate must lie in (0, 1/8)");
}

}  // namespace detail

/// Per-frequency contraction of the continuum FReX gradient descent:
/// 1 - 8 eps / (1 + (2 pi xi)^2)^2.
inline double r_eps(double xi, double eps) {
  detail::require_frex_rate(eps);
  const double w = 2.0 * std::numbers::pi * xi;
  const double d = 1.0 + w * w;
  return 1.0 - 8.0 * eps / (d * d);
}

/// Asymptotic frequency front after n steps: (8 eps n)^{1/4} / (2 pi).
inline double effective_frequency(long n, double eps) {
  if (n < 1) throw InvalidArgument("effective_frequency: n must be at least 1");
  detail::require_frex_rate(eps);
  return std::pow(8.0 * eps * static_cast<double>(n), 0.25) / (2.0 * std::numbers::pi);
}

/// Frequency solving n (1 - r_eps(xi)) = 1 exactly; 0 when even xi = 0 is
/// damped by less than 1/n per step.
inline double exact_front_frequency(long n, double eps) {
  if (n < 1) throw InvalidArgument("exact_front_frequency: n must be at least 1");
  detail::require_frex_rate(eps);
  const double root = std::sqrt(8.0 * eps * static_cast<double>(n));
  return root <= 1.0 ? 0.0 : std::sqrt(root - 1.0) / (2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Lattice constants

struct LatticeConstants {
  double a;
  double b;
  double c;
  double alpha;  ///< lower bound of T
  double beta;   ///< upper bound of T
};

inline LatticeConstants lattice_constants(int n) {
  if (n < 1) throw InvalidArgument("lattice_constants: N must be positive");
  const double h = 0.5 / n;
  const double s = 2.0 * n * std::sinh(h);
  const double a = 2.0 * std::exp(-h) * s;
  const double b = s * s;
  const double num = a + b / n;
  return {a, b, 1.0 / num, num / (4.0 * n * n + b), num / b};
}

/// Fourier symbol of the lattice convolution T = H0^{-1}:
/// 1 / (c_N (4 N^2 sin^2(pi xi / N) + b_N)).
inline double lattice_symbol(const LatticeConstants& k, int n, double xi) {
  const double s = std::sin(std::numbers::pi * xi / n);
  return 1.0 / (k.c * (4.0 * n * n * s * s + k.b));
}

// ---------------------------------------------------------------------------
// Window DFT

struct FourierSpectrum {
  std::vector<double> frequencies;
  std::vector<std::complex<double>> coefficients;
};

/// Frequencies k N / (2M+1), k = -M..M, of the periodic window.
inline std::vector<double> window_frequencies(const Grid& g) {
  if (g.kind() != GridKind::TruncatedLattice) throw InvalidArgument("window frequencies need a lattice grid");
  const long m = g.half_width();
  const double p = static_cast<double>(g.size());
  std::vector<double> xi;
  xi.reserve(g.size());
  for (long k = -m; k <= m; ++k) xi.push_back(static_cast<double>(k) * g.n_intervals() / p);
  return xi;
}

namespace detail {

/// exp(sign * 2 pi i r / P) for r = 0..P-1.
inline std::vector<std::complex<double>> twiddles(std::size_t p, double sign) {
  std::vector<std::complex<double>> w(p);
  for (std::size_t r = 0; r < p; ++r) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(p);
    w[r] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

inline std::size_t phase_index(long k, long j, long p) {
  long r = (k * j) % p;
  if (r < 0) r += p;
  return static_cast<std::size_t>(r);
}

}  // namespace detail

/// F f(xi_k) = (1/N) sum_z exp(-2 pi i z xi_k) f(z) over the window.
/// With spacing d xi = N / (2M+1), Parseval reads d xi * sum |F|^2 = ||f||^2.
inline FourierSpectrum dft_lattice(const LatticeFunction& f) {
  const Grid& g = f.grid();
  if (g.kind() != GridKind::TruncatedLattice) throw InvalidArgument("dft_lattice needs a lattice grid");
  const long m = g.half_width();
  const long p = static_cast<long>(g.size());
  const auto w = detail::twiddles(g.size(), -1.0);
  FourierSpectrum out{window_frequencies(g), std::vector<std::complex<double>>(g.size())};
  for (long k = -m; k <= m; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += w[detail::phase_index(k, g.index(i), p)] * f[i];
    out.coefficients[static_cast<std::size_t>(k + m)] = s / static_cast<double>(g.n_intervals());
  }
  return out;
}

/// Inverse of dft_lattice; returns the real part.
inline LatticeFunction inverse_dft_lattice(const FourierSpectrum& spec, const Grid& g) {
  if (g.kind() != GridKind::TruncatedLattice || spec.coefficients.size() != g.size()) {
    throw InvalidArgument("inverse_dft_lattice: spectrum does not match the grid");
  }
  const long m = g.half_width();
  const long p = static_cast<long>(g.size());
  const auto w = detail::twiddles(g.size(), 1.0);
  const double dxi = static_cast<double>(g.n_intervals()) / static_cast<double>(p);
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::complex<double> s = 0.0;
    for (long k = -m; k <= m; ++k) {
      s += w[detail::phase_index(k, g.index(i), p)] * spec.coefficients[static_cast<std::size_t>(k + m)];
    }
    v[i] = dxi * s.real();
  }
  return LatticeFunction(g, std::move(v));
}

// ---------------------------------------------------------------------------
// Lattice model

enum class LatticeBoundary {
  /// Sums run over the stored window only (parameters vanish outside it).
  Truncated,
  /// Data are periodic with the window as one period; the convolution then
  /// coincides with the infinite-lattice operator and is diagonal in the DFT.
  Periodic,
};

struct H0Result {
  LatticeFunction values;
  /// Storage slots whose stencil reached outside the window.
  std::vector<std::size_t> edge_nodes;
};

/// FReX network on N^-1 Z: T phi(z) = (1/N) sum_t phi(t) exp(-|z - t|).
/// T is self-adjoint and T = H0^{-1} with H0 = c_N (-Laplacian_N + b_N).
class FrexLatticeModel {
 public:
  explicit FrexLatticeModel(Grid grid, LatticeBoundary boundary = LatticeBoundary::Truncated)
      : grid_(grid), boundary_(boundary), k_(lattice_constants(grid.n_intervals())) {
    if (grid_.kind() != GridKind::TruncatedLattice) throw InvalidArgument("FReX lattice model needs a lattice grid");
    if (boundary_ == LatticeBoundary::Periodic) {
      const std::size_t p = grid_.size();
      const double q = std::exp(-1.0 / grid_.n_intervals());
      const double qp = std::pow(q, static_cast<double>(p));
      periodic_kernel_.resize(p);
      for (std::size_t d = 0; d < p; ++d) {
        periodic_kernel_[d] =
            (std::pow(q, static_cast<double>(d)) + std::pow(q, static_cast<double>(p - d))) / (1.0 - qp);
      }
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  LatticeBoundary boundary() const noexcept { return boundary_; }
  const LatticeConstants& constants() const noexcept { return k_; }
  int n_intervals() const noexcept { return grid_.n_intervals(); }
  std::size_t param_dim() const noexcept { return grid_.size(); }

  ParamVector zero_params() const {
    return ParamVector::weights_only(n_intervals(), std::vector<double>(grid_.size(), 0.0));
  }

  ParamVector params(std::vector<double> weights) const {
    return ParamVector::weights_only(n_intervals(), std::move(weights));
  }

  LatticeFunction forward(const ParamVector& phi) const {
    if (phi.has_affine() || phi.n_intervals() != n_intervals() || phi.dim() != param_dim()) {
      throw InvalidArgument("parameter vector does not match the FReX lattice model");
    }
    return LatticeFunction(grid_, convolve(phi.weights()));
  }

  ParamVector adjoint(const LatticeFunction& g) const {
    check_function(g);
    return params(convolve(g.values()));
  }

  ParamVector exact_params(const LatticeFunction& f) const;

  /// Fourier symbol of T at frequency xi.
  double symbol(double xi) const { return lattice_symbol(k_, n_intervals(), xi); }
  /// sup of the symbol, attained at xi = 0.
  double symbol_max() const noexcept { return k_.beta; }

  void check_function(const LatticeFunction& g) const {
    if (!(g.grid() == grid_)) throw InvalidArgument("function is not on the model grid");
  }

 private:
  std::vector<double> convolve(std::span<const double> x) const {
    const std::size_t p = x.size();
    const double inv_n = 1.0 / n_intervals();
    std::vector<double> out(p, 0.0);
    if (boundary_ == LatticeBoundary::Truncated) {
      // exp(-|z-t|) factors along the lattice, so two first-order recursions
      // give the full sum in O(P).
      const double q = std::exp(-inv_n);
      double left = 0.0;
      for (std::size_t i = 0; i < p; ++i) {
        left = q * left + x[i];
        out[i] = left;
      }
      double right = 0.0;
      for (std::size_t i = p; i-- > 0;) {
        out[i] += right;
        right = q * (right + x[i]);
      }
      for (double& v : out) v *= inv_n;
      return out;
    }
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const std::size_t d = i >= j ? i - j : i + p - j;
        s += periodic_kernel_[d] * x[j];
      }
      out[i] = s * inv_n;
    }
    return out;
  }

  Grid grid_;
  LatticeBoundary boundary_;
  LatticeConstants k_;
  std::vector<double> periodic_kernel_;
};

/// c_N (-Laplacian_N f + b_N f). Truncated models pad with zeros outside the
/// window and report the two end nodes as edge nodes; periodic models wrap.
inline H0Result h0_apply(const FrexLatticeModel& model, const LatticeFunction& f) {
  model.check_function(f);
  const std::size_t p = f.size();
  const double n = model.n_intervals();
  const auto& k = model.constants();
  const bool wrap = model.boundary() == LatticeBoundary::Periodic;
  std::vector<double> v(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double left = i > 0 ? f[i - 1] : (wrap ? f[p - 1] : 0.0);
    const double right = i + 1 < p ? f[i + 1] : (wrap ? f[0] : 0.0);
    const double lap = n * n * (left - 2.0 * f[i] + right);
    v[i] = k.c * (-lap + k.b * f[i]);
  }
  std::vector<std::size_t> edges;
  if (!wrap) edges = {0, p - 1};
  return {LatticeFunction(f.grid(), std::move(v)), std::move(edges)};
}

inline ParamVector FrexLatticeModel::exact_params(const LatticeFunction& f) const {
  auto h = h0_apply(*this, f);
  return params(std::vector<double>(h.values.values().begin(), h.values.values().end()));
}

inline LatticeFunction apply_T_frex(const FrexLatticeModel& model, const ParamVector& phi) {
  return model.forward(phi);
}

/// min(1/8, 0.9 / (2 beta_N^2)).
inline double default_lattice_learning_rate(int n) {
  const auto k = lattice_constants(n);
  return std::min(0.125, 0.9 / (2.0 * k.beta * k.beta));
}

// ---------------------------------------------------------------------------
// Continuum FReX model restricted to window-periodic band-limited data

/// T acts as multiplication by frex_symbol on the window DFT, which is the
/// continuum convolution with exp(-|x|) applied to the trigonometric
/// interpolant of the data.
class FrexFourierModel {
 public:
  explicit FrexFourierModel(Grid grid) : grid_(grid) {
    if (grid_.kind() != GridKind::TruncatedLattice) throw InvalidArgument("FReX Fourier model needs a lattice grid");
  }

  const Grid& grid() const noexcept { return grid_; }
  int n_intervals() const noexcept { return grid_.n_intervals(); }
  std::size_t param_dim() const noexcept { return grid_.size(); }

  ParamVector zero_params() const {
    return ParamVector::weights_only(n_intervals(), std::vector<double>(grid_.size(), 0.0));
  }

  ParamVector params(std::vector<double> weights) const {
    return ParamVector::weights_only(n_intervals(), std::move(weights));
  }

  LatticeFunction forward(const ParamVector& phi) const {
    if (phi.has_affine() || phi.dim() != param_dim() || phi.n_intervals() != n_intervals()) {
      throw InvalidArgument("parameter vector does not match the FReX Fourier model");
    }
    return multiply(LatticeFunction(grid_, std::vector<double>(phi.weights().begin(), phi.weights().end())),
                    [](double xi) { return frex_symbol(xi); });
  }

  ParamVector adjoint(const LatticeFunction& g) const {
    if (!(g.grid() == grid_)) throw InvalidArgument("function is not on the model grid");
    auto v = multiply(g, [](double xi) { return frex_symbol(xi); });
    return params(std::vector<double>(v.values().begin(), v.values().end()));
  }

  /// (1 + (2 pi xi)^2) / 2 applied in Fourier space.
  ParamVector exact_params(const LatticeFunction& f) const {
    auto v = multiply(f, [](double xi) { return 1.0 / frex_symbol(xi); });
    return params(std::vector<double>(v.values().begin(), v.values().end()));
  }

  double symbol(double xi) const { return frex_symbol(xi); }
  double symbol_max() const noexcept { return 2.0; }

 private:
  template <class Fn>
  LatticeFunction multiply(const LatticeFunction& f, Fn&& m) const {
    FourierSpectrum s = dft_lattice(f);
    for (std::size_t k = 0; k < s.coefficients.size(); ++k) s.coefficients[k] *= m(s.frequencies[k]);
    return inverse_dft_lattice(s, grid_);
  }

  Grid grid_;
};

// ---------------------------------------------------------------------------
// Multiplier dynamics

template <class M>
concept SymbolModel = NetworkModel<M> && requires(const M& m, double xi) {
  { m.symbol(xi) } -> std::convertible_to<double>;
  { m.symbol_max() } -> std::convertible_to<double>;
};

/// 1 / (2 sup symbol^2): the sharp stability bound for a translation-invariant model.
template <SymbolModel M>
double symbol_stability_bound(const M& model) {
  const double s = model.symbol_max();
  return 0.5 / (s * s);
}

struct MultiplierCheck {
  double max_mode_error;
  long iterations;
  std::size_t modes_compared;
};

/// Runs n gradient-descent steps and compares |F e_n(xi_k)| with
/// rho(xi_k)^n |F e_0(xi_k)|, rho = 1 - 2 eps symbol^2, over every mode present
/// in e_0 (|F e_0| above 1e-10 of its maximum). The mismatch per mode is
/// relative to the prediction, floored at 1e-9 of max |F e_0|.
template <SymbolModel M>
MultiplierCheck multiplier_check(const M& model, const ParamVector& phi0, const LatticeFunction& f, double eps,
                                 long n) {
  const double bound = symbol_stability_bound(model);
  if (!(eps > 0.0 && eps < bound)) throw RejectedConfig("multiplier_check: eps must lie in (0, 1/(2 beta^2))");
  if (n < 0) throw InvalidArgument("multiplier_check: negative iteration count");

  const LatticeFunction e0 = f - model.forward(phi0);
  ParamVector phi = phi0;
  for (long i = 0; i < n; ++i) phi = gd_step(model, phi, f, eps);
  const LatticeFunction en = f - model.forward(phi);

  const FourierSpectrum s0 = dft_lattice(e0);
  const FourierSpectrum sn = dft_lattice(en);
  double peak = 0.0;
  for (const auto& c : s0.coefficients) peak = std::max(peak, std::abs(c));
  MultiplierCheck out{0.0, n, 0};
  if (peak == 0.0) return out;
  for (std::size_t k = 0; k < s0.coefficients.size(); ++k) {
    const double a0 = std::abs(s0.coefficients[k]);
    if (a0 <= 1e-10 * peak) continue;
    const double s = model.symbol(s0.frequencies[k]);
    const double predicted = std::pow(1.0 - 2.0 * eps * s * s, static_cast<double>(n)) * a0;
    const double actual = std::abs(sn.coefficients[k]);
    const double rel = std::abs(actual - predicted) / std::max(predicted, 1e-9 * peak);
    out.max_mode_error = std::max(out.max_mode_error, rel);
    ++out.modes_compared;
  }
  return out;
}

/// Per-frequency half-life: first n with (1 - 2 eps symbol(xi)^2)^n <= 1/2.
template <SymbolModel M>
std::vector<long> frequency_half_lives(const M& model, double eps, std::span<const double> xi) {
  if (!(eps > 0.0 && eps < symbol_stability_bound(model))) {
    throw RejectedConfig("frequency_half_lives: eps outside the stable range");
  }
  std::vector<long> out(xi.size());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double s = model.symbol(xi[k]);
    out[k] = first_crossing(1.0 - 2.0 * eps * s * s);
  }
  return out;
}

/// First n <= cap at which the DFT-predicted norm of (1 - 2 eps T^2)^n delta
/// drops to tol. Exact for periodic and Fourier models, approximate for
/// truncated windows with data supported away from the edges.
template <SymbolModel M>
long iteration_budget(const M& model, double eps, const ParamVector& delta, double tol, long cap) {
  if (!(tol > 0.0)) throw InvalidArgument("iteration_budget: tolerance must be positive");
  const LatticeFunction d(model.grid(), std::vector<double>(delta.weights().begin(), delta.weights().end()));
  const FourierSpectrum s = dft_lattice(d);
  const double dxi = static_cast<double>(model.n_intervals()) / static_cast<double>(model.grid().size());
  std::vector<double> rho(s.frequencies.size());
  std::vector<double> energy(s.frequencies.size());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const double sym = model.symbol(s.frequencies[k]);
    rho[k] = std::abs(1.0 - 2.0 * eps * sym * sym);
    energy[k] = dxi * std::norm(s.coefficients[k]);
  }
  auto predicted = [&](long n) {
    double e = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) e += energy[k] * std::pow(rho[k], 2.0 * static_cast<double>(n));
    return std::sqrt(e);
  };
  if (predicted(cap) > tol) throw InvalidArgument("iteration_budget: cap too small for the requested tolerance");
  long lo = 0;
  long hi = cap;
  while (lo < hi) {
    const long mid = lo + (hi - lo) / 2;
    if (predicted(mid) <= tol) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

/// Sum of `count` Gaussian bumps (width 0.75, amplitudes in [-1, 1]) with
/// centres drawn from the middle half of the inner half of the window, so the
/// data are negligible (below e^{-30}) at the window edges.
inline LatticeFunction lattice_bumps(const Grid& g, int count, Xoshiro256& rng) {
  if (g.kind() != GridKind::TruncatedLattice) throw InvalidArgument("lattice_bumps needs a lattice grid");
  if (count < 0) throw InvalidArgument("lattice_bumps: negative count");
  const double reach = 0.25 * g.half_width() / g.n_intervals();
  std::vector<double> v(g.size(), 0.0);
  for (int b = 0; b < count; ++b) {
    const double centre = rng.uniform(-reach, reach);
    const double amp = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = (g.node(i) - centre) / 0.75;
      v[i] += amp * std::exp(-0.5 * x * x);
    }
  }
  return LatticeFunction(g, std::move(v));
}

/// Slope of log(n_k) against log(1 + (2 pi xi_k)^2).
inline LineFit front_fit(std::span<const double> xi, std::span<const long> half_lives) {
  if (xi.size() != half_lives.size()) throw InvalidArgument("front_fit: size mismatch");
  std::vector<double> x(xi.size());
  std::vector<double> y(xi.size());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * xi[k];
    x[k] = std::log(1.0 + w * w);
    y[k] = std::log(static_cast<double>(half_lives[k]));
  }
  return least_squares_line(x, y);
}

// ---------------------------------------------------------------------------
// Locality of the T*T kernel

struct KernelProfile {
  std::vector<double> distance;  ///< |x - y| in lattice units of length
  std::vector<double> value;     ///< N * (T*T)[center][center + d]
  double fitted_constant;        ///< max_d value / ((1 + d) e^{-d})
};

/// Samples the assembled T*T along the row through the window centre, out to
/// `max_steps` lattice spacings, and rescales by N so the values approximate
/// the continuum kernel (1 + |x-y|) e^{-|x-y|}.
inline KernelProfile frex_kernel_profile(const FrexLatticeModel& model, std::size_t max_steps) {
  const std::size_t p = model.grid().size();
  const std::size_t centre = p / 2;
  if (max_steps > centre) throw InvalidArgument("frex_kernel_profile: profile runs past the window");
  // one column of T*T: T*T applied to the centre basis vector
  std::vector<double> e(p, 0.0);
  e[centre] = 1.0;
  const ParamVector col = model.adjoint(model.forward(model.params(e)));
  KernelProfile out{{}, {}, 0.0};
  const double n = model.n_intervals();
  for (std::size_t d = 0; d <= max_steps; ++d) {
    const double x = static_cast<double>(d) / n;
    const double v = n * col.weights()[centre + d];
    out.distance.push_back(x);
    out.value.push_back(v);
    out.fitted_constant = std::max(out.fitted_constant, v / ((1.0 + x) * std::exp(-x)));
  }
  return out;
}

}  // namespace fixbias
