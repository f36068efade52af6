#pragma once

#include <cstddef>
#include <vector>

#include "fixbias/grid.hpp"

namespace fixbias {

enum class ReluVariant { Discrete, ContinuousQuadrature };

/// Fixed-bias ReLU network on [0,1]:
///
///   g(t_l) = (1/N) sum_{j=1}^{N-1} w(t_j) relu(t_l - t_j) + b + c t_l.
///
/// The continuous-quadrature variant uses the same node sums, read as a
/// rectangle rule with weight 1/N; the two variants differ only in labelling.
class ReluModel {
 public:
  explicit ReluModel(Grid grid, ReluVariant variant = ReluVariant::Discrete)
      : grid_(grid), variant_(variant) {
    if (grid_.kind() != GridKind::UnitInterval) {
      throw InvalidArgument("ReLU model needs a unit-interval grid");
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  ReluVariant variant() const noexcept { return variant_; }
  int n_intervals() const noexcept { return grid_.n_intervals(); }

  /// N-1 interior weights plus b and c: N+1, the node count.
  std::size_t param_dim() const noexcept { return grid_.size(); }

  ParamVector zero_params() const {
    return ParamVector::with_affine(n_intervals(), std::vector<double>(grid_.size() - 2, 0.0), 0.0,
                                    0.0);
  }

  // Both maps run in O(N): the ReLU sums are double cumulative sums.

  LatticeFunction forward(const ParamVector& phi) const {
    check_params(phi);
    const int n = n_intervals();
    const double inv_n2 = 1.0 / (static_cast<double>(n) * n);
    auto w = phi.weights();
    std::vector<double> g(grid_.size());
    // h_l = sum_{j<l} w_j (l - j) = h_{l-1} + sum_{j<l} w_j
    double running = 0.0;
    double h = 0.0;
    g[0] = phi.bias();
    for (int l = 1; l <= n; ++l) {
      if (l - 1 >= 1) running += w[l - 2];
      h += running;
      g[l] = h * inv_n2 + phi.bias() + phi.slope() * grid_.node(l);
    }
    return LatticeFunction(grid_, std::move(g));
  }

  ParamVector adjoint(const LatticeFunction& g) const {
    check_function(g);
    const int n = n_intervals();
    const double inv_n = 1.0 / n;
    std::vector<double> w(n - 1);
    // u_j = sum_{l>j} (l - j) g_l = u_{j+1} + sum_{l>j} g_l
    double tail = 0.0;
    double u = 0.0;
    for (int j = n - 1; j >= 1; --j) {
      tail += g[j + 1];
      u += tail;
      w[j - 1] = u * inv_n * inv_n;
    }
    double sb = 0.0;
    double sc = 0.0;
    for (int l = 0; l <= n; ++l) {
      sb += g[l];
      sc += g[l] * grid_.node(l);
    }
    return ParamVector::with_affine(n, std::move(w), sb * inv_n, sc * inv_n);
  }

  /// Unique parameters representing f: (discrete Laplacian of f, f(0), N(f(t_1) - f(t_0))).
  ParamVector exact_params(const LatticeFunction& f) const;

  void check_params(const ParamVector& phi) const {
    if (!phi.has_affine() || phi.n_intervals() != n_intervals() || phi.dim() != param_dim()) {
      throw InvalidArgument("parameter vector does not match the ReLU model dimension");
    }
  }

  void check_function(const LatticeFunction& g) const {
    if (!(g.grid() == grid_)) throw InvalidArgument("function is not on the model grid");
  }

 private:
  Grid grid_;
  ReluVariant variant_;
};

/// N^2 (f(t_{j-1}) - 2 f(t_j) + f(t_{j+1})) at the interior nodes t_1..t_{N-1}.
inline std::vector<double> discrete_laplacian(const LatticeFunction& f) {
  const Grid& g = f.grid();
  if (g.kind() != GridKind::UnitInterval) {
    throw InvalidArgument("discrete_laplacian needs a unit-interval grid");
  }
  const int n = g.n_intervals();
  const double n2 = static_cast<double>(n) * n;
  std::vector<double> out(n - 1);
  for (int j = 1; j <= n - 1; ++j) out[j - 1] = n2 * (f[j - 1] - 2.0 * f[j] + f[j + 1]);
  return out;
}

inline ParamVector ReluModel::exact_params(const LatticeFunction& f) const {
  check_function(f);
  return ParamVector::with_affine(n_intervals(), discrete_laplacian(f), f[0],
                                  n_intervals() * (f[1] - f[0]));
}

inline LatticeFunction apply_T(const ReluModel& model, const ParamVector& phi) {
  return model.forward(phi);
}

inline ParamVector apply_Tstar(const ReluModel& model, const LatticeFunction& g) {
  return model.adjoint(g);
}

inline ParamVector exact_params(const ReluModel& model, const LatticeFunction& f) {
  return model.exact_params(f);
}

/// (1/N) sum (f - g)^2 over all nodes.
inline double mse_loss(const LatticeFunction& f, const LatticeFunction& g) {
  const LatticeFunction d = f - g;
  return inner_product_X(d, d);
}

}  // namespace fixbias
