#pragma once

#include <concepts>
#include <cstddef>

#include "fixbias/grid.hpp"

namespace fixbias {

/// A linear parameter-to-function map T together with its adjoint T* under the
/// model's parameter and function inner products.
template <class M>
concept NetworkModel = requires(const M& m, const ParamVector& p, const LatticeFunction& f) {
  { m.grid() } -> std::convertible_to<const Grid&>;
  { m.param_dim() } -> std::convertible_to<std::size_t>;
  { m.zero_params() } -> std::same_as<ParamVector>;
  { m.forward(p) } -> std::same_as<LatticeFunction>;
  { m.adjoint(f) } -> std::same_as<ParamVector>;
};

/// Models whose T is a bijection with a directly computable inverse.
template <class M>
concept InvertibleModel = NetworkModel<M> && requires(const M& m, const LatticeFunction& f) {
  { m.exact_params(f) } -> std::same_as<ParamVector>;
};

}  // namespace fixbias
