#pragma once

#include <cmath>
#include <span>
#include <string>

#include "fixbias/errors.hpp"

namespace fixbias {

struct LineFit {
  double slope;
  double intercept;
};

/// Ordinary least-squares line y = slope * x + intercept.
inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("least_squares_line: size mismatch");
  if (x.size() < 2) throw InvalidArgument("least_squares_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("least_squares_line: abscissae are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace fixbias
