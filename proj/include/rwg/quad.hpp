#pragma once
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwg/errors.hpp"

namespace rwg {

// Adaptive Gauss-Kronrod on [a,b]; rel_tol is the target relative accuracy.
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-11) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  double v = gauss_kronrod<double, 61>::integrate(std::forward<F>(f), a, b, 15, rel_tol, &err);
  if (!(std::isfinite(v)))
    throw NumericalError("quadrature produced a non-finite value");
  return v;
}

}  // namespace rwg
