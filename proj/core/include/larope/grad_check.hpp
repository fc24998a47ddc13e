#pragma once

#include <functional>

#include "larope/matrix.hpp"

namespace larope {

/// Central-difference gradient check.
///
/// Perturbs each entry of `x` by ±eps, evaluates `f`, and returns
///   max_i |(f(x+eps·e_i) - f(x-eps·e_i)) / (2·eps) - g_i| / (|g_i| + 1e-8)
/// where g = analytic_grad. Throws NumericError if any evaluation of `f` is
/// non-finite and DimensionError if the gradient shape differs from x.
double grad_check(const std::function<double(const Matrix&)>& f, const Matrix& x,
                  const Matrix& analytic_grad, double eps);

/// Central-difference estimate of ∇f at x; the oracle side of grad_check.
Matrix numerical_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double eps);

}  // namespace larope
