#include "larope/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace larope {

namespace {

double checked_eval(const std::function<double(const Matrix&)>& f, const Matrix& x) {
  const double v = f(x);
  if (!std::isfinite(v)) throw NumericError("grad_check: objective evaluated to a non-finite value");
  return v;
}

}  // namespace

Matrix numerical_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double eps) {
  Matrix probe = x;
  Matrix grad(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + eps;
    const double plus = checked_eval(f, probe);
    probe.data()[i] = orig - eps;
    const double minus = checked_eval(f, probe);
    probe.data()[i] = orig;
    grad.data()[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

double grad_check(const std::function<double(const Matrix&)>& f, const Matrix& x,
                  const Matrix& analytic_grad, double eps) {
  if (!x.same_shape(analytic_grad)) {
    throw DimensionError("grad_check: gradient shape " + shape_string(analytic_grad) +
                         " does not match " + shape_string(x));
  }
  const Matrix numeric = numerical_gradient(f, x, eps);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = analytic_grad.data()[i];
    worst = std::max(worst, std::abs(numeric.data()[i] - g) / (std::abs(g) + 1e-8));
  }
  return worst;
}

}  // namespace larope
