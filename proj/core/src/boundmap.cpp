#include "larope/boundmap.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace larope {

std::string_view to_string(SjMode mode) noexcept {
  return mode == SjMode::MagnitudeOfPartialSum ? "partial-sum" : "magnitudes";
}

SjMode parse_sj_mode(std::string_view name) {
  if (name == "partial-sum") return SjMode::MagnitudeOfPartialSum;
  if (name == "magnitudes") return SjMode::SumOfMagnitudes;
  throw std::invalid_argument("unknown sj-mode '" + std::string(name) +
                              "' (expected partial-sum|magnitudes)");
}

double relative_bound(double delta, const RotaryConfig& cfg, SjMode mode) {
  const auto theta = frequencies(cfg);
  double total = 0.0;
  if (mode == SjMode::SumOfMagnitudes) {
    // |e^{iφ}| == 1 for every term, so S_j counts its terms.
    for (std::size_t j = 0; j < theta.size(); ++j) total += static_cast<double>(j + 1);
    return total;
  }
  double re = 0.0;
  double im = 0.0;
  for (double t : theta) {
    re += std::cos(delta * t);
    im += std::sin(delta * t);
    total += std::hypot(re, im);
  }
  return total;
}

double relative_distance(Variant variant, std::size_t m, std::size_t lq, std::size_t n,
                         std::size_t lk, double gamma) noexcept {
  if (variant == Variant::RoPE) return static_cast<double>(m) - static_cast<double>(n);
  return gamma * (static_cast<double>(m) / static_cast<double>(lq) -
                  static_cast<double>(n) / static_cast<double>(lk));
}

BoundGrid bound_grid(std::size_t lq, std::size_t lk, const RotaryConfig& cfg, Variant variant,
                     SjMode mode) {
  if (lq == 0 || lk == 0) throw std::invalid_argument("bound_grid: lengths must be >= 1");
  cfg.validate();
  BoundGrid grid{lq, lk, Matrix(lq, lk), variant, cfg, mode};
  grid.cfg.variant = variant;
  for (std::size_t m = 0; m < lq; ++m) {
    for (std::size_t n = 0; n < lk; ++n) {
      grid.values(m, n) = relative_bound(relative_distance(variant, m, lq, n, lk, cfg.gamma), cfg, mode);
    }
  }
  return grid;
}

std::vector<std::size_t> row_argmax(const Matrix& m) {
  std::vector<std::size_t> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[out[r]]) out[r] = c;
    }
  }
  return out;
}

double ideal_diagonal(std::size_t m, std::size_t lq, std::size_t lk) noexcept {
  if (lq == 1) return static_cast<double>(lk - 1) / 2.0;
  return static_cast<double>(m) * static_cast<double>(lk - 1) / static_cast<double>(lq - 1);
}

double ridge_deviation(const BoundGrid& grid) {
  if (grid.values.rows() != grid.lq || grid.values.cols() != grid.lk || grid.lq == 0) {
    throw DimensionError("ridge_deviation: grid values do not match its lengths");
  }
  const auto peaks = row_argmax(grid.values);
  double total = 0.0;
  for (std::size_t m = 0; m < grid.lq; ++m) {
    total += std::abs(static_cast<double>(peaks[m]) - ideal_diagonal(m, grid.lq, grid.lk));
  }
  return total / static_cast<double>(grid.lq) / static_cast<double>(grid.lk);
}

}  // namespace larope
