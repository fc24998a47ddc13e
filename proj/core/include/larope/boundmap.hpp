#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "larope/matrix.hpp"
#include "larope/rotary.hpp"

namespace larope {

/// How each partial term S_j of the relative bound is formed.
enum class SjMode {
  /// S_j = |Σ_{k<=j} e^{iδθ_k}|. Decays with |δ|; the default.
  MagnitudeOfPartialSum,
  /// S_j = Σ_{k<=j} |e^{iδθ_k}| = j + 1. Constant in δ; kept as a fidelity check.
  SumOfMagnitudes,
};

std::string_view to_string(SjMode mode) noexcept;
/// Accepts "partial-sum" / "magnitudes". Throws std::invalid_argument.
SjMode parse_sj_mode(std::string_view name);

/// Σ_{j<d/2} S_j at relative phase distance delta.
double relative_bound(double delta, const RotaryConfig& cfg, SjMode mode);

/// Relative distance between query m of lq and key n of lk under a variant:
/// m - n for RoPE, γ(m/lq - n/lk) for LARoPE.
double relative_distance(Variant variant, std::size_t m, std::size_t lq, std::size_t n,
                         std::size_t lk, double gamma) noexcept;

struct BoundGrid {
  std::size_t lq = 0;
  std::size_t lk = 0;
  Matrix values;  ///< lq × lk
  Variant variant = Variant::RoPE;
  RotaryConfig cfg;
  SjMode sj_mode = SjMode::MagnitudeOfPartialSum;
};

/// Evaluates relative_bound on every (m, n) cell. `variant` overrides cfg.variant.
BoundGrid bound_grid(std::size_t lq, std::size_t lk, const RotaryConfig& cfg, Variant variant,
                     SjMode mode);

/// Column of the row maximum for every row; ties go to the lowest index.
std::vector<std::size_t> row_argmax(const Matrix& m);

/// Endpoints-aligned diagonal position m·(lk-1)/(lq-1); (lk-1)/2 when lq == 1.
double ideal_diagonal(std::size_t m, std::size_t lq, std::size_t lk) noexcept;

/// Mean over rows of |argmax_n grid(m, ·) - ideal_diagonal(m)| / lk, in [0, 1].
double ridge_deviation(const BoundGrid& grid);

}  // namespace larope
