#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "larope/matrix.hpp"

namespace larope {

enum class Variant { RoPE, LARoPE };

std::string_view to_string(Variant v) noexcept;
/// Accepts "rope" / "larope" (case-insensitive). Throws std::invalid_argument.
Variant parse_variant(std::string_view name);

struct RotaryConfig {
  std::size_t dim = 64;  ///< head dimension d; even, >= 2
  double base = 10000.0;
  double gamma = 10.0;   ///< LARoPE scaling hyperparameter
  Variant variant = Variant::RoPE;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

/// θ_j = base^(-2j/d) for j in [0, d/2).
std::vector<double> frequencies(const RotaryConfig& cfg);

/// Rotation phase of a position: p for RoPE, γ·p/L for LARoPE. Subvector j is
/// rotated by phase·θ_j.
double position_phase(Variant variant, std::size_t p, std::size_t length, double gamma) noexcept;

/// Rotates each pair (x[2j], x[2j+1]) by phase·theta[j]. This is the single
/// rotation kernel behind every public rotate; `theta` must have x.size()/2
/// entries.
void rotate_in_place(std::span<double> x, double phase, std::span<const double> theta);

/// R_θ(x, p): standard rotary embedding at absolute position p.
std::vector<double> rotate_rope(std::span<const double> x, std::size_t p, const RotaryConfig& cfg);

/// R'_θ(x, p, L): length-aware rotary embedding. Requires L >= 1 and p < L.
std::vector<double> rotate_larope(std::span<const double> x, std::size_t p, std::size_t length,
                                  const RotaryConfig& cfg);

/// L×d sequence with implicit 0-based positions.
class EmbeddingSequence {
 public:
  explicit EmbeddingSequence(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  std::size_t length() const noexcept { return values_.rows(); }
  std::size_t width() const noexcept { return values_.cols(); }

 private:
  Matrix values_;
};

/// Rotates every row p according to cfg.variant (L = sequence length for LARoPE).
EmbeddingSequence apply_to_sequence(const EmbeddingSequence& seq, const RotaryConfig& cfg);

/// Row-wise rotation of a raw L×d matrix; `inverse` rotates by the negated
/// angles, which is the adjoint of the forward rotation.
Matrix rotate_rows(const Matrix& m, const RotaryConfig& cfg, bool inverse = false);

/// Re Σ_j q_j conj(k_j) e^{i(m-n)θ_j}, reading each pair [a, b] as a + ib.
double score_complex_rope(std::span<const double> q, std::span<const double> k, std::size_t m,
                          std::size_t n, const RotaryConfig& cfg);

/// Re Σ_j q_j conj(k_j) e^{iγ(m/Lq - n/Lk)θ_j}. Requires m < Lq and n < Lk.
double score_complex_larope(std::span<const double> q, std::span<const double> k, std::size_t m,
                            std::size_t lq, std::size_t n, std::size_t lk,
                            const RotaryConfig& cfg);

}  // namespace larope
