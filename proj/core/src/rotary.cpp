#include "larope/rotary.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace larope {

namespace {

void require_dim(std::span<const double> x, const RotaryConfig& cfg, const char* op) {
  if (x.size() != cfg.dim) {
    throw DimensionError(std::string(op) + ": vector length " + std::to_string(x.size()) +
                         " does not match head dimension " + std::to_string(cfg.dim));
  }
}

void require_in_sequence(std::size_t p, std::size_t length, const char* op) {
  if (length == 0) throw std::invalid_argument(std::string(op) + ": sequence length must be >= 1");
  if (p >= length) {
    throw std::out_of_range(std::string(op) + ": position " + std::to_string(p) +
                            " is outside a sequence of length " + std::to_string(length));
  }
}

// Σ_j Re[q_j conj(k_j) e^{i·phase·θ_j}] with complex pairs.
double complex_score(std::span<const double> q, std::span<const double> k, double phase,
                     const RotaryConfig& cfg) {
  const auto theta = frequencies(cfg);
  double total = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const std::complex<double> qj(q[2 * j], q[2 * j + 1]);
    const std::complex<double> kj(k[2 * j], k[2 * j + 1]);
    total += (qj * std::conj(kj) * std::polar(1.0, phase * theta[j])).real();
  }
  return total;
}

}  // namespace

std::string_view to_string(Variant v) noexcept {
  return v == Variant::RoPE ? "rope" : "larope";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rope") return Variant::RoPE;
  if (lower == "larope") return Variant::LARoPE;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "' (expected rope|larope)");
}

void RotaryConfig::validate() const {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("head dimension d must be even and >= 2, got " +
                                std::to_string(dim));
  }
  if (!(base > 1.0) || !std::isfinite(base)) {
    throw std::invalid_argument("frequency base must be > 1");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > 0");
}

std::vector<double> frequencies(const RotaryConfig& cfg) {
  cfg.validate();
  std::vector<double> theta(cfg.dim / 2);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    theta[j] = std::pow(cfg.base, -2.0 * static_cast<double>(j) / static_cast<double>(cfg.dim));
  }
  return theta;
}

double position_phase(Variant variant, std::size_t p, std::size_t length, double gamma) noexcept {
  if (variant == Variant::RoPE) return static_cast<double>(p);
  return gamma * static_cast<double>(p) / static_cast<double>(length);
}

void rotate_in_place(std::span<double> x, double phase, std::span<const double> theta) {
  if (x.size() != 2 * theta.size()) {
    throw DimensionError("rotate_in_place: vector length " + std::to_string(x.size()) +
                         " needs " + std::to_string(x.size() / 2) + " frequencies, got " +
                         std::to_string(theta.size()));
  }
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double angle = phase * theta[j];
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double a = x[2 * j];
    const double b = x[2 * j + 1];
    x[2 * j] = a * c - b * s;
    x[2 * j + 1] = a * s + b * c;
  }
}

std::vector<double> rotate_rope(std::span<const double> x, std::size_t p, const RotaryConfig& cfg) {
  require_dim(x, cfg, "rotate_rope");
  std::vector<double> out(x.begin(), x.end());
  rotate_in_place(out, position_phase(Variant::RoPE, p, 1, cfg.gamma), frequencies(cfg));
  return out;
}

std::vector<double> rotate_larope(std::span<const double> x, std::size_t p, std::size_t length,
                                  const RotaryConfig& cfg) {
  require_dim(x, cfg, "rotate_larope");
  require_in_sequence(p, length, "rotate_larope");
  std::vector<double> out(x.begin(), x.end());
  rotate_in_place(out, position_phase(Variant::LARoPE, p, length, cfg.gamma), frequencies(cfg));
  return out;
}

EmbeddingSequence::EmbeddingSequence(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0) throw std::invalid_argument("EmbeddingSequence: length must be >= 1");
}

Matrix rotate_rows(const Matrix& m, const RotaryConfig& cfg, bool inverse) {
  if (m.cols() != cfg.dim) {
    throw DimensionError("rotate_rows: width " + std::to_string(m.cols()) +
                         " does not match head dimension " + std::to_string(cfg.dim));
  }
  const auto theta = frequencies(cfg);
  Matrix out = m;
  for (std::size_t p = 0; p < m.rows(); ++p) {
    const double phase = position_phase(cfg.variant, p, m.rows(), cfg.gamma);
    rotate_in_place(out.row(p), inverse ? -phase : phase, theta);
  }
  return out;
}

EmbeddingSequence apply_to_sequence(const EmbeddingSequence& seq, const RotaryConfig& cfg) {
  return EmbeddingSequence(rotate_rows(seq.values(), cfg));
}

double score_complex_rope(std::span<const double> q, std::span<const double> k, std::size_t m,
                          std::size_t n, const RotaryConfig& cfg) {
  require_dim(q, cfg, "score_complex_rope");
  require_dim(k, cfg, "score_complex_rope");
  return complex_score(q, k, static_cast<double>(m) - static_cast<double>(n), cfg);
}

double score_complex_larope(std::span<const double> q, std::span<const double> k, std::size_t m,
                            std::size_t lq, std::size_t n, std::size_t lk,
                            const RotaryConfig& cfg) {
  require_dim(q, cfg, "score_complex_larope");
  require_dim(k, cfg, "score_complex_larope");
  require_in_sequence(m, lq, "score_complex_larope");
  require_in_sequence(n, lk, "score_complex_larope");
  const double delta = static_cast<double>(m) / static_cast<double>(lq) -
                       static_cast<double>(n) / static_cast<double>(lk);
  return complex_score(q, k, cfg.gamma * delta, cfg);
}

}  // namespace larope
