#include <doctest.h>

#include <cmath>
#include <numbers>

#include "larope/rng.hpp"
#include "larope/rotary.hpp"

using namespace larope;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Independent oracle: explicit 2×2 matrices [[c, -s], [s, c]] per subvector.
std::vector<double> rotation_oracle(const std::vector<double>& x, double position, double base) {
  const std::size_t d = x.size();
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d / 2; ++j) {
    const double theta = 1.0 / std::pow(base, static_cast<double>(2 * j) / static_cast<double>(d));
    const double r[2][2] = {{std::cos(position * theta), -std::sin(position * theta)},
                            {std::sin(position * theta), std::cos(position * theta)}};
    out[2 * j] = r[0][0] * x[2 * j] + r[0][1] * x[2 * j + 1];
    out[2 * j + 1] = r[1][0] * x[2 * j] + r[1][1] * x[2 * j + 1];
  }
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

RotaryConfig cfg_of(std::size_t d, double gamma = 10.0, Variant v = Variant::RoPE) {
  return RotaryConfig{d, 10000.0, gamma, v};
}

}  // namespace

TEST_CASE("frequencies follow base^(-2j/d)") {
  const auto f4 = frequencies(cfg_of(4));
  REQUIRE(f4.size() == 2);
  CHECK(f4[0] == 1.0);
  CHECK(f4[1] == doctest::Approx(0.01).epsilon(1e-14));

  const auto f8 = frequencies(cfg_of(8));
  const double expected[] = {1.0, 1e-1, 1e-2, 1e-3};
  for (std::size_t j = 0; j < 4; ++j) CHECK(f8[j] == doctest::Approx(expected[j]).epsilon(1e-14));

  for (std::size_t d : {2, 6, 64, 128}) {
    const auto f = frequencies(cfg_of(d));
    CHECK(f[0] == 1.0);
    for (std::size_t j = 1; j < f.size(); ++j) CHECK(f[j] < f[j - 1]);
  }
}

TEST_CASE("RotaryConfig validation") {
  CHECK_THROWS_AS(frequencies(cfg_of(3)), std::invalid_argument);
  CHECK_THROWS_AS(frequencies(cfg_of(0)), std::invalid_argument);
  CHECK_THROWS_AS(frequencies(RotaryConfig{4, 1.0, 10.0, Variant::RoPE}), std::invalid_argument);
  CHECK_THROWS_AS(frequencies(RotaryConfig{4, 10000.0, 0.0, Variant::RoPE}), std::invalid_argument);
  CHECK(parse_variant("LARoPE") == Variant::LARoPE);
  CHECK(parse_variant("rope") == Variant::RoPE);
  CHECK_THROWS_AS(parse_variant("alibi"), std::invalid_argument);
}

TEST_CASE("rotate_rope examples") {
  Rng rng(1);
  const auto x = random_vec(rng, 8);
  CHECK(rotate_rope(x, 0, cfg_of(8)) == x);

  // d = 2 has θ_0 = 1 for any base; γ = π at p = 1, L = 2 gives the angle π/2.
  const std::vector<double> e0{1.0, 0.0};
  const auto turned = rotate_larope(e0, 1, 2, RotaryConfig{2, 10000.0, std::numbers::pi, Variant::LARoPE});
  CHECK(std::abs(turned[0]) < 1e-12);
  CHECK(std::abs(turned[1] - 1.0) < 1e-12);

  CHECK(max_diff(rotate_rope(x, 7, cfg_of(8)), rotation_oracle(x, 7.0, 10000.0)) < 1e-12);
  CHECK_THROWS_AS(rotate_rope(x, 1, cfg_of(4)), DimensionError);
}

TEST_CASE("rotate_larope examples") {
  Rng rng(2);
  const auto x = random_vec(rng, 8);
  CHECK(rotate_larope(x, 0, 17, cfg_of(8)) == x);

  for (std::size_t length = 1; length <= 12; ++length) {
    const auto cfg = cfg_of(8, static_cast<double>(length));
    for (std::size_t p = 0; p < length; ++p) {
      CHECK(max_diff(rotate_larope(x, p, length, cfg), rotate_rope(x, p, cfg)) < 1e-12);
    }
  }

  CHECK(max_diff(rotate_larope(x, 3, 10, cfg_of(8, 10.0)), rotation_oracle(x, 10.0 * 0.3, 10000.0)) <
        1e-12);
  CHECK_THROWS_AS(rotate_larope(x, 0, 0, cfg_of(8)), std::invalid_argument);
  CHECK_THROWS_AS(rotate_larope(x, 10, 10, cfg_of(8)), std::out_of_range);
}

TEST_CASE("apply_to_sequence rotates each row at its own position") {
  Rng rng(3);
  const EmbeddingSequence single(rng.uniform_matrix(1, 8, -1, 1));
  CHECK(apply_to_sequence(single, cfg_of(8, 10.0, Variant::LARoPE)).values() == single.values());

  const EmbeddingSequence seq(rng.uniform_matrix(3, 8, -1, 1));
  const auto rotated = apply_to_sequence(seq, cfg_of(8));
  for (std::size_t p = 0; p < 3; ++p) {
    const std::vector<double> row(seq.values().row(p).begin(), seq.values().row(p).end());
    const std::vector<double> got(rotated.values().row(p).begin(), rotated.values().row(p).end());
    CHECK(max_diff(got, rotate_rope(row, p, cfg_of(8))) < 1e-15);
  }

  const EmbeddingSequence five(rng.uniform_matrix(5, 8, -1, 1));
  const auto la = apply_to_sequence(five, cfg_of(8, 5.0, Variant::LARoPE));
  const auto ro = apply_to_sequence(five, cfg_of(8, 5.0, Variant::RoPE));
  CHECK(max_abs_diff(la.values(), ro.values()) < 1e-12);

  CHECK_THROWS_AS(apply_to_sequence(seq, cfg_of(4)), DimensionError);
  CHECK_THROWS_AS(EmbeddingSequence(Matrix(0, 4)), std::invalid_argument);
}

TEST_CASE("score_complex_rope matches rotate-then-dot") {
  Rng rng(4);
  const auto cfg = cfg_of(8);
  const auto q = random_vec(rng, 8);
  const auto k = random_vec(rng, 8);
  CHECK(std::abs(score_complex_rope(q, k, 9, 9, cfg) - dot(q, k)) < 1e-12);
  CHECK(std::abs(score_complex_rope(q, k, 5, 2, cfg) -
                 dot(rotation_oracle(q, 5, 1e4), rotation_oracle(k, 2, 1e4))) < 1e-9);
  CHECK(std::abs(score_complex_rope(q, k, 16, 13, cfg) - score_complex_rope(q, k, 5, 2, cfg)) < 1e-9);
}

TEST_CASE("score_complex_larope examples") {
  Rng rng(5);
  const auto cfg = cfg_of(8, 10.0, Variant::LARoPE);
  const auto q = random_vec(rng, 8);
  const auto k = random_vec(rng, 8);
  CHECK(std::abs(score_complex_larope(q, k, 2, 4, 3, 6, cfg) - dot(q, k)) < 1e-9);
  CHECK(std::abs(score_complex_larope(q, k, 3 * 3, 3 * 7, 4, 11, cfg) -
                 score_complex_larope(q, k, 3, 7, 4, 11, cfg)) < 1e-9);
  const double oracle = dot(rotation_oracle(q, 10.0 * 3.0 / 7.0, 1e4),
                            rotation_oracle(k, 10.0 * 4.0 / 11.0, 1e4));
  CHECK(std::abs(score_complex_larope(q, k, 3, 7, 4, 11, cfg) - oracle) < 1e-9);
  CHECK_THROWS_AS(score_complex_larope(q, k, 7, 7, 0, 3, cfg), std::out_of_range);
  CHECK_THROWS_AS(score_complex_larope(q, k, 0, 7, 3, 3, cfg), std::out_of_range);
}

TEST_CASE("property: rotations preserve norm and are linear") {
  Rng rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 * rng.uniform_int(1, 32);
    const auto cfg = cfg_of(d, rng.uniform(0.5, 20.0));
    const auto x = random_vec(rng, d);
    const auto y = random_vec(rng, d);
    const auto length = rng.uniform_int(1, 200);
    const auto p = rng.uniform_int(0, length - 1);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);

    CHECK(std::abs(norm2(rotate_rope(x, p, cfg)) - norm2(x)) < 1e-12);
    CHECK(std::abs(norm2(rotate_larope(x, p, length, cfg)) - norm2(x)) < 1e-12);

    std::vector<double> mix(d);
    for (std::size_t i = 0; i < d; ++i) mix[i] = a * x[i] + b * y[i];
    const auto rx = rotate_larope(x, p, length, cfg);
    const auto ry = rotate_larope(y, p, length, cfg);
    const auto rmix = rotate_larope(mix, p, length, cfg);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(rmix[i] - (a * rx[i] + b * ry[i])) < 1e-12);
  }
}

TEST_CASE("property: LARoPE score depends only on m/Lq - n/Lk") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = std::size_t{2} << rng.uniform_int(0, 5);
    const auto cfg = cfg_of(d, rng.uniform(1.0, 20.0), Variant::LARoPE);
    const auto q = random_vec(rng, d);
    const auto k = random_vec(rng, d);
    // Pairs (m, Lq, n, Lk) and (m', Lq', n', Lk') with m/Lq - n/Lk equal:
    // shift both normalized indices by the same t = s/g.
    const auto g = rng.uniform_int(2, 9);
    const auto lq = g * rng.uniform_int(1, 8);
    const auto lk = g * rng.uniform_int(1, 8);
    const auto m = rng.uniform_int(0, lq - 1);
    const auto n = rng.uniform_int(0, lk - 1);
    const auto s = rng.uniform_int(0, g - 1);
    const auto m2 = m + s * (lq / g);
    const auto n2 = n + s * (lk / g);
    if (m2 >= lq || n2 >= lk) continue;
    CHECK(std::abs(score_complex_larope(q, k, m, lq, n, lk, cfg) -
                   score_complex_larope(q, k, m2, lq, n2, lk, cfg)) < 1e-9);
  }
}
