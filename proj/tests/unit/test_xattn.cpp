#include <doctest.h>

#include <cmath>
#include <limits>

#include "larope/grad_check.hpp"
#include "larope/xattn.hpp"

using namespace larope;

namespace {

CrossAttentionLayer identity_layer() {
  CrossAttentionLayer layer;
  layer.wq = Matrix::identity(2);
  layer.wk = Matrix::identity(2);
  layer.wv = Matrix::identity(2);
  layer.wo = Matrix::identity(2);
  layer.cfg = RotaryConfig{2, 10000.0, 10.0, Variant::RoPE};
  return layer;
}

double weighted_sum(const Matrix& a, const Matrix& w) { return sum(hadamard(a, w)); }

struct Fixture {
  CrossAttentionLayer layer;
  Matrix queries;
  Matrix keys;
  Matrix cotangent;
};

Fixture make_fixture(Variant variant, std::uint64_t seed) {
  Rng rng(seed);
  Fixture fx;
  fx.layer = CrossAttentionLayer::initialize(6, RotaryConfig{4, 100.0, 3.0, variant}, rng);
  fx.queries = rng.normal_matrix(5, 6);
  fx.keys = rng.normal_matrix(7, 6);
  fx.cotangent = rng.normal_matrix(5, 6);
  return fx;
}

double loss_of(const CrossAttentionLayer& layer, const Matrix& q, const Matrix& k, const Matrix& w) {
  return weighted_sum(forward(layer, EmbeddingSequence(q), EmbeddingSequence(k)).output, w);
}

}  // namespace

TEST_CASE("forward on a hand-worked two-key example") {
  const auto layer = identity_layer();
  const auto result = forward(layer, EmbeddingSequence(Matrix{{1.0, 0.0}}),
                              EmbeddingSequence(Matrix{{1.0, 0.0}, {0.0, 1.0}}));
  // Key 1 at position 1 turns by θ_0 = 1 rad: [0, 1] -> [-sin 1, cos 1].
  CHECK(std::abs(result.map.pre_softmax(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(result.map.pre_softmax(0, 1) + std::sin(1.0)) < 1e-15);
  const double e0 = std::exp(1.0 / std::sqrt(2.0));
  const double e1 = std::exp(-std::sin(1.0) / std::sqrt(2.0));
  const double p0 = e0 / (e0 + e1);
  CHECK(std::abs(result.map.post_softmax(0, 0) - p0) < 1e-15);
  CHECK(std::abs(result.output(0, 0) - p0) < 1e-15);
  CHECK(std::abs(result.output(0, 1) - (1.0 - p0)) < 1e-15);
}

TEST_CASE("pre-softmax scores equal the complex-form scores of the projections") {
  for (Variant variant : {Variant::RoPE, Variant::LARoPE}) {
    const auto fx = make_fixture(variant, 3);
    const auto result = forward(fx.layer, EmbeddingSequence(fx.queries), EmbeddingSequence(fx.keys));
    const Matrix qp = matmul(fx.queries, fx.layer.wq);
    const Matrix kp = matmul(fx.keys, fx.layer.wk);
    for (std::size_t m = 0; m < 5; ++m) {
      for (std::size_t n = 0; n < 7; ++n) {
        const double expected = variant == Variant::RoPE
                                    ? score_complex_rope(qp.row(m), kp.row(n), m, n, fx.layer.cfg)
                                    : score_complex_larope(qp.row(m), kp.row(n), m, 5, n, 7, fx.layer.cfg);
        CHECK(std::abs(result.map.pre_softmax(m, n) - expected) < 1e-12);
      }
    }
    for (std::size_t m = 0; m < 5; ++m) {
      double row = 0.0;
      for (double p : result.map.post_softmax.row(m)) row += p;
      CHECK(std::abs(row - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("backward agrees with central differences for every input") {
  for (Variant variant : {Variant::RoPE, Variant::LARoPE}) {
    CAPTURE(to_string(variant));
    const auto fx = make_fixture(variant, 11);
    const auto result = forward(fx.layer, EmbeddingSequence(fx.queries), EmbeddingSequence(fx.keys));
    const auto grads = backward(fx.layer, result.cache, fx.cotangent);

    auto with = [&](Matrix CrossAttentionLayer::*field) {
      return [&, field](const Matrix& w) {
        CrossAttentionLayer probe = fx.layer;
        probe.*field = w;
        return loss_of(probe, fx.queries, fx.keys, fx.cotangent);
      };
    };
    CHECK(grad_check(with(&CrossAttentionLayer::wq), fx.layer.wq, grads.wq, 1e-6) < 1e-4);
    CHECK(grad_check(with(&CrossAttentionLayer::wk), fx.layer.wk, grads.wk, 1e-6) < 1e-4);
    CHECK(grad_check(with(&CrossAttentionLayer::wv), fx.layer.wv, grads.wv, 1e-6) < 1e-4);
    CHECK(grad_check(with(&CrossAttentionLayer::wo), fx.layer.wo, grads.wo, 1e-6) < 1e-4);
    CHECK(grad_check([&](const Matrix& q) { return loss_of(fx.layer, q, fx.keys, fx.cotangent); },
                     fx.queries, grads.queries, 1e-6) < 1e-4);
    CHECK(grad_check([&](const Matrix& k) { return loss_of(fx.layer, fx.queries, k, fx.cotangent); },
                     fx.keys, grads.keys, 1e-6) < 1e-4);
  }
}

TEST_CASE("zero cotangent gives zero gradients") {
  const auto fx = make_fixture(Variant::LARoPE, 5);
  const auto result = forward(fx.layer, EmbeddingSequence(fx.queries), EmbeddingSequence(fx.keys));
  const auto grads = backward(fx.layer, result.cache, Matrix(5, 6));
  for (const Matrix* g : {&grads.wq, &grads.wk, &grads.wv, &grads.wo, &grads.queries, &grads.keys})
    CHECK(max_abs(*g) == 0.0);
  CHECK_THROWS_AS(backward(fx.layer, result.cache, Matrix(4, 6)), DimensionError);
}

TEST_CASE("LARoPE with gamma = L matches RoPE on equal-length sequences") {
  auto fx = make_fixture(Variant::RoPE, 8);
  const Matrix keys = Rng(9).normal_matrix(5, 6);
  const auto rope = forward(fx.layer, EmbeddingSequence(fx.queries), EmbeddingSequence(keys));
  fx.layer.cfg.variant = Variant::LARoPE;
  fx.layer.cfg.gamma = 5.0;
  const auto larope = forward(fx.layer, EmbeddingSequence(fx.queries), EmbeddingSequence(keys));
  CHECK(max_abs_diff(rope.output, larope.output) < 1e-12);
}

TEST_CASE("initialize is deterministic and bounded") {
  const RotaryConfig cfg{8, 10000.0, 10.0, Variant::LARoPE};
  Rng a(77);
  Rng b(77);
  const auto la = CrossAttentionLayer::initialize(16, cfg, a);
  const auto lb = CrossAttentionLayer::initialize(16, cfg, b);
  CHECK(max_abs_diff(la.wq, lb.wq) == 0.0);
  CHECK(max_abs_diff(la.wo, lb.wo) == 0.0);
  CHECK(max_abs(la.wk) <= 0.25);
  CHECK(la.wo.rows() == 8);
  CHECK(la.wo.cols() == 16);
  CHECK(la.model_dim() == 16);
  CHECK(la.head_dim() == 8);

  auto broken = la;
  broken.wk = Matrix(16, 6);
  CHECK_THROWS_AS(broken.validate(), DimensionError);
  CHECK_THROWS_AS(forward(la, EmbeddingSequence(Matrix(2, 15)), EmbeddingSequence(Matrix(3, 16))),
                  DimensionError);
}

TEST_CASE("average_maps") {
  AttentionScoreMap a;
  a.post_softmax = Matrix{{0.5, 0.25, 0.25}};
  AttentionScoreMap b;
  b.post_softmax = Matrix{{0.1, 0.1, 0.8}};
  const std::vector<AttentionScoreMap> maps{a, b};

  const Matrix mean = average_maps(maps, {});
  CHECK(std::abs(mean(0, 0) - 0.3) < 1e-15);
  CHECK(std::abs(mean(0, 2) - 0.525) < 1e-15);

  // Dropping key 2 leaves [0.3, 0.175] renormalized.
  const Matrix dropped = average_maps(maps, {2});
  REQUIRE(dropped.cols() == 2);
  CHECK(std::abs(dropped(0, 0) - 0.3 / 0.475) < 1e-15);
  CHECK(std::abs(dropped(0, 0) + dropped(0, 1) - 1.0) < 1e-15);

  CHECK_THROWS_AS(average_maps(maps, {0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(average_maps(maps, {3}), std::out_of_range);
  CHECK_THROWS_AS(average_maps(std::span<const AttentionScoreMap>{}, {}), std::invalid_argument);
}

TEST_CASE("alignment_error examples and tie-break") {
  const Matrix map{{0.7, 0.2, 0.1, 0.0}, {0.25, 0.25, 0.25, 0.25}, {0.0, 0.1, 0.1, 0.8}};
  const auto diagonal = [](std::size_t m) { return m; };
  // Row 1 ties everywhere and resolves to column 0: errors 0, 1, 1 over Lk = 4.
  CHECK(std::abs(alignment_error(map, diagonal) - 2.0 / 12.0) < 1e-15);
  CHECK(alignment_error(map, [](std::size_t m) { return m == 1 ? 0 : m + (m == 2); }) == 0.0);
}

TEST_CASE("property: alignment_error matches a direct row scan") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const auto lq = static_cast<std::size_t>(rng.uniform_int(1, 9));
    const auto lk = static_cast<std::size_t>(rng.uniform_int(1, 9));
    Matrix map(lq, lk);
    for (double& v : map.data()) v = std::floor(rng.uniform(0.0, 4.0));  // forces ties
    std::vector<std::size_t> ideal(lq);
    for (auto& i : ideal) i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lk) - 1));

    double expected = 0.0;
    for (std::size_t m = 0; m < lq; ++m) {
      std::size_t best = 0;
      for (std::size_t n = 1; n < lk; ++n)
        if (map(m, n) > map(m, best)) best = n;
      expected += std::abs(static_cast<double>(best) - static_cast<double>(ideal[m])) / static_cast<double>(lk);
    }
    expected /= static_cast<double>(lq);
    CHECK(std::abs(alignment_error(map, [&](std::size_t m) { return ideal[m]; }) - expected) < 1e-15);
  }
}
