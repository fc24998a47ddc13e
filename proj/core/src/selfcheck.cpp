#include "larope/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "larope/grad_check.hpp"
#include "larope/rng.hpp"
#include "larope/rotary.hpp"
#include "larope/xattn.hpp"

namespace larope {

namespace {

constexpr std::size_t kDims[] = {2, 4, 8, 16, 64};

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

class Checker {
 public:
  explicit Checker(const SelfCheckOptions& opt) : opt_(opt), rng_(opt.seed) {}

  std::vector<double> table(const RotaryConfig& cfg) const {
    auto theta = frequencies(cfg);
    if (opt_.corrupt_frequency_table) theta.back() *= 1.001;
    return theta;
  }

  std::vector<double> rotated(std::span<const double> x, double phase, const RotaryConfig& cfg) const {
    std::vector<double> out(x.begin(), x.end());
    rotate_in_place(out, phase, table(cfg));
    return out;
  }

  RotaryConfig random_config() {
    RotaryConfig cfg;
    cfg.dim = kDims[rng_.uniform_int(0, std::size(kDims) - 1)];
    cfg.gamma = rng_.uniform(0.5, 20.0);
    return cfg;
  }

  // Runs `body` once per instance; body returns the observed error.
  PropertyResult property(std::string name, double tol, std::size_t n,
                          const std::function<double()>& body) {
    PropertyResult r{std::move(name), true, n, 0.0, tol};
    for (std::size_t i = 0; i < n; ++i) r.max_error = std::max(r.max_error, body());
    r.passed = std::isfinite(r.max_error) && r.max_error <= tol;
    return r;
  }

  SelfCheckReport run();

 private:
  SelfCheckOptions opt_;
  Rng rng_;
};

SelfCheckReport Checker::run() {
  SelfCheckReport report;
  auto& props = report.properties;
  const std::size_t n = opt_.instances;

  props.push_back(property("frequency table matches base^(-2j/d)", 1e-14, std::size(kDims), [&, i = 0]() mutable {
    RotaryConfig cfg;
    cfg.dim = kDims[i++];
    const auto theta = table(cfg);
    double worst = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double expected = std::exp(-2.0 * static_cast<double>(j) / static_cast<double>(cfg.dim) *
                                       std::log(cfg.base));
      worst = std::max(worst, std::abs(theta[j] - expected) / expected);
    }
    return worst;
  }));

  props.push_back(property("norm preservation", 1e-12, n, [&] {
    const auto cfg = random_config();
    const auto x = random_vector(rng_, cfg.dim);
    const auto length = rng_.uniform_int(1, 256);
    const auto p = rng_.uniform_int(0, length - 1);
    const auto a = rotated(x, position_phase(Variant::RoPE, p, length, cfg.gamma), cfg);
    const auto b = rotated(x, position_phase(Variant::LARoPE, p, length, cfg.gamma), cfg);
    const double nx = norm2(x);
    return std::max(std::abs(norm2(a) - nx), std::abs(norm2(b) - nx));
  }));

  props.push_back(property("rope shift invariance", 1e-9, n, [&] {
    const auto cfg = random_config();
    const auto q = random_vector(rng_, cfg.dim);
    const auto k = random_vector(rng_, cfg.dim);
    const double m = static_cast<double>(rng_.uniform_int(0, 512));
    const double nn = static_cast<double>(rng_.uniform_int(0, 512));
    const double s = static_cast<double>(rng_.uniform_int(0, 512));
    return std::abs(dot(rotated(q, m + s, cfg), rotated(k, nn + s, cfg)) -
                    dot(rotated(q, m, cfg), rotated(k, nn, cfg)));
  }));

  props.push_back(property("larope normalized-distance invariance", 1e-9, n, [&] {
    const auto cfg = random_config();
    const auto q = random_vector(rng_, cfg.dim);
    const auto k = random_vector(rng_, cfg.dim);
    const auto lq = rng_.uniform_int(1, 64);
    const auto lk = rng_.uniform_int(1, 64);
    const auto m = rng_.uniform_int(0, lq - 1);
    const auto kn = rng_.uniform_int(0, lk - 1);
    const auto a = rng_.uniform_int(2, 5);
    const auto b = rng_.uniform_int(2, 5);
    // (a·m)/(a·lq) - (b·n)/(b·lk) equals m/lq - n/lk.
    const double base = dot(rotated(q, position_phase(Variant::LARoPE, m, lq, cfg.gamma), cfg),
                            rotated(k, position_phase(Variant::LARoPE, kn, lk, cfg.gamma), cfg));
    const double scaled =
        dot(rotated(q, position_phase(Variant::LARoPE, a * m, a * lq, cfg.gamma), cfg),
            rotated(k, position_phase(Variant::LARoPE, b * kn, b * lk, cfg.gamma), cfg));
    return std::abs(base - scaled);
  }));

  props.push_back(property("larope reduces to rope at gamma = L", 1e-12, n, [&] {
    auto cfg = random_config();
    const auto length = rng_.uniform_int(1, 64);
    cfg.gamma = static_cast<double>(length);
    const auto x = random_vector(rng_, cfg.dim);
    const auto p = rng_.uniform_int(0, length - 1);
    const auto a = rotated(x, position_phase(Variant::LARoPE, p, length, cfg.gamma), cfg);
    const auto b = rotated(x, position_phase(Variant::RoPE, p, length, cfg.gamma), cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
  }));

  props.push_back(property("complex-form agreement (rope)", 1e-9, n, [&] {
    const auto cfg = random_config();
    const auto q = random_vector(rng_, cfg.dim);
    const auto k = random_vector(rng_, cfg.dim);
    const auto m = rng_.uniform_int(0, 512);
    const auto kn = rng_.uniform_int(0, 512);
    const double via_rotation = dot(rotated(q, static_cast<double>(m), cfg),
                                    rotated(k, static_cast<double>(kn), cfg));
    return std::abs(score_complex_rope(q, k, m, kn, cfg) - via_rotation);
  }));

  props.push_back(property("complex-form agreement (larope)", 1e-9, n, [&] {
    const auto cfg = random_config();
    const auto q = random_vector(rng_, cfg.dim);
    const auto k = random_vector(rng_, cfg.dim);
    const auto lq = rng_.uniform_int(1, 300);
    const auto lk = rng_.uniform_int(1, 300);
    const auto m = rng_.uniform_int(0, lq - 1);
    const auto kn = rng_.uniform_int(0, lk - 1);
    const double via_rotation =
        dot(rotated(q, position_phase(Variant::LARoPE, m, lq, cfg.gamma), cfg),
            rotated(k, position_phase(Variant::LARoPE, kn, lk, cfg.gamma), cfg));
    return std::abs(score_complex_larope(q, k, m, lq, kn, lk, cfg) - via_rotation);
  }));

  props.push_back(property("rotation adjoint", 1e-6, std::min<std::size_t>(n, 50), [&] {
    const auto cfg = random_config();
    const auto u = random_vector(rng_, cfg.dim);
    const double phase = rng_.uniform(0.0, 100.0);
    Matrix x(1, cfg.dim, random_vector(rng_, cfg.dim));
    auto f = [&](const Matrix& v) { return dot(rotated(v.data(), phase, cfg), u); };
    Matrix analytic(1, cfg.dim, rotated(u, -phase, cfg));
    return grad_check(f, x, analytic, 1e-5);
  }));

  for (Variant variant : {Variant::RoPE, Variant::LARoPE}) {
    const std::string name = std::string("cross-attention gradients (") +
                             std::string(to_string(variant)) + ")";
    props.push_back(property(name, 1e-4, 3, [&] {
      RotaryConfig cfg{4, 10000.0, 10.0, variant};
      const CrossAttentionLayer layer = CrossAttentionLayer::initialize(6, cfg, rng_);
      const EmbeddingSequence queries(rng_.uniform_matrix(5, 6, -1.0, 1.0));
      const EmbeddingSequence keys(rng_.uniform_matrix(7, 6, -1.0, 1.0));
      const auto fw = forward(layer, queries, keys);
      const auto grads = backward(layer, fw.cache, Matrix(5, 6, 1.0));
      double worst = 0.0;
      auto check = [&](Matrix CrossAttentionLayer::*member, const Matrix& analytic) {
        auto f = [&](const Matrix& w) {
          CrossAttentionLayer probe = layer;
          probe.*member = w;
          return sum(forward(probe, queries, keys).output);
        };
        worst = std::max(worst, grad_check(f, layer.*member, analytic, 1e-5));
      };
      check(&CrossAttentionLayer::wq, grads.wq);
      check(&CrossAttentionLayer::wk, grads.wk);
      check(&CrossAttentionLayer::wv, grads.wv);
      check(&CrossAttentionLayer::wo, grads.wo);
      return worst;
    }));
  }
  return report;
}

}  // namespace

std::size_t SelfCheckReport::passed() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(properties.begin(), properties.end(), [](const auto& p) { return p.passed; }));
}

SelfCheckReport run_self_check(const SelfCheckOptions& options) {
  Checker checker(options);
  return checker.run();
}

}  // namespace larope
