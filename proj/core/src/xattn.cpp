#include "larope/xattn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "larope/boundmap.hpp"

namespace larope {

namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(name) + " has shape " + shape_string(m) + ", expected (" +
                         std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
}

}  // namespace

CrossAttentionLayer CrossAttentionLayer::initialize(std::size_t d_model, const RotaryConfig& cfg,
                                                    Rng& rng) {
  cfg.validate();
  if (d_model == 0) throw std::invalid_argument("d_model must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_model));
  CrossAttentionLayer layer;
  layer.cfg = cfg;
  layer.wq = rng.uniform_matrix(d_model, cfg.dim, -bound, bound);
  layer.wk = rng.uniform_matrix(d_model, cfg.dim, -bound, bound);
  layer.wv = rng.uniform_matrix(d_model, cfg.dim, -bound, bound);
  layer.wo = rng.uniform_matrix(cfg.dim, d_model, -bound, bound);
  return layer;
}

void CrossAttentionLayer::validate() const {
  cfg.validate();
  const std::size_t dm = wq.rows();
  require_shape(wq, dm, cfg.dim, "wq");
  require_shape(wk, dm, cfg.dim, "wk");
  require_shape(wv, dm, cfg.dim, "wv");
  require_shape(wo, cfg.dim, dm, "wo");
}

ForwardResult forward(const CrossAttentionLayer& layer, const EmbeddingSequence& queries,
                      const EmbeddingSequence& keys) {
  layer.validate();
  if (queries.width() != layer.model_dim() || keys.width() != layer.model_dim()) {
    throw DimensionError("forward: inputs must have width d_model=" +
                         std::to_string(layer.model_dim()) + ", got queries " +
                         shape_string(queries.values()) + " and keys " +
                         shape_string(keys.values()));
  }
  ForwardResult r;
  ForwardCache& c = r.cache;
  c.queries = queries.values();
  c.keys = keys.values();
  c.scale = 1.0 / std::sqrt(static_cast<double>(layer.head_dim()));
  c.q_rot = rotate_rows(matmul(c.queries, layer.wq), layer.cfg, false);
  c.k_rot = rotate_rows(matmul(c.keys, layer.wk), layer.cfg, false);
  c.values = matmul(c.keys, layer.wv);
  r.map.pre_softmax = matmul_nt(c.q_rot, c.k_rot);
  r.map.post_softmax = row_softmax(r.map.pre_softmax, c.scale);
  c.probs = r.map.post_softmax;
  c.context = matmul(c.probs, c.values);
  r.output = matmul(c.context, layer.wo);
  return r;
}

LayerGradients backward(const CrossAttentionLayer& layer, const ForwardCache& cache,
                        const Matrix& grad_output) {
  layer.validate();
  const std::size_t lq = cache.queries.rows();
  const std::size_t lk = cache.keys.rows();
  require_shape(grad_output, lq, layer.model_dim(), "grad_output");
  require_shape(cache.probs, lq, lk, "cached probs");

  LayerGradients g;
  g.wo = matmul_tn(cache.context, grad_output);
  const Matrix d_context = matmul_nt(grad_output, layer.wo);
  const Matrix d_probs = matmul_nt(d_context, cache.values);
  const Matrix d_values = matmul_tn(cache.probs, d_context);

  // Softmax Jacobian-vector product, row by row, then the score scale.
  Matrix d_scores(lq, lk);
  for (std::size_t i = 0; i < lq; ++i) {
    const auto p = cache.probs.row(i);
    const auto dp = d_probs.row(i);
    const double inner = dot(p, dp);
    auto ds = d_scores.row(i);
    for (std::size_t j = 0; j < lk; ++j) ds[j] = cache.scale * p[j] * (dp[j] - inner);
  }

  const Matrix d_q_rot = matmul(d_scores, cache.k_rot);
  const Matrix d_k_rot = matmul_tn(d_scores, cache.q_rot);
  // Rotation is orthogonal, so its adjoint is the inverse rotation.
  const Matrix d_q_proj = rotate_rows(d_q_rot, layer.cfg, true);
  const Matrix d_k_proj = rotate_rows(d_k_rot, layer.cfg, true);

  g.wq = matmul_tn(cache.queries, d_q_proj);
  g.wk = matmul_tn(cache.keys, d_k_proj);
  g.wv = matmul_tn(cache.keys, d_values);
  g.queries = matmul_nt(d_q_proj, layer.wq);
  g.keys = matmul_nt(d_k_proj, layer.wk);
  g.keys += matmul_nt(d_values, layer.wv);
  return g;
}

Matrix average_maps(std::span<const AttentionScoreMap> maps,
                    const std::set<std::size_t>& exclude_keys) {
  if (maps.empty()) throw std::invalid_argument("average_maps: no maps given");
  const std::size_t lq = maps.front().post_softmax.rows();
  const std::size_t lk = maps.front().post_softmax.cols();
  for (std::size_t key : exclude_keys) {
    if (key >= lk) {
      throw std::out_of_range("average_maps: excluded key " + std::to_string(key) +
                              " is outside [0, " + std::to_string(lk) + ")");
    }
  }
  if (exclude_keys.size() >= lk) throw std::invalid_argument("average_maps: every key is excluded");

  Matrix mean(lq, lk);
  for (const auto& map : maps) {
    require_shape(map.post_softmax, lq, lk, "average_maps: map");
    mean += map.post_softmax;
  }
  mean *= 1.0 / static_cast<double>(maps.size());

  Matrix out(lq, lk - exclude_keys.size());
  for (std::size_t m = 0; m < lq; ++m) {
    std::size_t col = 0;
    double total = 0.0;
    for (std::size_t n = 0; n < lk; ++n) {
      if (exclude_keys.contains(n)) continue;
      out(m, col++) = mean(m, n);
      total += mean(m, n);
    }
    if (!(total > 0.0)) {
      throw NumericError("average_maps: row " + std::to_string(m) +
                         " has no mass left after exclusion");
    }
    for (double& v : out.row(m)) v /= total;
  }
  return out;
}

double alignment_error(const Matrix& map, const std::function<std::size_t(std::size_t)>& ideal) {
  if (map.rows() == 0 || map.cols() == 0) throw DimensionError("alignment_error: empty map");
  const auto peaks = row_argmax(map);
  double total = 0.0;
  for (std::size_t m = 0; m < map.rows(); ++m) {
    total += std::abs(static_cast<double>(peaks[m]) - static_cast<double>(ideal(m)));
  }
  return total / static_cast<double>(map.rows()) / static_cast<double>(map.cols());
}

}  // namespace larope
