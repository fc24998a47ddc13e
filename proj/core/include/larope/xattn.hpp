#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <span>

#include "larope/matrix.hpp"
#include "larope/rng.hpp"
#include "larope/rotary.hpp"

namespace larope {

/// Single-head cross-attention: queries attend to keys, values come from the
/// key sequence. Rotation is applied to the projected Q and K.
struct CrossAttentionLayer {
  Matrix wq;  ///< d_model × d
  Matrix wk;  ///< d_model × d
  Matrix wv;  ///< d_model × d
  Matrix wo;  ///< d × d_model
  RotaryConfig cfg;

  /// Every weight uniform in [-1/√d_model, 1/√d_model], drawn wq, wk, wv, wo
  /// in that order.
  static CrossAttentionLayer initialize(std::size_t d_model, const RotaryConfig& cfg, Rng& rng);

  std::size_t model_dim() const noexcept { return wq.rows(); }
  std::size_t head_dim() const noexcept { return cfg.dim; }

  /// Throws DimensionError when projection shapes disagree with each other or cfg.dim.
  void validate() const;
};

struct AttentionScoreMap {
  Matrix pre_softmax;   ///< Lq × Lk, Q·Kᵀ
  Matrix post_softmax;  ///< row_softmax(pre_softmax, 1/√d)
};

/// Activations kept from forward for the backward pass.
struct ForwardCache {
  Matrix queries;   ///< Lq × d_model
  Matrix keys;      ///< Lk × d_model
  Matrix q_rot;     ///< rotated query projections, Lq × d
  Matrix k_rot;     ///< rotated key projections, Lk × d
  Matrix values;    ///< keys·wv, Lk × d
  Matrix probs;     ///< post-softmax map
  Matrix context;   ///< probs·values, Lq × d
  double scale = 1.0;
};

struct ForwardResult {
  Matrix output;  ///< Lq × d_model
  AttentionScoreMap map;
  ForwardCache cache;
};

struct LayerGradients {
  Matrix wq;
  Matrix wk;
  Matrix wv;
  Matrix wo;
  Matrix queries;
  Matrix keys;
};

ForwardResult forward(const CrossAttentionLayer& layer, const EmbeddingSequence& queries,
                      const EmbeddingSequence& keys);

/// Reverse-mode gradients of the forward composition given dLoss/dOutput.
LayerGradients backward(const CrossAttentionLayer& layer, const ForwardCache& cache,
                        const Matrix& grad_output);

/// Mean of the post-softmax maps with `exclude_keys` columns removed and
/// every row renormalized to sum to one.
Matrix average_maps(std::span<const AttentionScoreMap> maps, const std::set<std::size_t>& exclude_keys);

/// Mean over rows of |argmax_n map(m, ·) - ideal(m)| / Lk; ties go to the lowest index.
double alignment_error(const Matrix& map, const std::function<std::size_t(std::size_t)>& ideal);

}  // namespace larope
