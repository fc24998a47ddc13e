#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "larope/matrix.hpp"
#include "larope/rng.hpp"
#include "larope/rotary.hpp"
#include "larope/xattn.hpp"

namespace larope {

/// Invalid or unparseable training configuration. `field()` names the
/// offending key when there is one.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  Variant variant = Variant::LARoPE;
  double gamma = 10.0;
  double base = 10000.0;
  std::size_t d_model = 32;
  std::size_t head_dim = 16;
  std::size_t vocab = 16;
  std::size_t lk_min = 8;
  std::size_t lk_max = 24;
  double ratio_min = 2.0;  ///< L_q / L_k
  double ratio_max = 4.0;
  std::size_t steps = 2000;
  double learning_rate = 0.2;
  std::size_t batch_size = 8;
  double noise_sigma = 0.05;
  std::size_t eval_interval = 100;
  std::size_t eval_tasks = 32;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  RotaryConfig rotary() const;
};

TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

/// Per-run fixed embeddings shared by every task of a run.
struct Codebook {
  Matrix key_embeddings;    ///< vocab × d_model
  Matrix value_embeddings;  ///< vocab × d_model
  std::vector<double> query;  ///< d_model; every query row of every task
};

/// Draws the codebook from `rng`: key table, value table, then the query
/// vector, all standard normal.
Codebook make_codebook(Rng& rng, const TrainConfig& cfg);

/// round(m·(lk-1)/(lq-1)) for m in [0, lq). Requires lq >= 2 and lk >= 1.
std::vector<std::size_t> ideal_path(std::size_t lq, std::size_t lk);

struct ToyAlignTask {
  std::vector<std::size_t> key_ids;
  Matrix key_embeddings;  ///< Lk × d_model
  Matrix query_inputs;    ///< Lq × d_model, identical rows
  Matrix targets;         ///< Lq × d_model
  std::vector<std::size_t> ideal;
  double noise_sigma = 0.0;

  std::size_t lq() const noexcept { return query_inputs.rows(); }
  std::size_t lk() const noexcept { return key_embeddings.rows(); }
};

/// Assembles a task from explicit ids and query length; noise is drawn from
/// `rng` row-major over the targets when noise_sigma > 0.
ToyAlignTask build_task(std::span<const std::size_t> key_ids, std::size_t lq, const Codebook& book,
                        double noise_sigma, Rng& rng);

/// Samples L_k uniformly in [lk_min, lk_max], r uniformly in [ratio_min,
/// ratio_max), L_q = max(2, round(r·L_k)), then the key ids and target noise.
ToyAlignTask generate_task(Rng& rng, const TrainConfig& cfg, const Codebook& book);

/// `count` tasks from a fresh Rng(seed); `lk_range` overrides [lk_min, lk_max].
std::vector<ToyAlignTask> generate_task_set(const TrainConfig& cfg, const Codebook& book,
                                            std::uint64_t seed, std::size_t count,
                                            std::optional<std::pair<std::size_t, std::size_t>>
                                                lk_range = std::nullopt);

/// Mean squared error over every target entry.
double mse(const Matrix& output, const Matrix& targets);

struct EvalResult {
  double loss = 0.0;
  double alignment_error = 0.0;
};

EvalResult evaluate(const CrossAttentionLayer& layer, std::span<const ToyAlignTask> tasks);

/// One SGD step on the mean MSE of `batch`. Returns the batch loss measured
/// before the update; throws NumericError if it is not finite.
double train_step(CrossAttentionLayer& layer, std::span<const ToyAlignTask> batch,
                  double learning_rate);

struct TrainRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_alignment_error = 0.0;
};

struct TrainResult {
  TrainConfig config;
  std::vector<TrainRecord> records;
  CrossAttentionLayer layer;
  bool diverged = false;
  std::string diagnostic;  ///< set when diverged
};

/// Everything a run derives from its seed before the first step.
struct RunSetup {
  Codebook book;
  CrossAttentionLayer layer;
  Rng task_rng;
  std::vector<ToyAlignTask> eval_tasks;
};

/// Rng(seed) draws the codebook, then the layer parameters, then continues as
/// the training task stream. Eval tasks come from Rng(seed + 1).
RunSetup prepare_run(const TrainConfig& cfg);

/// Plain SGD on fresh tasks each step; a record every eval_interval steps and
/// at the final step.
TrainResult train(const TrainConfig& cfg);

struct DurationResult {
  double factor = 1.0;
  double alignment_error = 0.0;  ///< NaN when every task was skipped
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

/// Rebuilds each task with L_q' = round(f·L_q) and its own ideal path, then
/// averages alignment_error. Tasks with L_q' < 2 are skipped and counted.
std::vector<DurationResult> eval_duration_scaling(const CrossAttentionLayer& layer,
                                                  std::span<const double> factors,
                                                  std::span<const ToyAlignTask> tasks,
                                                  const Codebook& book);

/// Trained state as a JSON document: config plus all layer weights.
std::string save_state_json(const TrainConfig& cfg, const CrossAttentionLayer& layer);
std::pair<TrainConfig, CrossAttentionLayer> load_state_json(const std::string& text);

}  // namespace larope
