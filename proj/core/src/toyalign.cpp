#include "larope/toyalign.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace larope {

void TrainConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(gamma)) throw ConfigError("gamma", "must be > 0");
  if (!(std::isfinite(base) && base > 1.0)) throw ConfigError("base", "must be > 1");
  if (d_model == 0) throw ConfigError("d_model", "must be >= 1");
  if (head_dim < 2 || head_dim % 2 != 0) throw ConfigError("head_dim", "must be even and >= 2");
  if (vocab == 0) throw ConfigError("vocab", "must be >= 1");
  if (lk_min == 0) throw ConfigError("lk_min", "must be >= 1");
  if (lk_max < lk_min) throw ConfigError("lk_max", "key length range is empty");
  if (!positive(ratio_min)) throw ConfigError("ratio_min", "must be > 0");
  if (!(std::isfinite(ratio_max) && ratio_max >= ratio_min)) {
    throw ConfigError("ratio_max", "ratio range is empty");
  }
  if (!(std::isfinite(learning_rate) && learning_rate >= 0.0)) {
    throw ConfigError("learning_rate", "must be >= 0");
  }
  if (batch_size == 0) throw ConfigError("batch_size", "must be >= 1");
  if (!(std::isfinite(noise_sigma) && noise_sigma >= 0.0)) {
    throw ConfigError("noise_sigma", "must be >= 0");
  }
  if (eval_interval == 0) throw ConfigError("eval_interval", "must be >= 1");
  if (eval_tasks == 0) throw ConfigError("eval_tasks", "must be >= 1");
}

RotaryConfig TrainConfig::rotary() const {
  return RotaryConfig{head_dim, base, gamma, variant};
}

Codebook make_codebook(Rng& rng, const TrainConfig& cfg) {
  Codebook book;
  book.key_embeddings = rng.normal_matrix(cfg.vocab, cfg.d_model);
  book.value_embeddings = rng.normal_matrix(cfg.vocab, cfg.d_model);
  book.query.resize(cfg.d_model);
  for (double& v : book.query) v = rng.normal();
  return book;
}

std::vector<std::size_t> ideal_path(std::size_t lq, std::size_t lk) {
  if (lq < 2) throw std::invalid_argument("ideal_path: query length must be >= 2");
  if (lk == 0) throw std::invalid_argument("ideal_path: key length must be >= 1");
  std::vector<std::size_t> path(lq);
  for (std::size_t m = 0; m < lq; ++m) {
    path[m] = static_cast<std::size_t>(std::lround(static_cast<double>(m * (lk - 1)) /
                                                   static_cast<double>(lq - 1)));
  }
  return path;
}

ToyAlignTask build_task(std::span<const std::size_t> key_ids, std::size_t lq, const Codebook& book,
                        double noise_sigma, Rng& rng) {
  const std::size_t dm = book.key_embeddings.cols();
  ToyAlignTask task;
  task.key_ids.assign(key_ids.begin(), key_ids.end());
  task.noise_sigma = noise_sigma;
  task.key_embeddings = Matrix(key_ids.size(), dm);
  for (std::size_t n = 0; n < key_ids.size(); ++n) {
    const auto src = book.key_embeddings.row(key_ids[n]);
    std::copy(src.begin(), src.end(), task.key_embeddings.row(n).begin());
  }
  task.query_inputs = Matrix(lq, dm);
  for (std::size_t m = 0; m < lq; ++m) {
    std::copy(book.query.begin(), book.query.end(), task.query_inputs.row(m).begin());
  }
  task.ideal = ideal_path(lq, key_ids.size());
  task.targets = Matrix(lq, dm);
  for (std::size_t m = 0; m < lq; ++m) {
    const auto src = book.value_embeddings.row(task.key_ids[task.ideal[m]]);
    auto dst = task.targets.row(m);
    for (std::size_t c = 0; c < dm; ++c) {
      dst[c] = src[c] + (noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0);
    }
  }
  return task;
}

ToyAlignTask generate_task(Rng& rng, const TrainConfig& cfg, const Codebook& book) {
  const std::size_t lk = rng.uniform_int(cfg.lk_min, cfg.lk_max);
  const double ratio = rng.uniform(cfg.ratio_min, cfg.ratio_max);
  const std::size_t lq =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(ratio * static_cast<double>(lk))));
  std::vector<std::size_t> ids(lk);
  for (auto& id : ids) id = rng.uniform_int(0, cfg.vocab - 1);
  return build_task(ids, lq, book, cfg.noise_sigma, rng);
}

std::vector<ToyAlignTask> generate_task_set(
    const TrainConfig& cfg, const Codebook& book, std::uint64_t seed, std::size_t count,
    std::optional<std::pair<std::size_t, std::size_t>> lk_range) {
  TrainConfig local = cfg;
  if (lk_range) {
    local.lk_min = lk_range->first;
    local.lk_max = lk_range->second;
    local.validate();
  }
  Rng rng(seed);
  std::vector<ToyAlignTask> tasks;
  tasks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) tasks.push_back(generate_task(rng, local, book));
  return tasks;
}

double mse(const Matrix& output, const Matrix& targets) {
  if (!output.same_shape(targets)) {
    throw DimensionError("mse: " + shape_string(output) + " vs " + shape_string(targets));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double e = output.data()[i] - targets.data()[i];
    total += e * e;
  }
  return total / static_cast<double>(output.size());
}

namespace {

double task_alignment_error(const Matrix& probs, const std::vector<std::size_t>& ideal) {
  return alignment_error(probs, [&](std::size_t m) { return ideal[m]; });
}

}  // namespace

EvalResult evaluate(const CrossAttentionLayer& layer, std::span<const ToyAlignTask> tasks) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: empty task set");
  EvalResult r;
  for (const auto& task : tasks) {
    const auto fw = forward(layer, EmbeddingSequence(task.query_inputs),
                            EmbeddingSequence(task.key_embeddings));
    r.loss += mse(fw.output, task.targets);
    r.alignment_error += task_alignment_error(fw.map.post_softmax, task.ideal);
  }
  r.loss /= static_cast<double>(tasks.size());
  r.alignment_error /= static_cast<double>(tasks.size());
  return r;
}

double train_step(CrossAttentionLayer& layer, std::span<const ToyAlignTask> batch,
                  double learning_rate) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const double weight = 1.0 / static_cast<double>(batch.size());
  Matrix gq(layer.wq.rows(), layer.wq.cols());
  Matrix gk(layer.wk.rows(), layer.wk.cols());
  Matrix gv(layer.wv.rows(), layer.wv.cols());
  Matrix go(layer.wo.rows(), layer.wo.cols());
  double loss = 0.0;
  for (const auto& task : batch) {
    const auto fw = forward(layer, EmbeddingSequence(task.query_inputs),
                            EmbeddingSequence(task.key_embeddings));
    loss += weight * mse(fw.output, task.targets);
    // d(mean squared error)/d(output) = 2(out - target) / N
    Matrix grad_out = fw.output - task.targets;
    grad_out *= 2.0 * weight / static_cast<double>(grad_out.size());
    const auto g = backward(layer, fw.cache, grad_out);
    gq += g.wq;
    gk += g.wk;
    gv += g.wv;
    go += g.wo;
  }
  if (!std::isfinite(loss)) throw NumericError("train_step: batch loss is not finite");
  layer.wq -= learning_rate * gq;
  layer.wk -= learning_rate * gk;
  layer.wv -= learning_rate * gv;
  layer.wo -= learning_rate * go;
  if (!all_finite(layer.wq) || !all_finite(layer.wk) || !all_finite(layer.wv) ||
      !all_finite(layer.wo)) {
    throw NumericError("train_step: parameters became non-finite");
  }
  return loss;
}

RunSetup prepare_run(const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Codebook book = make_codebook(rng, cfg);
  CrossAttentionLayer layer = CrossAttentionLayer::initialize(cfg.d_model, cfg.rotary(), rng);
  auto eval_tasks = generate_task_set(cfg, book, cfg.seed + 1, cfg.eval_tasks);
  return RunSetup{std::move(book), std::move(layer), rng, std::move(eval_tasks)};
}

TrainResult train(const TrainConfig& cfg) {
  RunSetup run = prepare_run(cfg);
  TrainResult result;
  result.config = cfg;
  std::vector<ToyAlignTask> batch(cfg.batch_size);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (auto& task : batch) task = generate_task(run.task_rng, cfg, run.book);
    double loss = 0.0;
    try {
      loss = train_step(run.layer, batch, cfg.learning_rate);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "diverged at step " << step << ": " << e.what();
      result.diverged = true;
      result.diagnostic = msg.str();
      break;
    }
    if (step % cfg.eval_interval == 0 || step == cfg.steps) {
      const auto ev = evaluate(run.layer, run.eval_tasks);
      if (!std::isfinite(ev.loss)) {
        result.diverged = true;
        result.diagnostic = "diverged at step " + std::to_string(step) + ": eval loss is not finite";
        break;
      }
      result.records.push_back({step, loss, ev.loss, ev.alignment_error});
    }
  }
  result.layer = std::move(run.layer);
  return result;
}

std::vector<DurationResult> eval_duration_scaling(const CrossAttentionLayer& layer,
                                                  std::span<const double> factors,
                                                  std::span<const ToyAlignTask> tasks,
                                                  const Codebook& book) {
  std::vector<DurationResult> out;
  out.reserve(factors.size());
  Rng unused(0);
  for (double f : factors) {
    if (!(std::isfinite(f) && f > 0.0)) {
      throw std::invalid_argument("eval_duration_scaling: factors must be positive");
    }
    DurationResult r;
    r.factor = f;
    double total = 0.0;
    for (const auto& task : tasks) {
      const auto lq = static_cast<std::size_t>(std::lround(f * static_cast<double>(task.lq())));
      if (lq < 2) {
        ++r.skipped;
        continue;
      }
      const ToyAlignTask scaled = build_task(task.key_ids, lq, book, 0.0, unused);
      const auto fw = forward(layer, EmbeddingSequence(scaled.query_inputs),
                              EmbeddingSequence(scaled.key_embeddings));
      total += task_alignment_error(fw.map.post_softmax, scaled.ideal);
      ++r.evaluated;
    }
    r.alignment_error = r.evaluated == 0 ? std::numeric_limits<double>::quiet_NaN()
                                         : total / static_cast<double>(r.evaluated);
    out.push_back(r);
  }
  return out;
}

}  // namespace larope
