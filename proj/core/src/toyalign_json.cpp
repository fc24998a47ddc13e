#include <nlohmann/json.hpp>

#include "larope/toyalign.hpp"

namespace larope {

namespace {

using nlohmann::json;

constexpr const char* kStateFormat = "larope-toy-state/1";

template <typename T>
void read_field(const json& doc, const char* name, T& out) {
  const auto it = doc.find(name);
  if (it == doc.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError(name, "expected a number");
      out = it->get<double>();
    } else {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
        throw ConfigError(name, "expected a non-negative integer");
      }
      out = it->get<T>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(name, e.what());
  }
}

json config_to_json_value(const TrainConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"variant", std::string(to_string(cfg.variant))},
              {"gamma", cfg.gamma},
              {"base", cfg.base},
              {"d_model", cfg.d_model},
              {"head_dim", cfg.head_dim},
              {"vocab", cfg.vocab},
              {"lk_min", cfg.lk_min},
              {"lk_max", cfg.lk_max},
              {"ratio_min", cfg.ratio_min},
              {"ratio_max", cfg.ratio_max},
              {"steps", cfg.steps},
              {"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"noise_sigma", cfg.noise_sigma},
              {"eval_interval", cfg.eval_interval},
              {"eval_tasks", cfg.eval_tasks}};
}

TrainConfig config_from_json_value(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "training config must be a JSON object");
  static const json known = config_to_json_value(TrainConfig{});
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw ConfigError(key, "unknown field");
  }
  TrainConfig cfg;
  read_field(doc, "seed", cfg.seed);
  if (const auto it = doc.find("variant"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("variant", "expected \"rope\" or \"larope\"");
    try {
      cfg.variant = parse_variant(it->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("variant", e.what());
    }
  }
  read_field(doc, "gamma", cfg.gamma);
  read_field(doc, "base", cfg.base);
  read_field(doc, "d_model", cfg.d_model);
  read_field(doc, "head_dim", cfg.head_dim);
  read_field(doc, "vocab", cfg.vocab);
  read_field(doc, "lk_min", cfg.lk_min);
  read_field(doc, "lk_max", cfg.lk_max);
  read_field(doc, "ratio_min", cfg.ratio_min);
  read_field(doc, "ratio_max", cfg.ratio_max);
  read_field(doc, "steps", cfg.steps);
  read_field(doc, "learning_rate", cfg.learning_rate);
  read_field(doc, "batch_size", cfg.batch_size);
  read_field(doc, "noise_sigma", cfg.noise_sigma);
  read_field(doc, "eval_interval", cfg.eval_interval);
  read_field(doc, "eval_tasks", cfg.eval_tasks);
  cfg.validate();
  return cfg;
}

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& doc, const char* name) {
  try {
    return Matrix(doc.at("rows").get<std::size_t>(), doc.at("cols").get<std::size_t>(),
                  doc.at("data").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("layer.") + name, e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("layer.") + name, e.what());
  }
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text) {
  return config_from_json_value(parse_document(text));
}

std::string train_config_to_json(const TrainConfig& cfg) {
  return config_to_json_value(cfg).dump(2);
}

std::string save_state_json(const TrainConfig& cfg, const CrossAttentionLayer& layer) {
  const json doc{{"format", kStateFormat},
                 {"config", config_to_json_value(cfg)},
                 {"layer",
                  {{"wq", matrix_to_json(layer.wq)},
                   {"wk", matrix_to_json(layer.wk)},
                   {"wv", matrix_to_json(layer.wv)},
                   {"wo", matrix_to_json(layer.wo)}}}};
  return doc.dump();
}

std::pair<TrainConfig, CrossAttentionLayer> load_state_json(const std::string& text) {
  const json doc = parse_document(text);
  if (!doc.is_object() || doc.value("format", std::string()) != kStateFormat) {
    throw ConfigError("format", std::string("expected \"") + kStateFormat + "\"");
  }
  if (!doc.contains("config")) throw ConfigError("config", "missing");
  if (!doc.contains("layer")) throw ConfigError("layer", "missing");
  TrainConfig cfg = config_from_json_value(doc.at("config"));
  const json& l = doc.at("layer");
  CrossAttentionLayer layer;
  layer.cfg = cfg.rotary();
  layer.wq = matrix_from_json(l.value("wq", json::object()), "wq");
  layer.wk = matrix_from_json(l.value("wk", json::object()), "wk");
  layer.wv = matrix_from_json(l.value("wv", json::object()), "wv");
  layer.wo = matrix_from_json(l.value("wo", json::object()), "wo");
  try {
    layer.validate();
  } catch (const DimensionError& e) {
    throw ConfigError("layer", e.what());
  }
  if (layer.model_dim() != cfg.d_model) throw ConfigError("layer", "d_model does not match config");
  return {cfg, std::move(layer)};
}

}  // namespace larope
