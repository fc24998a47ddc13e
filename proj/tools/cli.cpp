#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "larope/boundmap.hpp"
#include "larope/rotary.hpp"
#include "larope/selfcheck.hpp"
#include "larope/toyalign.hpp"

namespace larope::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  file << content;
  file.flush();
  if (!file) throw IoError("failed writing " + path.string());
}

// Writes to `path` or, when empty, to `out`.
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_file(path, content);
  }
}

RotaryConfig rotary_from_flags(std::size_t d, double base, double gamma, Variant variant) {
  RotaryConfig cfg{d, base, gamma, variant};
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct Options {
  std::size_t d = 64;
  double base = 10000.0;
  double gamma = 10.0;
  std::string variant = "larope";
  std::size_t lq = 64;
  std::size_t lk = 256;
  std::string sj_mode = "partial-sum";
  std::string out;
  std::string config;
  std::string state;
  std::vector<double> factors{0.7, 0.85, 1.0, 1.2, 1.4};
  std::vector<std::string> summaries;
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::size_t instances = 200;
  bool corrupt_theta = false;
};

int cmd_freqs(const Options& o, std::ostream& out) {
  const auto cfg = rotary_from_flags(o.d, o.base, o.gamma, Variant::RoPE);
  std::string csv = "j,theta\n";
  const auto theta = frequencies(cfg);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    csv += std::to_string(j) + "," + format_real(theta[j]) + "\n";
  }
  emit(o.out, csv, out);
  return kOk;
}

int cmd_bounds(const Options& o, std::ostream& out) {
  Variant variant;
  SjMode mode;
  try {
    variant = parse_variant(o.variant);
    mode = parse_sj_mode(o.sj_mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.lq == 0 || o.lk == 0) throw UsageError("--lq and --lk must be >= 1");
  const auto cfg = rotary_from_flags(o.d, o.base, o.gamma, variant);
  const BoundGrid grid = bound_grid(o.lq, o.lk, cfg, variant, mode);

  std::string csv;
  csv.reserve(grid.lq * grid.lk * 32);
  csv += "m,n,value\n";
  for (std::size_t m = 0; m < grid.lq; ++m) {
    for (std::size_t n = 0; n < grid.lk; ++n) {
      csv += std::to_string(m);
      csv += ',';
      csv += std::to_string(n);
      csv += ',';
      csv += format_real(grid.values(m, n));
      csv += '\n';
    }
  }
  emit(o.out, csv, out);
  if (!o.out.empty()) {
    const auto values = grid.values.data();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    json sidecar{{"lq", grid.lq},
                 {"lk", grid.lk},
                 {"variant", std::string(to_string(variant))},
                 {"d", cfg.dim},
                 {"base", cfg.base},
                 {"gamma", cfg.gamma},
                 {"sj_mode", std::string(to_string(mode))},
                 {"ridge_deviation", ridge_deviation(grid)},
                 {"min_value", *lo},
                 {"max_value", *hi}};
    write_file(o.out + ".json", sidecar.dump(2) + "\n");
  }
  return kOk;
}

TrainConfig load_config(const std::string& path) {
  const std::string text = read_file(path, "config");
  try {
    return train_config_from_json(text);
  } catch (const ConfigError& e) {
    throw UsageError(std::string("invalid training config: ") + e.what());
  }
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  TrainConfig cfg = load_config(o.config);
  if (o.seed_given) cfg.seed = o.seed;
  const TrainResult result = train(cfg);

  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw IoError("cannot create output directory " + o.out + ": " + ec.message());
  const fs::path dir(o.out);

  std::string csv = "step,train_loss,eval_loss,eval_alignment_error\n";
  for (const auto& r : result.records) {
    csv += std::to_string(r.step) + "," + format_real(r.train_loss) + "," +
           format_real(r.eval_loss) + "," + format_real(r.eval_alignment_error) + "\n";
  }
  write_file(dir / "records.csv", csv);

  json summary{{"variant", std::string(to_string(cfg.variant))},
               {"seed", cfg.seed},
               {"steps", cfg.steps},
               {"diverged", result.diverged},
               {"config", json::parse(train_config_to_json(cfg))}};
  if (!result.records.empty()) {
    const auto& last = result.records.back();
    summary["final"] = {{"step", last.step},
                        {"train_loss", last.train_loss},
                        {"eval_loss", last.eval_loss},
                        {"eval_alignment_error", last.eval_alignment_error}};
  }
  if (result.diverged) summary["diagnostic"] = result.diagnostic;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (!result.diverged) write_file(dir / "state.json", save_state_json(cfg, result.layer));

  if (result.diverged) {
    err << "larope train: " << result.diagnostic << "\n";
    return kDiverged;
  }
  out << "wrote " << (dir / "records.csv").string() << ", " << (dir / "summary.json").string()
      << ", " << (dir / "state.json").string() << "\n";
  return kOk;
}

int cmd_duration(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.state.empty()) throw UsageError("--state is required (state.json from a train run)");
  for (double f : o.factors) {
    if (!(std::isfinite(f) && f > 0.0)) throw UsageError("--factors must all be positive");
  }
  TrainConfig cfg;
  CrossAttentionLayer layer;
  try {
    std::tie(cfg, layer) = load_state_json(read_file(o.state, "trained state"));
  } catch (const ConfigError& e) {
    throw UsageError(std::string("invalid trained state: ") + e.what());
  }
  // Rebuilds the run's codebook and held-out tasks exactly as train() did.
  const RunSetup setup = prepare_run(cfg);
  const auto results = eval_duration_scaling(layer, o.factors, setup.eval_tasks, setup.book);

  std::string csv = "factor,alignment_error\n";
  for (const auto& r : results) {
    if (r.skipped > 0) {
      err << "warning: factor " << format_real(r.factor) << " skipped " << r.skipped << " of "
          << (r.skipped + r.evaluated) << " tasks (scaled query length < 2)\n";
    }
    if (r.evaluated == 0) continue;
    csv += format_real(r.factor) + "," + format_real(r.alignment_error) + "\n";
  }
  emit(o.out, csv, out);
  return kOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.summaries.size() < 2) throw UsageError("compare needs at least two summary.json files");
  std::string csv =
      "file,variant,seed,final_step,eval_loss,eval_alignment_error,delta_eval_loss,"
      "delta_eval_alignment_error\n";
  double ref_loss = 0.0;
  double ref_err = 0.0;
  for (std::size_t i = 0; i < o.summaries.size(); ++i) {
    json s;
    try {
      s = json::parse(read_file(o.summaries[i], "summary"));
    } catch (const json::exception& e) {
      throw UsageError(o.summaries[i] + ": " + e.what());
    }
    if (!s.contains("final")) throw UsageError(o.summaries[i] + ": no final metrics");
    const double loss = s["final"].value("eval_loss", NAN);
    const double err = s["final"].value("eval_alignment_error", NAN);
    if (i == 0) {
      ref_loss = loss;
      ref_err = err;
    }
    csv += o.summaries[i] + "," + s.value("variant", std::string("?")) + "," +
           std::to_string(s.value("seed", std::uint64_t{0})) + "," +
           std::to_string(s["final"].value("step", std::size_t{0})) + "," + format_real(loss) +
           "," + format_real(err) + "," + format_real(loss - ref_loss) + "," +
           format_real(err - ref_err) + "\n";
  }
  emit(o.out, csv, out);
  return kOk;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
  SelfCheckOptions opt;
  opt.seed = o.seed;
  opt.instances = o.instances;
  opt.corrupt_frequency_table = o.corrupt_theta;
  const SelfCheckReport report = run_self_check(opt);
  for (const auto& p : report.properties) {
    out << (p.passed ? "PASS " : "FAIL ") << p.name << "  instances=" << p.instances
        << " max_error=" << format_real(p.max_error) << " tolerance=" << format_real(p.tolerance)
        << "\n";
  }
  out << "properties run: " << report.properties.size() << ", passed: " << report.passed()
      << ", failed: " << report.properties.size() - report.passed() << "\n";
  if (report.all_passed()) return kOk;
  err << "failed properties:\n";
  for (const auto& p : report.properties) {
    if (!p.passed) err << "  " << p.name << "\n";
  }
  return kCheckFailed;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Rotary and length-aware rotary position embedding toolkit", "larope"};
  app.require_subcommand(1);

  auto* freqs = app.add_subcommand("freqs", "Print the rotation frequency table as CSV");
  freqs->add_option("--d", o.d, "Head dimension (even)")->capture_default_str();
  freqs->add_option("--base", o.base, "Frequency base")->capture_default_str();
  freqs->add_option("--out", o.out, "Output CSV path (default stdout)");

  auto* bounds = app.add_subcommand("bounds", "Export a relative upper-bound grid as CSV");
  bounds->add_option("--lq", o.lq, "Query length")->capture_default_str();
  bounds->add_option("--lk", o.lk, "Key length")->capture_default_str();
  bounds->add_option("--variant", o.variant, "rope|larope")->capture_default_str();
  bounds->add_option("--d", o.d, "Head dimension (even)")->capture_default_str();
  bounds->add_option("--base", o.base, "Frequency base")->capture_default_str();
  bounds->add_option("--gamma", o.gamma, "LARoPE scaling")->capture_default_str();
  bounds->add_option("--sj-mode", o.sj_mode, "partial-sum|magnitudes")->capture_default_str();
  bounds->add_option("--out", o.out, "Output CSV path; a <out>.json sidecar is written too");

  auto* train_cmd = app.add_subcommand("train", "Train the toy alignment model");
  train_cmd->add_option("--config", o.config, "TrainConfig JSON file")->required();
  train_cmd->add_option("--out", o.out, "Output directory")->required();
  train_cmd->add_option("--seed", o.seed, "Override the config seed")
      ->each([&](const std::string&) { o.seed_given = true; });

  auto* duration = app.add_subcommand("duration", "Alignment error under query-length rescaling");
  duration->add_option("--state", o.state, "state.json written by `train`");
  duration->add_option("--factors", o.factors, "Comma-separated positive factors")
      ->delimiter(',')
      ->capture_default_str();
  duration->add_option("--out", o.out, "Output CSV path (default stdout)");

  auto* compare = app.add_subcommand("compare", "Tabulate final metrics of train summaries");
  compare->add_option("summaries", o.summaries, "summary.json files; the first is the reference")
      ->required();
  compare->add_option("--out", o.out, "Output CSV path (default stdout)");

  auto* check = app.add_subcommand("check", "Run the fast invariant suite");
  check->add_option("--seed", o.seed, "Seed for random instances")->capture_default_str();
  check->add_option("--instances", o.instances, "Random instances per property")
      ->capture_default_str();
  check->add_flag("--corrupt-theta", o.corrupt_theta, "Fault injection for testing")->group("");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "larope: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (freqs->parsed()) return cmd_freqs(o, out);
    if (bounds->parsed()) return cmd_bounds(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (duration->parsed()) return cmd_duration(o, out, err);
    if (compare->parsed()) return cmd_compare(o, out);
    if (check->parsed()) return cmd_check(o, out, err);
  } catch (const UsageError& e) {
    err << "larope: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "larope: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

}  // namespace larope::cli
