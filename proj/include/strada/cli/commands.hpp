// Copyright 2026 The Strada Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "strada/check_suite.hpp"
#include "strada/checkpoint.hpp"
#include "strada/config_io.hpp"
#include "strada/data/dataset.hpp"
#include "strada/data/synthetic.hpp"
#include "strada/evaluate.hpp"
#include "strada/train.hpp"

namespace strada::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kCheckFailed = 3 };

// Raised when a check suite or gate ran to completion and reported failure.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CheckFailure*>(&e)) return kCheckFailed;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return kValidation;
  return kRuntime;
}

inline Averaging parse_averaging(const std::string& name) {
  if (name == "micro") return Averaging::kMicro;
  if (name == "macro") return Averaging::kMacro;
  throw ConfigError("unknown averaging '" + name + "' (micro, macro)");
}
inline std::string to_string(Averaging a) { return a == Averaging::kMicro ? "micro" : "macro"; }

inline void require_precision(const std::string& p) {
  if (p != "f32" && p != "f64") throw ConfigError("precision must be f32 or f64, got '" + p + "'");
}

// Everything a command needs, fully resolved before any work starts.
struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  std::string train_data;  // dataset directory or index.jsonl
  std::string test_data;
  bool take_last_frames = false;
  std::string precision = "f32";
  std::size_t ap_samples = 100;
  Averaging averaging = Averaging::kMicro;
  std::string out;

  void validate() const {
    network.validate();
    train.validate();
    require_precision(precision);
    if (ap_samples == 0) throw ConfigError("eval: ap_samples must be >= 1");
  }
};

inline Json to_json(const RunConfig& c) {
  Json j;
  j["network"] = strada::to_json(c.network);
  j["train"] = strada::to_json(c.train);
  j["data"] = {{"train", c.train_data}, {"test", c.test_data}, {"take_last_frames", c.take_last_frames}};
  j["precision"] = c.precision;
  j["eval"] = {{"ap_samples", c.ap_samples}, {"averaging", to_string(c.averaging)}};
  j["out"] = c.out;
  return j;
}

inline RunConfig run_config_from_json(const Json& j, RunConfig c = {}) {
  check_keys(j, {"network", "train", "data", "precision", "eval", "out"}, "run config");
  try {
    if (j.contains("network")) c.network = network_config_from_json(j.at("network"), c.network);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      check_keys(d, {"train", "test", "take_last_frames"}, "data config");
      c.train_data = d.value("train", c.train_data);
      c.test_data = d.value("test", c.test_data);
      c.take_last_frames = d.value("take_last_frames", c.take_last_frames);
    }
    c.precision = j.value("precision", c.precision);
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      check_keys(e, {"ap_samples", "averaging"}, "eval config");
      c.ap_samples = e.value("ap_samples", c.ap_samples);
      if (e.contains("averaging")) c.averaging = parse_averaging(e.at("averaging").get<std::string>());
    }
    c.out = j.value("out", c.out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

inline Json read_json_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw IoError("config file not found: " + path);
  try {
    return Json::parse(data::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Flag overrides shared by every command; unset fields keep the config value.
struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<std::string> fcgru_location;
  bool no_fcgru = false;
  bool no_mcgru = false;
  std::optional<std::string> precision;
  std::optional<std::string> upsample;
};

inline RunConfig resolve(const CommonFlags& f, RunConfig base = {}) {
  RunConfig c = f.config ? run_config_from_json(read_json_file(*f.config), base) : base;
  if (f.seed) {
    c.network.seed = *f.seed;
    c.train.seed = *f.seed;
  }
  if (f.out) c.out = *f.out;
  if (f.k) c.network.frames = *f.k;
  if (f.fcgru_location) c.network.fcgru_location = parse_fcgru_location(*f.fcgru_location);
  if (f.no_fcgru) c.network.fcgru_location = FcgruLocation::kNone;
  if (f.no_mcgru) c.network.mcgru_enabled = false;
  if (f.precision) c.precision = *f.precision;
  if (f.upsample) c.network.upsample = parse_upsample_mode(*f.upsample);
  return c;
}

// Eigen threads from STRADA_THREADS; unset leaves the library default.
inline void apply_thread_cap() {
  const char* env = std::getenv("STRADA_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string("STRADA_THREADS must be a positive integer, got '") + env + "'");
  Eigen::setNbThreads(static_cast<int>(n));
}

inline fs::path index_path(const std::string& data) {
  if (data.empty()) throw ConfigError("no dataset given");
  const fs::path p(data);
  return fs::is_directory(p) ? p / "index.jsonl" : p;
}

inline data::LoadOptions load_options(const NetworkConfig& n, bool take_last) {
  return {n.height, n.width, n.frames, take_last};
}

// An output directory must be creatable: an existing regular file blocks it.
inline void check_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  if (fs::exists(out) && !fs::is_directory(out)) throw ConfigError("output path is not a directory: " + out);
}

inline void write_json(const fs::path& path, const Json& j) { data::write_text(path, j.dump(2) + "\n"); }

template <typename Fn>
decltype(auto) with_precision(const std::string& precision, Fn&& fn) {
  require_precision(precision);
  if (precision == "f64") return fn(double{});
  return fn(float{});
}

// --- gen-data ---------------------------------------------------------------

struct GenDataOptions {
  std::optional<std::string> spec_file;
  std::string preset = "default";
  std::size_t count = 20;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> height, width;
  std::string out;
};

inline data::SyntheticSpec resolve_spec(const GenDataOptions& o) {
  data::SyntheticSpec s = data::synthetic_preset(o.preset);
  if (o.spec_file) s = data::synthetic_spec_from_json(read_json_file(*o.spec_file), s);
  if (o.seed) s.seed = *o.seed;
  if (o.k) s.frames = *o.k;
  if (o.height) s.height = *o.height;
  if (o.width) s.width = *o.width;
  s.validate();
  return s;
}

inline int cmd_gen_data(const GenDataOptions& o, std::ostream& log) {
  const data::SyntheticSpec spec = resolve_spec(o);
  if (o.count == 0) throw ConfigError("gen-data: count must be >= 1");
  check_out_dir(o.out);
  const auto entries = data::generate_dataset(spec, o.count, o.out);
  write_json(fs::path(o.out) / "dataset.json", {{"spec", data::to_json(spec)}, {"count", o.count}});
  log << "wrote " << entries.size() << " clips to " << o.out << "\n";
  return kOk;
}

// --- train --------------------------------------------------------------------

struct TrainOptions {
  std::optional<std::size_t> steps;
  std::optional<std::string> resume;
  std::size_t log_every = 10;
};

inline std::string checkpoint_stem(const fs::path& out, std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06zu", step);
  return (out / "checkpoints" / buf).string();
}

template <typename T>
int train_typed(const RunConfig& cfg, const TrainOptions& o, std::ostream& log) {
  const fs::path out(cfg.out);
  const auto clips = data::load_dataset(index_path(cfg.train_data), load_options(cfg.network, cfg.take_last_frames));
  std::optional<LaneNet<T>> net;
  if (o.resume) {
    net.emplace(load_network<T>(*o.resume));
    if (!(net->config() == cfg.network)) {
      throw ConfigError("resume: checkpoint network config differs from the resolved config");
    }
  } else {
    net.emplace(LaneNet<T>::build(cfg.network));
  }
  Trainer<T> trainer(*net, cfg.train);
  if (o.resume) load_optimizer_state(*o.resume, *net, trainer.optimizer());

  fs::create_directories(out);
  write_json(out / "config.json", to_json(cfg));
  const fs::path csv = out / "loss.csv";
  const bool append = o.resume && fs::exists(csv);
  std::ofstream csv_out(csv, append ? std::ios::app : std::ios::trunc);
  if (!csv_out) throw IoError("cannot write " + csv.string());
  if (!append) csv_out << csv_header();

  TrainCallbacks cb;
  cb.on_step = [&](const StepRecord& r) {
    csv_out << csv_row(r);
    csv_out.flush();
    if (o.log_every && r.step % o.log_every == 0) log << "step " << r.step << " loss " << r.loss << "\n";
  };
  cb.on_checkpoint = [&](std::size_t step) { save_checkpoint(checkpoint_stem(out, step), *net, &trainer.optimizer()); };
  const auto records = trainer.run(clips, cb);
  save_checkpoint((out / "final").string(), *net, &trainer.optimizer());
  log << "trained " << records.size() << " steps; final checkpoint " << (out / "final").string() << "\n";
  return kOk;
}

inline int cmd_train(RunConfig cfg, const TrainOptions& o, std::ostream& log) {
  if (o.steps) cfg.train.max_steps = *o.steps;
  cfg.validate();
  check_out_dir(cfg.out);
  if (!fs::exists(index_path(cfg.train_data))) throw IoError("dataset index not found: " + index_path(cfg.train_data).string());
  log << "config " << to_json(cfg).dump() << "\n";
  return with_precision(cfg.precision, [&](auto tag) { return train_typed<decltype(tag)>(cfg, o, log); });
}

// --- eval -------------------------------------------------------------------

struct EvalCommandOptions {
  std::string checkpoint;
};

// Precision for inference: an explicit flag wins over the checkpoint's.
inline std::string inference_precision(const CheckpointMeta& meta, const CommonFlags& flags) {
  return flags.precision ? *flags.precision : meta.precision;
}

inline int cmd_eval(const RunConfig& cfg, const CommonFlags& flags, const EvalCommandOptions& o, std::ostream& log) {
  require_precision(cfg.precision);
  if (cfg.ap_samples == 0) throw ConfigError("eval: ap_samples must be >= 1");
  const std::string data = cfg.test_data.empty() ? cfg.train_data : cfg.test_data;
  if (!cfg.out.empty()) check_out_dir(cfg.out);
  const CheckpointMeta meta = read_checkpoint_meta(o.checkpoint);
  if (flags.k && *flags.k != meta.network.frames) {
    throw ConfigError("eval: --k " + std::to_string(*flags.k) + " does not match checkpoint K=" +
                      std::to_string(meta.network.frames));
  }
  const auto clips = data::load_dataset(index_path(data), load_options(meta.network, cfg.take_last_frames));
  const MetricReport report = with_precision(inference_precision(meta, flags), [&](auto tag) {
    using T = decltype(tag);
    auto net = load_network<T>(o.checkpoint);
    return evaluate_dataset(net, clips, EvalOptions{cfg.ap_samples, cfg.averaging});
  });
  const Json j = to_json(report);
  if (!cfg.out.empty()) {
    fs::create_directories(cfg.out);
    write_json(fs::path(cfg.out) / "metrics.json", j);
  }
  log << format_table(report) << j.dump() << "\n";
  return kOk;
}

// --- predict ----------------------------------------------------------------

struct PredictOptions {
  std::string checkpoint;
  std::string clip_dir;
};

// Lane pixels of frame K blended toward red; others untouched.
inline data::Image overlay(const data::Image& frame, const std::vector<std::uint8_t>& mask) {
  data::Image out = data::to_rgb(frame);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const std::array<int, 3> tint{255, 32, 32};
    for (std::size_t c = 0; c < 3; ++c) {
      auto& p = out.pixels[i * 3 + c];
      p = static_cast<std::uint8_t>((static_cast<int>(p) * 2 + tint[c] * 3 + 2) / 5);
    }
  }
  return out;
}

inline int cmd_predict(const RunConfig& cfg, const CommonFlags& flags, const PredictOptions& o, std::ostream& log) {
  check_out_dir(cfg.out);
  if (!fs::is_directory(o.clip_dir)) throw IoError("clip directory not found: " + o.clip_dir);
  const CheckpointMeta meta = read_checkpoint_meta(o.checkpoint);
  const fs::path dir = fs::absolute(o.clip_dir);
  const data::Clip clip =
      data::load_clip({dir.filename().string(), dir.string()}, {}, load_options(meta.network, cfg.take_last_frames));
  const auto mask = with_precision(inference_precision(meta, flags), [&](auto tag) {
    using T = decltype(tag);
    auto net = load_network<T>(o.checkpoint);
    net.set_mode(NormMode::kEval);
    const auto batch = make_batch<T>({clip}, std::vector<std::size_t>{0});
    return argmax_mask(net.predict_probabilities(batch.frames), 0);
  });
  fs::create_directories(cfg.out);
  const auto h = clip.height, w = clip.width;
  data::write_pnm((fs::path(cfg.out) / "mask.pgm").string(), data::mask_to_image(mask, h, w));
  data::write_pnm((fs::path(cfg.out) / "overlay.ppm").string(), overlay(data::planar_to_image(clip.frames.back(), h, w), mask));
  log << "wrote mask.pgm and overlay.ppm to " << cfg.out << "\n";
  return kOk;
}

// --- ablate -----------------------------------------------------------------

enum class AblationSuite { kModules, kLocation, kKSweep };

inline AblationSuite parse_suite(const std::string& s) {
  if (s == "modules") return AblationSuite::kModules;
  if (s == "location") return AblationSuite::kLocation;
  if (s == "k-sweep") return AblationSuite::kKSweep;
  throw ConfigError("unknown ablation suite '" + s + "' (modules, location, k-sweep)");
}

struct AblationRow {
  std::string label;
  NetworkConfig network;
  MetricReport metrics;
};

struct AblationTable {
  std::string suite;
  std::string first_column;
  std::vector<AblationRow> rows;
};

// Row configurations in table order. The "both" module row is the base
// network with both recurrent modules on.
inline std::vector<std::pair<std::string, NetworkConfig>> ablation_rows(AblationSuite suite, const NetworkConfig& base) {
  NetworkConfig both = base;
  if (both.fcgru_location == FcgruLocation::kNone) both.fcgru_location = FcgruLocation::kConv2_2;
  both.mcgru_enabled = true;
  std::vector<std::pair<std::string, NetworkConfig>> rows;
  switch (suite) {
    case AblationSuite::kModules: {
      NetworkConfig f = both, m = both;
      f.mcgru_enabled = false;
      m.fcgru_location = FcgruLocation::kNone;
      rows = {{"FCGRU", f}, {"MCGRUs", m}, {"FCGRU and MCGRUs", both}};
      break;
    }
    case AblationSuite::kLocation:
      for (int level = 1; level <= 5; ++level) {
        NetworkConfig c = both;
        c.fcgru_location = static_cast<FcgruLocation>(level);
        rows.push_back({strada::to_string(c.fcgru_location), c});
      }
      break;
    case AblationSuite::kKSweep:
      for (std::size_t k = 1; k <= 7; ++k) {
        NetworkConfig c = base;
        c.frames = k;
        rows.push_back({"K = " + std::to_string(k), c});
      }
      break;
  }
  return rows;
}

inline std::string first_column(AblationSuite s) {
  switch (s) {
    case AblationSuite::kModules:
      return "Method";
    case AblationSuite::kLocation:
      return "Location";
    default:
      return "K values";
  }
}

inline std::string suite_name(AblationSuite s) {
  switch (s) {
    case AblationSuite::kModules:
      return "modules";
    case AblationSuite::kLocation:
      return "location";
    default:
      return "k-sweep";
  }
}

inline std::string format_ablation(const AblationTable& t) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-18s %8s %8s %8s %8s\n", t.first_column.c_str(), "Acc(%)", "Pre", "Rec", "F1-M");
  out += buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof(buf), "%-18s %8.2f %8.4f %8.4f %8.4f\n", r.label.c_str(), 100.0 * r.metrics.accuracy,
                  r.metrics.precision, r.metrics.recall, r.metrics.f1);
    out += buf;
  }
  return out;
}

inline Json to_json(const AblationTable& t) {
  Json j;
  j["suite"] = t.suite;
  j["columns"] = {t.first_column, "Acc(%)", "Pre", "Rec", "F1-M"};
  j["rows"] = Json::array();
  for (const auto& r : t.rows) {
    j["rows"].push_back({{"label", r.label},
                         {"acc_percent", 100.0 * r.metrics.accuracy},
                         {"precision", r.metrics.precision},
                         {"recall", r.metrics.recall},
                         {"f1", r.metrics.f1},
                         {"network", strada::to_json(r.network)},
                         {"metrics", strada::to_json(r.metrics)}});
  }
  return j;
}

struct AblateOptions {
  std::string suite;
  std::optional<std::size_t> steps;
  // Without dataset paths the suite generates clips in memory from this preset.
  std::string preset = "default";
  std::size_t count = 12;
  std::size_t test_count = 6;
};

// Clips used by the ablation, loaded with K = max K across rows and cut per row.
struct AblationData {
  std::vector<data::Clip> train, test;
};

inline std::vector<data::Clip> synthetic_clips(data::SyntheticSpec spec, std::size_t count, std::uint64_t first_seed) {
  std::vector<data::Clip> out;
  for (std::size_t i = 0; i < count; ++i) {
    spec.seed = first_seed + i;
    out.push_back(data::generate_synthetic(spec).clip);
  }
  return out;
}

inline data::Clip trailing_frames(const data::Clip& c, std::size_t k) {
  if (c.frame_count() < k) {
    throw ShapeError("clip " + c.id + " has " + std::to_string(c.frame_count()) + " frames, K=" + std::to_string(k) +
                     " needs more");
  }
  data::Clip out = c;
  out.frames.erase(out.frames.begin(), out.frames.end() - static_cast<std::ptrdiff_t>(k));
  return out;
}

inline AblationData ablation_data(const RunConfig& cfg, const AblateOptions& o, std::size_t max_k) {
  AblationData d;
  NetworkConfig load = cfg.network;
  load.frames = max_k;
  if (!cfg.train_data.empty()) {
    d.train = data::load_dataset(index_path(cfg.train_data), load_options(load, true));
    d.test = cfg.test_data.empty() ? d.train : data::load_dataset(index_path(cfg.test_data), load_options(load, true));
    return d;
  }
  data::SyntheticSpec spec = data::rescaled(data::synthetic_preset(o.preset), cfg.network.height, cfg.network.width);
  spec.frames = max_k;
  d.train = synthetic_clips(spec, o.count, cfg.train.seed * 1000 + 1);
  d.test = synthetic_clips(spec, o.test_count, cfg.train.seed * 1000 + 501);
  return d;
}

template <typename T>
AblationRow run_ablation_row(const std::string& label, const NetworkConfig& network, const RunConfig& cfg,
                             const AblationData& d) {
  std::vector<data::Clip> train, test;
  for (const auto& c : d.train) train.push_back(trailing_frames(c, network.frames));
  for (const auto& c : d.test) test.push_back(trailing_frames(c, network.frames));
  auto net = LaneNet<T>::build(network);
  Trainer<T> trainer(net, cfg.train);
  trainer.run(train);
  return {label, network, evaluate_dataset(net, test, EvalOptions{cfg.ap_samples, cfg.averaging})};
}

inline AblationTable run_ablation(RunConfig cfg, const AblateOptions& o, std::ostream& log) {
  const AblationSuite suite = parse_suite(o.suite);
  if (o.steps) cfg.train.max_steps = *o.steps;
  cfg.validate();
  const auto rows = ablation_rows(suite, cfg.network);
  std::size_t max_k = 0;
  for (const auto& [label, n] : rows) {
    n.validate();
    max_k = std::max(max_k, n.frames);
  }
  const AblationData d = ablation_data(cfg, o, max_k);
  AblationTable table{suite_name(suite), first_column(suite), {}};
  for (const auto& [label, n] : rows) {
    table.rows.push_back(with_precision(cfg.precision, [&](auto tag) {
      return run_ablation_row<decltype(tag)>(label, n, cfg, d);
    }));
    log << "  " << label << ": F1 " << table.rows.back().metrics.f1 << "\n";
  }
  return table;
}

inline int cmd_ablate(const RunConfig& cfg, const AblateOptions& o, std::ostream& log) {
  parse_suite(o.suite);
  check_out_dir(cfg.out);
  const AblationTable table = run_ablation(cfg, o, log);
  fs::create_directories(cfg.out);
  write_json(fs::path(cfg.out) / "config.json", to_json(cfg));
  write_json(fs::path(cfg.out) / ("ablate_" + table.suite + ".json"), to_json(table));
  const std::string text = format_ablation(table);
  data::write_text(fs::path(cfg.out) / ("ablate_" + table.suite + ".txt"), text);
  log << text;
  return kOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckOptions {
  std::string preset = "default";  // "default" or "primitives" (skips the network)
  bool plant_fault = false;
};

inline int cmd_gradcheck(const CommonFlags& flags, const GradcheckOptions& o, std::ostream& log) {
  if (o.preset != "default" && o.preset != "primitives") {
    throw ConfigError("unknown gradcheck preset '" + o.preset + "' (default, primitives)");
  }
  if (flags.out) check_out_dir(*flags.out);
  GradSuiteOptions opts;
  opts.include_network = o.preset == "default";
  opts.analytic_scale = o.plant_fault ? 2.0 : 1.0;
  opts.seed = flags.seed.value_or(0);
  const GradSuiteReport report = run_gradient_suite(opts);
  Json j = Json::array();
  for (const auto& e : report.entries) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-4s %-20s error %.3e  tol %.0e\n", e.passed() ? "ok" : "FAIL", e.name.c_str(),
                  e.error, e.tolerance);
    log << buf;
    j.push_back({{"name", e.name}, {"error", e.error}, {"tolerance", e.tolerance}, {"passed", e.passed()}});
  }
  if (flags.out) {
    fs::create_directories(*flags.out);
    write_json(fs::path(*flags.out) / "gradcheck.json", j);
  }
  if (!report.passed()) throw CheckFailure("gradient check failed");
  log << "all gradient checks passed\n";
  return kOk;
}

}  // namespace strada::cli
