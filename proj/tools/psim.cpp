#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "psim/error.hpp"
#include "psim/field_model.hpp"
#include "psim/gan.hpp"
#include "psim/io.hpp"
#include "psim/log.hpp"
#include "psim/metrics.hpp"
#include "psim/reconstruct.hpp"
#include "psim/rng.hpp"
#include "psim/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psim;

namespace {

constexpr const char* kToolVersion = "psim 0.1.0";

struct Options {
  std::string config;
  std::string data;
  std::string pred;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::optional<long> steps;
  std::string checkpoint;
  int workers = 1;
  std::string mask = "none";
  std::optional<int> row;
};

// Stage timings and artifact bookkeeping for the run manifest.
class Manifest {
 public:
  Manifest(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {
    start_ = std::chrono::steady_clock::now();
  }

  template <typename F>
  auto stage(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      record(name, t0);
    } else {
      auto r = body();
      record(name, t0);
      return r;
    }
  }

  json& fields() { return fields_; }
  void input(const fs::path& p) { inputs_.push_back(p.string()); }

  void write() {
    json outputs = json::object();
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(out_)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) outputs[fs::relative(f, out_).generic_string()] = io::sha256_file(f);
    json m = fields_;
    m["command"] = command_;
    m["tool_version"] = kToolVersion;
    m["inputs"] = inputs_;
    m["out"] = out_.string();
    m["outputs"] = outputs;
    m["timings_s"] = timings_;
    m["wall_clock_s"] = seconds_since(start_);
    io::write_json(out_ / "manifest.json", m);
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    timings_[name] = seconds_since(t0);
  }

  std::string command_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  json fields_ = json::object();
  json timings_ = json::object();
  std::vector<std::string> inputs_;
};

/// Runs body(i) for i in [0, n) on `workers` threads. Results must be written
/// by index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  if (count == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(count, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  // Report the lowest-index failure so errors are worker-count invariant too.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string sample_name(std::size_t i) {
  std::ostringstream os;
  os << "sample_" << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

std::string frame_file(int k) { return "frame_" + std::to_string(k) + ".pfm"; }

/// A stack directory holds frame_1.pfm directly; a dataset directory holds
/// one sub-directory per sample.
std::vector<fs::path> stack_dirs(const fs::path& data) {
  if (!fs::is_directory(data)) throw IoError("data directory not found: " + data.string());
  if (fs::exists(data / frame_file(1))) return {data};
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(data)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IoError("no sample directories under " + data.string());
  return dirs;
}

struct LoadedStack {
  InterferogramStack stack;
  std::optional<PhaseMap> truth;
  bool has_lambda = false;
};

LoadedStack load_stack(const fs::path& dir) {
  LoadedStack s;
  for (int k = 1; k <= 5; ++k) {
    if (!fs::exists(dir / frame_file(k))) {
      throw ShapeError("stack " + dir.string() + ": missing " + frame_file(k) + " (five frames required)");
    }
  }
  for (int k = 1; k <= 5; ++k) s.stack.frames[k - 1] = io::read_pfm(dir / frame_file(k));
  try {
    s.stack.validate();
  } catch (const ShapeError& e) {
    throw ShapeError("stack " + dir.string() + ": " + e.what());
  }
  if (fs::exists(io::sidecar_path(dir / frame_file(1)))) {
    const io::Sidecar side = io::read_sidecar(dir / frame_file(1));
    if (side.extra.contains("model")) {
      s.stack.model = model_from_json(side.extra["model"], dir.string() + "/frame_1.json:model");
      s.has_lambda = true;
    } else if (side.extra.contains("lambda0")) {
      s.stack.model.source = SourceSpec::make(side.extra["lambda0"].get<double>(), s.stack.model.source.delta_lambda);
      s.has_lambda = true;
    }
  }
  for (int k = 1; k <= 5; ++k) {
    const fs::path side = io::sidecar_path(dir / frame_file(k));
    if (fs::exists(side)) {
      const json j = io::read_json(side);
      s.stack.realized_shifts[k - 1] = j.value("realized_shift", s.stack.model.shift_schedule[k - 1]);
    } else {
      s.stack.realized_shifts[k - 1] = s.stack.model.shift_schedule[k - 1];
    }
  }
  if (fs::exists(dir / "phase_gt.pfm")) s.truth = PhaseMap{io::read_pfm(dir / "phase_gt.pfm"), false};
  return s;
}

std::vector<StackRecord> load_records(const std::vector<fs::path>& dirs, int workers) {
  std::vector<StackRecord> records(dirs.size());
  parallel_for(dirs.size(), workers, [&](std::size_t i) {
    LoadedStack s = load_stack(dirs[i]);
    records[i] = {std::move(s.stack), std::move(s.truth)};
  });
  return records;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
}

GanMode resolve_mode(const Options& opt, std::optional<GanMode> from_config) {
  std::optional<GanMode> mode = from_config;
  if (!opt.mode.empty()) {
    const GanMode flag = gan_mode_from_string(opt.mode);
    if (mode && *mode != flag) {
      throw ModeError(std::string("--mode ") + to_string(flag) + " conflicts with mode " + to_string(*mode));
    }
    mode = flag;
  }
  if (!mode) throw ConfigError("no mode given (use --mode frames|phase)");
  return *mode;
}

std::string loss_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << std::setprecision(17) << "step,L_D,L_G_adv,L_G_l1\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    os << i << ',' << history[i].d << ',' << history[i].g_adv << ',' << history[i].g_l1 << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Options& opt) {
  if (opt.config.empty() || opt.out.empty()) throw ConfigError("simulate needs --config and --out");
  const json cfg = io::read_json(opt.config);
  const ForwardModelSpec model = model_from_json(detail::field<json>(cfg, "model", "config"), "config.model");
  model.validate();
  const ObjectFamily family = family_from_json(detail::field<json>(cfg, "family", "config"), "config.family");
  family.validate();
  const auto count = detail::field<std::size_t>(cfg, "count", "config");
  const int width = detail::field_or<int>(cfg, "width", "config", 64);
  const int height = detail::field_or<int>(cfg, "height", "config", 64);
  if (width < 8 || height < 8) throw ConfigError("field 'config.width/height' must be >= 8");
  if (count < 1) throw ConfigError("field 'config.count' must be >= 1");
  const std::uint64_t seed = opt.seed.value_or(detail::field_or<std::uint64_t>(cfg, "seed", "config", 0));

  const fs::path out(opt.out);
  prepare_out(out);
  Manifest manifest("simulate", out);
  manifest.input(opt.config);
  manifest.fields()["config_hash"] = json_hash(cfg);
  manifest.fields()["seeds"] = {{"data", seed}};
  const std::string spec_hash = json_hash(cfg);
  const json model_json = to_json(model);

  manifest.stage("simulate", [&] {
    parallel_for(count, opt.workers, [&](std::size_t i) {
      const SynthSample s = synth_sample(i, width, height, family, model, seed);
      const fs::path dir = out / sample_name(i);
      prepare_out(dir);
      const json prov = {{"seed", derive_seed(seed, i)}, {"spec_hash", spec_hash}, {"index", i}};
      for (int k = 1; k <= 5; ++k) {
        io::Sidecar side{"frame", "intensity", false, prov,
                         {{"frame", k},
                          {"lambda0", model.source.lambda0},
                          {"nominal_shift", model.shift_schedule[k - 1]},
                          {"realized_shift", s.stack.realized_shifts[k - 1]},
                          {"model", model_json}}};
        io::write_image(dir / frame_file(k), s.stack.frames[k - 1], side);
      }
      io::write_image(dir / "phase_gt.pfm", s.truth.values,
                      {"phase_gt", "rad", false, prov, {{"lambda0", model.source.lambda0}, {"object", to_json(s.object)}}});
    });
  });
  manifest.write();
  log::info("simulate: wrote " + std::to_string(count) + " samples to " + out.string());
  return 0;
}

// ------------------------------------------------------------- reconstruct

int cmd_reconstruct(const Options& opt) {
  if (opt.data.empty() || opt.out.empty()) throw ConfigError("reconstruct needs --data and --out");
  const auto dirs = stack_dirs(opt.data);
  // Validate every stack before any output is written.
  std::vector<LoadedStack> stacks(dirs.size());
  parallel_for(dirs.size(), opt.workers, [&](std::size_t i) { stacks[i] = load_stack(dirs[i]); });

  const fs::path out(opt.out);
  prepare_out(out);
  Manifest manifest("reconstruct", out);
  manifest.input(opt.data);
  const bool single = dirs.size() == 1 && dirs[0] == fs::path(opt.data);
  manifest.stage("reconstruct", [&] {
    parallel_for(dirs.size(), opt.workers, [&](std::size_t i) {
      const ClassicalReconstruction r = reconstruct_classical(stacks[i].stack);
      const fs::path dir = single ? out : out / dirs[i].filename();
      prepare_out(dir);
      const json prov = {{"source", dirs[i].string()}};
      io::write_image(dir / "phase_wrapped.pfm", r.wrapped.values, {"phase_wrapped", "rad", true, prov, {}});
      io::write_image(dir / "phase_unwrapped.pfm", r.unwrapped.values, {"phase_unwrapped", "rad", false, prov, {}});
      io::write_image(dir / "quality.pfm", r.quality.amplitude, {"modulation", "intensity", false, prov, {}});
      if (stacks[i].has_lambda) {
        io::write_image(dir / "height.pfm", r.height.nm,
                        {"height", "nm", false, prov, {{"lambda0", stacks[i].stack.model.source.lambda0}}});
      }
    });
  });
  manifest.write();
  log::info("reconstruct: " + std::to_string(dirs.size()) + " stacks");
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const Options& opt) {
  if (opt.data.empty() || opt.out.empty()) throw ConfigError("train needs --data and --out");
  json cfg = json::object();
  if (!opt.config.empty()) cfg = io::read_json(opt.config);

  std::optional<GanState> resumed;
  if (!opt.checkpoint.empty()) resumed = load_checkpoint(opt.checkpoint);

  GanSpec spec = resumed ? resumed->spec
                         : (cfg.contains("gan") ? gan_spec_from_json(cfg["gan"]) : GanSpec{});
  std::optional<GanMode> config_mode;
  if (resumed) config_mode = resumed->spec.mode;
  if (cfg.contains("gan") && cfg["gan"].contains("mode")) {
    const GanMode m = gan_mode_from_string(cfg["gan"]["mode"].get<std::string>());
    if (config_mode && *config_mode != m) throw ModeError("config mode differs from the checkpoint's");
    config_mode = m;
  }
  spec.mode = resolve_mode(opt, config_mode);
  spec.validate();
  const long steps = opt.steps.value_or(detail::field_or<long>(cfg, "steps", "config", 100));
  if (steps < 0) throw ConfigError("--steps must be >= 0");
  const std::uint64_t seed =
      resumed ? resumed->seed : opt.seed.value_or(detail::field_or<std::uint64_t>(cfg, "seed", "config", 0));

  const auto dirs = stack_dirs(opt.data);
  const fs::path out(opt.out);
  Manifest manifest("train", out);
  const std::vector<StackRecord> records = manifest.stage("load", [&] { return load_records(dirs, opt.workers); });
  for (const auto& r : records) {
    if (r.stack.width() != spec.image_side || r.stack.height() != spec.image_side) {
      throw ShapeError("train: stacks must be " + std::to_string(spec.image_side) + "x" +
                       std::to_string(spec.image_side));
    }
  }
  const PairSet set = manifest.stage("pairs", [&] {
    return resumed ? build_pairs(records, spec.mode, resumed->norm) : build_pairs(records, spec.mode);
  });
  GanState state = resumed ? std::move(*resumed) : make_gan_state(spec, seed, set.norm);

  prepare_out(out);
  manifest.input(opt.data);
  if (!opt.config.empty()) manifest.input(opt.config);
  if (!opt.checkpoint.empty()) manifest.input(opt.checkpoint);
  manifest.fields()["config_hash"] = json_hash(to_json(spec));
  manifest.fields()["seeds"] = {{"train", seed}};
  manifest.fields()["steps"] = {{"start", state.step}, {"run", steps}};

  manifest.stage("train", [&] {
    train(state, set.pairs, steps, [&](long step, const StepStats& s) {
      if (log::threshold() >= log::Level::debug || (step + 1) % 100 == 0) {
        std::ostringstream os;
        os << "step " << step + 1 << " L_D " << s.losses.d << " L_G_adv " << s.losses.g_adv << " L_G_l1 "
           << s.losses.g_l1;
        log::info(os.str());
      }
    });
  });
  save_checkpoint(out / "checkpoint.psck", state);
  io::write_file_atomic(out / "losses.csv", loss_csv(state.history));
  manifest.write();
  return 0;
}

// ------------------------------------------------------------------- infer

int cmd_infer(const Options& opt) {
  if (opt.checkpoint.empty() || opt.data.empty() || opt.out.empty()) {
    throw ConfigError("infer needs --checkpoint, --data and --out");
  }
  GanState state = load_checkpoint(opt.checkpoint);
  const GanMode mode = resolve_mode(opt, state.spec.mode);
  const auto dirs = stack_dirs(opt.data);
  std::vector<Image> inputs(dirs.size());
  std::vector<ForwardModelSpec> models(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (!fs::exists(dirs[i] / frame_file(1))) throw ShapeError("stack " + dirs[i].string() + ": missing frame_1.pfm");
    inputs[i] = io::read_pfm(dirs[i] / frame_file(1));
    const fs::path side = io::sidecar_path(dirs[i] / frame_file(1));
    if (fs::exists(side)) {
      const json j = io::read_json(side);
      if (j.contains("model")) models[i] = model_from_json(j["model"], side.string() + ":model");
    }
  }

  const fs::path out(opt.out);
  prepare_out(out);
  Manifest manifest("infer", out);
  manifest.input(opt.checkpoint);
  manifest.input(opt.data);
  manifest.fields()["mode"] = to_string(mode);
  manifest.fields()["seeds"] = {{"train", state.seed}};
  manifest.stage("infer", [&] {
    // Network layers cache activations, so each worker needs its own copy.
    const std::string blob = encode_checkpoint(state);
    parallel_for(dirs.size(), opt.workers, [&](std::size_t i) {
      GanState local = decode_checkpoint(blob);
      const fs::path dir = out / dirs[i].filename();
      prepare_out(dir);
      const json prov = {{"checkpoint_step", local.step}, {"source", dirs[i].string()}};
      PhaseMap phase;
      if (mode == GanMode::frames) {
        const auto predicted = chain_infer_frames(local, inputs[i]);
        const InterferogramStack stack = assemble_stack(inputs[i], predicted, models[i]);
        for (int k = 1; k <= 5; ++k) {
          io::write_image(dir / frame_file(k), stack.frames[k - 1],
                          {k == 1 ? "frame" : "frame_predicted", "intensity", false, prov,
                           {{"frame", k}, {"lambda0", models[i].source.lambda0}, {"model", to_json(models[i])}}});
        }
        phase = reconstruct_classical(stack).unwrapped;
      } else {
        phase = infer_phase(local, inputs[i]);
      }
      io::write_image(dir / "phase_pred.pfm", phase.values, {"phase_pred", "rad", false, prov, {}});
    });
  });
  io::write_json(out / "infer.json", {{"mode", to_string(mode)}, {"samples", dirs.size()}});
  manifest.write();
  return 0;
}

// -------------------------------------------------------------------- eval

json mean_of(const std::vector<json>& rows, const std::string& key) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.contains(key)) {
      sum += r[key].get<double>();
      ++n;
    }
  }
  return n == 0 ? json(nullptr) : json(sum / static_cast<double>(n));
}

int cmd_eval(const Options& opt) {
  if (opt.data.empty() || opt.out.empty()) throw ConfigError("eval needs --data and --out");
  if (opt.mask != "none" && opt.mask != "foreground") throw ConfigError("--mask must be none or foreground");
  const auto dirs = stack_dirs(opt.data);

  std::optional<GanMode> pred_mode;
  if (!opt.pred.empty() && fs::exists(fs::path(opt.pred) / "infer.json")) {
    pred_mode = gan_mode_from_string(io::read_json(fs::path(opt.pred) / "infer.json").at("mode").get<std::string>());
  }
  std::optional<GanMode> mode;
  if (!opt.mode.empty()) mode = resolve_mode(opt, pred_mode);
  else mode = pred_mode;
  if (mode == GanMode::frames && !opt.pred.empty() && !fs::exists(fs::path(opt.pred) / dirs[0].filename() / frame_file(2))) {
    throw ModeError("eval --mode frames: predictions under " + opt.pred + " hold no predicted frames");
  }

  struct Row {
    json metrics;
    std::optional<Profile> truth_profile;
    std::optional<Profile> pred_profile;
  };
  std::vector<Row> rows(dirs.size());
  const fs::path out(opt.out);
  Manifest manifest("eval", out);
  manifest.input(opt.data);
  if (!opt.pred.empty()) manifest.input(opt.pred);

  manifest.stage("eval", [&] {
    parallel_for(dirs.size(), opt.workers, [&](std::size_t i) {
      const LoadedStack truth = load_stack(dirs[i]);
      if (!truth.truth) throw IoError("eval: " + dirs[i].string() + " has no phase_gt.pfm");
      const PhaseMap& gt = *truth.truth;
      const ClassicalReconstruction classical = reconstruct_classical(truth.stack);
      PhaseMap pred = classical.unwrapped;
      std::optional<InterferogramStack> pred_stack;
      if (!opt.pred.empty()) {
        const fs::path pdir = fs::path(opt.pred) / dirs[i].filename();
        if (!fs::exists(pdir / "phase_pred.pfm")) throw IoError("eval: missing " + (pdir / "phase_pred.pfm").string());
        pred = PhaseMap{io::read_pfm(pdir / "phase_pred.pfm"), false};
        if (!same_shape(pred.values, gt.values)) throw ShapeError("eval " + dirs[i].string() + ": prediction and truth differ in size");
        if (mode == GanMode::frames) pred_stack = load_stack(pdir).stack;
      }
      const PhaseMap aligned = align_global_offset(pred, gt);
      const SsimResult s = ssim_phase(pred, gt);
      const GridT<bool> fg = foreground_mask(gt.values);
      json m = {{"sample", dirs[i].filename().string()},
                {"ssim_full", s.mean},
                {"ssim_foreground", masked_mean(s, fg, SsimParams{}.window)},
                {"rms", rms_error(aligned.values, gt.values)},
                {"ssim_classical_vs_truth", ssim_phase(classical.unwrapped, gt).mean},
                {"ssim_vs_classical", ssim_phase(pred, classical.unwrapped).mean}};
      m["ssim"] = opt.mask == "foreground" ? m["ssim_foreground"] : m["ssim_full"];
      if (pred_stack) {
        json hops = json::array();
        for (int k = 1; k <= 4; ++k) hops.push_back(mean_abs_error(pred_stack->frames[k], truth.stack.frames[k]));
        m["hop_l1"] = hops;
      }
      const Eigen::Index row = opt.row.value_or(static_cast<int>(truth.stack.height() / 2));
      rows[i].truth_profile = stitched_line_profile(truth.stack, row);
      if (pred_stack) rows[i].pred_profile = stitched_line_profile(*pred_stack, row);
      rows[i].metrics = std::move(m);
    });
  });

  prepare_out(out);
  std::vector<json> per_sample;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    per_sample.push_back(rows[i].metrics);
    const std::string name = dirs[i].filename().string();
    io::write_file_atomic(out / ("profile_" + name + ".csv"), io::profile_csv(*rows[i].truth_profile));
    if (rows[i].pred_profile) {
      io::write_file_atomic(out / ("profile_pred_" + name + ".csv"), io::profile_csv(*rows[i].pred_profile));
    }
  }
  json summary = {{"mask", opt.mask},
                  {"mode", mode ? json(to_string(*mode)) : json("classical")},
                  {"samples", per_sample},
                  {"mean",
                   {{"ssim", mean_of(per_sample, "ssim")},
                    {"ssim_full", mean_of(per_sample, "ssim_full")},
                    {"ssim_foreground", mean_of(per_sample, "ssim_foreground")},
                    {"rms", mean_of(per_sample, "rms")},
                    {"ssim_classical_vs_truth", mean_of(per_sample, "ssim_classical_vs_truth")},
                    {"ssim_vs_classical", mean_of(per_sample, "ssim_vs_classical")}}}};
  if (mode == GanMode::frames && !opt.pred.empty()) {
    json hops = json::array();
    for (int k = 0; k < 4; ++k) {
      double sum = 0;
      for (const auto& r : per_sample) sum += r["hop_l1"][k].get<double>();
      hops.push_back(sum / static_cast<double>(per_sample.size()));
    }
    summary["mean"]["hop_l1"] = hops;
  }
  io::write_json(out / "metrics.json", summary);
  manifest.write();
  return 0;
}

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    log::error(std::string("config: ") + x.what());
    return 2;
  } catch (const nlohmann::json::exception& x) {
    log::error(std::string("config: ") + x.what());
    return 2;
  } catch (const IoError& x) {
    log::error(std::string("io: ") + x.what());
    return 3;
  } catch (const fs::filesystem_error& x) {
    log::error(std::string("io: ") + x.what());
    return 3;
  } catch (const ShapeError& x) {
    log::error(std::string("shape: ") + x.what());
    return 4;
  } catch (const ModeError& x) {
    log::error(std::string("mode: ") + x.what());
    return 5;
  } catch (const IntegrityError& x) {
    log::error(std::string("integrity: ") + x.what());
    return 6;
  } catch (const std::exception& x) {
    log::error(x.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-shifting interferometry simulator, reconstructor and GAN toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "Synthesize interferogram stacks with ground truth");
  simulate->add_option("--config", opt.config, "Dataset config JSON")->required();
  simulate->add_option("--seed", opt.seed, "Overrides the config seed");
  add_common(simulate);

  auto* reconstruct = app.add_subcommand("reconstruct", "Classical five-step reconstruction");
  reconstruct->add_option("--data", opt.data, "Stack directory or dataset directory")->required();
  add_common(reconstruct);

  auto* train_cmd = app.add_subcommand("train", "Train the conditional GAN");
  train_cmd->add_option("--config", opt.config, "Training config JSON");
  train_cmd->add_option("--data", opt.data, "Dataset directory")->required();
  train_cmd->add_option("--seed", opt.seed, "Training seed");
  train_cmd->add_option("--mode", opt.mode, "frames or phase");
  train_cmd->add_option("--steps", opt.steps, "Steps to run");
  train_cmd->add_option("--checkpoint", opt.checkpoint, "Checkpoint to resume from");
  add_common(train_cmd);

  auto* infer = app.add_subcommand("infer", "Predict frames or phase from I1");
  infer->add_option("--checkpoint", opt.checkpoint, "Trained checkpoint")->required();
  infer->add_option("--data", opt.data, "Dataset directory")->required();
  infer->add_option("--mode", opt.mode, "frames or phase");
  add_common(infer);

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--data", opt.data, "Dataset with ground truth")->required();
  eval->add_option("--pred", opt.pred, "Output of infer; classical reconstruction when omitted");
  eval->add_option("--mode", opt.mode, "frames or phase");
  eval->add_option("--mask", opt.mask, "none or foreground");
  eval->add_option("--row", opt.row, "Profile row (default: middle)");
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(opt);
    if (*reconstruct) return cmd_reconstruct(opt);
    if (*train_cmd) return cmd_train(opt);
    if (*infer) return cmd_infer(opt);
    if (*eval) return cmd_eval(opt);
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return 1;
}
