#include "insitu/experiment/runner.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "insitu/blackbox/remote.hpp"
#include "insitu/data_dir.hpp"
#include "insitu/errors.hpp"
#include "insitu/experiment/plots.hpp"
#include "insitu/optics/snapshot_io.hpp"
#include "insitu/rl/insilico.hpp"
#include "insitu/tasks/classify.hpp"
#include "insitu/tasks/metrics.hpp"
#include "insitu/tasks/targets.hpp"

namespace insitu::experiment {

namespace {

namespace fs = std::filesystem;

optics::BenchConfig noise_free(optics::BenchConfig bench) {
  bench.noise.enabled = false;
  return bench;
}

std::vector<tasks::LabeledDigit> load_split(const fs::path& dir, bool train) {
  // Bundled names first, then the official distribution's.
  const char* images[] = {train ? "train-images-idx3-ubyte" : "test-images-idx3-ubyte",
                          train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte"};
  const char* labels[] = {train ? "train-labels-idx1-ubyte" : "test-labels-idx1-ubyte",
                          train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte"};
  for (int i = 0; i < 2; ++i) {
    if (fs::exists(dir / images[i])) return tasks::load_mnist(dir / images[i], dir / labels[i]);
  }
  throw DataError("no MNIST " + std::string(train ? "training" : "test") + " files in " +
                  dir.string());
}

void write_snapshot(const fs::path& dir, std::size_t round, const optics::PhaseMap& mu,
                    const optics::IntensityImage& image) {
  fs::create_directories(dir);
  char stem[32];
  std::snprintf(stem, sizeof stem, "round_%06zu", round);
  const optics::PhaseMap wrapped = mu.wrapped();
  const optics::Grid<double> phase(wrapped.shape(), {wrapped.values().begin(), wrapped.values().end()});
  const optics::Grid<double> intensity(image.shape(), {image.values().begin(), image.values().end()});
  optics::write_pgm(dir / (std::string(stem) + "_phase.pgm"), phase);
  optics::write_raw(dir / (std::string(stem) + "_phase.opb"), phase);
  optics::write_pgm(dir / (std::string(stem) + "_intensity.pgm"), intensity);
  optics::write_raw(dir / (std::string(stem) + "_intensity.opb"), intensity);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Instruments open_instruments(const ExperimentConfig& config, std::uint64_t seed) {
  Instruments out;
  if (config.instrument == "local") {
    out.env = std::make_unique<blackbox::LocalEnvironment>(config.bench, seed);
    out.monitor = std::make_unique<blackbox::LocalEnvironment>(noise_free(config.bench));
  } else {
    out.env = std::make_unique<blackbox::RemoteEnvironment>(config.instrument);
    out.monitor = std::make_unique<blackbox::RemoteEnvironment>(config.instrument);
  }
  return out;
}

std::unique_ptr<tasks::Task> build_task(const ExperimentConfig& config) {
  const TaskConfig& t = config.task;
  const optics::Shape shape = config.bench.shape;
  switch (t.kind) {
    case TaskKind::kFocus:
      return tasks::make_task(tasks::FocusSpec{
          t.target_region, optics::DetectorLayout::grid_2x5(shape, t.region_size, t.region_gap)});
    case TaskKind::kHologram:
      return tasks::make_task(tasks::HologramSpec{tasks::make_target(
          tasks::parse_target_kind(t.target), shape, {.grating_period = t.grating_period})});
    case TaskKind::kAberration: {
      auto target = tasks::make_target(tasks::parse_target_kind(t.target), shape,
                                       {.grating_period = t.grating_period});
      optics::PhaseMap initial;
      if (t.initial_phase == "insilico") {
        const auto hologram = tasks::make_task(tasks::HologramSpec{target});
        initial = rl::train_insilico(optics::ideal_twin(config.bench), *hologram,
                                     {.steps = config.insilico.steps, .lr = config.insilico.lr, .seed = 0, .initial_phase = {}})
                      .phase;
      } else {
        const auto grid = optics::read_raw(t.initial_phase);
        initial = optics::PhaseMap(grid.shape(), grid.vector());
      }
      return tasks::make_task(tasks::AberrationSpec{std::move(initial), std::move(target)});
    }
    case TaskKind::kClassify: {
      const fs::path dir = t.data_dir.empty() ? default_data_dir() / "mnist" : fs::path(t.data_dir);
      tasks::ClassifySpec spec;
      spec.train = std::make_shared<const std::vector<tasks::LabeledDigit>>(
          tasks::class_balanced_subset(load_split(dir, true), t.train_size));
      spec.test = std::make_shared<const std::vector<tasks::LabeledDigit>>(
          tasks::class_balanced_subset(load_split(dir, false), t.test_size));
      spec.layout = optics::DetectorLayout::grid_2x5(shape, t.region_size, t.region_gap);
      spec.minibatch = t.minibatch;
      spec.input_window = t.input_window;
      spec.grid = shape;
      return tasks::make_task(spec);
    }
  }
  throw ConfigError("unhandled task kind");
}

RunResult run_single(const ExperimentConfig& config, Algorithm algorithm, std::uint64_t seed,
                     const tasks::Task& task, const fs::path& dir, std::ostream* log) {
  fs::create_directories(dir);
  RunResult result;
  result.algorithm = algorithm;
  result.seed = seed;
  result.dir = dir;
  const fs::path snapshots = dir / "snapshots";

  Instruments inst = open_instruments(config, seed);
  rl::TrainerConfig tc = config.trainer;
  tc.seed = seed;

  if (algorithm == Algorithm::kInsilico) {
    const auto start = std::chrono::steady_clock::now();
    const rl::InsilicoResult r = rl::train_insilico(
        noise_free(config.bench), task,
        {.steps = config.insilico.steps, .lr = config.insilico.lr, .seed = seed,
         .initial_phase = task.initial_phase()},
        inst.monitor.get());
    rl::TrainingHistory& h = result.history;
    for (std::size_t i = 0; i < r.best_loss_trace.size(); ++i) {
      rl::RoundRecord rec;
      rec.round = i + 1;
      rec.mean_reward = -r.best_loss_trace[i];
      h.records.push_back(rec);
    }
    if (h.records.empty()) h.records.emplace_back();
    h.records.back().metric = r.metric;
    h.final_policy = policy::GaussianPolicy(r.phase, std::log(tc.initial_sigma));
    h.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_snapshot(snapshots, h.records.back().round, r.phase, task.preview(*inst.monitor, r.phase));
  } else {
    rl::TrainHooks hooks;
    hooks.monitor = inst.monitor.get();
    const std::uint64_t round_cost = tc.samples_per_round * task.measurements_per_sample();
    hooks.on_round = [&](const rl::RoundRecord& rec, const policy::GaussianPolicy& p) {
      const bool last = rec.measurements + round_cost > tc.measurement_budget;
      const bool cadence = config.snapshot_every > 0 && rec.round % config.snapshot_every == 0;
      if (rec.round == 0 || last || cadence) {
        write_snapshot(snapshots, rec.round, p.mu(), task.preview(*inst.monitor, p.mu()));
      }
    };
    result.history = algorithm == Algorithm::kPpo ? rl::train_ppo(*inst.env, task, tc, hooks)
                                                  : rl::train_pg(*inst.env, task, tc, hooks);
    policy::save_checkpoint(dir / "policy_final.opb", result.history.final_policy,
                            result.history.records.back().round);
  }

  const rl::RoundRecord& last = result.history.records.back();
  result.final_metric = last.metric;
  result.measurements = last.measurements;

  // Task-specific extras, all on the noise-free monitor.
  const optics::PhaseMap& mu = result.history.final_policy.mu();
  if (config.task.kind == TaskKind::kHologram || config.task.kind == TaskKind::kAberration) {
    const auto image = task.preview(*inst.monitor, mu);
    result.extras["contrast"] = tasks::contrast(tasks::center_row(image));
    const optics::PhaseMap flat(config.bench.shape);
    result.extras["uniform_metric"] = task.metric(*inst.monitor, flat);
  }
  if (config.task.kind == TaskKind::kAberration) {
    if (auto init = task.initial_phase()) {
      blackbox::LocalEnvironment ideal(optics::ideal_twin(config.bench));
      result.extras["ideal_metric"] = task.metric(ideal, *init);
      result.extras["initial_metric"] = task.metric(*inst.monitor, *init);
    }
  }

  std::ofstream csv(dir / "metrics.csv");
  rl::write_csv(csv, result.history);
  if (!csv) throw FormatError("cannot write " + (dir / "metrics.csv").string());
  if (log != nullptr) *log << summary_line(config, result, task.metric_name()) << '\n';
  return result;
}

std::string summary_line(const ExperimentConfig& config, const RunResult& run,
                         const std::string& metric_name) {
  std::string s = to_string(config.task.kind) + " " + to_string(run.algorithm) +
                  " seed=" + std::to_string(run.seed) + ": " + metric_name + "=" +
                  format_number(run.final_metric) + " after " + std::to_string(run.measurements) +
                  " measurements, wall " + format_number(run.history.wall_seconds) + " s";
  for (const auto& [k, v] : run.extras) s += ", " + k + "=" + format_number(v);
  return s;
}

std::vector<RunResult> execute(const ExperimentConfig& config, std::ostream* log) {
  validate(config);
  fs::create_directories(config.output_dir);
  {
    std::ofstream resolved(config.output_dir / "resolved_config.toml");
    resolved << to_toml(config);
    if (!resolved) throw FormatError("cannot write resolved_config.toml");
  }
  const auto task = build_task(config);
  std::vector<RunResult> runs;
  for (std::uint64_t seed : config.seeds) {
    const fs::path dir = config.output_dir / (to_string(config.algorithm) + "-seed" + std::to_string(seed));
    runs.push_back(run_single(config, config.algorithm, seed, *task, dir, log));
  }
  std::ofstream summary(config.output_dir / "summary.csv");
  summary << "algorithm,seed,metric_name,final_metric,measurements,wall_seconds,extras\n";
  for (const RunResult& r : runs) {
    summary << to_string(r.algorithm) << ',' << r.seed << ',' << task->metric_name() << ','
            << format_number(r.final_metric) << ',' << r.measurements << ','
            << format_number(r.history.wall_seconds) << ',';
    bool first = true;
    for (const auto& [k, v] : r.extras) {
      summary << (first ? "" : ";") << k << '=' << format_number(v);
      first = false;
    }
    summary << '\n';
  }
  std::vector<fs::path> csvs;
  for (const RunResult& r : runs) csvs.push_back(r.dir / "metrics.csv");
  emit_plots(csvs, config.output_dir / "plots");
  return runs;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InstrumentError*>(&e) != nullptr ||
      dynamic_cast<const ProtocolError*>(&e) != nullptr) {
    return 3;
  }
  if (dynamic_cast<const Error*>(&e) != nullptr) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return 2;
  return 1;
}

int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    execute(config, &out);
    return 0;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << (code == 3 ? "instrument error: " : code == 2 ? "configuration error: " : "error: ")
        << e.what() << '\n';
    return code;
  }
}

}  // namespace insitu::experiment
