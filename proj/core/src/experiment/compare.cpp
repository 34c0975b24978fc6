#include "insitu/experiment/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "insitu/errors.hpp"
#include "insitu/experiment/plots.hpp"
#include "insitu/rl/insilico.hpp"

namespace insitu::experiment {

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::optional<double> median_to_threshold(const std::vector<std::optional<std::uint64_t>>& v) {
  std::vector<double> xs;
  for (const auto& x : v) {
    xs.push_back(x ? static_cast<double>(*x) : std::numeric_limits<double>::infinity());
  }
  const double m = median(std::move(xs));
  if (!std::isfinite(m)) return std::nullopt;
  return m;
}

ComparisonReport compare_runs(const std::vector<Algorithm>& algorithms,
                              const std::vector<std::uint64_t>& seeds, double threshold,
                              const RunFn& run) {
  if (algorithms.size() < 2) throw ConfigError("compare needs at least two algorithms");
  if (seeds.empty()) throw ConfigError("compare needs at least one seed");
  ComparisonReport report;
  report.threshold = threshold;
  for (Algorithm algo : algorithms) {
    AlgorithmSummary s;
    s.algorithm = algo;
    s.seeds = seeds;
    std::vector<double> finals;
    for (std::uint64_t seed : seeds) {
      s.histories.push_back(run(algo, seed));
      const rl::TrainingHistory& h = s.histories.back();
      s.to_threshold.push_back(h.measurements_to_reach(threshold));
      finals.push_back(h.records.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : h.metric_at(h.records.back().measurements));
    }
    s.median_to_threshold = median_to_threshold(s.to_threshold);
    s.median_final_metric = median(finals);
    report.entries.push_back(std::move(s));
  }
  return report;
}

std::string speedup_text(const AlgorithmSummary& fast, const AlgorithmSummary& slow) {
  if (!fast.median_to_threshold) return "not reached";
  if (!slow.median_to_threshold) {
    // The slow side never got there; only a lower bound is known.
    std::uint64_t budget = 0;
    for (const auto& h : slow.histories) {
      if (!h.records.empty()) budget = std::max(budget, h.records.back().measurements);
    }
    if (*fast.median_to_threshold <= 0.0) return "not reached by " + to_string(slow.algorithm);
    return ">" + fmt(static_cast<double>(budget) / *fast.median_to_threshold, "%.2f") + " (" +
           to_string(slow.algorithm) + " not reached)";
  }
  if (*fast.median_to_threshold <= 0.0) {
    return *slow.median_to_threshold <= 0.0 ? "1.00" : "inf";
  }
  return fmt(*slow.median_to_threshold / *fast.median_to_threshold, "%.2f");
}

std::string speedup_table(const ComparisonReport& report) {
  std::ostringstream out;
  out << "threshold " << fmt(report.threshold) << " (" << fmt(kThresholdFraction, "%.2f")
      << " x in-silico " << report.metric_name << " " << fmt(report.reference_metric) << ")\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-40s %-16s %s\n", "algorithm", "to_threshold per seed",
                "median", "median_final");
  out << line;
  for (const AlgorithmSummary& s : report.entries) {
    std::string per_seed;
    for (std::size_t i = 0; i < s.to_threshold.size(); ++i) {
      if (i > 0) per_seed += ' ';
      per_seed += s.to_threshold[i] ? std::to_string(*s.to_threshold[i]) : "-";
    }
    const std::string med =
        s.median_to_threshold ? fmt(*s.median_to_threshold, "%.0f") : "not reached";
    std::snprintf(line, sizeof line, "%-10s %-40s %-16s %s\n", to_string(s.algorithm).c_str(),
                  per_seed.c_str(), med.c_str(), fmt(s.median_final_metric).c_str());
    out << line;
  }
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    for (std::size_t j = 0; j < report.entries.size(); ++j) {
      if (i == j || report.entries[i].algorithm == report.entries[j].algorithm) continue;
      out << "speedup " << to_string(report.entries[i].algorithm) << " vs "
          << to_string(report.entries[j].algorithm) << ": "
          << speedup_text(report.entries[i], report.entries[j]) << '\n';
    }
  }
  return out.str();
}

void write_merged_csv(std::ostream& out, const ComparisonReport& report) {
  out << "algorithm,seed," << rl::kHistoryCsvHeader << '\n';
  for (const AlgorithmSummary& s : report.entries) {
    for (std::size_t i = 0; i < s.histories.size(); ++i) {
      for (const rl::RoundRecord& r : s.histories[i].records) {
        out << to_string(s.algorithm) << ',' << s.seeds[i] << ',' << rl::format_csv_row(r) << '\n';
      }
    }
  }
}

ComparisonReport compare(const ExperimentConfig& config, const std::vector<Algorithm>& algorithms,
                         std::ostream* log) {
  validate(config);
  for (Algorithm a : algorithms) {
    if (a == Algorithm::kInsilico) throw ConfigError("compare runs in-situ algorithms (ppo, pg)");
  }
  std::filesystem::create_directories(config.output_dir);
  {
    std::ofstream resolved(config.output_dir / "resolved_config.toml");
    resolved << to_toml(config);
  }
  const auto task = build_task(config);

  // Reference: the model-based optimum on this bench, scored on the monitor.
  Instruments ref = open_instruments(config, config.seeds.front());
  auto bench = config.bench;
  bench.noise.enabled = false;
  const rl::InsilicoResult insilico = rl::train_insilico(
      bench, *task,
      {.steps = config.insilico.steps, .lr = config.insilico.lr, .seed = config.seeds.front(),
       .initial_phase = task->initial_phase()},
      ref.monitor.get());
  if (log != nullptr) {
    *log << "in-silico " << task->metric_name() << " = " << fmt(insilico.metric) << '\n';
  }

  ComparisonReport report = compare_runs(
      algorithms, config.seeds, kThresholdFraction * insilico.metric,
      [&](Algorithm algo, std::uint64_t seed) {
        // Duplicate entries rerun into the same directory; results are identical.
        const auto dir = config.output_dir / (to_string(algo) + "-seed" + std::to_string(seed));
        return run_single(config, algo, seed, *task, dir, log).history;
      });
  report.metric_name = task->metric_name();
  report.reference_metric = insilico.metric;

  std::ofstream csv(config.output_dir / "comparison.csv");
  write_merged_csv(csv, report);
  const std::string table = speedup_table(report);
  std::ofstream(config.output_dir / "speedup.txt") << table;
  if (!csv) throw FormatError("cannot write comparison.csv");
  std::vector<std::filesystem::path> csvs;
  for (const AlgorithmSummary& s : report.entries) {
    for (std::uint64_t seed : s.seeds) {
      csvs.push_back(config.output_dir / (to_string(s.algorithm) + "-seed" + std::to_string(seed)) /
                     "metrics.csv");
    }
  }
  emit_plots(csvs, config.output_dir / "plots");
  if (log != nullptr) *log << table;
  return report;
}

}  // namespace insitu::experiment
