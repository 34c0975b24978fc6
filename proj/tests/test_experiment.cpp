#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "insitu/errors.hpp"
#include "insitu/experiment/compare.hpp"
#include "insitu/experiment/config.hpp"
#include "insitu/experiment/plots.hpp"
#include "insitu/experiment/runner.hpp"
#include "toy.hpp"

using namespace insitu;
using namespace insitu::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("insitu_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config serializes and parses back") {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    const ExperimentConfig back = parse_config(to_toml(c), ExperimentConfig{});
    CHECK(to_toml(back) == to_toml(c));
    CHECK(back.bench == c.bench);
    CHECK(back.trainer.epsilon == c.trainer.epsilon);
    CHECK(back.trainer.kl_stop_threshold == c.trainer.kl_stop_threshold);
  }
  ExperimentConfig c = preset("hologram");
  c.trainer.lr_mu = 0.1 + 0.2;  // not a short decimal
  c.seeds = {3, 1, 4};
  c.task.target = "boat";
  c.bench.diffuser = optics::DiffuserConfig{9, 2.5};
  const ExperimentConfig back = parse_config(to_toml(c), ExperimentConfig{});
  CHECK(back.trainer.lr_mu == c.trainer.lr_mu);
  CHECK(back.seeds == c.seeds);
  CHECK(back.bench == c.bench);
  CHECK(back.task.target == "boat");
}

TEST_CASE("config errors name the key and line") {
  CHECK_THROWS_WITH_AS(parse_config("[trainer]\nsamples_per_round = 4\nbogus = 1\n", {}, "x.toml"),
                       doctest::Contains("x.toml:3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[trainer]\nlr_mu = \"fast\"\n", {}), doctest::Contains("lr_mu"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("[nonsense]\n", {}), ConfigError);
  CHECK_THROWS_AS(parse_config("this is not toml", {}), ConfigError);
  CHECK_THROWS_AS(preset("juggling"), ConfigError);
  ExperimentConfig bad = preset("focus");
  bad.bench.slm_bits = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = preset("focus");
  bad.task.target_region = 10;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("zero budget writes only the round-0 row") {
  ExperimentConfig c = preset("focus");
  c.trainer.measurement_budget = 0;
  c.output_dir = scratch("zero");
  std::ostringstream out, err;
  CHECK(run_experiment(c, out, err) == 0);
  const std::string csv = slurp(c.output_dir / "ppo-seed0" / "metrics.csv");
  CHECK(count(csv, "\n") == 2);
  CHECK(csv.rfind("round,measurements,seconds,mean_reward,metric,sigma,kl\n0,0,", 0) == 0);
  fs::remove_all(c.output_dir);
}

TEST_CASE("focus smoke run: outputs, timing and byte-identical reruns") {
  ExperimentConfig c = preset("focus");
  c.trainer.measurement_budget = 640;
  c.snapshot_every = 10;
  c.output_dir = scratch("smoke_a");
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(run_experiment(c, out, err) == 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
  CHECK(out.str().find("energy_ratio=") != std::string::npos);
  CHECK(out.str().find("640 measurements") != std::string::npos);
  const fs::path run = c.output_dir / "ppo-seed0";
  for (const char* f : {"metrics.csv", "policy_final.opb", "snapshots/round_000000_phase.pgm",
                        "snapshots/round_000010_intensity.opb", "snapshots/round_000020_phase.opb"}) {
    CHECK_MESSAGE(fs::exists(run / f), f);
  }
  CHECK(fs::exists(c.output_dir / "resolved_config.toml"));
  CHECK(fs::exists(c.output_dir / "summary.csv"));
  CHECK(fs::exists(c.output_dir / "plots" / "metric_vs_measurements.svg"));

  // Re-running from the saved resolved config alone reproduces the history.
  ExperimentConfig again = load_config(c.output_dir / "resolved_config.toml", ExperimentConfig{});
  again.output_dir = scratch("smoke_b");
  REQUIRE(run_experiment(again, out, err) == 0);
  CHECK(slurp(again.output_dir / "ppo-seed0" / "metrics.csv") == slurp(run / "metrics.csv"));
  CHECK(slurp(again.output_dir / "plots" / "metric_vs_measurements.svg") ==
        slurp(c.output_dir / "plots" / "metric_vs_measurements.svg"));
  fs::remove_all(c.output_dir);
  fs::remove_all(again.output_dir);
}

TEST_CASE("exit codes") {
  ExperimentConfig c = preset("focus");
  c.trainer.samples_per_round = 1;
  c.output_dir = scratch("codes");
  std::ostringstream out, err;
  CHECK(run_experiment(c, out, err) == 2);
  CHECK(err.str().find("configuration error") != std::string::npos);
  c = preset("focus");
  c.instrument = "127.0.0.1:1";
  c.output_dir = scratch("codes");
  CHECK(run_experiment(c, out, err) == 3);
  fs::remove_all(c.output_dir);
}

TEST_CASE("compare on the toy problem") {
  toy::QuadraticTask task;
  auto run = [&](Algorithm a, std::uint64_t seed) {
    rl::TrainerConfig cfg;
    cfg.samples_per_round = 16;
    cfg.measurement_budget = 300 * 16;
    cfg.seed = seed;
    toy::ScalarEnv env, mon;
    return a == Algorithm::kPpo ? rl::train_ppo(env, task, cfg, {.monitor = &mon})
                                : rl::train_pg(env, task, cfg, {.monitor = &mon});
  };
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  const double th = 0.85 * 1.0;  // the model-based optimum scores 1
  const ComparisonReport r = compare_runs({Algorithm::kPpo, Algorithm::kPg}, seeds, th, run);
  REQUIRE(r.entries[0].median_to_threshold);
  const double pg = r.entries[1].median_to_threshold.value_or(1e18);
  CHECK(*r.entries[0].median_to_threshold <= pg);

  const ComparisonReport same = compare_runs({Algorithm::kPg, Algorithm::kPg}, seeds, th, run);
  CHECK(same.entries[0].median_to_threshold == same.entries[1].median_to_threshold);
  CHECK(same.entries[0].median_final_metric == same.entries[1].median_final_metric);

  const ComparisonReport never = compare_runs({Algorithm::kPpo, Algorithm::kPg}, {0, 1}, 2.0, run);
  CHECK_FALSE(never.entries[0].median_to_threshold);
  CHECK(speedup_text(never.entries[0], never.entries[1]) == "not reached");
  CHECK(speedup_table(never).find("not reached") != std::string::npos);
  std::ostringstream merged;
  write_merged_csv(merged, r);
  CHECK(merged.str().rfind("algorithm,seed,round,", 0) == 0);

  CHECK_THROWS_AS(compare_runs({Algorithm::kPpo}, seeds, th, run), ConfigError);
}

TEST_CASE("median with unreached seeds") {
  using V = std::vector<std::optional<std::uint64_t>>;
  CHECK(median_to_threshold(V{100, std::nullopt, 300}) == 300.0);
  CHECK_FALSE(median_to_threshold(V{100, std::nullopt, std::nullopt}));
  CHECK(median_to_threshold(V{100, 200}) == 150.0);
}

TEST_CASE("plots") {
  const fs::path dir = scratch("plots");
  fs::create_directories(dir / "ppo-seed0");
  fs::create_directories(dir / "pg-seed0");
  const std::string header = std::string(rl::kHistoryCsvHeader) + "\n";
  std::ofstream(dir / "empty.csv") << header;
  std::ofstream(dir / "ppo-seed0" / "metrics.csv")
      << header << "0,0,0,nan,0.1,0.5,0\n1,32,0.5,0.2,nan,0.49,0.3\n2,64,1,0.3,0.4,0.48,0.2\n";
  std::ofstream(dir / "pg-seed0" / "metrics.csv") << header << "0,0,0,nan,0.1,0.5,0\n1,32,0.5,0.1,0.2,0.5,0.1\n";

  const Series empty = read_metrics_csv(dir / "empty.csv");
  CHECK(empty.records.empty());
  const std::string svg0 = render_svg({empty}, "metric", XAxis::kMeasurements);
  CHECK(svg0.find("<line") != std::string::npos);
  CHECK(svg0.find("<polyline") == std::string::npos);

  const auto a = read_metrics_csv(dir / "ppo-seed0" / "metrics.csv");
  const auto b = read_metrics_csv(dir / "pg-seed0" / "metrics.csv");
  CHECK(a.label == "ppo-seed0");
  const std::string svg = render_svg({a, b}, "metric", XAxis::kMeasurements);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find(">ppo-seed0<") != std::string::npos);
  CHECK(svg.find(">pg-seed0<") != std::string::npos);
  CHECK(render_svg({a, b}, "metric", XAxis::kMeasurements) == svg);

  const auto files = emit_plots({dir / "ppo-seed0" / "metrics.csv", dir / "pg-seed0" / "metrics.csv"}, dir / "out");
  CHECK(files.size() == 2 * plotted_columns().size());
  const std::string first = slurp(files.front());
  emit_plots({dir / "ppo-seed0" / "metrics.csv", dir / "pg-seed0" / "metrics.csv"}, dir / "out");
  CHECK(slurp(files.front()) == first);

  std::ofstream(dir / "bad.csv") << header << "0,0,0,nan,0.1,0.5,0\n1,32,zero,0.2,0.3,0.4,0.1\n";
  CHECK_THROWS_WITH_AS(read_metrics_csv(dir / "bad.csv"), doctest::Contains("bad.csv:3"), FormatError);
  std::ofstream(dir / "short.csv") << header << "0,0,0\n";
  CHECK_THROWS_WITH_AS(read_metrics_csv(dir / "short.csv"), doctest::Contains(":2"), FormatError);
  std::ofstream(dir / "nohdr.csv") << "a,b\n";
  CHECK_THROWS_WITH_AS(read_metrics_csv(dir / "nohdr.csv"), doctest::Contains(":1"), FormatError);
  fs::remove_all(dir);
}

}  // TEST_SUITE
