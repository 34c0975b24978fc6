// insitu: command-line front end for the in-situ training engine.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "insitu/blackbox/remote.hpp"
#include "insitu/errors.hpp"
#include "insitu/experiment/compare.hpp"
#include "insitu/experiment/config.hpp"
#include "insitu/experiment/plots.hpp"
#include "insitu/experiment/runner.hpp"

using namespace insitu;
using namespace insitu::experiment;

namespace {

// Flags shared by every experiment subcommand. Unset optionals leave the
// preset/file value alone.
struct Overrides {
  std::string config_path;
  std::string task;
  std::string algo;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> budget;
  std::string out;
  std::string instrument;
  std::optional<std::size_t> snapshot_every;
};

void add_common(CLI::App* cmd, Overrides& o, bool with_task, bool with_algo) {
  cmd->add_option("--config", o.config_path, "TOML file applied on top of the preset")
      ->check(CLI::ExistingFile);
  if (with_task) cmd->add_option("--task", o.task, "preset: " + [] {
    std::string s;
    for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  if (with_algo) cmd->add_option("--algo", o.algo, "ppo, pg or insilico");
  cmd->add_option("--seed", o.seeds, "seed(s); repeat for several");
  cmd->add_option("--budget", o.budget, "measurement budget per run");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--instrument", o.instrument,
                  "\"local\" or host:port (default: $INSITU_INSTRUMENT_ADDR, else local)");
  cmd->add_option("--snapshot-every", o.snapshot_every, "rounds between snapshots (0: first/last)");
}

ExperimentConfig resolve(const std::string& preset_name, const Overrides& o) {
  ExperimentConfig c = preset(o.task.empty() ? preset_name : o.task);
  if (const char* env = std::getenv(blackbox::kInstrumentAddrEnv); env != nullptr && *env != '\0') {
    c.instrument = env;
  }
  if (!o.config_path.empty()) c = load_config(o.config_path, c);
  if (!o.algo.empty()) c.algorithm = parse_algorithm(o.algo);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.budget) c.trainer.measurement_budget = *o.budget;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.instrument.empty()) c.instrument = o.instrument;
  if (o.snapshot_every) c.snapshot_every = *o.snapshot_every;
  validate(c);
  return c;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << (code == 3 ? "instrument error: " : code == 2 ? "configuration error: " : "error: ")
              << e.what() << '\n';
    return code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-situ reinforcement-learning training of diffractive optical processors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "insitu 0.1.0");

  // One subcommand per task preset.
  struct TaskCmd {
    std::string name;
    std::string help;
    Overrides o;
  };
  std::vector<TaskCmd> task_cmds = {
      {"focus", "focus light into one of ten detector regions", {}},
      {"diffuser-focus", "focusing through a random phase diffuser", {}},
      {"hologram", "shape the output into a target intensity", {}},
      {"aberration", "fine-tune an in-silico hologram on an aberrated bench", {}},
      {"classify", "single-layer phase-encoded digit classifier", {}},
  };
  for (auto& t : task_cmds) {
    auto* cmd = app.add_subcommand(t.name, t.help);
    add_common(cmd, t.o, false, true);
    cmd->callback([&t] {
      throw CLI::RuntimeError(guarded([&t] {
        return run_experiment(resolve(t.name, t.o), std::cout, std::cerr);
      }));
    });
  }

  Overrides ins;
  auto* insilico = app.add_subcommand("insilico", "model-based baseline on the noise-free twin");
  add_common(insilico, ins, true, false);
  insilico->callback([&] {
    throw CLI::RuntimeError(guarded([&] {
      ExperimentConfig c = resolve("focus", ins);
      c.algorithm = Algorithm::kInsilico;
      return run_experiment(c, std::cout, std::cerr);
    }));
  });

  Overrides cmp;
  std::vector<std::string> algos{"ppo", "pg"};
  auto* compare_cmd = app.add_subcommand("compare", "PPO vs PG at matched measurement budget");
  add_common(compare_cmd, cmp, true, false);
  compare_cmd->add_option("--algos", algos, "algorithms to compare (default: ppo pg)");
  compare_cmd->callback([&] {
    throw CLI::RuntimeError(guarded([&] {
      ExperimentConfig c = resolve("classify", cmp);
      std::vector<Algorithm> list;
      for (const auto& a : algos) list.push_back(parse_algorithm(a));
      compare(c, list, &std::cout);
      return 0;
    }));
  });

  Overrides srv;
  std::string listen;
  auto* serve = app.add_subcommand("serve-sim", "serve a simulated bench over TCP");
  serve->add_option("--config", srv.config_path, "TOML file ([bench] is used)")
      ->check(CLI::ExistingFile);
  serve->add_option("--task", srv.task, "preset whose bench to serve");
  serve->add_option("--listen", listen,
                    "address to listen on (default: $INSITU_INSTRUMENT_ADDR, else 127.0.0.1:7878)");
  serve->callback([&] {
    throw CLI::RuntimeError(guarded([&]() -> int {
      ExperimentConfig c = resolve("focus", srv);
      std::string addr = listen;
      if (addr.empty()) {
        const char* env = std::getenv(blackbox::kInstrumentAddrEnv);
        addr = env != nullptr && *env != '\0' ? env : "127.0.0.1:7878";
      }
      blackbox::serve_sim(c.bench, addr);
    }));
  });

  std::vector<std::string> csvs;
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "SVG charts from metrics.csv files");
  plot->add_option("csv", csvs, "metrics.csv files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output directory");
  plot->callback([&] {
    throw CLI::RuntimeError(guarded([&] {
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      for (const auto& p : emit_plots(paths, plot_out)) std::cout << p.string() << '\n';
      return 0;
    }));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return 0;
}
