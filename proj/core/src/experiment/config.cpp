#include "insitu/experiment/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "insitu/errors.hpp"
#include "toml.hpp"

namespace insitu::experiment {

TaskKind parse_task_kind(std::string_view name) {
  if (name == "focus") return TaskKind::kFocus;
  if (name == "hologram") return TaskKind::kHologram;
  if (name == "aberration") return TaskKind::kAberration;
  if (name == "classify") return TaskKind::kClassify;
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected focus, hologram, aberration, classify)");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kFocus: return "focus";
    case TaskKind::kHologram: return "hologram";
    case TaskKind::kAberration: return "aberration";
    case TaskKind::kClassify: return "classify";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ppo") return Algorithm::kPpo;
  if (name == "pg") return Algorithm::kPg;
  if (name == "insilico") return Algorithm::kInsilico;
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected ppo, pg, insilico)");
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kPpo: return "ppo";
    case Algorithm::kPg: return "pg";
    case Algorithm::kInsilico: return "insilico";
  }
  return "?";
}

std::vector<std::string> preset_names() {
  return {"focus", "diffuser-focus", "hologram", "aberration", "classify"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.output_dir = std::filesystem::path("runs") / std::string(name);
  if (name == "focus") {
    c.task.kind = TaskKind::kFocus;
    c.trainer.measurement_budget = 20000;
  } else if (name == "diffuser-focus") {
    c.task.kind = TaskKind::kFocus;
    c.bench.diffuser = optics::DiffuserConfig{};
    c.trainer.measurement_budget = 20000;
  } else if (name == "hologram") {
    c.task.kind = TaskKind::kHologram;
    c.trainer.measurement_budget = 20000;
  } else if (name == "aberration") {
    c.task.kind = TaskKind::kAberration;
    c.bench.aberration = optics::AberrationConfig{{0.5, 0.3, 0.2}, 0, 2};
    c.trainer.measurement_budget = 10000;
  } else if (name == "classify") {
    c.task.kind = TaskKind::kClassify;
    c.bench.distance_mm = 10.0;
    c.trainer.measurement_budget = 200000;
    c.trainer.lr_mu = 3e-2;
    c.trainer.metric_every = 20;
    c.insilico.steps = 600;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (expected focus, diffuser-focus, hologram, aberration, classify)");
  }
  return c;
}

namespace {

std::string where(const toml::node& node, std::string_view source) {
  const auto& src = node.source();
  return std::string(source) + ":" + std::to_string(src.begin.line);
}

// Reads keys from one TOML table, remembering which were used so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const toml::table* table, std::string name, std::string_view source)
      : table_(table), name_(std::move(name)), source_(source) {}

  [[nodiscard]] bool present() const { return table_ != nullptr; }

  const toml::node* get(std::string_view key) {
    if (table_ == nullptr) return nullptr;
    used_.insert(std::string(key));
    return table_->get(key);
  }

  void read(std::string_view key, double& out) {
    if (const auto* n = get(key)) {
      if (auto v = n->value<double>()) {
        out = *v;
      } else {
        fail(*n, key, "a number");
      }
    }
  }

  template <class Int>
    requires std::is_integral_v<Int>
  void read(std::string_view key, Int& out) {
    if (const auto* n = get(key)) {
      const auto v = n->as_integer();
      if (v == nullptr) fail(*n, key, "an integer");
      const std::int64_t x = v->get();
      if (std::is_unsigned_v<Int> && x < 0) fail(*n, key, "a non-negative integer");
      out = static_cast<Int>(x);
    }
  }

  void read(std::string_view key, bool& out) {
    if (const auto* n = get(key)) {
      if (auto v = n->value<bool>()) {
        out = *v;
      } else {
        fail(*n, key, "true or false");
      }
    }
  }

  void read(std::string_view key, std::string& out) {
    if (const auto* n = get(key)) {
      if (auto v = n->value<std::string>()) {
        out = *v;
      } else {
        fail(*n, key, "a string");
      }
    }
  }

  const toml::table* subtable(std::string_view key) {
    const auto* n = get(key);
    if (n == nullptr) return nullptr;
    if (!n->is_table()) fail(*n, key, "a table");
    return n->as_table();
  }

  void finish() const {
    if (table_ == nullptr) return;
    for (auto&& [k, v] : *table_) {
      if (!used_.contains(std::string(k.str()))) {
        throw ConfigError(where(v, source_) + ": unknown key '" + std::string(k.str()) + "' in [" +
                          name_ + "]");
      }
    }
  }

  [[noreturn]] void fail(const toml::node& n, std::string_view key, const char* expected) const {
    throw ConfigError(where(n, source_) + ": [" + name_ + "] " + std::string(key) + " must be " +
                      expected);
  }

 private:
  const toml::table* table_;
  std::string name_;
  std::string_view source_;
  std::set<std::string> used_;
};

const toml::table* section(const toml::table& root, std::string_view key, std::string_view source) {
  const auto* n = root.get(key);
  if (n == nullptr) return nullptr;
  if (!n->is_table()) throw ConfigError(where(*n, source) + ": [" + std::string(key) + "] must be a table");
  return n->as_table();
}

void read_bench(Section s, optics::BenchConfig& b, std::string& instrument,
                std::string_view source) {
  s.read("instrument", instrument);
  s.read("distance_mm", b.distance_mm);
  s.read("wavelength_um", b.wavelength_um);
  s.read("pitch_um", b.pitch_um);
  s.read("rows", b.shape.rows);
  s.read("cols", b.shape.cols);
  s.read("pad_factor", b.pad_factor);
  s.read("slm_bits", b.slm_bits);
  s.read("seed", b.seed);
  s.read("noise", b.noise.enabled);
  s.read("photon_budget", b.noise.photon_budget);
  s.read("read_sigma", b.noise.read_sigma);
  if (const auto* t = s.subtable("diffuser")) {
    Section d(t, "bench.diffuser", source);
    bool enabled = true;
    d.read("enabled", enabled);
    optics::DiffuserConfig cfg = b.diffuser.value_or(optics::DiffuserConfig{});
    d.read("seed", cfg.seed);
    d.read("correlation_length_px", cfg.correlation_length_px);
    d.finish();
    if (enabled) {
      b.diffuser = cfg;
    } else {
      b.diffuser.reset();
    }
  }
  if (const auto* t = s.subtable("aberration")) {
    Section a(t, "bench.aberration", source);
    bool enabled = true;
    a.read("enabled", enabled);
    optics::AberrationConfig cfg = b.aberration.value_or(optics::AberrationConfig{});
    a.read("defocus", cfg.zernike.defocus);
    a.read("astigmatism", cfg.zernike.astigmatism);
    a.read("coma", cfg.zernike.coma);
    a.read("shift_rows", cfg.shift_rows);
    a.read("shift_cols", cfg.shift_cols);
    a.finish();
    if (enabled) {
      b.aberration = cfg;
    } else {
      b.aberration.reset();
    }
  }
  s.finish();
}

void read_trainer(Section s, ExperimentConfig& c) {
  rl::TrainerConfig& t = c.trainer;
  std::string algo = to_string(c.algorithm);
  s.read("algorithm", algo);
  c.algorithm = parse_algorithm(algo);
  if (const auto* n = s.get("seeds")) {
    const auto* arr = n->as_array();
    if (arr == nullptr || arr->empty()) s.fail(*n, "seeds", "a non-empty array of integers");
    c.seeds.clear();
    for (const auto& e : *arr) {
      const auto* v = e.as_integer();
      if (v == nullptr || v->get() < 0) s.fail(e, "seeds", "a non-empty array of integers");
      c.seeds.push_back(static_cast<std::uint64_t>(v->get()));
    }
  }
  s.read("samples_per_round", t.samples_per_round);
  s.read("reuse_iterations", t.reuse_iterations);
  s.read("epsilon", t.epsilon);
  s.read("lr_mu", t.lr_mu);
  s.read("lr_log_sigma", t.lr_log_sigma);
  s.read("adam_beta1", t.adam_beta1);
  s.read("adam_beta2", t.adam_beta2);
  s.read("adam_eps", t.adam_eps);
  s.read("entropy_coef", t.entropy_coef);
  s.read("kl_stop_threshold", t.kl_stop_threshold);
  s.read("measurement_budget", t.measurement_budget);
  s.read("initial_sigma", t.initial_sigma);
  s.read("metric_every", t.metric_every);
  s.read("seconds_per_measurement", t.seconds_per_measurement);
  s.read("insilico_steps", c.insilico.steps);
  s.read("insilico_lr", c.insilico.lr);
  s.finish();
}

void read_task(Section s, TaskConfig& t) {
  std::string kind = to_string(t.kind);
  s.read("kind", kind);
  t.kind = parse_task_kind(kind);
  s.read("target_region", t.target_region);
  s.read("region_size", t.region_size);
  s.read("region_gap", t.region_gap);
  s.read("target", t.target);
  s.read("grating_period", t.grating_period);
  s.read("initial_phase", t.initial_phase);
  s.read("data_dir", t.data_dir);
  s.read("train_size", t.train_size);
  s.read("test_size", t.test_size);
  s.read("minibatch", t.minibatch);
  s.read("input_window", t.input_window);
  s.finish();
}

void read_output(Section s, ExperimentConfig& c) {
  std::string dir = c.output_dir.string();
  s.read("dir", dir);
  c.output_dir = dir;
  s.read("snapshot_every", c.snapshot_every);
  s.finish();
}

// Shortest round-trip text that TOML reads back as a float.
std::string toml_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string toml_string(const std::string& v) {
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base,
                              std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source) + ":" + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }
  for (auto&& [k, v] : root) {
    const std::string key(k.str());
    if (key != "bench" && key != "trainer" && key != "task" && key != "output") {
      throw ConfigError(where(v, source) + ": unknown section [" + key +
                        "] (expected bench, trainer, task, output)");
    }
  }
  ExperimentConfig c = base;
  read_bench(Section(section(root, "bench", source), "bench", source), c.bench, c.instrument, source);
  read_trainer(Section(section(root, "trainer", source), "trainer", source), c);
  read_task(Section(section(root, "task", source), "task", source), c.task);
  read_output(Section(section(root, "output", source), "output", source), c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base, path.string());
}

std::string to_toml(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& b = c.bench;
  o << "[bench]\n"
    << "instrument = " << toml_string(c.instrument) << "  # \"local\" or host:port\n"
    << "distance_mm = " << toml_float(b.distance_mm) << "  # SLM to sensor\n"
    << "wavelength_um = " << toml_float(b.wavelength_um) << '\n'
    << "pitch_um = " << toml_float(b.pitch_um) << '\n'
    << "rows = " << b.shape.rows << '\n'
    << "cols = " << b.shape.cols << '\n'
    << "pad_factor = " << b.pad_factor << '\n'
    << "slm_bits = " << b.slm_bits << '\n'
    << "seed = " << b.seed << "  # instrument noise stream\n"
    << "noise = " << (b.noise.enabled ? "true" : "false") << '\n'
    << "photon_budget = " << toml_float(b.noise.photon_budget) << '\n'
    << "read_sigma = " << toml_float(b.noise.read_sigma) << "  # photon counts\n";
  if (b.diffuser) {
    o << "\n[bench.diffuser]\n"
      << "seed = " << b.diffuser->seed << '\n'
      << "correlation_length_px = " << toml_float(b.diffuser->correlation_length_px) << '\n';
  }
  if (b.aberration) {
    const auto& a = *b.aberration;
    o << "\n[bench.aberration]\n"
      << "defocus = " << toml_float(a.zernike.defocus) << "  # rad RMS\n"
      << "astigmatism = " << toml_float(a.zernike.astigmatism) << '\n'
      << "coma = " << toml_float(a.zernike.coma) << '\n'
      << "shift_rows = " << a.shift_rows << '\n'
      << "shift_cols = " << a.shift_cols << '\n';
  }
  const auto& t = c.trainer;
  o << "\n[trainer]\n"
    << "algorithm = " << toml_string(to_string(c.algorithm)) << "  # ppo, pg, insilico\n"
    << "seeds = [";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? ", " : "") << c.seeds[i];
  o << "]\n"
    << "samples_per_round = " << t.samples_per_round << "  # M\n"
    << "reuse_iterations = " << t.reuse_iterations << "  # K\n"
    << "epsilon = " << toml_float(t.epsilon) << "  # inf disables clipping\n"
    << "lr_mu = " << toml_float(t.lr_mu) << '\n'
    << "lr_log_sigma = " << toml_float(t.lr_log_sigma) << '\n'
    << "adam_beta1 = " << toml_float(t.adam_beta1) << '\n'
    << "adam_beta2 = " << toml_float(t.adam_beta2) << '\n'
    << "adam_eps = " << toml_float(t.adam_eps) << '\n'
    << "entropy_coef = " << toml_float(t.entropy_coef) << '\n'
    << "kl_stop_threshold = " << toml_float(t.kl_stop_threshold) << "  # inf disables\n"
    << "measurement_budget = " << t.measurement_budget << '\n'
    << "initial_sigma = " << toml_float(t.initial_sigma) << '\n'
    << "metric_every = " << t.metric_every << "  # rounds between monitor evaluations\n"
    << "seconds_per_measurement = " << toml_float(t.seconds_per_measurement) << '\n'
    << "insilico_steps = " << c.insilico.steps << '\n'
    << "insilico_lr = " << toml_float(c.insilico.lr) << '\n';
  const auto& k = c.task;
  o << "\n[task]\n"
    << "kind = " << toml_string(to_string(k.kind)) << "  # focus, hologram, aberration, classify\n"
    << "target_region = " << k.target_region << '\n'
    << "region_size = " << k.region_size << '\n'
    << "region_gap = " << k.region_gap << '\n'
    << "target = " << toml_string(k.target) << "  # grating, boat, letter, digit\n"
    << "grating_period = " << k.grating_period << '\n'
    << "initial_phase = " << toml_string(k.initial_phase) << "  # insilico or raw snapshot path\n"
    << "data_dir = " << toml_string(k.data_dir) << "  # empty: bundled MNIST subset\n"
    << "train_size = " << k.train_size << '\n'
    << "test_size = " << k.test_size << '\n'
    << "minibatch = " << k.minibatch << '\n'
    << "input_window = " << k.input_window << '\n';
  o << "\n[output]\n"
    << "dir = " << toml_string(c.output_dir.string()) << '\n'
    << "snapshot_every = " << c.snapshot_every << "  # 0: first and last round only\n";
  return o.str();
}

void validate(const ExperimentConfig& c) {
  optics::validate(c.bench);
  rl::validate(c.trainer);
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.insilico.steps == 0 && c.algorithm == Algorithm::kInsilico) {
    throw ConfigError("insilico_steps must be positive");
  }
  if (!(c.insilico.lr > 0.0)) throw ConfigError("insilico_lr must be positive");
  const TaskConfig& t = c.task;
  if ((t.kind == TaskKind::kFocus) && t.target_region > 9) {
    throw ConfigError("target_region must be in [0, 9]");
  }
  if (t.kind == TaskKind::kClassify) {
    if (t.train_size == 0 || t.test_size == 0) throw ConfigError("train/test sizes must be positive");
    if (t.minibatch == 0 || t.minibatch > t.train_size) {
      throw ConfigError("minibatch must be in [1, train_size]");
    }
  }
  if (c.output_dir.empty()) throw ConfigError("[output] dir must not be empty");
}

}  // namespace insitu::experiment
