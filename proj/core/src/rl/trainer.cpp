#include "insitu/rl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "insitu/errors.hpp"
#include "insitu/rl/losses.hpp"

namespace insitu::rl {

void validate(const TrainerConfig& c) {
  if (c.samples_per_round < 2) throw ConfigError("trainer M must be >= 2");
  if (c.reuse_iterations < 1) throw ConfigError("trainer K must be >= 1");
  if (!(c.epsilon > 0.0) || (std::isfinite(c.epsilon) && !(c.epsilon < 1.0))) {
    throw ConfigError("trainer epsilon must be in (0, 1) or infinite");
  }
  if (!(c.lr_mu >= 0.0) || !(c.lr_log_sigma >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) || !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must be in [0, 1)");
  }
  if (!(c.adam_eps > 0.0)) throw ConfigError("adam eps must be positive");
  if (!(c.initial_sigma > 0.0) || !std::isfinite(c.initial_sigma)) {
    throw ConfigError("initial sigma must be positive");
  }
  if (!(c.kl_stop_threshold > 0.0)) throw ConfigError("kl stop threshold must be positive");
  if (c.metric_every == 0) throw ConfigError("metric_every must be >= 1");
  if (!(c.seconds_per_measurement >= 0.0)) throw ConfigError("frame period must be >= 0");
}

double TrainingHistory::metric_at(std::uint64_t measurements) const {
  double out = std::numeric_limits<double>::quiet_NaN();
  for (const RoundRecord& r : records) {
    if (r.measurements > measurements) break;
    if (!std::isnan(r.metric)) out = r.metric;
  }
  return out;
}

std::optional<std::uint64_t> TrainingHistory::measurements_to_reach(double threshold) const {
  for (const RoundRecord& r : records) {
    if (!std::isnan(r.metric) && r.metric >= threshold) return r.measurements;
  }
  return std::nullopt;
}

std::string format_csv_row(const RoundRecord& r) {
  // %.17g keeps the file an exact record of the doubles.
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g", r.round,
                static_cast<unsigned long long>(r.measurements), r.seconds, r.mean_reward,
                r.metric, r.sigma, r.kl);
  return buf;
}

void write_csv(std::ostream& out, const TrainingHistory& history) {
  out << kHistoryCsvHeader << '\n';
  for (const RoundRecord& r : history.records) out << format_csv_row(r) << '\n';
}

namespace {

enum class Algorithm { kPpo, kPg };

TrainingHistory train(blackbox::Environment& env, const tasks::Task& task,
                      const TrainerConfig& config, const TrainHooks& hooks, Algorithm algo) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const blackbox::EnvDescriptor desc = env.descriptor();

  policy::GaussianPolicy current;
  if (hooks.initial_policy) {
    current = *hooks.initial_policy;
  } else {
    optics::PhaseMap mu = task.initial_phase().value_or(optics::PhaseMap(desc.grid));
    current = policy::GaussianPolicy(std::move(mu), std::log(config.initial_sigma));
  }
  optics::require_same_shape(current.shape(), desc.grid, "initial policy");

  Rng sample_rng = make_rng(config.seed, 1);
  Rng task_rng = make_rng(config.seed, 2);
  const AdamConfig adam = config.adam();
  AdamState adam_state;

  const std::uint64_t round_cost =
      static_cast<std::uint64_t>(config.samples_per_round) * task.measurements_per_sample();

  TrainingHistory history;
  auto evaluate = [&](RoundRecord& rec, bool force) {
    if (hooks.monitor != nullptr && (force || rec.round % config.metric_every == 0)) {
      rec.metric = task.metric(*hooks.monitor, current.mu());
    }
  };
  auto emit = [&](RoundRecord rec) {
    if (hooks.on_round) hooks.on_round(rec, current);
    history.records.push_back(rec);
  };

  RoundRecord rec0;
  rec0.sigma = current.sigma();
  const bool no_rounds = round_cost > config.measurement_budget;
  evaluate(rec0, true);
  emit(rec0);

  std::uint64_t used = 0;
  for (std::size_t round = 1; !no_rounds && used + round_cost <= config.measurement_budget; ++round) {
    const std::uint64_t counter_before = env.measurement_count();
    policy::SampleBatch batch = policy::sample(current, config.samples_per_round, sample_rng);
    std::vector<double> rewards;
    try {
      rewards = task.rewards(env, batch.phases, task_rng);
    } catch (const InstrumentError& e) {
      throw InstrumentError("round " + std::to_string(round) + ": " + e.what());
    }
    if (env.measurement_count() - counter_before != round_cost) {
      throw StateError("round " + std::to_string(round) + ": instrument counted " +
                       std::to_string(env.measurement_count() - counter_before) +
                       " measurements, expected " + std::to_string(round_cost));
    }
    used += round_cost;

    RoundRecord rec;
    rec.round = round;
    rec.measurements = used;
    rec.seconds = static_cast<double>(used) * config.seconds_per_measurement;
    rec.mean_reward =
        std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());

    Rollout rollout(std::move(batch), std::move(rewards));
    rollout.normalize();
    const policy::GaussianPolicy old = current;
    if (algo == Algorithm::kPpo) {
      for (std::size_t k = 0; k < config.reuse_iterations; ++k) {
        const LossResult loss = ppo_loss(rollout, current, old, config.epsilon, config.entropy_coef);
        AdamResult step = adam_step(current, loss.grad, adam_state, adam);
        current = std::move(step.policy);
        adam_state = std::move(step.state);
        if (policy::kl(current, old) > config.kl_stop_threshold) break;
      }
    } else {
      const LossResult loss = pg_loss(rollout, current, config.entropy_coef);
      AdamResult step = adam_step(current, loss.grad, adam_state, adam);
      current = std::move(step.policy);
      adam_state = std::move(step.state);
    }
    rec.sigma = current.sigma();
    rec.kl = policy::kl(current, old);
    const bool last = used + round_cost > config.measurement_budget;
    evaluate(rec, last);
    emit(rec);
  }

  history.final_policy = current;
  history.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return history;
}

}  // namespace

TrainingHistory train_ppo(blackbox::Environment& env, const tasks::Task& task,
                          const TrainerConfig& config, const TrainHooks& hooks) {
  return train(env, task, config, hooks, Algorithm::kPpo);
}

TrainingHistory train_pg(blackbox::Environment& env, const tasks::Task& task,
                         const TrainerConfig& config, const TrainHooks& hooks) {
  TrainerConfig pg = config;
  pg.reuse_iterations = 1;
  pg.epsilon = std::numeric_limits<double>::infinity();
  return train(env, task, pg, hooks, Algorithm::kPg);
}

}  // namespace insitu::rl
