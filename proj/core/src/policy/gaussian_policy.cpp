#include "insitu/policy/gaussian_policy.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "insitu/errors.hpp"
#include "insitu/optics/snapshot_io.hpp"

namespace insitu::policy {

namespace {

double clamp_log_sigma(double v) { return std::clamp(v, kMinLogSigma, kMaxLogSigma); }

double squared_deviation(const GaussianPolicy& policy, const PhaseMap& phase) {
  optics::require_same_shape(phase.shape(), policy.shape(), "policy density");
  const auto mu = policy.mu().values();
  const auto x = phase.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace

GaussianPolicy::GaussianPolicy(PhaseMap mu, double log_sigma)
    : mu_(std::move(mu)), log_sigma_(log_sigma) {
  if (!std::isfinite(log_sigma)) throw DataError("policy log_sigma must be finite");
}

GaussianPolicy GaussianPolicy::zeros(Shape shape, double sigma) {
  return GaussianPolicy(PhaseMap(shape, 0.0), std::log(sigma));
}

GaussianPolicy GaussianPolicy::with_params(PhaseMap mu, double log_sigma) const {
  optics::require_same_shape(mu.shape(), mu_.shape(), "policy update");
  return GaussianPolicy(std::move(mu), clamp_log_sigma(log_sigma));
}

SampleBatch sample(const GaussianPolicy& policy, std::size_t count, Rng& rng) {
  if (count < 2) throw ConfigError("policy sample count must be >= 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = policy.sigma();
  SampleBatch batch;
  batch.phases.reserve(count);
  batch.log_probs.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    PhaseMap phi = policy.mu();
    for (double& v : phi.values()) v += sigma * normal(rng);
    batch.log_probs.push_back(log_prob(policy, phi));
    batch.phases.push_back(std::move(phi));
  }
  return batch;
}

double log_prob(const GaussianPolicy& policy, const PhaseMap& phase) {
  const double n = static_cast<double>(policy.size());
  const double sigma = policy.sigma();
  return -squared_deviation(policy, phase) / (2.0 * sigma * sigma) - n * policy.log_sigma() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double log_ratio(const GaussianPolicy& policy_new, const GaussianPolicy& policy_old,
                 const PhaseMap& phase) {
  // The normalizing constants cancel; form the difference directly so that
  // identical policies give exactly zero.
  const double n = static_cast<double>(policy_new.size());
  const double s_new = policy_new.sigma();
  const double s_old = policy_old.sigma();
  const double diff = -squared_deviation(policy_new, phase) / (2.0 * s_new * s_new) +
                      squared_deviation(policy_old, phase) / (2.0 * s_old * s_old) -
                      n * (policy_new.log_sigma() - policy_old.log_sigma());
  return std::clamp(diff, -kLogRatioClamp, kLogRatioClamp);
}

PolicyGradient grad_log_prob(const GaussianPolicy& policy, const PhaseMap& phase) {
  optics::require_same_shape(phase.shape(), policy.shape(), "grad_log_prob");
  const double inv_var = 1.0 / (policy.sigma() * policy.sigma());
  const auto mu = policy.mu().values();
  const auto x = phase.values();
  PolicyGradient g = PolicyGradient::zeros(x.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mu[i];
    g.mu[i] = d * inv_var;
    sq += d * d;
  }
  g.log_sigma = sq * inv_var - static_cast<double>(x.size());
  return g;
}

double entropy(const GaussianPolicy& policy) {
  const double n = static_cast<double>(policy.size());
  return n * (policy.log_sigma() + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e));
}

double kl(const GaussianPolicy& policy_new, const GaussianPolicy& policy_old) {
  optics::require_same_shape(policy_new.shape(), policy_old.shape(), "kl");
  const double n = static_cast<double>(policy_new.size());
  const double var_new = policy_new.sigma() * policy_new.sigma();
  const double var_old = policy_old.sigma() * policy_old.sigma();
  double mean_term = 0.0;
  const auto a = policy_new.mu().values();
  const auto b = policy_old.mu().values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    mean_term += d * d;
  }
  const double value = n * (policy_old.log_sigma() - policy_new.log_sigma()) +
                       (n * var_new + mean_term) / (2.0 * var_old) - 0.5 * n;
  return std::max(value, 0.0);
}

void save_checkpoint(const std::filesystem::path& path, const GaussianPolicy& policy,
                     std::uint64_t step) {
  const auto values = policy.mu().values();
  optics::Grid<double> grid(policy.shape(), std::vector<double>(values.begin(), values.end()));
  optics::write_raw(path, grid, optics::RawDtype::kFloat64);
  std::ofstream side(path.string() + ".txt");
  if (!side) throw FormatError("cannot write checkpoint sidecar for " + path.string());
  side << std::setprecision(17) << "log_sigma " << policy.log_sigma() << "\nstep " << step << '\n';
}

GaussianPolicy load_checkpoint(const std::filesystem::path& path, std::uint64_t* step) {
  const optics::Grid<double> grid = optics::read_raw(path);
  std::ifstream side(path.string() + ".txt");
  if (!side) throw FormatError("missing checkpoint sidecar " + path.string() + ".txt");
  double log_sigma = 0.0;
  std::uint64_t steps = 0;
  bool have_sigma = false;
  std::string key;
  while (side >> key) {
    if (key == "log_sigma") {
      side >> log_sigma;
      have_sigma = true;
    } else if (key == "step") {
      side >> steps;
    } else {
      throw FormatError("checkpoint sidecar: unknown key '" + key + "'");
    }
  }
  if (!have_sigma) throw FormatError("checkpoint sidecar lacks log_sigma");
  if (step != nullptr) *step = steps;
  return GaussianPolicy(PhaseMap(grid.shape(), grid.vector()), log_sigma);
}

}  // namespace insitu::policy
