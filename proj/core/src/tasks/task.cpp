#include "insitu/tasks/task.hpp"

#include <algorithm>
#include <numeric>

#include "insitu/errors.hpp"
#include "insitu/tasks/classify.hpp"
#include "insitu/tasks/metrics.hpp"

namespace insitu::tasks {

double fitted_mse_with_grad(const IntensityImage& image, const IntensityImage& target,
                            std::vector<double>* dloss_dimage) {
  const double g = fitted_gain(image, target);
  const auto n = static_cast<double>(image.size());
  double sum = 0.0;
  if (dloss_dimage != nullptr) dloss_dimage->assign(image.size(), 0.0);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = g * image[i] - target[i];
    sum += d * d;
    if (dloss_dimage != nullptr) (*dloss_dimage)[i] = 2.0 * g * d / n;
  }
  return sum / n;
}

namespace {

// d(E_t / S)/dI over the detector regions.
double energy_ratio_with_grad(const IntensityImage& image, const DetectorLayout& layout,
                              std::size_t target, std::vector<double>* grad, double scale) {
  const auto energies = optics::detector_energies(image, layout);
  const double total = std::accumulate(energies.begin(), energies.end(), 0.0);
  if (total <= 0.0) return 0.0;
  const double er = energies[target] / total;
  if (grad != nullptr) {
    const std::size_t cols = image.shape().cols;
    for (std::size_t k = 0; k < layout.size(); ++k) {
      const optics::Region& reg = layout.regions()[k];
      const double d = ((k == target ? 1.0 : 0.0) - er) / total * scale;
      for (std::size_t r = reg.row; r < reg.row + reg.height; ++r) {
        for (std::size_t c = reg.col; c < reg.col + reg.width; ++c) (*grad)[r * cols + c] += d;
      }
    }
  }
  return er;
}

void check_focus_layout(const DetectorLayout& layout, std::size_t target) {
  if (layout.size() != 10) {
    throw ConfigError("focus and classification need exactly 10 detector regions, got " +
                      std::to_string(layout.size()));
  }
  if (target >= layout.size()) {
    throw ConfigError("target region " + std::to_string(target) + " outside [0, 9]");
  }
}

void check_target(const IntensityImage& target) {
  for (double v : target.values()) {
    if (v < 0.0 || v > 1.0) throw ConfigError("target image must be normalized to [0, 1]");
  }
}

class FocusTask final : public Task {
 public:
  explicit FocusTask(FocusSpec spec) : spec_(std::move(spec)) {
    check_focus_layout(spec_.layout, spec_.target_region);
  }

  std::string name() const override { return "focus"; }
  std::string metric_name() const override { return "energy_ratio"; }

  std::vector<double> rewards(blackbox::Environment& env, std::span<const PhaseMap> phases,
                              Rng&) const override {
    const auto images = env.evaluate_batch(phases);
    std::vector<double> out;
    out.reserve(images.size());
    for (const auto& image : images) out.push_back(score(image));
    return out;
  }

  double metric(blackbox::Environment& monitor, const PhaseMap& phase) const override {
    return score(monitor.evaluate_batch(std::span(&phase, 1)).front());
  }

  double insilico_loss(const optics::ForwardModel& model, const PhaseMap& phase,
                       std::vector<double>* grad, Rng&) const override {
    const IntensityImage image = model.intensity(phase);
    std::vector<double> dimage(grad != nullptr ? image.size() : 0, 0.0);
    const double er = energy_ratio_with_grad(image, spec_.layout, spec_.target_region,
                                             grad != nullptr ? &dimage : nullptr, -1.0);
    if (grad != nullptr) *grad = model.intensity_vjp(phase, dimage);
    return -er;
  }

 private:
  double score(const IntensityImage& image) const {
    return reward_focus(optics::detector_energies(image, spec_.layout), spec_.target_region);
  }

  FocusSpec spec_;
};

class ImageTask : public Task {
 public:
  explicit ImageTask(IntensityImage target) : target_(std::move(target)) { check_target(target_); }

  std::string metric_name() const override { return "psnr_db"; }

  std::vector<double> rewards(blackbox::Environment& env, std::span<const PhaseMap> phases,
                              Rng&) const override {
    const auto images = env.evaluate_batch(phases);
    std::vector<double> out;
    out.reserve(images.size());
    for (const auto& image : images) out.push_back(reward_hologram(image, target_));
    return out;
  }

  double metric(blackbox::Environment& monitor, const PhaseMap& phase) const override {
    return psnr(monitor.evaluate_batch(std::span(&phase, 1)).front(), target_);
  }

  double insilico_loss(const optics::ForwardModel& model, const PhaseMap& phase,
                       std::vector<double>* grad, Rng&) const override {
    const IntensityImage image = model.intensity(phase);
    std::vector<double> dimage;
    const double loss = fitted_mse_with_grad(image, target_, grad != nullptr ? &dimage : nullptr);
    if (grad != nullptr) *grad = model.intensity_vjp(phase, dimage);
    return loss;
  }

 private:
  IntensityImage target_;
};

class HologramTask final : public ImageTask {
 public:
  explicit HologramTask(HologramSpec spec) : ImageTask(std::move(spec.target)) {}
  std::string name() const override { return "hologram"; }
};

class AberrationTask final : public ImageTask {
 public:
  explicit AberrationTask(AberrationSpec spec)
      : ImageTask(std::move(spec.target)), initial_(std::move(spec.initial_phase)) {}
  std::string name() const override { return "aberration"; }
  std::optional<PhaseMap> initial_phase() const override { return initial_; }

 private:
  PhaseMap initial_;
};

class ClassifyTask final : public Task {
 public:
  explicit ClassifyTask(ClassifySpec spec) : spec_(std::move(spec)) {
    check_focus_layout(spec_.layout, 0);
    if (!spec_.train || spec_.train->empty()) throw ConfigError("classification needs training digits");
    if (!spec_.test || spec_.test->empty()) throw ConfigError("classification needs test digits");
    if (spec_.minibatch == 0 || spec_.minibatch > spec_.train->size()) {
      throw ConfigError("classification minibatch must be in [1, training set size]");
    }
    train_inputs_ = encode_all(*spec_.train);
    test_inputs_ = encode_all(*spec_.test);
  }

  std::string name() const override { return "classify"; }
  std::string metric_name() const override { return "test_accuracy"; }
  std::size_t measurements_per_sample() const override { return spec_.minibatch; }

  std::vector<double> rewards(blackbox::Environment& env, std::span<const PhaseMap> phases,
                              Rng& rng) const override {
    const auto batch = draw_minibatch(spec_.minibatch, rng);
    std::vector<double> out(phases.size(), 0.0);
    for (std::size_t idx : batch) {
      const auto images = env.evaluate_batch(&train_inputs_[idx], phases);
      const int label = (*spec_.train)[idx].label;
      for (std::size_t j = 0; j < images.size(); ++j) {
        out[j] += correct_fraction(images[j], label, spec_.layout);
      }
    }
    for (double& r : out) r /= static_cast<double>(batch.size());
    return out;
  }

  double metric(blackbox::Environment& monitor, const PhaseMap& phase) const override {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_inputs_.size(); ++i) {
      const auto images = monitor.evaluate_batch(&test_inputs_[i], std::span(&phase, 1));
      const auto energies = optics::detector_energies(images.front(), spec_.layout);
      if (argmax(energies) == static_cast<std::size_t>((*spec_.test)[i].label)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test_inputs_.size());
  }

  IntensityImage preview(blackbox::Environment& monitor, const PhaseMap& phase) const override {
    return monitor.evaluate_batch(&test_inputs_.front(), std::span(&phase, 1)).front();
  }

  double insilico_loss(const optics::ForwardModel& model, const PhaseMap& phase,
                       std::vector<double>* grad, Rng& rng) const override {
    const auto batch = draw_minibatch(std::min(kInsilicoBatch, spec_.train->size()), rng);
    const double w = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    if (grad != nullptr) grad->assign(phase.size(), 0.0);
    std::vector<double> dimage;
    for (std::size_t idx : batch) {
      const PhaseMap total = phase + train_inputs_[idx];
      const IntensityImage image = model.intensity(total);
      if (grad != nullptr) dimage.assign(image.size(), 0.0);
      loss -= w * energy_ratio_with_grad(image, spec_.layout,
                                         static_cast<std::size_t>((*spec_.train)[idx].label),
                                         grad != nullptr ? &dimage : nullptr, -w);
      if (grad != nullptr) {
        const auto g = model.intensity_vjp(total, dimage);
        for (std::size_t p = 0; p < g.size(); ++p) (*grad)[p] += g[p];
      }
    }
    return loss;
  }

 private:
  static constexpr std::size_t kInsilicoBatch = 32;

  std::vector<PhaseMap> encode_all(const std::vector<LabeledDigit>& digits) const {
    std::vector<PhaseMap> out;
    out.reserve(digits.size());
    for (const auto& d : digits) out.push_back(encode_digit(d, spec_.grid, spec_.input_window));
    return out;
  }

  // B distinct training indices (partial Fisher-Yates).
  std::vector<std::size_t> draw_minibatch(std::size_t count, Rng& rng) const {
    std::vector<std::size_t> idx(spec_.train->size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    return idx;
  }

  ClassifySpec spec_;
  std::vector<PhaseMap> train_inputs_;
  std::vector<PhaseMap> test_inputs_;
};

}  // namespace

std::unique_ptr<Task> make_task(const TaskSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::unique_ptr<Task> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FocusSpec>) return std::make_unique<FocusTask>(s);
        if constexpr (std::is_same_v<S, HologramSpec>) return std::make_unique<HologramTask>(s);
        if constexpr (std::is_same_v<S, AberrationSpec>) return std::make_unique<AberrationTask>(s);
        if constexpr (std::is_same_v<S, ClassifySpec>) return std::make_unique<ClassifyTask>(s);
      },
      spec);
}

}  // namespace insitu::tasks
