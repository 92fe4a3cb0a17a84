#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssi/core/adam.hpp"
#include "ssi/models/discriminator.hpp"
#include "ssi/models/generator.hpp"
#include "ssi/training/dataset.hpp"

namespace ssi::training {

enum class LossMode { kMse, kGan };
enum class AdversarialForm { kHinge, kRawScore };

std::string to_string(LossMode mode);
LossMode parse_loss_mode(const std::string& name);

struct TrainConfig {
  LossMode loss_mode = LossMode::kGan;
  double mse_weight = 0.75;
  double adv_weight = 0.25;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  AdversarialForm adversarial_form = AdversarialForm::kHinge;
  bool log_wall_clock = false;  // a zero seconds column keeps logs byte-reproducible

  void validate() const;
};

struct GStepResult {
  double loss = 0.0;
  double mse = 0.0;
  double adv = 0.0;
};

// Discriminator update: the generator runs detached with constant
// parameters, the discriminator runs in train mode on [real; fake] and only
// its parameters (and running statistics) change.
double train_step_d(const Batch& batch, const models::GeneratorNetwork& gen, const models::ModelParams& g_params,
                    const models::DiscriminatorNetwork& disc, models::ModelParams& d_params, AdamState& opt_d);

// Generator update against mse_weight * MSE + adv_weight * adversarial loss;
// the discriminator runs in infer mode with constant parameters.
GStepResult train_step_g(const Batch& batch, const models::GeneratorNetwork& gen, models::ModelParams& g_params,
                         const models::DiscriminatorNetwork& disc, const models::ModelParams& d_params,
                         AdamState& opt_g, const TrainConfig& cfg);

struct GanStepResult {
  double d_loss = 0.0;
  GStepResult g;
};

// One D step then one G step on the same batch, sharing the generator forward.
GanStepResult train_step_gan(const Batch& batch, const models::GeneratorNetwork& gen, models::ModelParams& g_params,
                             const models::DiscriminatorNetwork& disc, models::ModelParams& d_params,
                             AdamState& opt_g, AdamState& opt_d, const TrainConfig& cfg);

// Baseline generator update against MSE alone.
double train_step_mse(const Batch& batch, const models::GeneratorNetwork& gen, models::ModelParams& g_params,
                      AdamState& opt_g);

struct EpochRecord {
  std::size_t epoch = 0;
  std::optional<double> d_loss;  // empty in mse mode
  std::optional<double> g_adv;
  double g_mse = 0.0;
  double dev_mse = 0.0;
  double dev_r2 = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  LossMode mode = LossMode::kGan;
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
  std::string to_json() const;
};

struct TrainResult {
  models::ModelParams generator;      // best-dev snapshot
  models::ModelParams discriminator;  // state at the end of training
  TrainLog log;
  std::size_t best_epoch = 0;
  double best_dev_mse = 0.0;
};

struct DevScore {
  double mse = 0.0;
  double r2 = 0.0;
};

// Generator predictions for every example, batched; [N, 5, n_mels].
Tensor predict_examples(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                        const ExampleSet& set, std::size_t batch_size);
DevScore evaluate_examples(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                           const ExampleSet& set, std::size_t batch_size);

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const ExampleSet& train_set, const ExampleSet& dev_set, const models::Generator& gen,
                  const models::Discriminator& disc, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace ssi::training
