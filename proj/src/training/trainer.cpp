#include "ssi/training/trainer.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>

#include "ssi/core/autograd.hpp"
#include "ssi/core/error.hpp"
#include "ssi/core/format.hpp"
#include "ssi/core/rng.hpp"
#include "ssi/metrics/regression.hpp"
#include "ssi/training/losses.hpp"

namespace ssi::training {

std::string to_string(LossMode mode) { return mode == LossMode::kMse ? "mse" : "gan"; }

LossMode parse_loss_mode(const std::string& name) {
  if (name == "mse") return LossMode::kMse;
  if (name == "gan") return LossMode::kGan;
  throw InvalidArgument("unknown loss mode '" + name + "' (expected mse or gan)");
}

void TrainConfig::validate() const {
  if (!(mse_weight >= 0 && adv_weight >= 0) || std::abs(mse_weight + adv_weight - 1.0) > 1e-12) {
    throw InvalidArgument("mse_weight and adv_weight must be non-negative and sum to 1");
  }
  if (!(lr_g > 0 && lr_d > 0)) throw InvalidArgument("learning rates must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (max_epochs == 0) throw InvalidArgument("max_epochs must be positive");
  if (patience == 0) throw InvalidArgument("patience must be positive");
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + " is not finite");
}

void apply_adam(models::ModelParams& params, const Tape& tape, const models::ParamBinding& binding, AdamState& opt) {
  const auto grads = models::trainable_grads(tape, params, binding);
  const auto ptrs = params.trainable();
  adam_step(ptrs, grads, opt);
}

// One discriminator update on [real; fake]; fake arrives already detached.
double update_discriminator(const Tensor& real, const Tensor& fake, const models::DiscriminatorNetwork& disc,
                            models::ModelParams& d_params, AdamState& opt_d) {
  Tape tape;
  const auto d_bind = models::bind(tape, d_params, true);
  const std::size_t b = real.dim(0);
  const Var scores = disc.forward(ag::concat0(tape.constant(real), tape.constant(fake)), d_bind, d_params,
                                  Mode::kTrain, &d_params);
  const Var loss = hinge_d_loss(ag::slice0(scores, 0, b), ag::slice0(scores, b, 2 * b));
  const double value = loss.value().item();
  require_finite(value, "discriminator loss");
  tape.backward(loss);
  apply_adam(d_params, tape, d_bind, opt_d);
  return value;
}

// Generator update given a forward pass already recorded on `tape`.
GStepResult finish_generator_step(Tape& tape, const models::ParamBinding& g_bind, Var pred, const Batch& batch,
                                  models::ModelParams& g_params, const models::DiscriminatorNetwork& disc,
                                  const models::ModelParams& d_params, AdamState& opt_g, const TrainConfig& cfg) {
  const Var mse = mse_loss(pred, tape.constant(batch.targets));
  const auto d_bind = models::bind(tape, d_params, false);
  const Var scores = disc.forward(pred, d_bind, d_params, Mode::kInfer);
  const Var adv = cfg.adversarial_form == AdversarialForm::kHinge ? hinge_g_adv_loss(scores) : raw_g_adv_loss(scores);
  const Var loss = weighted_sum(mse, cfg.mse_weight, adv, cfg.adv_weight);
  GStepResult r{loss.value().item(), mse.value().item(), adv.value().item()};
  require_finite(r.loss, "generator loss");
  tape.backward(loss);
  apply_adam(g_params, tape, g_bind, opt_g);
  return r;
}

}  // namespace

double train_step_d(const Batch& batch, const models::GeneratorNetwork& gen, const models::ModelParams& g_params,
                    const models::DiscriminatorNetwork& disc, models::ModelParams& d_params, AdamState& opt_d) {
  Tape tape;
  const Var fake = gen.forward(tape.constant(batch.inputs), models::bind(tape, g_params, false));
  return update_discriminator(batch.targets, fake.value(), disc, d_params, opt_d);
}

GStepResult train_step_g(const Batch& batch, const models::GeneratorNetwork& gen, models::ModelParams& g_params,
                         const models::DiscriminatorNetwork& disc, const models::ModelParams& d_params,
                         AdamState& opt_g, const TrainConfig& cfg) {
  Tape tape;
  const auto g_bind = models::bind(tape, g_params, true);
  const Var pred = gen.forward(tape.constant(batch.inputs), g_bind);
  return finish_generator_step(tape, g_bind, pred, batch, g_params, disc, d_params, opt_g, cfg);
}

GanStepResult train_step_gan(const Batch& batch, const models::GeneratorNetwork& gen, models::ModelParams& g_params,
                             const models::DiscriminatorNetwork& disc, models::ModelParams& d_params,
                             AdamState& opt_g, AdamState& opt_d, const TrainConfig& cfg) {
  // The generator is unchanged by the D step, so its forward pass serves both.
  Tape tape;
  const auto g_bind = models::bind(tape, g_params, true);
  const Var pred = gen.forward(tape.constant(batch.inputs), g_bind);
  GanStepResult r;
  r.d_loss = update_discriminator(batch.targets, pred.value(), disc, d_params, opt_d);
  r.g = finish_generator_step(tape, g_bind, pred, batch, g_params, disc, d_params, opt_g, cfg);
  return r;
}

double train_step_mse(const Batch& batch, const models::GeneratorNetwork& gen, models::ModelParams& g_params,
                      AdamState& opt_g) {
  Tape tape;
  const auto g_bind = models::bind(tape, g_params, true);
  const Var loss = mse_loss(gen.forward(tape.constant(batch.inputs), g_bind), tape.constant(batch.targets));
  const double value = loss.value().item();
  require_finite(value, "generator loss");
  tape.backward(loss);
  apply_adam(g_params, tape, g_bind, opt_g);
  return value;
}

std::string TrainLog::to_csv() const {
  std::ostringstream os;
  os << "epoch,d_loss,g_adv,g_mse,dev_mse,dev_r2,seconds\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << (e.d_loss ? format_number(*e.d_loss) : "") << ','
       << (e.g_adv ? format_number(*e.g_adv) : "") << ',' << format_number(e.g_mse) << ','
       << format_number(e.dev_mse) << ',' << format_number(e.dev_r2) << ',' << format_number(e.seconds) << '\n';
  }
  return os.str();
}

std::string TrainLog::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json r;
    r["epoch"] = e.epoch;
    r["d_loss"] = e.d_loss ? nlohmann::json(*e.d_loss) : nlohmann::json(nullptr);
    r["g_adv"] = e.g_adv ? nlohmann::json(*e.g_adv) : nlohmann::json(nullptr);
    r["g_mse"] = e.g_mse;
    r["dev_mse"] = e.dev_mse;
    r["dev_r2"] = e.dev_r2;
    r["seconds"] = e.seconds;
    j["epochs"].push_back(r);
  }
  return j.dump(2) + "\n";
}

Tensor predict_examples(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                        const ExampleSet& set, std::size_t batch_size) {
  if (set.empty()) throw InvalidArgument("no examples to predict");
  std::vector<double> out;
  Shape per;
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    const Batch b = set.gather_range(begin, std::min(set.size(), begin + batch_size));
    Tape tape;
    const Tensor& y = gen.forward(tape.constant(b.inputs), models::bind(tape, params, false)).value();
    per = Shape(y.shape().begin() + 1, y.shape().end());
    out.insert(out.end(), y.values().begin(), y.values().end());
  }
  Shape shape{set.size()};
  shape.insert(shape.end(), per.begin(), per.end());
  return Tensor(shape, std::move(out));
}

DevScore evaluate_examples(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                           const ExampleSet& set, std::size_t batch_size) {
  const Tensor pred = predict_examples(gen, params, set, batch_size);
  Tensor target(pred.shape());
  const std::size_t per = pred.size() / pred.dim(0);
  for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
    const std::size_t end = std::min(set.size(), begin + batch_size);
    const Batch b = set.gather_range(begin, end);
    std::copy(b.targets.values().begin(), b.targets.values().end(), target.data() + begin * per);
  }
  const std::size_t channels = pred.shape().back();
  const Shape flat{pred.size() / channels, channels};
  return {metrics::spectral_mse(pred, target), metrics::mean_r2(pred.reshaped(flat), target.reshaped(flat))};
}

TrainResult train(const ExampleSet& train_set, const ExampleSet& dev_set, const models::Generator& gen,
                  const models::Discriminator& disc, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw InvalidArgument("the training split has no examples");
  if (dev_set.empty()) throw InvalidArgument("the development split has no examples");
  const Rng root(cfg.seed);
  models::ModelParams g_params = gen.init_params(root.split("generator").next_u64());
  models::ModelParams d_params = disc.init_params(root.split("discriminator").next_u64());
  AdamState opt_g{{cfg.lr_g, cfg.beta1, cfg.beta2}};
  AdamState opt_d{{cfg.lr_d, cfg.beta1, cfg.beta2}};
  const bool gan = cfg.loss_mode == LossMode::kGan;

  TrainResult result;
  result.log.mode = cfg.loss_mode;
  result.best_dev_mse = std::numeric_limits<double>::infinity();
  result.generator = g_params;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = root.split("shuffle").split(std::uint64_t{epoch});
    shuffle.shuffle(order);

    double d_sum = 0.0, adv_sum = 0.0, mse_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const Batch batch = train_set.gather(std::span(order).subspan(begin, end - begin));
      if (gan) {
        const GanStepResult r = train_step_gan(batch, gen, g_params, disc, d_params, opt_g, opt_d, cfg);
        d_sum += r.d_loss;
        adv_sum += r.g.adv;
        mse_sum += r.g.mse;
      } else {
        mse_sum += train_step_mse(batch, gen, g_params, opt_g);
      }
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const auto n = static_cast<double>(batches);
    if (gan) {
      rec.d_loss = d_sum / n;
      rec.g_adv = adv_sum / n;
    }
    rec.g_mse = mse_sum / n;
    const DevScore dev = evaluate_examples(gen, g_params, dev_set, cfg.batch_size);
    require_finite(dev.mse, "dev MSE");
    rec.dev_mse = dev.mse;
    rec.dev_r2 = dev.r2;
    if (cfg.log_wall_clock) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.log.epochs.push_back(rec);
    spdlog::info("epoch {} [{}] g_mse {:.5f} dev_mse {:.5f} dev_r2 {:.4f}{}", epoch, to_string(cfg.loss_mode),
                 rec.g_mse, rec.dev_mse, rec.dev_r2,
                 gan ? fmt::format(" d_loss {:.4f} g_adv {:.4f}", *rec.d_loss, *rec.g_adv) : std::string());
    if (on_epoch) on_epoch(rec);

    if (dev.mse < result.best_dev_mse) {
      result.best_dev_mse = dev.mse;
      result.best_epoch = epoch;
      result.generator = g_params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      spdlog::info("early stop after epoch {}: no dev improvement for {} epochs", epoch, cfg.patience);
      break;
    }
  }
  result.discriminator = std::move(d_params);
  return result;
}

}  // namespace ssi::training
