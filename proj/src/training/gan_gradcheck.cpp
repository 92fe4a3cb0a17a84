#include "ssi/training/gan_gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <functional>

#include "ssi/core/autograd.hpp"
#include "ssi/core/rng.hpp"
#include "ssi/models/discriminator.hpp"
#include "ssi/models/generator.hpp"
#include "ssi/training/losses.hpp"

namespace ssi::training {

namespace {



Tensor random_tensor(Shape shape, Rng rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Fresh init has zero biases and unit running variances; random values make
// those paths visible to the check.
void perturb_buffers(models::ModelParams& params, Rng rng) {
  std::size_t i = 0;
  for (auto& e : params.entries()) {
    if (e.kind == models::ParamKind::kBias || e.kind == models::ParamKind::kBeta) {
      e.value = random_tensor(e.value.shape(), rng.split(i), -0.1, 0.1);
    } else if (e.kind == models::ParamKind::kRunningVar) {
      e.value = random_tensor(e.value.shape(), rng.split(i), 0.8, 1.5);
    } else if (e.kind == models::ParamKind::kRunningMean) {
      e.value = random_tensor(e.value.shape(), rng.split(i), -0.2, 0.2);
    }
    ++i;
  }
}

}  // namespace

double GanGradCheckResult::max_rel_error() const noexcept {
  return std::max(d_hinge.max_rel_error, g_combined.max_rel_error);
}

GanGradCheckResult gan_gradcheck(std::uint64_t seed, FaultInjection fault, double mse_weight, double adv_weight,
                                 const GradCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const Rng root(seed);
  const models::Generator g(models::GeneratorConfig::miniature());
  const models::Discriminator d(models::DiscriminatorConfig::miniature());
  auto g_params = g.init_params(root.split("generator").next_u64());
  auto d_params = d.init_params(root.split("discriminator").next_u64());
  perturb_buffers(g_params, root.split("generator-buffers"));
  perturb_buffers(d_params, root.split("discriminator-buffers"));

  const auto& gc = g.config();
  const std::size_t batch = 2;
  const Tensor inputs = random_tensor({batch, gc.frames, gc.height, gc.width}, root.split("inputs"), -1.0, 1.0);
  const Tensor targets = random_tensor({batch, gc.out_frames(), gc.n_mels}, root.split("targets"), -2.0, 2.0);
  GanGradCheckResult result;

  {
    const Tensor fake = g.predict(g_params, inputs);
    auto run = [&](Tape& tape, const models::ParamBinding& db) {
      const Var scores =
          d.forward(ag::concat0(tape.constant(targets), tape.constant(fake)), db, d_params, Mode::kTrain);
      return hinge_d_loss(ag::slice0(scores, 0, batch), ag::slice0(scores, batch, 2 * batch));
    };
    Tape tape;
    tape.set_fault(fault);
    const auto db = models::bind(tape, d_params, true);
    tape.backward(run(tape, db));
    const auto grads = models::trainable_grads(tape, d_params, db);
    const auto ptrs = d_params.trainable();
    const std::function<double()> loss = [&] {
      Tape t;
      return run(t, models::bind(t, d_params, false)).value().item();
    };
    result.d_hinge = check_gradients(ptrs, grads, loss, options);
  }

  {
    auto run = [&](Tape& tape, const models::ParamBinding& gb, const models::ParamBinding& db) {
      const Var pred = g.forward(tape.constant(inputs), gb);
      const Var mse = mse_loss(pred, tape.constant(targets));
      const Var adv = hinge_g_adv_loss(d.forward(pred, db, d_params, Mode::kInfer));
      return weighted_sum(mse, mse_weight, adv, adv_weight);
    };
    Tape tape;
    tape.set_fault(fault);
    const auto gb = models::bind(tape, g_params, true);
    const auto db = models::bind(tape, d_params, true);
    tape.backward(run(tape, gb, db));
    auto grads = models::trainable_grads(tape, g_params, gb);
    const auto dg = models::trainable_grads(tape, d_params, db);
    grads.insert(grads.end(), dg.begin(), dg.end());
    auto ptrs = g_params.trainable();
    const auto dp = d_params.trainable();
    ptrs.insert(ptrs.end(), dp.begin(), dp.end());
    const std::function<double()> loss = [&] {
      Tape t;
      return run(t, models::bind(t, g_params, false), models::bind(t, d_params, false)).value().item();
    };
    result.g_combined = check_gradients(ptrs, grads, loss, options);
  }

  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace ssi::training
