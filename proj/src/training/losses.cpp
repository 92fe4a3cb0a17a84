#include "ssi/training/losses.hpp"

#include "ssi/core/autograd.hpp"

namespace ssi::training {

Var hinge_d_loss(Var real_scores, Var fake_scores) {
  return ag::add(ag::mean(ag::relu(ag::affine(real_scores, -1.0, 1.0))),
                 ag::mean(ag::relu(ag::affine(fake_scores, 1.0, 1.0))));
}

Var hinge_g_adv_loss(Var fake_scores) { return ag::mean(ag::relu(ag::affine(fake_scores, -1.0, 1.0))); }

Var raw_g_adv_loss(Var fake_scores) { return ag::affine(ag::mean(fake_scores), -1.0, 0.0); }

Var mse_loss(Var pred, Var target) { return ag::mean(ag::square(ag::sub(pred, target))); }

Var weighted_sum(Var mse, double mse_weight, Var adv, double adv_weight) {
  return ag::add(ag::affine(mse, mse_weight, 0.0), ag::affine(adv, adv_weight, 0.0));
}

double hinge_d_loss(const Tensor& real_scores, const Tensor& fake_scores) {
  Tape t;
  return hinge_d_loss(t.constant(real_scores), t.constant(fake_scores)).value().item();
}

double hinge_g_adv_loss(const Tensor& fake_scores) {
  Tape t;
  return hinge_g_adv_loss(t.constant(fake_scores)).value().item();
}

double mse_loss(const Tensor& pred, const Tensor& target) {
  Tape t;
  return mse_loss(t.constant(pred), t.constant(target)).value().item();
}

}  // namespace ssi::training
