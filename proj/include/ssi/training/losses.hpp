#pragma once

#include "ssi/core/tape.hpp"

namespace ssi::training {

// mean(relu(1 - real)) + mean(relu(1 + fake)) over every patch score.
Var hinge_d_loss(Var real_scores, Var fake_scores);
// The discriminator hinge with fake scores labelled real: mean(relu(1 - fake)).
Var hinge_g_adv_loss(Var fake_scores);
// -mean(fake): the raw-score alternative to the flipped-label hinge.
Var raw_g_adv_loss(Var fake_scores);
Var mse_loss(Var pred, Var target);
// mse_weight * mse + adv_weight * adv.
Var weighted_sum(Var mse, double mse_weight, Var adv, double adv_weight);

// Value-level forms of the same losses.
double hinge_d_loss(const Tensor& real_scores, const Tensor& fake_scores);
double hinge_g_adv_loss(const Tensor& fake_scores);
double mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace ssi::training
