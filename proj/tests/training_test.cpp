#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "oracles.hpp"
#include "ssi/core/autograd.hpp"
#include "ssi/core/error.hpp"
#include "ssi/core/gradcheck.hpp"
#include "ssi/core/rng.hpp"
#include "ssi/dataio/preprocess.hpp"
#include "ssi/dataio/synth.hpp"
#include "ssi/models/discriminator.hpp"
#include "ssi/models/generator.hpp"
#include "ssi/training/dataset.hpp"
#include "ssi/training/losses.hpp"
#include "ssi/training/trainer.hpp"

namespace ssi::training {
namespace {

using models::Discriminator;
using models::DiscriminatorConfig;
using models::Generator;
using models::GeneratorConfig;
using models::ModelParams;

struct Sets {
  ExampleSet train, dev;
};

Sets miniature_sets(std::uint64_t seed, std::size_t n_utts, std::size_t frames) {
  const auto corpus = dataio::synth_corpus(seed, n_utts, frames);
  const auto& mini = GeneratorConfig::miniature();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) index[corpus.utterances[i].clip.utterance_id] = i;
  std::vector<dsp::MelSpectrogram> mels;
  for (const auto& u : corpus.utterances) mels.push_back(dsp::mel_spectrogram(u.audio, dsp::DspConfig{}));
  std::vector<dsp::MelSpectrogram> train_mels;
  for (const auto& id : corpus.split.train) train_mels.push_back(mels[index[id]]);
  const auto stats = dataio::compute_norm_stats(train_mels);
  Sets s;
  auto fill = [&](ExampleSet& set, const std::vector<std::string>& ids) {
    for (const auto& id : ids) {
      const std::size_t i = index[id];
      set.add(dataio::minmax_scale(dataio::resize_clip(corpus.utterances[i].clip, mini.height, mini.width)),
              dataio::standardize_mel(mels[i], stats));
    }
  };
  fill(s.train, corpus.split.train);
  fill(s.dev, corpus.split.dev);
  return s;
}

Batch tiny_batch(std::size_t b, std::uint64_t seed) {
  return {testing::random_tensor({b, 25, 8, 16}, seed, -1.0, 1.0), testing::random_tensor({b, 5, 80}, seed + 1)};
}

bool same_params(const ModelParams& a, const ModelParams& b) { return a == b; }

// ---- losses -----------------------------------------------------------------

TEST(Losses, HingeClosedForms) {
  const Tensor plus = Tensor({3, 10}, 1.0), minus = Tensor({3, 10}, -1.0), zero({3, 10});
  EXPECT_NEAR(hinge_d_loss(plus, minus), 0.0, 1e-12);
  EXPECT_NEAR(hinge_d_loss(zero, zero), 2.0, 1e-12);
  EXPECT_NEAR(hinge_g_adv_loss(plus), 0.0, 1e-12);
  EXPECT_NEAR(hinge_g_adv_loss(minus), 2.0, 1e-12);
  EXPECT_NEAR(hinge_g_adv_loss(zero), 1.0, 1e-12);
}

TEST(Losses, HingeMatchesElementwiseOracle) {
  const Tensor real = testing::random_tensor({4, 10}, 1, -3.0, 3.0);
  const Tensor fake = testing::random_tensor({4, 10}, 2, -3.0, 3.0);
  double r = 0.0, f = 0.0, g = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    r += std::max(0.0, 1.0 - real.data()[i]);
    f += std::max(0.0, 1.0 + fake.data()[i]);
    g += std::max(0.0, 1.0 - fake.data()[i]);
  }
  const double n = static_cast<double>(real.size());
  EXPECT_NEAR(hinge_d_loss(real, fake), r / n + f / n, 1e-12);
  EXPECT_NEAR(hinge_g_adv_loss(fake), g / n, 1e-12);
}

TEST(Losses, HingeBoundsWithTanhScores) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor real = testing::random_tensor({2, 10}, rng.next_u64(), -20.0, 20.0);
    Tensor fake = testing::random_tensor({2, 10}, rng.next_u64(), -20.0, 20.0);
    for (double& v : real.values()) v = std::tanh(v);
    for (double& v : fake.values()) v = std::tanh(v);
    const double d = hinge_d_loss(real, fake), g = hinge_g_adv_loss(fake);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 4.0);
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 2.0);
  }
}

TEST(Losses, MseClosedFormsAndOracle) {
  const Tensor t = testing::random_tensor({3, 5, 80}, 7);
  Tensor shifted = t;
  for (double& v : shifted.values()) v += 1.0;
  EXPECT_EQ(mse_loss(t, t), 0.0);
  EXPECT_NEAR(mse_loss(shifted, t), 1.0, 1e-12);
  const Tensor p = testing::random_tensor({3, 5, 80}, 8);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += (p.data()[i] - t.data()[i]) * (p.data()[i] - t.data()[i]);
  EXPECT_NEAR(mse_loss(p, t), acc / static_cast<double>(p.size()), 1e-12);
}

TEST(Losses, CombinedWeightedSum) {
  Tape tape;
  const Var mse = tape.constant(Tensor::scalar(1.0)), adv = tape.constant(Tensor::scalar(2.0));
  EXPECT_NEAR(weighted_sum(mse, 0.75, adv, 0.25).value().item(), 1.25, 1e-12);
  // pred = target and fake scores at +1 give zero total loss
  const Tensor t = testing::random_tensor({2, 5, 80}, 9);
  const Var zero = weighted_sum(mse_loss(tape.constant(t), tape.constant(t)), 0.75,
                                hinge_g_adv_loss(tape.constant(Tensor({2, 10}, 1.0))), 0.25);
  EXPECT_EQ(zero.value().item(), 0.0);
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const double m = std::ldexp(static_cast<double>(rng.next_u64() >> 11), -50);
    const double a = std::ldexp(static_cast<double>(rng.next_u64() >> 11), -50);
    const double r = weighted_sum(tape.constant(Tensor::scalar(m)), 1.0, tape.constant(Tensor::scalar(a)), 0.0)
                         .value()
                         .item();
    EXPECT_EQ(r, m);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mse_weight = 0.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.lr_d = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_EQ(parse_loss_mode("gan"), LossMode::kGan);
  EXPECT_THROW(parse_loss_mode("wgan"), InvalidArgument);
}

// ---- steps ------------------------------------------------------------------

TEST(TrainStep, DiscriminatorStepFreezesGenerator) {
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  const auto g_params = g.init_params(1);
  auto d_params = d.init_params(2);
  const auto g_before = g_params;
  const auto d_before = d_params;
  AdamState opt{};
  const double loss = train_step_d(tiny_batch(4, 3), g, g_params, d, d_params, opt);
  EXPECT_GT(loss, 0.0);
  EXPECT_TRUE(same_params(g_params, g_before));
  for (std::size_t i = 0; i < d_params.size(); ++i) {
    const auto& e = d_params.entries()[i];
    if (e.kind == models::ParamKind::kWeight) {
      EXPECT_FALSE(e.value == d_before.entries()[i].value) << e.name;
    }
  }
  EXPECT_EQ(opt.step, 1u);
}

TEST(TrainStep, GeneratorStepFreezesDiscriminator) {
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  auto g_params = g.init_params(1);
  const auto d_params = d.init_params(2);
  const auto g_before = g_params;
  const auto d_before = d_params;
  AdamState opt{};
  const auto r = train_step_g(tiny_batch(4, 3), g, g_params, d, d_params, opt, TrainConfig{});
  EXPECT_TRUE(same_params(d_params, d_before));  // running stats included
  EXPECT_FALSE(same_params(g_params, g_before));
  EXPECT_NEAR(r.loss, 0.75 * r.mse + 0.25 * r.adv, 1e-12);
}

// One trainable scalar w; scores are w times each example's patch sum.
class ToyDiscriminator : public models::DiscriminatorNetwork {
 public:
  Var forward(Var mel, const models::ParamBinding& p, const ModelParams&, Mode, ModelParams*) const override {
    const std::size_t b = mel.shape()[0];
    Tape& t = mel.tape();
    // per-example sum via a dense layer with all-ones weights
    const Var sums = ag::dense(ag::reshape(mel, {b, mel.value().size() / b}),
                               t.constant(Tensor({mel.value().size() / b, 1}, 1.0)), t.constant(Tensor({1})));
    return ag::mul(sums, ag::reshape(ag::dense(t.constant(Tensor({b, 1}, 1.0)), p.vars[0], t.constant(Tensor({1}))),
                                     {b, 1}));
  }
  ModelParams init(double w) const {
    ModelParams m("toy");
    m.add("w", models::ParamKind::kWeight, Tensor({1, 1}, {w}));
    return m;
  }
};

TEST(TrainStep, ToyDiscriminatorMatchesClosedFormAdam) {
  const Generator g(GeneratorConfig::miniature());
  const auto g_params = g.init_params(4);
  const ToyDiscriminator d;
  const double w0 = 0.01;
  auto d_params = d.init(w0);
  const Batch batch = tiny_batch(3, 5);
  const Tensor fake = g.predict(g_params, batch.inputs);

  // d/dw of mean(relu(1 - w s_r)) + mean(relu(1 + w s_f))
  auto patch_sum = [](const Tensor& t, std::size_t i) {
    const std::size_t per = t.size() / t.dim(0);
    double s = 0.0;
    for (std::size_t k = 0; k < per; ++k) s += t.data()[i * per + k];
    return s;
  };
  double grad = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double sr = patch_sum(batch.targets, i), sf = patch_sum(fake, i);
    if (1.0 - w0 * sr > 0.0) grad -= sr / 3.0;
    if (1.0 + w0 * sf > 0.0) grad += sf / 3.0;
  }
  ASSERT_GT(std::abs(grad), 1e-3);
  AdamState opt{};
  train_step_d(batch, g, g_params, d, d_params, opt);
  // first bias-corrected step: m_hat = g, v_hat = g^2
  const double expected = w0 - opt.options.lr * grad / (std::abs(grad) + opt.options.epsilon);
  EXPECT_NEAR(d_params["w"].item(), expected, 1e-15);
}

TEST(TrainStep, UnitWeightsReduceToMseStepBitExactly) {
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  auto a = g.init_params(6);
  auto b = a;
  const auto d_params = d.init_params(7);
  AdamState opt_a{}, opt_b{};
  TrainConfig cfg;
  cfg.mse_weight = 1.0;
  cfg.adv_weight = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Batch batch = tiny_batch(4, 100 + s);
    const auto r = train_step_g(batch, g, a, d, d_params, opt_a, cfg);
    const double m = train_step_mse(batch, g, b, opt_b);
    EXPECT_EQ(r.loss, m);
    ASSERT_TRUE(same_params(a, b)) << "step " << s;
  }
}

TEST(TrainStep, GeneratorOverfitsFixedBatch) {
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  auto g_params = g.init_params(8);
  auto d_params = d.init_params(9);
  AdamState opt_g{}, opt_d{};
  opt_g.options.lr = opt_d.options.lr = 1e-2;
  const Batch batch = tiny_batch(4, 10);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    train_step_d(batch, g, g_params, d, d_params, opt_d);
    const auto r = train_step_g(batch, g, g_params, d, d_params, opt_g, TrainConfig{});
    if (step == 0) first = r.mse;
    last = r.mse;
  }
  EXPECT_LT(last, 0.5 * first) << first << " -> " << last;
}

TEST(TrainStep, FusedGanStepMatchesSequentialSteps) {
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  auto ga = g.init_params(17), gb = ga;
  auto da = d.init_params(18), db = da;
  AdamState oga{}, oda{}, ogb{}, odb{};
  const TrainConfig cfg;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Batch batch = tiny_batch(4, 200 + s);
    const auto fused = train_step_gan(batch, g, ga, d, da, oga, oda, cfg);
    const double dl = train_step_d(batch, g, gb, d, db, odb);
    const auto gl = train_step_g(batch, g, gb, d, db, ogb, cfg);
    EXPECT_EQ(fused.d_loss, dl);
    EXPECT_EQ(fused.g.loss, gl.loss);
    ASSERT_TRUE(same_params(ga, gb));
    ASSERT_TRUE(same_params(da, db));
  }
}

TEST(TrainStep, NonFiniteLossRaises) {
  const Generator g(GeneratorConfig::miniature());
  auto g_params = g.init_params(11);
  Batch batch = tiny_batch(2, 12);
  batch.targets.data()[0] = std::nan("");
  AdamState opt{};
  EXPECT_THROW(train_step_mse(batch, g, g_params, opt), NumericError);
}

TEST(TrainStep, CombinedLossGradcheckThroughBothNetworks) {
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  auto g_params = g.init_params(13);
  auto d_params = d.init_params(14);
  for (auto* p : {&g_params, &d_params}) {
    for (auto& e : p->entries()) {
      if (e.kind == models::ParamKind::kBias || e.kind == models::ParamKind::kBeta) {
        e.value = testing::random_tensor(e.value.shape(), 15, -0.1, 0.1);
      }
      if (e.kind == models::ParamKind::kRunningVar) e.value.fill(1.3);
    }
  }
  EXPECT_LE(g_params.trainable_count() + d_params.trainable_count(), 5000u);
  const Batch batch = tiny_batch(2, 16);
  auto run = [&](Tape& tape, const models::ParamBinding& gb, const models::ParamBinding& db) {
    const Var pred = g.forward(tape.constant(batch.inputs), gb);
    const Var mse = mse_loss(pred, tape.constant(batch.targets));
    const Var adv = hinge_g_adv_loss(d.forward(pred, db, d_params, Mode::kInfer));
    return weighted_sum(mse, 0.75, adv, 0.25);
  };
  Tape tape;
  const auto gb = models::bind(tape, g_params, true);
  const auto db = models::bind(tape, d_params, true);
  tape.backward(run(tape, gb, db));
  auto grads = models::trainable_grads(tape, g_params, gb);
  const auto dg = models::trainable_grads(tape, d_params, db);
  grads.insert(grads.end(), dg.begin(), dg.end());
  auto ptrs = g_params.trainable();
  const auto dp = d_params.trainable();
  ptrs.insert(ptrs.end(), dp.begin(), dp.end());
  const auto report = check_gradients(ptrs, grads, [&] {
    Tape t;
    return run(t, models::bind(t, g_params, false), models::bind(t, d_params, false)).value().item();
  });
  EXPECT_TRUE(report.passed()) << report.failures << " failures, max rel err " << report.max_rel_error
                                 << " at param " << report.worst_param << "[" << report.worst_index
                                 << "] analytic " << report.worst_analytic << " numeric " << report.worst_numeric
                                 << " floor " << report.floor;
}

// ---- dataset ------------------------------------------------------------------

TEST(ExampleSet, GatherMatchesWindows) {
  const auto sets = miniature_sets(3, 5, 40);
  ASSERT_FALSE(sets.train.empty());
  EXPECT_EQ(sets.train.size(), sets.train.utterance_count() * (40 - 24));
  const std::vector<std::size_t> idx{0, sets.train.size() - 1};
  const Batch b = sets.train.gather(idx);
  EXPECT_EQ(b.inputs.shape(), (Shape{2, 25, 8, 16}));
  EXPECT_EQ(b.targets.shape(), (Shape{2, 5, 80}));
  const auto [u, c] = sets.train.ref(idx[1]);
  const auto& mel = sets.train.mel(u);
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t m = 0; m < 80; ++m) EXPECT_EQ(b.targets.at({1, k, m}), mel.frames.at({c - 2 + k, m}));
  }
  EXPECT_EQ(b.inputs.at({1, 0, 3, 4}), sets.train.clip(u).frames.at({c - 12, 3, 4}));
}

TEST(ExampleSet, RejectsMismatchedLengths) {
  auto corpus = dataio::synth_corpus(1, 3, 30);
  auto mel = dsp::mel_spectrogram(corpus.utterances[1].audio, dsp::DspConfig{});
  ExampleSet s;
  auto clip = corpus.utterances[0].clip;
  clip.frames = Tensor({29, clip.height(), clip.width()});
  EXPECT_THROW(s.add(clip, mel), InvalidArgument);
}

// ---- loop -------------------------------------------------------------------

TrainConfig loop_config(LossMode mode, std::size_t epochs) {
  TrainConfig c;
  c.loss_mode = mode;
  c.max_epochs = epochs;
  c.batch_size = 16;
  c.lr_g = c.lr_d = 2e-3;
  c.patience = 100;
  c.seed = 42;
  return c;
}

TEST(Train, EmptyTrainingSplitRejected) {
  const auto sets = miniature_sets(3, 5, 40);
  EXPECT_THROW(train(ExampleSet{}, sets.dev, Generator(GeneratorConfig::miniature()),
                     Discriminator(DiscriminatorConfig::miniature()), loop_config(LossMode::kMse, 1)),
               InvalidArgument);
}

TEST(Train, DeterministicLog) {
  const auto sets = miniature_sets(4, 6, 40);
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  const auto cfg = loop_config(LossMode::kGan, 2);
  const auto a = train(sets.train, sets.dev, g, d, cfg);
  const auto b = train(sets.train, sets.dev, g, d, cfg);
  ASSERT_EQ(a.log.epochs.size(), 2u);
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  EXPECT_EQ(a.log.to_json(), b.log.to_json());
  EXPECT_TRUE(same_params(a.generator, b.generator));
  EXPECT_EQ(a.log.epochs[0].epoch, 1u);
  EXPECT_EQ(a.log.epochs[1].epoch, 2u);
}

TEST(Train, ZeroAdversarialWeightTracksMseTrajectory) {
  const auto sets = miniature_sets(5, 6, 40);
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  auto gan = loop_config(LossMode::kGan, 2);
  gan.mse_weight = 1.0;
  gan.adv_weight = 0.0;
  std::vector<double> gan_dev, mse_dev;
  const auto a = train(sets.train, sets.dev, g, d, gan, [&](const EpochRecord& r) { gan_dev.push_back(r.dev_mse); });
  const auto b = train(sets.train, sets.dev, g, d, loop_config(LossMode::kMse, 2),
                       [&](const EpochRecord& r) { mse_dev.push_back(r.dev_mse); });
  EXPECT_EQ(gan_dev, mse_dev);
  EXPECT_TRUE(same_params(a.generator, b.generator));
  EXPECT_EQ(a.log.epochs[1].g_mse, b.log.epochs[1].g_mse);
  EXPECT_TRUE(a.log.epochs[0].d_loss.has_value());
  EXPECT_FALSE(b.log.epochs[0].d_loss.has_value());
}

TEST(Train, MseModeLearnsSyntheticMapping) {
  const auto sets = miniature_sets(2024, 20, 60);
  const Generator g(GeneratorConfig::miniature());
  const Discriminator d(DiscriminatorConfig::miniature());
  const auto r = train(sets.train, sets.dev, g, d, loop_config(LossMode::kMse, 20));
  const double first = r.log.epochs.front().dev_mse;
  EXPECT_LT(r.best_dev_mse, 0.9 * first) << "first " << first << " best " << r.best_dev_mse;
  EXPECT_EQ(r.log.epochs[r.best_epoch - 1].dev_mse, r.best_dev_mse);
}

TEST(Train, EarlyStoppingHonoursPatience) {
  const auto sets = miniature_sets(6, 6, 40);
  auto cfg = loop_config(LossMode::kMse, 30);
  cfg.lr_g = 0.5;  // large enough that dev MSE stops improving quickly
  cfg.patience = 2;
  const auto r = train(sets.train, sets.dev, Generator(GeneratorConfig::miniature()),
                       Discriminator(DiscriminatorConfig::miniature()), cfg);
  ASSERT_LT(r.log.epochs.size(), 30u);
  EXPECT_EQ(r.log.epochs.size(), r.best_epoch + 2);
}

TEST(TrainLog, CsvLayout) {
  TrainLog log;
  log.mode = LossMode::kMse;
  log.epochs.push_back({1, std::nullopt, std::nullopt, 0.5, 0.25, 0.1, 0.0});
  EXPECT_EQ(log.to_csv(), "epoch,d_loss,g_adv,g_mse,dev_mse,dev_r2,seconds\n1,,,0.5,0.25,0.1,0\n");
}

}  // namespace
}  // namespace ssi::training
