#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "ssi/core/autograd.hpp"
#include "ssi/core/error.hpp"
#include "ssi/core/gradcheck.hpp"
#include "ssi/models/discriminator.hpp"
#include "ssi/models/generator.hpp"

namespace ssi::models {
namespace {
namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() /
         (std::string("ssi_models_") + ::testing::UnitTest::GetInstance()->current_test_info()->name() + "_" + name);
}

Tensor slice_batch(const Tensor& t, std::size_t b) {
  const std::size_t per = t.size() / t.dim(0);
  Shape s(t.shape().begin() + 1, t.shape().end());
  return Tensor(s, std::vector<double>(t.data() + b * per, t.data() + (b + 1) * per));
}

// Receptive field of each discriminator output row over the mel axis,
// propagated backwards through the stride/padding chain.
std::vector<std::pair<long, long>> mel_receptive_fields(std::size_t n_mels) {
  struct Layer {
    std::size_t k, s;
    long pad;
  };
  std::vector<Layer> layers;
  std::size_t e = n_mels;
  for (int l = 0; l < 3; ++l) {
    layers.push_back({4, 2, static_cast<long>(testing::oracle_pad_before(e, 4, 2, Padding::kSame))});
    e = testing::oracle_out(e, 4, 2, Padding::kSame);
  }
  layers.push_back({2, 1, 1});
  e = e + 2 - 2 + 1;
  layers.push_back({4, 1, 1});
  e = e + 2 - 4 + 1;
  std::vector<std::pair<long, long>> fields;
  for (std::size_t o = 0; o < e; ++o) {
    long lo = static_cast<long>(o), hi = static_cast<long>(o);
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
      lo = lo * static_cast<long>(it->s) - it->pad;
      hi = hi * static_cast<long>(it->s) - it->pad + static_cast<long>(it->k) - 1;
    }
    fields.emplace_back(lo, hi);
  }
  return fields;
}

TEST(GeneratorTest, CanonicalShapesAndSize) {
  GeneratorConfig cfg;
  EXPECT_EQ(cfg.conv_output(), (std::array<std::size_t, 4>{5, 8, 16, 64}));
  EXPECT_EQ(cfg.pooled_output(), (std::array<std::size_t, 4>{5, 4, 8, 64}));
  Generator g(cfg);
  auto params = g.init_params(1);
  const std::size_t expected = (125 * 16 + 16) + (27 * 16 * 32 + 32) + (27 * 32 * 64 + 64) + (2048 * 500 + 500) +
                               (500 * 80 + 80);
  EXPECT_EQ(params.trainable_count(), expected);
  EXPECT_LT(params.trainable_count(), 10'000'000u);

  Tensor x = testing::random_tensor({2, 25, 64, 128}, 3);
  Tensor y = g.predict(params, x);
  EXPECT_EQ(y.shape(), (Shape{2, 5, 80}));
  EXPECT_TRUE(y.all_finite());
  EXPECT_EQ(g.predict(params, slice_batch(x, 1)).shape(), (Shape{5, 80}));
  EXPECT_THROW(g.predict(params, Tensor({1, 24, 64, 128})), InvalidArgument);
  EXPECT_THROW(g.predict(params, Tensor({1, 25, 64, 127})), InvalidArgument);
}

TEST(GeneratorTest, ZeroInputGivesFinalBiasInEveryRow) {
  Generator g(GeneratorConfig::canonical());
  auto params = g.init_params(5);
  Tensor b = testing::random_tensor({80}, 6);
  params["dense2/bias"] = b;
  Tensor y = g.predict(params, Tensor({25, 64, 128}, 0.0));
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 80; ++c) EXPECT_EQ(y.at({r, c}), b[c]);
  }
}

TEST(GeneratorTest, SeedsDifferAndInferenceIsDeterministic) {
  Generator g(GeneratorConfig::canonical());
  auto p1 = g.init_params(1), p1b = g.init_params(1), p2 = g.init_params(2);
  EXPECT_TRUE(p1 == p1b);
  Tensor x = testing::random_tensor({25, 64, 128}, 9);
  Tensor a = g.predict(p1, x);
  EXPECT_EQ(a, g.predict(p1, x));
  EXPECT_GT(max_abs_diff(a, g.predict(p2, x)), 1e-6);
}

TEST(GeneratorTest, BatchPermutationPermutesOutputs) {
  Generator g(GeneratorConfig::miniature());
  auto p = g.init_params(4);
  Tensor x = testing::random_tensor({3, 25, 8, 16}, 10);
  Tensor y = g.predict(p, x);
  const std::size_t per = 25 * 8 * 16;
  Tensor xp(x.shape());
  const std::size_t perm[] = {2, 0, 1};
  for (std::size_t b = 0; b < 3; ++b) {
    std::copy_n(x.data() + perm[b] * per, per, xp.data() + b * per);
  }
  Tensor yp = g.predict(p, xp);
  // GEMM blocking depends on row position, so allow round-off.
  for (std::size_t b = 0; b < 3; ++b) EXPECT_LT(max_abs_diff(slice_batch(yp, b), slice_batch(y, perm[b])), 1e-12);

  Tensor xq = x;
  for (std::size_t i = 0; i < per; ++i) xq[per + i] = -xq[per + i];
  Tensor yq = g.predict(p, xq);
  EXPECT_EQ(slice_batch(yq, 0), slice_batch(y, 0));
  EXPECT_EQ(slice_batch(yq, 2), slice_batch(y, 2));
  EXPECT_FALSE(slice_batch(yq, 1) == slice_batch(y, 1));
}

TEST(DiscriminatorTest, CanonicalShapeChainHasTenOutputs) {
  DiscriminatorConfig cfg;
  EXPECT_EQ(cfg.output_extent(), (std::array<std::size_t, 2>{10, 1}));
  EXPECT_EQ(mel_receptive_fields(80).size(), 10u);
  Discriminator d(cfg);
  auto p = d.init_params(1);
  Tensor mel = testing::random_tensor({3, 5, 80}, 2, -3.0, 3.0);
  Tensor s = d.predict(p, mel);
  ASSERT_EQ(s.shape(), (Shape{3, 10}));
  for (double v : s.values()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(s, d.predict(p, mel));
  EXPECT_EQ(d.predict(p, slice_batch(mel, 0)).shape(), (Shape{10}));
  EXPECT_THROW(d.predict(p, Tensor({1, 80, 5})), InvalidArgument);
}

TEST(DiscriminatorTest, TrainModeUpdatesRunningStatistics) {
  Discriminator d(DiscriminatorConfig::miniature());
  auto p = d.init_params(3);
  const Tensor mean0 = p["bn1/running_mean"];
  Tape tape;
  auto b = bind(tape, p, true);
  Var out = d.forward(tape.constant(testing::random_tensor({4, 5, 80}, 5)), b, p, Mode::kTrain, &p);
  EXPECT_EQ(out.shape(), (Shape{4, 10}));
  EXPECT_FALSE(p["bn1/running_mean"] == mean0);
  auto q = d.init_params(3);
  Tape tape2;
  d.forward(tape2.constant(testing::random_tensor({4, 5, 80}, 5)), bind(tape2, q, true), q, Mode::kTrain);
  EXPECT_TRUE(q == d.init_params(3));
}

TEST(DiscriminatorTest, NormalizationOrderIsConfigurable) {
  auto post = DiscriminatorConfig::miniature();
  auto pre = post;
  pre.bn_after_activation = false;
  EXPECT_NE(post.descriptor(), pre.descriptor());
  Discriminator dp(post), dq(pre);
  auto params = dp.init_params(2);
  // Non-trivial running statistics so the two orders disagree.
  for (auto& e : params.entries()) {
    if (e.kind == ParamKind::kRunningMean) e.value.fill(0.3);
    if (e.kind == ParamKind::kRunningVar) e.value.fill(2.0);
  }
  Tensor mel = testing::random_tensor({2, 5, 80}, 8);
  EXPECT_GT(max_abs_diff(dp.predict(params, mel), dq.predict(params, mel)), 1e-6);
}

TEST(DiscriminatorTest, OutputsOnlySeeTheirReceptiveField) {
  Discriminator d(DiscriminatorConfig::canonical());
  auto p = d.init_params(11);
  const auto fields = mel_receptive_fields(80);
  Tensor base = testing::random_tensor({5, 80}, 12);
  const Tensor y0 = d.predict(p, base);
  for (std::size_t bin : {0u, 7u, 40u, 79u}) {
    Tensor moved = base;
    for (std::size_t t = 0; t < 5; ++t) moved.at({t, bin}) += 2.5;
    const Tensor y1 = d.predict(p, moved);
    for (std::size_t o = 0; o < 10; ++o) {
      const bool covered = static_cast<long>(bin) >= fields[o].first && static_cast<long>(bin) <= fields[o].second;
      if (!covered) {
        EXPECT_EQ(y1[o], y0[o]) << "bin " << bin << " output " << o;
      }
    }
  }
  // Changing the last frame may only touch outputs whose field spans column 4;
  // the 5 -> 3 -> 2 -> 1 -> 3 -> 2 -> 4 -> 1 column chain makes that every output.
  Tensor last = base;
  for (std::size_t m = 0; m < 80; ++m) last.at({4, m}) -= 1.0;
  const Tensor y2 = d.predict(p, last);
  std::size_t changed = 0;
  for (std::size_t o = 0; o < 10; ++o) changed += y2[o] != y0[o];
  EXPECT_GT(changed, 0u);
}

TEST(InitTest, HeUniformStatisticsAndZeroBiases) {
  for (const auto& params : {Generator().init_params(7), Discriminator().init_params(7)}) {
    for (const auto& e : params.entries()) {
      if (e.kind == ParamKind::kWeight) {
        const auto& s = e.value.shape();
        const std::size_t fan_in = e.value.size() / s.back();
        double mean = e.value.sum() / static_cast<double>(e.value.size());
        double var = 0.0;
        for (double v : e.value.values()) var += (v - mean) * (v - mean);
        var /= static_cast<double>(e.value.size());
        EXPECT_NEAR(var / (2.0 / static_cast<double>(fan_in)), 1.0, 0.2) << e.name;
      } else if (e.kind == ParamKind::kBias || e.kind == ParamKind::kBeta || e.kind == ParamKind::kRunningMean) {
        for (double v : e.value.values()) EXPECT_EQ(v, 0.0) << e.name;
      } else {
        for (double v : e.value.values()) EXPECT_EQ(v, 1.0) << e.name;
      }
    }
  }
}

TEST(CheckpointTest, RoundTripIsBitIdentical) {
  Discriminator d;
  auto p = d.init_params(3);
  p["bn2/running_var"].fill(1.7);
  const auto path = temp_file("d.ckpt");
  save_params(p, path);
  auto back = load_params(path, d.init_params(0));
  EXPECT_TRUE(back == p);
  std::uint64_t hash = 0;
  auto raw = load_params(path, &hash);
  EXPECT_EQ(hash, p.descriptor_hash());
  EXPECT_EQ(raw.size(), p.size());
  fs::remove(path);
}

TEST(CheckpointTest, TruncatedFileIsFormatError) {
  Generator g(GeneratorConfig::miniature());
  const auto path = temp_file("g.ckpt");
  save_params(g.init_params(1), path);
  fs::resize_file(path, fs::file_size(path) - 3);
  EXPECT_THROW(load_params(path, g.init_params(1)), FormatError);
  fs::resize_file(path, 10);
  EXPECT_THROW(load_params(path), FormatError);
  fs::remove(path);
}

TEST(CheckpointTest, MismatchedArchitectureIsIncompatible) {
  Generator mini(GeneratorConfig::miniature());
  const auto path = temp_file("g.ckpt");
  save_params(mini.init_params(1), path);
  auto wider = GeneratorConfig::miniature();
  wider.hidden = 9;
  EXPECT_THROW(load_params(path, Generator(wider).init_params(1)), CheckpointIncompatible);
  EXPECT_THROW(load_params(path, Discriminator().init_params(1)), CheckpointIncompatible);
  fs::remove(path);
}

// Weighted sum of outputs so every output contributes a distinct gradient.
double weighted_sum_value(const Tensor& out, const Tensor& w) {
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
  return s;
}

TEST(ModelGradCheck, GeneratorEndToEnd) {
  Generator g(GeneratorConfig::miniature());
  auto params = g.init_params(21);
  for (auto& e : params.entries()) {
    if (e.kind == ParamKind::kBias) e.value = testing::random_tensor(e.value.shape(), 22, -0.1, 0.1);
  }
  const Tensor x = testing::random_tensor({2, 25, 8, 16}, 23);
  const Tensor w = testing::random_tensor({2, 5, 80}, 24);
  Tape tape;
  auto b = bind(tape, params, true);
  Var out = g.forward(tape.constant(x), b);
  tape.backward(ag::sum(ag::mul(out, tape.constant(w))));
  const auto grads = trainable_grads(tape, params, b);
  auto ptrs = params.trainable();
  auto report = check_gradients(ptrs, grads, [&] { return weighted_sum_value(g.predict(params, x), w); });
  EXPECT_TRUE(report.passed()) << report.failures << " failures, max rel err " << report.max_rel_error;
  EXPECT_EQ(report.checked, params.trainable_count());
}

TEST(ModelGradCheck, DiscriminatorEndToEndBothModes) {
  Discriminator d(DiscriminatorConfig::miniature());
  for (Mode mode : {Mode::kTrain, Mode::kInfer}) {
    auto params = d.init_params(31);
    for (auto& e : params.entries()) {
      if (e.kind == ParamKind::kRunningVar) e.value.fill(1.5);
      if (e.kind == ParamKind::kBias || e.kind == ParamKind::kBeta) {
        e.value = testing::random_tensor(e.value.shape(), 32, -0.1, 0.1);
      }
    }
    const Tensor mel = testing::random_tensor({4, 5, 80}, 33, -2.0, 2.0);
    const Tensor w = testing::random_tensor({4, 10}, 34);
    auto run = [&](Tape& tape, const ParamBinding& b) {
      return ag::sum(ag::mul(d.forward(tape.constant(mel), b, params, mode), tape.constant(w)));
    };
    Tape tape;
    auto b = bind(tape, params, true);
    tape.backward(run(tape, b));
    const auto grads = trainable_grads(tape, params, b);
    auto ptrs = params.trainable();
    auto report = check_gradients(ptrs, grads, [&] {
      Tape t;
      return run(t, bind(t, params, false)).value().item();
    });
    EXPECT_TRUE(report.passed()) << (mode == Mode::kTrain ? "train" : "infer") << ": " << report.failures
                                 << " failures, max rel err " << report.max_rel_error;
  }
}

}  // namespace
}  // namespace ssi::models
