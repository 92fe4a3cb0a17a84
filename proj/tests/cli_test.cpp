#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ssi/cli/commands.hpp"
#include "ssi/cli/config.hpp"
#include "ssi/core/rng.hpp"
#include "ssi/dataio/formats.hpp"
#include "ssi/metrics/report.hpp"
#include "ssi/training/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ssi::cli::run_cli;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("ssi_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

json read_json(const fs::path& p) { return json::parse(read(p)); }

// Synthetic corpus plus a miniature-preset config in dir/corpus.
fs::path make_corpus(const fs::path& dir, std::uint64_t seed = 5, std::size_t epochs = 1) {
  const fs::path corpus = dir / "corpus";
  EXPECT_EQ(run_cli({"synthdata", "--seed", std::to_string(seed), "--utts", "6", "--out", corpus.string(), "--frames",
                     "48"}),
            0);
  json c = read_json(corpus / "config.json");
  c["model"]["preset"] = "miniature";
  c["train"]["max_epochs"] = epochs;
  c["train"]["batch_size"] = 16;
  c["train"]["lr_g"] = 2e-3;
  write(corpus / "config.json", c.dump(2));
  return corpus / "config.json";
}

std::string cfg_arg(const fs::path& p) { return p.string(); }

TEST(Cli, SynthdataWritesCorpusAndHash) {
  TempDir a, b;
  ASSERT_EQ(run_cli({"synthdata", "--seed", "11", "--utts", "4", "--out", (a.path() / "c").string()}), 0);
  ASSERT_EQ(run_cli({"synthdata", "--seed", "11", "--utts", "4", "--out", (b.path() / "c").string()}), 0);
  const auto info = read_json(a.path() / "c" / "synthdata.json");
  EXPECT_EQ(info["utterances"], 4);
  EXPECT_EQ(info["frames"], 120);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(ssi::fnv1a64(read(a.path() / "c" / "manifest.json"))));
  EXPECT_EQ(info["manifest_fnv1a64"], hex);
  EXPECT_EQ(read(a.path() / "c" / "manifest.json"), read(b.path() / "c" / "manifest.json"));
  EXPECT_TRUE(fs::exists(a.path() / "c" / "synthdata.log"));
  const auto m = ssi::dataio::load_manifest(a.path() / "c" / "manifest.json");
  EXPECT_EQ(m.entries.size(), 4u);
}

TEST(Cli, SynthdataRejectsEmptyCorpus) {
  TempDir d;
  EXPECT_EQ(run_cli({"synthdata", "--seed", "1", "--utts", "0", "--out", (d.path() / "c").string()}), 2);
  EXPECT_FALSE(fs::exists(d.path() / "c" / "manifest.json"));
}

TEST(Cli, UsageErrorsExitWithConfigCode) {
  EXPECT_EQ(run_cli({}), 2);
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"train"}), 2);
  EXPECT_EQ(run_cli({"features", "--config", "/nonexistent/config.json"}), 2);
  EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST(Cli, UnknownKeysAreRejectedAtEveryLevel) {
  const std::string base = R"({"schema_version": 1, "corpus": {"manifest": "m.json"}, "output_dir": "out"})";
  EXPECT_NO_THROW(ssi::cli::parse_run_config(base, "/tmp"));
  for (const char* path : {"/bogus", "/corpus/bogus", "/dsp/bogus", "/model/bogus", "/train/bogus", "/metrics/bogus"}) {
    json j = json::parse(base);
    j[json::json_pointer(path)] = 1;
    EXPECT_THROW(ssi::cli::parse_run_config(j.dump(), "/tmp"), ssi::cli::ConfigError) << path;
  }
}

TEST(Cli, ConfigValuesAreValidated) {
  auto parse = [](const std::string& patch) {
    json j = json::parse(R"({"schema_version": 1, "corpus": {"manifest": "m.json"}, "output_dir": "out"})");
    j.merge_patch(json::parse(patch));
    return ssi::cli::parse_run_config(j.dump(), "/base");
  };
  using ssi::cli::ConfigError;
  EXPECT_THROW(parse(R"({"schema_version": 2})"), ConfigError);
  EXPECT_THROW(parse(R"({"seed": -1})"), ConfigError);
  EXPECT_THROW(parse(R"({"seed": "7"})"), ConfigError);
  EXPECT_THROW(parse(R"({"train": {"mse_weight": 0.5, "adv_weight": 0.25}})"), ConfigError);
  EXPECT_THROW(parse(R"({"train": {"loss_mode": "wgan"}})"), ConfigError);
  EXPECT_THROW(parse(R"({"train": {"batch_size": 0}})"), ConfigError);
  EXPECT_THROW(parse(R"({"model": {"preset": "huge"}})"), ConfigError);
  EXPECT_THROW(parse(R"({"dsp": {"hop": 0}})"), ConfigError);
  EXPECT_THROW(parse(R"({"output_dir": ""})"), ConfigError);
  EXPECT_THROW(ssi::cli::parse_run_config("{not json", "/base"), ConfigError);
  EXPECT_THROW(ssi::cli::parse_run_config(R"({"corpus": {"manifest": "m"}, "output_dir": "o"})", "/base"), ConfigError);

  const auto c = parse(R"({"seed": 9, "train": {"loss_mode": "mse", "mse_weight": 1.0, "adv_weight": 0.0}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.train.loss_mode, ssi::training::LossMode::kMse);
  EXPECT_EQ(c.manifest_path(), fs::path("/base/m.json"));
  EXPECT_EQ(c.output_path(), fs::path("/base/out"));
  EXPECT_EQ(c.dsp.hop, 269u);
}

TEST(Cli, MaterializedConfigRoundTrips) {
  const auto c = ssi::cli::parse_run_config(
      R"({"schema_version": 1, "corpus": {"manifest": "m.json", "id": "x"}, "output_dir": "o", "seed": 3,
          "train": {"adversarial_form": "raw", "patience": 2}})",
      "/b");
  const std::string text = c.to_json();
  const auto again = ssi::cli::parse_run_config(text, "/b");
  EXPECT_EQ(again.to_json(), text);
  const auto j = json::parse(text);
  EXPECT_EQ(j["train"]["adversarial_form"], "raw");
  EXPECT_EQ(j["train"]["patience"], 2);
  EXPECT_EQ(j["dsp"]["n_mels"], 80);
}

TEST(Cli, PathsResolveAgainstTheConfigDirectory) {
  TempDir d;
  const fs::path cfg = make_corpus(d.path());
  // Run from an unrelated working directory.
  const fs::path cwd = fs::current_path();
  fs::current_path(fs::temp_directory_path());
  const int code = run_cli({"features", "--config", cfg_arg(cfg)});
  fs::current_path(cwd);
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(fs::exists(d.path() / "corpus" / "run" / "features" / "norm_stats.json"));
}

TEST(Cli, FullPipelineWritesArtifacts) {
  TempDir d;
  const fs::path cfg = make_corpus(d.path());
  const fs::path run = d.path() / "corpus" / "run";
  ASSERT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 0);
  const auto stats = read_json(run / "features" / "norm_stats.json");
  EXPECT_EQ(stats["mean"].size(), 80u);
  ASSERT_EQ(run_cli({"train", "--config", cfg_arg(cfg), "--loss", "gan"}), 0);
  for (const char* f : {"generator.ckpt", "discriminator.ckpt", "train_log.csv", "train_log.json", "config.resolved.json"}) {
    EXPECT_TRUE(fs::exists(run / "gan" / f)) << f;
  }
  EXPECT_EQ(read(run / "gan" / "train_log.csv").substr(0, 45), "epoch,d_loss,g_adv,g_mse,dev_mse,dev_r2,secon");
  EXPECT_EQ(read_json(run / "gan" / "config.resolved.json")["train"]["loss_mode"], "gan");
  EXPECT_TRUE(fs::exists(run / "logs" / "train_gan.log"));

  const std::string ckpt = (run / "gan" / "generator.ckpt").string();
  ASSERT_EQ(run_cli({"eval", "--config", cfg_arg(cfg), "--ckpt", ckpt, "--split", "test"}), 0);
  const auto report = ssi::metrics::parse_report_json(read(run / "eval" / "gan_test.json"));
  EXPECT_EQ(report.method, "gan");
  EXPECT_EQ(report.utterances.size(), 1u);
  EXPECT_TRUE(fs::exists(run / "eval" / "gan_test.csv"));

  const auto m = ssi::dataio::load_manifest(d.path() / "corpus" / "manifest.json");
  const fs::path wav = d.path() / "out.wav";
  ASSERT_EQ(run_cli({"synth", "--config", cfg_arg(cfg), "--ckpt", ckpt, "--utt", m.entries[0].id, "--out",
                     wav.string()}),
            0);
  const auto w = ssi::dataio::load_wav(wav);
  EXPECT_EQ(w.sample_rate, 22050.0);
  EXPECT_EQ(w.size(), 48u * 269u);
  EXPECT_EQ(run_cli({"synth", "--config", cfg_arg(cfg), "--ckpt", ckpt, "--utt", "nope"}), 3);
}

TEST(Cli, LossFlagOverridesConfig) {
  TempDir d;
  const fs::path cfg = make_corpus(d.path());
  ASSERT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 0);
  ASSERT_EQ(run_cli({"train", "--config", cfg_arg(cfg), "--loss", "mse"}), 0);
  const fs::path dir = d.path() / "corpus" / "run" / "mse";
  EXPECT_TRUE(fs::exists(dir / "generator.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "discriminator.ckpt"));
  EXPECT_EQ(read_json(dir / "config.resolved.json")["train"]["loss_mode"], "mse");
  const std::string log = read(dir / "train_log.csv");
  EXPECT_EQ(log.substr(log.find('\n') + 1, 5), "1,,,0");
  EXPECT_EQ(run_cli({"train", "--config", cfg_arg(cfg), "--loss", "wgan"}), 2);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  TempDir a, b;
  std::vector<std::string> outputs;
  for (const auto* dir : {&a, &b}) {
    const fs::path cfg = make_corpus(dir->path(), 21, 2);
    ASSERT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 0);
    ASSERT_EQ(run_cli({"train", "--config", cfg_arg(cfg), "--loss", "gan"}), 0);
    const fs::path run = dir->path() / "corpus" / "run";
    ASSERT_EQ(run_cli({"eval", "--config", cfg_arg(cfg), "--ckpt", (run / "gan" / "generator.ckpt").string(),
                       "--split", "dev"}),
              0);
    outputs.push_back(read(run / "gan" / "generator.ckpt") + read(run / "gan" / "train_log.csv") +
                      read(run / "eval" / "gan_dev.json") + read(run / "eval" / "gan_dev.csv"));
  }
  EXPECT_EQ(outputs[0], outputs[1]);
}

TEST(Cli, DataErrorsExitWithDataCode) {
  TempDir d;
  const fs::path cfg = make_corpus(d.path());
  const fs::path run = d.path() / "corpus" / "run";
  // No features yet.
  EXPECT_EQ(run_cli({"train", "--config", cfg_arg(cfg)}), 3);
  ASSERT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 0);
  EXPECT_EQ(run_cli({"eval", "--config", cfg_arg(cfg), "--ckpt", (run / "none.ckpt").string()}), 3);

  // A miniature checkpoint does not load into the canonical generator.
  ASSERT_EQ(run_cli({"train", "--config", cfg_arg(cfg), "--loss", "mse"}), 0);
  json c = read_json(cfg);
  c["model"]["preset"] = "canonical";
  const fs::path canonical = d.path() / "corpus" / "canonical.json";
  write(canonical, c.dump());
  EXPECT_EQ(run_cli({"eval", "--config", canonical.string(), "--ckpt", (run / "mse" / "generator.ckpt").string()}), 3);

  // Clip and audio disagree on the frame count.
  const auto m = ssi::dataio::load_manifest(d.path() / "corpus" / "manifest.json");
  auto wav = ssi::dataio::load_wav(m.resolve(m.entries[0].audio));
  wav.samples.resize(wav.samples.size() - 3 * 269);
  ssi::dataio::save_wav(wav, m.resolve(m.entries[0].audio));
  EXPECT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 3);

  // Corrupt manifest.
  write(d.path() / "corpus" / "manifest.json", "{\"utterances\": 5}");
  EXPECT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 3);
}

TEST(Cli, DivergentTrainingExitsWithNumericCode) {
  TempDir d;
  const fs::path cfg = make_corpus(d.path());
  ASSERT_EQ(run_cli({"features", "--config", cfg_arg(cfg)}), 0);
  json c = read_json(cfg);
  c["train"]["lr_g"] = 1e300;
  write(cfg, c.dump());
  EXPECT_EQ(run_cli({"train", "--config", cfg_arg(cfg), "--loss", "mse"}), 4);
}

TEST(Cli, GradcheckPassesAndCatchesInjectedFault) {
  TempDir d;
  const fs::path cfg = make_corpus(d.path());
  const fs::path out = d.path() / "corpus" / "run" / "gradcheck.json";
  ASSERT_EQ(run_cli({"gradcheck", "--config", cfg_arg(cfg)}), 0);
  auto r = read_json(out);
  EXPECT_TRUE(r["passed"].get<bool>());
  EXPECT_GT(r["checked"].get<int>(), 1000);
  EXPECT_LE(r["max_rel_error"].get<double>(), 1e-4);
  EXPECT_EQ(run_cli({"gradcheck", "--config", cfg_arg(cfg), "--inject-fault"}), 5);
  r = read_json(out);
  EXPECT_FALSE(r["passed"].get<bool>());
  EXPECT_GT(r["failures"].get<int>(), 0);
}

}  // namespace
