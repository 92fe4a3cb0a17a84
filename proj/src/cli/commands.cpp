#include "ssi/cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "ssi/cli/config.hpp"
#include "ssi/core/error.hpp"
#include "ssi/core/format.hpp"
#include "ssi/core/rng.hpp"
#include "ssi/dataio/formats.hpp"
#include "ssi/dataio/preprocess.hpp"
#include "ssi/dataio/synth.hpp"
#include "ssi/dsp/mel.hpp"
#include "ssi/metrics/evaluate.hpp"
#include "ssi/training/gan_gradcheck.hpp"

namespace ssi::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Default logger for one command: stderr plus an optional file. Verbosity
// comes from SSI_LOG_LEVEL (trace, debug, info, warn, error, off).
class LogSession {
 public:
  LogSession() : previous_(spdlog::default_logger()) { install({}); }
  ~LogSession() {
    spdlog::default_logger()->flush();
    spdlog::set_default_logger(previous_);
  }
  LogSession(const LogSession&) = delete;
  LogSession& operator=(const LogSession&) = delete;

  void add_file(const fs::path& file) {
    fs::create_directories(file.parent_path());
    install(file);
  }

 private:
  static void install(const fs::path& file) {
    std::vector<spdlog::sink_ptr> sinks{std::make_shared<spdlog::sinks::stderr_sink_mt>()};
    if (!file.empty()) sinks.push_back(std::make_shared<spdlog::sinks::basic_file_sink_mt>(file.string(), true));
    auto logger = std::make_shared<spdlog::logger>("ssi", sinks.begin(), sinks.end());
    logger->set_level(spdlog::level::info);
    if (const char* env = std::getenv("SSI_LOG_LEVEL")) logger->set_level(spdlog::level::from_str(env));
    logger->flush_on(spdlog::level::info);
    spdlog::set_default_logger(logger);
  }

  std::shared_ptr<spdlog::logger> previous_;
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << v;
  return ss.str();
}

fs::path features_dir(const RunConfig& cfg) { return cfg.output_path() / "features"; }

dataio::Manifest open_manifest(const RunConfig& cfg) {
  cfg.validate(true);
  return dataio::load_manifest(cfg.manifest_path());
}

void save_norm_stats(const dataio::MelNormStats& stats, const fs::path& path) {
  Json j;
  j["mean"] = stats.mean;
  j["std"] = stats.std;
  write_text(path, j.dump(2) + "\n");
}

dataio::MelNormStats load_norm_stats(const RunConfig& cfg) {
  const fs::path path = features_dir(cfg) / "norm_stats.json";
  if (!fs::exists(path)) throw DataError("missing " + path.string() + "; run `ssi features` first");
  try {
    const auto j = Json::parse(read_text(path));
    dataio::MelNormStats s{j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
    if (s.mean.size() != cfg.dsp.n_mels || s.std.size() != cfg.dsp.n_mels) {
      throw DataError(path.string() + " does not match n_mels " + std::to_string(cfg.dsp.n_mels));
    }
    return s;
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

dataio::UltrasoundClip prepare_clip(const dataio::UltrasoundClip& raw, const models::GeneratorConfig& g) {
  return dataio::minmax_scale(dataio::resize_clip(raw, g.height, g.width));
}

struct LoadedUtterance {
  std::string id;
  dataio::UltrasoundClip clip;  // preprocessed
  dsp::MelSpectrogram mel;      // standardized
};

LoadedUtterance load_utterance(const RunConfig& cfg, const dataio::Manifest& manifest, const std::string& id,
                               const dataio::MelNormStats& stats) {
  const auto& e = manifest.entry(id);
  const fs::path mel_path = features_dir(cfg) / (id + ".mel");
  if (!fs::exists(mel_path)) throw DataError("missing " + mel_path.string() + "; run `ssi features` first");
  auto clip = dataio::load_uti(manifest.resolve(e.clip));
  auto mel = dataio::load_mel(mel_path);
  if (clip.frame_count() != mel.frame_count()) {
    throw DataError("utterance '" + id + "': clip has " + std::to_string(clip.frame_count()) +
                    " frames, mel has " + std::to_string(mel.frame_count()));
  }
  return {id, prepare_clip(clip, cfg.generator_config()), dataio::standardize_mel(mel, stats)};
}

training::ExampleSet load_examples(const RunConfig& cfg, const dataio::Manifest& manifest, dataio::Split split,
                                   const dataio::MelNormStats& stats) {
  training::ExampleSet set;
  const auto splits = manifest.split();
  for (const auto& id : splits.ids(split)) {
    auto u = load_utterance(cfg, manifest, id, stats);
    set.add(std::move(u.clip), std::move(u.mel));
  }
  return set;
}

// ---- commands ------------------------------------------------------------------

struct Options {
  std::string config;
  std::string loss;
  std::string ckpt;
  std::string utt;
  std::string split = "test";
  std::string out;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t utts = 10;
  std::size_t frames = 120;
  bool inject_fault = false;
};

int cmd_synthdata(const Options& o, LogSession& log) {
  if (o.utts < 3) throw ConfigError("--utts must be at least 3 (one utterance per split), got " + std::to_string(o.utts));
  if (o.frames < 25) throw ConfigError("--frames must be at least 25, got " + std::to_string(o.frames));
  const fs::path dir = o.out;
  log.add_file(dir / "synthdata.log");
  spdlog::info("synthesizing {} utterances of {} frames (seed {})", o.utts, o.frames, o.seed);
  const auto corpus = dataio::synth_corpus(o.seed, o.utts, o.frames);
  dataio::write_corpus(corpus, dir);
  const std::string hash = hex64(fnv1a64(read_text(dir / "manifest.json")));
  Json info;
  info["seed"] = o.seed;
  info["utterances"] = o.utts;
  info["frames"] = o.frames;
  info["split"] = {{"train", corpus.split.train.size()},
                   {"dev", corpus.split.dev.size()},
                   {"test", corpus.split.test.size()}};
  info["manifest_fnv1a64"] = hash;
  write_text(dir / "synthdata.json", info.dump(2) + "\n");
  RunConfig cfg;
  cfg.manifest = "manifest.json";
  cfg.output_dir = "run";
  cfg.seed = o.seed;
  cfg.train.seed = o.seed;
  write_text(dir / "config.json", cfg.to_json());
  spdlog::info("manifest hash {}", hash);
  std::cout << (dir / "manifest.json").string() << " " << hash << "\n";
  return kExitOk;
}

int cmd_features(const RunConfig& cfg, LogSession& log) {
  const auto manifest = open_manifest(cfg);
  log.add_file(cfg.output_path() / "logs" / "features.log");
  const fs::path dir = features_dir(cfg);
  fs::create_directories(dir);
  std::vector<dsp::MelSpectrogram> train_mels;
  std::size_t total_frames = 0;
  for (const auto& e : manifest.entries) {
    const auto wav = dataio::load_wav(manifest.resolve(e.audio));
    if (wav.sample_rate != cfg.dsp.sample_rate) {
      throw DataError("utterance '" + e.id + "' is sampled at " + format_number(wav.sample_rate) + " Hz, expected " +
                      format_number(cfg.dsp.sample_rate));
    }
    const auto clip = dataio::load_uti(manifest.resolve(e.clip));
    auto mel = dsp::mel_spectrogram(wav, cfg.dsp);
    if (mel.frame_count() != clip.frame_count()) {
      throw DataError("utterance '" + e.id + "': audio gives " + std::to_string(mel.frame_count()) +
                      " mel frames but the clip has " + std::to_string(clip.frame_count()));
    }
    dataio::save_mel(mel, dir / (e.id + ".mel"));
    total_frames += mel.frame_count();
    if (e.split == dataio::Split::kTrain) train_mels.push_back(std::move(mel));
  }
  if (train_mels.empty()) throw DataError("the manifest has no train utterances");
  save_norm_stats(dataio::compute_norm_stats(train_mels), dir / "norm_stats.json");
  spdlog::info("wrote {} spectrograms ({} frames) to {}", manifest.entries.size(), total_frames, dir.string());
  std::cout << dir.string() << "\n";
  return kExitOk;
}

int cmd_train(RunConfig cfg, const Options& o, LogSession& log) {
  if (!o.loss.empty()) {
    try {
      cfg.train.loss_mode = training::parse_loss_mode(o.loss);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--loss: ") + e.what());
    }
  }
  const auto manifest = open_manifest(cfg);
  const std::string mode = training::to_string(cfg.train.loss_mode);
  const fs::path dir = cfg.output_path() / mode;
  log.add_file(cfg.output_path() / "logs" / ("train_" + mode + ".log"));
  const auto stats = load_norm_stats(cfg);
  const auto train_set = load_examples(cfg, manifest, dataio::Split::kTrain, stats);
  const auto dev_set = load_examples(cfg, manifest, dataio::Split::kDev, stats);
  spdlog::info("training {} on {} examples, {} dev examples", mode, train_set.size(), dev_set.size());
  const models::Generator gen(cfg.generator_config());
  const models::Discriminator disc(cfg.discriminator_config());
  const auto result = training::train(train_set, dev_set, gen, disc, cfg.train);
  models::save_params(result.generator, dir / "generator.ckpt");
  if (cfg.train.loss_mode == training::LossMode::kGan) models::save_params(result.discriminator, dir / "discriminator.ckpt");
  write_text(dir / "train_log.csv", result.log.to_csv());
  write_text(dir / "train_log.json", result.log.to_json());
  write_text(dir / "config.resolved.json", cfg.to_json());
  spdlog::info("best epoch {} with dev mse {}", result.best_epoch, format_number(result.best_dev_mse));
  std::cout << (dir / "generator.ckpt").string() << "\n";
  return kExitOk;
}

models::ModelParams load_generator(const models::Generator& gen, const fs::path& ckpt) {
  if (!fs::exists(ckpt)) throw DataError("checkpoint not found: " + ckpt.string());
  return models::load_params(ckpt, gen.init_params(0));
}

std::string method_label(const Options& o) {
  if (!o.method.empty()) return o.method;
  const std::string parent = fs::path(o.ckpt).parent_path().filename().string();
  return parent.empty() ? "model" : parent;
}

int cmd_eval(const RunConfig& cfg, const Options& o, LogSession& log) {
  dataio::Split split;
  try {
    split = dataio::parse_split(o.split);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("--split: ") + e.what());
  }
  const auto manifest = open_manifest(cfg);
  const std::string method = method_label(o);
  log.add_file(cfg.output_path() / "logs" / ("eval_" + method + "_" + o.split + ".log"));
  const models::Generator gen(cfg.generator_config());
  const auto params = load_generator(gen, o.ckpt);
  const auto stats = load_norm_stats(cfg);
  std::vector<metrics::EvalUtterance> utts;
  const auto splits = manifest.split();
  for (const auto& id : splits.ids(split)) {
    auto u = load_utterance(cfg, manifest, id, stats);
    utts.push_back({std::move(u.clip), std::move(u.mel), dataio::load_wav(manifest.resolve(manifest.entry(id).audio))});
  }
  if (utts.empty()) throw DataError("split '" + o.split + "' is empty");
  spdlog::info("evaluating {} on {} {} utterances", method, utts.size(), o.split);
  const auto report = metrics::evaluate_corpus(gen, params, utts, {cfg.dsp, cfg.eval_batch_size}, cfg.corpus_id, method);
  const fs::path base = cfg.output_path() / "eval" / (method + "_" + o.split);
  write_text(fs::path(base).concat(".json"), report.to_json());
  write_text(fs::path(base).concat(".csv"), report.to_csv());
  spdlog::info("STOI {} ESTOI {} MCD {}", format_number(report.mean.stoi), format_number(report.mean.estoi),
               format_number(report.mean.mcd));
  std::cout << fs::path(base).concat(".json").string() << "\n";
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, const Options& o, LogSession& log) {
  const auto manifest = open_manifest(cfg);
  log.add_file(cfg.output_path() / "logs" / "synth.log");
  const models::Generator gen(cfg.generator_config());
  const auto params = load_generator(gen, o.ckpt);
  const auto stats = load_norm_stats(cfg);
  manifest.entry(o.utt);
  const auto u = load_utterance(cfg, manifest, o.utt, stats);
  const auto pred = metrics::predict_mel(gen, params, u.clip, u.mel, cfg.eval_batch_size);
  const auto wav = metrics::vocode(dataio::destandardize_mel(pred), cfg.dsp, u.mel.frame_count() * cfg.dsp.hop);
  const fs::path out = o.out.empty() ? cfg.output_path() / "synth" / (method_label(o) + "_" + o.utt + ".wav") : fs::path(o.out);
  fs::create_directories(out.parent_path());
  dataio::save_wav(wav, out);
  spdlog::info("wrote {:.3f} s of audio to {}", wav.duration(), out.string());
  std::cout << out.string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& cfg, const Options& o, LogSession& log) {
  log.add_file(cfg.output_path() / "logs" / "gradcheck.log");
  const auto fault = o.inject_fault ? FaultInjection::kSwishBackward : FaultInjection::kNone;
  const auto r = training::gan_gradcheck(cfg.seed, fault, cfg.train.mse_weight, cfg.train.adv_weight);
  auto part = [](const GradCheckReport& rep) {
    return Json{{"checked", rep.checked},
                {"failures", rep.failures},
                {"max_rel_error", rep.max_rel_error},
                {"worst_param", rep.worst_param},
                {"worst_index", rep.worst_index}};
  };
  Json j;
  j["passed"] = r.passed();
  j["checked"] = r.checked();
  j["failures"] = r.failures();
  j["max_rel_error"] = r.max_rel_error();
  j["seconds"] = r.seconds;
  j["d_hinge"] = part(r.d_hinge);
  j["g_combined"] = part(r.g_combined);
  write_text(cfg.output_path() / "gradcheck.json", j.dump(2) + "\n");
  spdlog::info("gradcheck: {} parameters, {} failures, max relative error {:.3e}, {:.1f} s", r.checked(), r.failures(),
               r.max_rel_error(), r.seconds);
  std::cout << (r.passed() ? "PASS" : "FAIL") << " " << r.checked() << " checked, " << r.failures() << " failed\n";
  return r.passed() ? kExitOk : kExitGradcheck;
}

}  // namespace

int run_cli(int argc, char** argv) {
  LogSession log;
  CLI::App app{"Ultrasound-to-speech mapping with adversarial training"};
  app.require_subcommand(1);
  Options o;

  auto* synthdata = app.add_subcommand("synthdata", "Write a synthetic paired corpus");
  synthdata->add_option("--seed", o.seed, "Corpus seed")->required();
  synthdata->add_option("--utts", o.utts, "Number of utterances")->required();
  synthdata->add_option("--out", o.out, "Output directory")->required();
  synthdata->add_option("--frames", o.frames, "Frames per utterance")->capture_default_str();

  auto* features = app.add_subcommand("features", "Compute log-mel targets and normalization statistics");
  features->add_option("--config", o.config)->required();

  auto* train = app.add_subcommand("train", "Train a generator");
  train->add_option("--config", o.config)->required();
  train->add_option("--loss", o.loss, "mse or gan; overrides train.loss_mode");

  auto* synth = app.add_subcommand("synth", "Synthesize one utterance to WAV");
  synth->add_option("--config", o.config)->required();
  synth->add_option("--ckpt", o.ckpt, "Generator checkpoint")->required();
  synth->add_option("--utt", o.utt, "Utterance id")->required();
  synth->add_option("--out", o.out, "Output WAV path");

  auto* eval = app.add_subcommand("eval", "Evaluate a generator on a split");
  eval->add_option("--config", o.config)->required();
  eval->add_option("--ckpt", o.ckpt, "Generator checkpoint")->required();
  eval->add_option("--split", o.split, "dev or test")->capture_default_str();
  eval->add_option("--method", o.method, "Method label in the report (default: checkpoint directory name)");
  synth->add_option("--method", o.method, "Label used in the default output name");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of both adversarial losses");
  gradcheck->add_option("--config", o.config)->required();
  gradcheck->add_flag("--inject-fault", o.inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synthdata->parsed()) return cmd_synthdata(o, log);
    const RunConfig cfg = load_run_config(o.config);
    if (features->parsed()) return cmd_features(cfg, log);
    if (train->parsed()) return cmd_train(cfg, o, log);
    if (synth->parsed()) return cmd_synth(cfg, o, log);
    if (eval->parsed()) return cmd_eval(cfg, o, log);
    if (gradcheck->parsed()) return cmd_gradcheck(cfg, o, log);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    spdlog::error("numeric error: {}", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  }
  return kExitConfig;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage{"ssi"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace ssi::cli
