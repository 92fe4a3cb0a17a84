#include "ssi/cli/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ssi/core/error.hpp"

namespace ssi::cli {

namespace {

using Json = nlohmann::ordered_json;

// Reads known keys from one JSON object and rejects anything left over.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  void get(const char* key, double& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, std::size_t& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const char* key, int& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, bool& out) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const Json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  const Json* section(const char* key) { return take(key); }
  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key " + where(k.c_str()));
    }
  }

 private:
  const Json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }
  std::string where(const char* key = nullptr) const {
    std::string w = path_.empty() ? "config" : path_;
    if (key != nullptr) w += path_.empty() ? std::string(" key '") + key + "'" : std::string(".") + key;
    return w;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_dsp(const Json& j, dsp::DspConfig& d) {
  Section s(j, "dsp");
  s.get("sample_rate", d.sample_rate);
  s.get("win_length", d.win_length);
  s.get("hop", d.hop);
  s.get("fft_size", d.fft_size);
  s.get("n_mels", d.n_mels);
  s.get("fmin", d.fmin);
  s.get("fmax", d.fmax);
  s.get("log_floor", d.log_floor);
  s.get("griffin_lim_iters", d.griffin_lim_iters);
  s.get("mel_inverse_iters", d.mel_inverse_iters);
  s.finish();
}

void read_train(const Json& j, training::TrainConfig& t) {
  Section s(j, "train");
  std::string mode = to_string(t.loss_mode);
  s.get("loss_mode", mode);
  try {
    t.loss_mode = training::parse_loss_mode(mode);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("train.loss_mode: ") + e.what());
  }
  std::string form = t.adversarial_form == training::AdversarialForm::kHinge ? "hinge" : "raw";
  s.get("adversarial_form", form);
  if (form != "hinge" && form != "raw") throw ConfigError("train.adversarial_form must be 'hinge' or 'raw'");
  t.adversarial_form = form == "hinge" ? training::AdversarialForm::kHinge : training::AdversarialForm::kRawScore;
  s.get("mse_weight", t.mse_weight);
  s.get("adv_weight", t.adv_weight);
  s.get("lr_g", t.lr_g);
  s.get("lr_d", t.lr_d);
  s.get("beta1", t.beta1);
  s.get("beta2", t.beta2);
  s.get("batch_size", t.batch_size);
  s.get("max_epochs", t.max_epochs);
  s.get("patience", t.patience);
  s.get("log_wall_clock", t.log_wall_clock);
  s.finish();
}

}  // namespace

models::GeneratorConfig RunConfig::generator_config() const {
  auto g = model == "miniature" ? models::GeneratorConfig::miniature() : models::GeneratorConfig::canonical();
  g.n_mels = dsp.n_mels;
  return g;
}

models::DiscriminatorConfig RunConfig::discriminator_config() const {
  auto d = model == "miniature" ? models::DiscriminatorConfig::miniature() : models::DiscriminatorConfig::canonical();
  d.n_mels = dsp.n_mels;
  return d;
}

std::string RunConfig::to_json() const {
  Json j;
  j["schema_version"] = schema_version;
  j["corpus"] = {{"id", corpus_id}, {"manifest", manifest}};
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["dsp"] = {{"sample_rate", dsp.sample_rate},
              {"win_length", dsp.win_length},
              {"hop", dsp.hop},
              {"fft_size", dsp.fft_size},
              {"n_mels", dsp.n_mels},
              {"fmin", dsp.fmin},
              {"fmax", dsp.fmax},
              {"log_floor", dsp.log_floor},
              {"griffin_lim_iters", dsp.griffin_lim_iters},
              {"mel_inverse_iters", dsp.mel_inverse_iters}};
  j["model"] = {{"preset", model}};
  j["train"] = {{"loss_mode", to_string(train.loss_mode)},
                {"adversarial_form", train.adversarial_form == training::AdversarialForm::kHinge ? "hinge" : "raw"},
                {"mse_weight", train.mse_weight},
                {"adv_weight", train.adv_weight},
                {"lr_g", train.lr_g},
                {"lr_d", train.lr_d},
                {"beta1", train.beta1},
                {"beta2", train.beta2},
                {"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"log_wall_clock", train.log_wall_clock}};
  j["metrics"] = {{"eval_batch_size", eval_batch_size}};
  return j.dump(2) + "\n";
}

void RunConfig::validate(bool check_paths) const {
  if (schema_version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  if (manifest.empty()) throw ConfigError("corpus.manifest is required");
  if (output_dir.empty()) throw ConfigError("output_dir is required");
  if (model != "canonical" && model != "miniature") {
    throw ConfigError("model.preset must be 'canonical' or 'miniature', got '" + model + "'");
  }
  if (eval_batch_size == 0) throw ConfigError("metrics.eval_batch_size must be positive");
  try {
    dsp.validate();
    train.validate();
    generator_config().validate();
    discriminator_config().validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (check_paths && !std::filesystem::is_regular_file(manifest_path())) {
    throw ConfigError("corpus manifest not found: " + manifest_path().string());
  }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  c.base_dir = base_dir;
  Section root(j, "");
  if (!root.has("schema_version")) throw ConfigError("config key 'schema_version' is required");
  root.get("schema_version", c.schema_version);
  if (const Json* corpus = root.section("corpus")) {
    Section s(*corpus, "corpus");
    s.get("id", c.corpus_id);
    s.get("manifest", c.manifest);
    s.finish();
  }
  root.get("output_dir", c.output_dir);
  std::size_t seed = 0;
  root.get("seed", seed);
  c.seed = seed;
  if (const Json* d = root.section("dsp")) read_dsp(*d, c.dsp);
  if (const Json* m = root.section("model")) {
    Section s(*m, "model");
    s.get("preset", c.model);
    s.finish();
  }
  if (const Json* t = root.section("train")) read_train(*t, c.train);
  if (const Json* m = root.section("metrics")) {
    Section s(*m, "metrics");
    s.get("eval_batch_size", c.eval_batch_size);
    s.finish();
  }
  root.finish();
  c.train.seed = c.seed;
  c.validate(false);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

}  // namespace ssi::cli
