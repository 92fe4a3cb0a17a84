#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "ssi/dsp/config.hpp"
#include "ssi/models/discriminator.hpp"
#include "ssi/models/generator.hpp"
#include "ssi/training/trainer.hpp"

namespace ssi::cli {

// Malformed, unknown or out-of-range configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or inconsistent corpus files (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string corpus_id = "corpus";
  std::string manifest;    // as written; relative to the config file
  std::string output_dir;  // as written; relative to the config file
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  dsp::DspConfig dsp;
  std::string model = "canonical";  // canonical | miniature
  training::TrainConfig train;
  std::size_t eval_batch_size = 32;

  std::filesystem::path manifest_path() const { return base_dir / manifest; }
  std::filesystem::path output_path() const { return base_dir / output_dir; }
  models::GeneratorConfig generator_config() const;
  models::DiscriminatorConfig discriminator_config() const;

  // Every field, defaults included.
  std::string to_json() const;
  // Range checks; with check_paths also requires the manifest to exist.
  void validate(bool check_paths) const;
};

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace ssi::cli
