#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ssi/core/ops.hpp"
#include "ssi/core/tape.hpp"
#include "ssi/core/tensor.hpp"

namespace ssi::models {

enum class ParamKind : std::uint8_t { kWeight, kBias, kGamma, kBeta, kRunningMean, kRunningVar };

inline bool is_trainable(ParamKind kind) {
  return kind != ParamKind::kRunningMean && kind != ParamKind::kRunningVar;
}

struct ParamEntry {
  std::string name;
  ParamKind kind;
  Tensor value;
};

/// Ordered, named parameter tensors of one network. Running batch-norm
/// statistics are stored alongside as non-trainable buffers.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::string descriptor) : descriptor_(std::move(descriptor)) {}

  void add(std::string name, ParamKind kind, Tensor value);

  const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
  std::vector<ParamEntry>& entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::size_t index_of(const std::string& name) const;
  Tensor& operator[](const std::string& name) { return entries_[index_of(name)].value; }
  const Tensor& operator[](const std::string& name) const { return entries_[index_of(name)].value; }

  // Number of trainable scalars.
  std::size_t trainable_count() const;
  // Pointers to trainable tensors in entry order; the order matches optimizer state.
  std::vector<Tensor*> trainable();

  const std::string& descriptor() const noexcept { return descriptor_; }
  std::uint64_t descriptor_hash() const;

  bool operator==(const ModelParams& other) const;

 private:
  std::string descriptor_;
  std::vector<ParamEntry> entries_;
};

// Tape handles for every entry, aligned with ModelParams::entries(). Trainable
// entries are variables when `trainable` is true and constants otherwise;
// running statistics are never bound.
struct ParamBinding {
  std::vector<Var> vars;

  Var operator[](std::size_t i) const { return vars[i]; }
};

ParamBinding bind(Tape& tape, const ModelParams& params, bool trainable);
// Gradients of the trainable entries, in ModelParams::trainable() order.
std::vector<Tensor> trainable_grads(const Tape& tape, const ModelParams& params, const ParamBinding& binding);

// He-uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor he_uniform(const Shape& shape, std::size_t fan_in, std::uint64_t seed);

// Checkpoint: "CKP1" | u32 version | u64 descriptor hash | u32 entries |
// per entry (u32 name length, name, u8 kind, u32 rank, u32 dims...) | f64 payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_params(const ModelParams& params, const std::filesystem::path& path);
// Reads any checkpoint; the descriptor string is not stored, only its hash.
ModelParams load_params(const std::filesystem::path& path, std::uint64_t* descriptor_hash = nullptr);
// Loads into the layout of `like`; throws CheckpointIncompatible on any
// descriptor or shape-table mismatch.
ModelParams load_params(const std::filesystem::path& path, const ModelParams& like);

}  // namespace ssi::models
