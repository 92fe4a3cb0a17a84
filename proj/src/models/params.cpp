#include "ssi/models/params.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "ssi/core/error.hpp"
#include "ssi/core/rng.hpp"

namespace ssi::models {
namespace fs = std::filesystem;

void ModelParams::add(std::string name, ParamKind kind, Tensor value) {
  for (const auto& e : entries_) {
    if (e.name == name) throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
  entries_.push_back({std::move(name), kind, std::move(value)});
}

std::size_t ModelParams::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw InvalidArgument("no parameter named '" + name + "'");
}

std::size_t ModelParams::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (is_trainable(e.kind)) n += e.value.size();
  }
  return n;
}

std::vector<Tensor*> ModelParams::trainable() {
  std::vector<Tensor*> out;
  for (auto& e : entries_) {
    if (is_trainable(e.kind)) out.push_back(&e.value);
  }
  return out;
}

std::uint64_t ModelParams::descriptor_hash() const { return fnv1a64(descriptor_); }

bool ModelParams::operator==(const ModelParams& other) const {
  if (descriptor_ != other.descriptor_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.kind != b.kind || !(a.value == b.value)) return false;
  }
  return true;
}

ParamBinding bind(Tape& tape, const ModelParams& params, bool trainable) {
  ParamBinding b;
  b.vars.reserve(params.size());
  for (const auto& e : params.entries()) {
    if (!is_trainable(e.kind)) {
      b.vars.emplace_back();
    } else {
      b.vars.push_back(trainable ? tape.variable(e.value) : tape.constant(e.value));
    }
  }
  return b;
}

std::vector<Tensor> trainable_grads(const Tape& tape, const ModelParams& params, const ParamBinding& binding) {
  std::vector<Tensor> grads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (is_trainable(params.entries()[i].kind)) grads.push_back(tape.grad(binding[i]));
  }
  return grads;
}

Tensor he_uniform(const Shape& shape, std::size_t fan_in, std::uint64_t seed) {
  if (fan_in == 0) throw InvalidArgument("he_uniform needs a positive fan-in");
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Cursor {
 public:
  explicit Cursor(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint64_t pos() const { return pos_; }
  std::uint64_t get(std::size_t bytes) {
    if (b_.size() - pos_ < bytes) throw FormatError("truncated checkpoint", pos_);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::string str(std::size_t n) {
    if (b_.size() - pos_ < n) throw FormatError("truncated checkpoint", pos_);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_params(const ModelParams& params, const fs::path& path) {
  std::vector<std::uint8_t> out = {'C', 'K', 'P', '1'};
  put_u32(out, kCheckpointVersion);
  put_u64(out, params.descriptor_hash());
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    out.push_back(static_cast<std::uint8_t>(e.kind));
    put_u32(out, static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& e : params.entries()) {
    for (double v : e.value.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
}

ModelParams load_params(const fs::path& path, std::uint64_t* descriptor_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  Cursor c(bytes);
  if (c.str(4) != "CKP1") throw FormatError("bad checkpoint magic", 0);
  const auto version = c.get(4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const std::uint64_t hash = c.get(8);
  const auto count = c.get(4);
  ModelParams params;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = c.pos();
    std::string name = c.str(c.get(4));
    const auto kind = c.get(1);
    if (kind > static_cast<std::uint64_t>(ParamKind::kRunningVar)) throw FormatError("unknown parameter kind", at);
    const auto rank = c.get(4);
    if (rank == 0 || rank > 8) throw FormatError("implausible tensor rank", at);
    Shape shape;
    for (std::uint64_t d = 0; d < rank; ++d) {
      shape.push_back(c.get(4));
      if (shape.back() == 0) throw FormatError("zero extent in shape table", c.pos() - 4);
    }
    params.add(std::move(name), static_cast<ParamKind>(kind), Tensor(shape));
  }
  for (auto& e : params.entries()) {
    for (auto& v : e.value.values()) v = std::bit_cast<double>(c.get(8));
  }
  if (!c.done()) throw FormatError("trailing bytes after checkpoint payload", c.pos());
  if (descriptor_hash) *descriptor_hash = hash;
  return params;
}

ModelParams load_params(const fs::path& path, const ModelParams& like) {
  std::uint64_t hash = 0;
  ModelParams raw = load_params(path, &hash);
  if (hash != like.descriptor_hash()) {
    throw CheckpointIncompatible("checkpoint " + path.string() + " was written for a different architecture");
  }
  if (raw.size() != like.size()) {
    throw CheckpointIncompatible("checkpoint has " + std::to_string(raw.size()) + " tensors, expected " +
                                 std::to_string(like.size()));
  }
  ModelParams out(like.descriptor());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& got = raw.entries()[i];
    const auto& want = like.entries()[i];
    if (got.name != want.name || got.kind != want.kind || got.value.shape() != want.value.shape()) {
      throw CheckpointIncompatible("checkpoint entry '" + got.name + "' " + shape_to_string(got.value.shape()) +
                                   " does not match '" + want.name + "' " + shape_to_string(want.value.shape()));
    }
    out.add(got.name, got.kind, got.value);
  }
  return out;
}

}  // namespace ssi::models
