#pragma once

#include "ssi/core/ops.hpp"
#include "ssi/core/tape.hpp"
#include "ssi/models/params.hpp"

namespace ssi::models {

// Forward interfaces the training steps are written against.
class GeneratorNetwork {
 public:
  virtual ~GeneratorNetwork() = default;
  // [B, 25, H, W] -> [B, 5, n_mels]
  virtual Var forward(Var x, const ParamBinding& p) const = 0;
};

class DiscriminatorNetwork {
 public:
  virtual ~DiscriminatorNetwork() = default;
  // [B, 5, n_mels] -> [B, outputs]
  virtual Var forward(Var mel, const ParamBinding& p, const ModelParams& params, Mode mode,
                      ModelParams* running = nullptr) const = 0;
};

}  // namespace ssi::models
