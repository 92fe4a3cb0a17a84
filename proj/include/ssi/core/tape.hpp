#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "ssi/core/tensor.hpp"

namespace ssi {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Deliberate backward-rule corruption used as a negative control for
// gradient checking. Never enabled outside tests and `gradcheck`.
enum class FaultInjection { kNone, kSwishBackward };

/// Records a forward computation so that backward() can propagate gradients
/// in reverse creation order. Nodes whose inputs are all constants are not
/// differentiated and carry no backward rule.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  // Appends an op result. `backward` runs only if some input requires grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return v.valid() && nodes_[v.id()].requires_grad; }

  // Gradient accumulator for an input; allocated as zeros on first use.
  Tensor& grad_slot(Var v);

  // Seeds d(loss)/d(loss) = 1 and runs every backward rule once.
  void backward(Var loss);

  // d(loss)/d(v) after backward(); zeros when v did not influence the loss.
  Tensor grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }

  void set_fault(FaultInjection fault) noexcept { fault_ = fault; }
  FaultInjection fault() const noexcept { return fault_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  FaultInjection fault_ = FaultInjection::kNone;
};

}  // namespace ssi
