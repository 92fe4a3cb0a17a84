#include "ssi/core/tape.hpp"

#include "ssi/core/error.hpp"

namespace ssi {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw InvalidArgument("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.valid() && &in.tape() != this) throw InvalidArgument("Var from another tape");
    needs = needs || requires_grad(in);
  }
  Node node{std::move(value), {}, needs, false, {}};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!loss.valid() || &loss.tape() != this) throw InvalidArgument("loss is not on this tape");
  if (value(loss).size() != 1) {
    throw InvalidArgument("backward needs a scalar loss, got shape " +
                          shape_to_string(value(loss).shape()));
  }
  if (!requires_grad(loss)) return;
  grad_slot(loss).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape(), 0.0);
}

}  // namespace ssi
