#include "clmrc/num/tape.hpp"

#include "clmrc/errors.hpp"

namespace clmrc::num {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad_buffer(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::scalar() const {
    const Matrix& v = value();
    if (v.size() != 1) throw DimensionError("scalar() on " + v.shape_string() + " tensor");
    return v[0];
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
}

Var Tape::leaf(Matrix value) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::parameter(const Matrix& value) {
    if (auto it = bound_.find(&value); it != bound_.end()) return Var(this, it->second);
    Node n;
    n.borrowed = &value;
    n.requires_grad = true;
    Var v = push(std::move(n));
    bound_.emplace(&value, v.id());
    return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    for (const Var& in : inputs) {
        if (in.tape_ != this) throw Error("op mixes tensors from different tapes");
        n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(fn);
    return push(std::move(n));
}

const Matrix& Tape::value(std::uint32_t id) const { return nodes_[id].value(); }

Matrix& Tape::grad_buffer(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Matrix(n.value().rows(), n.value().cols());
    return n.grad;
}

const Matrix* Tape::parameter_grad(const Matrix& param) const {
    auto it = bound_.find(&param);
    if (it == bound_.end()) return nullptr;
    const Node& n = nodes_[it->second];
    return n.grad.empty() ? nullptr : &n.grad;
}

void Tape::backward(Var loss) {
    if (consumed_) throw Error("tape already consumed by a backward pass");
    if (loss.tape_ != this) throw Error("loss recorded on a different tape");
    if (loss.value().size() != 1)
        throw DimensionError("backward from non-scalar " + loss.value().shape_string());
    consumed_ = true;
    if (!nodes_[loss.id_].requires_grad) return;
    grad_buffer(loss.id_)[0] = 1.0;
    for (std::uint32_t id = loss.id_ + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.backward && !n.grad.empty()) n.backward(*this, id);
    }
}

}  // namespace clmrc::num
