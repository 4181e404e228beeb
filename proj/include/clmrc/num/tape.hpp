#pragma once

// Reverse-mode differentiation over 2-D matrices.
//
// A Tape records one forward pass. Every op appends a node holding its
// value and a closure that pushes the node's gradient to its inputs.
// backward() runs once; afterwards gradients are read off the tape and
// the tape is discarded. A tape must stay on the thread that built it.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>

#include "clmrc/num/matrix.hpp"

namespace clmrc::num {

class Tape;

/// Handle to a differentiable tensor recorded on a Tape.
class Var {
public:
    Var() = default;

    const Matrix& value() const;
    /// Gradient after backward(); a zero matrix when nothing flowed here.
    const Matrix& grad() const;
    bool requires_grad() const;

    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    /// Value of a 1x1 tensor.
    double scalar() const;

    Tape& tape() const { return *tape_; }
    std::uint32_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Value that never receives gradient.
    Var constant(Matrix value);
    /// Owned value that receives gradient.
    Var leaf(Matrix value);
    /// Externally owned parameter. Binding the same matrix twice returns
    /// the same node, so gradients from every use land in one buffer.
    /// The matrix must outlive the tape and stay unchanged until backward.
    Var parameter(const Matrix& value);

    /// Appends an op node. fn is kept only if some input requires grad.
    Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);

    /// Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1x1.
    void backward(Var loss);

    const Matrix& value(std::uint32_t id) const;
    bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer of a node, allocated as zeros on first use.
    Matrix& grad_buffer(std::uint32_t id);

    bool is_bound(const Matrix& param) const { return bound_.contains(&param); }
    /// Gradient for a bound parameter, or nullptr if it was never used.
    const Matrix* parameter_grad(const Matrix& param) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix owned;
        const Matrix* borrowed = nullptr;
        Matrix grad;
        bool requires_grad = false;
        BackwardFn backward;

        const Matrix& value() const { return borrowed != nullptr ? *borrowed : owned; }
    };

    Var push(Node node);

    std::deque<Node> nodes_;
    std::unordered_map<const Matrix*, std::uint32_t> bound_;
    bool consumed_ = false;
};

}  // namespace clmrc::num
