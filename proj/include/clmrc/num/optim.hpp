#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "clmrc/num/matrix.hpp"
#include "clmrc/num/tape.hpp"

namespace clmrc::num {

struct NamedParameter {
    std::string name;
    Matrix* value = nullptr;
};

/// Ordered view over a model's trainable matrices. The order is the
/// model's enumeration order and is stable for a given configuration.
using ParameterList = std::vector<NamedParameter>;

/// Gradient buffers aligned index-for-index with a ParameterList.
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const ParameterList& params);

/// grads[i] += weight * d(loss)/d(params[i]) for every parameter the tape bound.
void collect_gradients(const Tape& tape, const ParameterList& params, Gradients& grads, double weight = 1.0);

/// lr(step) = base_lr * 0.5 * (1 + cos(pi * step / total_steps)), no warmup.
struct CosineSchedule {
    double base_lr = 4e-5;
    std::size_t total_steps = 1;

    double learning_rate(std::size_t step) const;
};

struct AdamWConfig {
    double base_lr = 4e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-6;
    double weight_decay = 0.01;
    std::size_t total_steps = 1;
};

struct OptimizerState {
    std::size_t step_count = 0;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    double base_lr = 4e-5;
    double weight_decay = 0.01;
    std::size_t total_steps = 1;
};

/// Adam with decoupled weight decay and bias correction, driven by a
/// cosine schedule. Single writer: one thread owns the optimizer.
class AdamW {
public:
    AdamW(const ParameterList& params, AdamWConfig config);

    /// Applies one update using the learning rate of the current step and
    /// returns it. Throws DivergenceError on a non-finite gradient.
    double step(const ParameterList& params, const Gradients& grads);

    const OptimizerState& state() const { return state_; }
    const AdamWConfig& config() const { return config_; }
    double current_learning_rate() const { return schedule_.learning_rate(state_.step_count); }

private:
    AdamWConfig config_;
    CosineSchedule schedule_;
    OptimizerState state_;
};

}  // namespace clmrc::num
