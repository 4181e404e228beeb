#include "clmrc/num/optim.hpp"

#include <cmath>
#include <numbers>

#include "clmrc/errors.hpp"

namespace clmrc::num {

Gradients zero_gradients(const ParameterList& params) {
    Gradients grads;
    grads.reserve(params.size());
    for (const auto& p : params) grads.emplace_back(p.value->rows(), p.value->cols());
    return grads;
}

void collect_gradients(const Tape& tape, const ParameterList& params, Gradients& grads, double weight) {
    if (grads.size() != params.size()) throw DimensionError("gradient list does not match parameter list");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (const Matrix* g = tape.parameter_grad(*params[i].value)) accumulate(grads[i], *g, weight);
}

double CosineSchedule::learning_rate(std::size_t step) const {
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamW::AdamW(const ParameterList& params, AdamWConfig config)
    : config_(config), schedule_{config.base_lr, config.total_steps} {
    if (config.total_steps == 0) throw ConfigError("optimizer needs total_steps > 0");
    if (config.base_lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (config.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    state_.base_lr = config.base_lr;
    state_.weight_decay = config.weight_decay;
    state_.total_steps = config.total_steps;
    for (const auto& p : params) {
        state_.first_moment.emplace_back(p.value->rows(), p.value->cols());
        state_.second_moment.emplace_back(p.value->rows(), p.value->cols());
    }
}

double AdamW::step(const ParameterList& params, const Gradients& grads) {
    if (params.size() != state_.first_moment.size() || grads.size() != params.size())
        throw DimensionError("optimizer state does not match parameter list");
    if (state_.step_count >= state_.total_steps)
        throw ConfigError("optimizer stepped past its schedule of " + std::to_string(state_.total_steps) + " steps");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!grads[i].all_finite())
            throw DivergenceError("non-finite gradient for parameter '" + params[i].name + "' at step " +
                                  std::to_string(state_.step_count));

    const double lr = schedule_.learning_rate(state_.step_count);
    const double t = static_cast<double>(state_.step_count + 1);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    const double shrink = 1.0 - lr * config_.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& w = *params[i].value;
        Matrix& m = state_.first_moment[i];
        Matrix& v = state_.second_moment[i];
        const Matrix& g = grads[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
            v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
            const double update = (m[j] / correction1) / (std::sqrt(v[j] / correction2) + config_.epsilon);
            // decay applied as a multiplicative shrink so zero-gradient steps scale exactly
            w[j] = w[j] * shrink - lr * update;
        }
    }
    ++state_.step_count;
    return lr;
}

}  // namespace clmrc::num
