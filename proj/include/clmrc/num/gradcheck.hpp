#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "clmrc/num/optim.hpp"
#include "clmrc/num/tape.hpp"

namespace clmrc::num {

/// Builds a scalar loss on the given tape, reading parameters in place.
using TapedLoss = std::function<Var(Tape&)>;

struct GradCheckOptions {
    double fd_step = 1e-5;
    double tolerance = 1e-5;
    /// Coordinates sampled per parameter; 0 checks every coordinate.
    std::size_t max_coords_per_parameter = 0;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::map<std::string, double> per_parameter_errors;
    std::string worst_parameter;
    std::size_t coordinates_checked = 0;
    double tolerance = 0.0;
    bool passed = false;
};

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of `loss` against central differences
/// (f(x+h) - f(x-h)) / 2h, perturbing each parameter in place and
/// restoring it afterwards. Throws DeterminismError when two evaluations
/// at the same point disagree.
GradCheckReport grad_check(const TapedLoss& loss, const ParameterList& params, const GradCheckOptions& options);

}  // namespace clmrc::num
