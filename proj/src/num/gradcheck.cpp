#include "clmrc/num/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clmrc/errors.hpp"
#include "clmrc/num/rng.hpp"

namespace clmrc::num {
namespace {

double evaluate(const TapedLoss& loss) {
    Tape tape;
    return loss(tape).scalar();
}

}  // namespace

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const TapedLoss& loss, const ParameterList& params, const GradCheckOptions& options) {
    Gradients analytic = zero_gradients(params);
    double base = 0.0;
    {
        Tape tape;
        Var out = loss(tape);
        base = out.scalar();
        tape.backward(out);
        collect_gradients(tape, params, analytic);
    }
    if (const double again = evaluate(loss); again != base)
        throw DeterminismError("loss function is not deterministic: " + std::to_string(base) + " vs " +
                               std::to_string(again));

    GradCheckReport report;
    report.tolerance = options.tolerance;
    Rng rng(options.seed);
    const double h = options.fd_step;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& value = *params[p].value;
        std::vector<std::size_t> coords(value.size());
        std::iota(coords.begin(), coords.end(), 0);
        if (options.max_coords_per_parameter != 0 && coords.size() > options.max_coords_per_parameter) {
            // partial Fisher-Yates: the first k entries become a uniform sample
            for (std::size_t i = 0; i < options.max_coords_per_parameter; ++i)
                std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
            coords.resize(options.max_coords_per_parameter);
            std::sort(coords.begin(), coords.end());
        }
        double worst = 0.0;
        for (std::size_t c : coords) {
            const double saved = value[c];
            value[c] = saved + h;
            const double plus = evaluate(loss);
            value[c] = saved - h;
            const double minus = evaluate(loss);
            value[c] = saved;
            const double numeric = (plus - minus) / (2.0 * h);
            worst = std::max(worst, relative_error(analytic[p][c], numeric));
        }
        report.coordinates_checked += coords.size();
        report.per_parameter_errors[params[p].name] = worst;
        if (worst >= report.max_relative_error) {
            report.max_relative_error = worst;
            report.worst_parameter = params[p].name;
        }
    }
    report.passed = report.max_relative_error < options.tolerance;
    return report;
}

}  // namespace clmrc::num
