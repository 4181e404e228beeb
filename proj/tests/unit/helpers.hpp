#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "clmrc/num/gradcheck.hpp"
#include "clmrc/num/matrix.hpp"
#include "clmrc/num/ops.hpp"
#include "clmrc/num/rng.hpp"
#include "clmrc/num/tape.hpp"

namespace testutil {

using clmrc::num::Matrix;
using clmrc::num::Rng;
using clmrc::num::Tape;
using clmrc::num::Var;
using clmrc::num::Mask;

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = scale * rng.normal();
    return m;
}

// Triple-loop reference product.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            long double s = 0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
            c(i, j) = static_cast<double>(s);
        }
    return c;
}

inline Matrix naive_transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

// Row-wise softmax with key mask, straight from the definition.
inline Matrix naive_softmax(const Matrix& x, const std::vector<bool>& mask = {}) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double mx = -INFINITY;
        for (std::size_t c = 0; c < x.cols(); ++c)
            if (mask.empty() || mask[c]) mx = std::max(mx, x(r, c));
        double z = 0;
        for (std::size_t c = 0; c < x.cols(); ++c)
            if (mask.empty() || mask[c]) z += std::exp(x(r, c) - mx);
        for (std::size_t c = 0; c < x.cols(); ++c)
            out(r, c) = (mask.empty() || mask[c]) ? std::exp(x(r, c) - mx) / z : 0.0;
    }
    return out;
}

inline double max_rel_diff(const Matrix& a, const Matrix& b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    return worst;
}

// sum(x .* weights) as a scalar node with a hand-written backward, so the
// read-out does not reuse the ops under test.
inline Var weighted_sum(Var x, const Matrix& weights) {
    double s = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += x.value()[i] * weights[i];
    return x.tape().record(Matrix(1, 1, s), {x}, [x, weights](Tape& tape, std::uint32_t self) {
        const double g = tape.grad_buffer(self)[0];
        if (!x.requires_grad()) return;
        Matrix& gx = tape.grad_buffer(x.id());
        for (std::size_t i = 0; i < weights.size(); ++i) gx[i] += g * weights[i];
    });
}

inline Matrix cols(const Matrix& x, std::size_t begin, std::size_t count) {
    Matrix out(x.rows(), count);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
    return out;
}

// Direct evaluation of the self-adaptive attention for one head.
inline Matrix saa_ref(const Matrix& t, const Matrix& s, const Mask& mt, const Mask& ms, bool adaptive) {
    const Matrix cross = naive_matmul(t, naive_transpose(s));
    Matrix adapted = cross;
    if (adaptive) {
        const Matrix at = naive_softmax(naive_matmul(t, naive_transpose(t)), mt);
        const Matrix as = naive_softmax(naive_matmul(s, naive_transpose(s)), ms);
        adapted = naive_matmul(naive_matmul(at, cross), naive_transpose(as));
    }
    return naive_matmul(naive_softmax(adapted, ms), s);
}

inline std::vector<double> span_rep_ref(const Matrix& b, std::size_t i, std::size_t j) {
    Matrix rows(j - i + 1, b.cols());
    for (std::size_t r = i; r <= j; ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) rows(r - i, c) = b(r, c);
    const Matrix att = naive_matmul(naive_softmax(naive_matmul(rows, naive_transpose(rows))), rows);
    std::vector<double> out;
    for (std::size_t c = 0; c < b.cols(); ++c) out.push_back(b(i, c));
    for (std::size_t c = 0; c < b.cols(); ++c) out.push_back(b(j, c));
    for (std::size_t c = 0; c < b.cols(); ++c) {
        double m = 0;
        for (std::size_t r = 0; r < att.rows(); ++r) m += att(r, c);
        out.push_back(m / att.rows());
    }
    return out;
}

inline std::size_t common_chars(const std::string& a, const std::string& b) {
    std::map<char, long> ca, cb;
    for (char c : a) ++ca[c];
    for (char c : b) ++cb[c];
    std::size_t n = 0;
    for (auto [c, k] : ca) n += std::min(k, cb[c]);
    return n;
}

// (numerator, denominator) of the bag-of-characters F1
inline std::pair<std::size_t, std::size_t> f1_fraction(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return {0, 1};
    return {2 * common_chars(a, b), a.size() + b.size()};
}

struct Window {
    std::size_t start, end;
};

inline Window brute_match(const std::string& passage, const std::string& answer, std::size_t delta) {
    const std::size_t n = answer.size();
    const std::size_t lo = std::min(passage.size(), n > delta + 1 ? n - delta : 1);
    const std::size_t hi = std::min(passage.size(), n + delta);
    Window best{0, 0};
    std::pair<std::size_t, std::size_t> best_f{0, 1};
    bool any = false;
    for (std::size_t s = 0; s < passage.size(); ++s)
        for (std::size_t len = lo; len <= hi && s + len <= passage.size(); ++len) {
            const auto f = f1_fraction(passage.substr(s, len), answer);
            // strictly better only, so the first (earliest, shortest) window wins ties
            if (!any || f.first * best_f.second > best_f.first * f.second) {
                best = {s, s + len};
                best_f = f;
                any = true;
            }
        }
    return best;
}

// Exhaustive argmax of ps[i] * pe[j] over passage spans, first maximum wins.
inline std::pair<std::size_t, std::size_t> brute_decode(const Matrix& ps, const Matrix& pe, std::size_t begin,
                                                        std::size_t end, std::size_t max_len, double* score = nullptr) {
    std::size_t bi = 0, bj = 0;
    double best = -1;
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = i; j < end && j - i + 1 <= max_len; ++j)
            if (ps[i] * pe[j] > best) {
                best = ps[i] * pe[j];
                bi = i;
                bj = j;
            }
    if (score != nullptr) *score = best;
    return {bi, bj};
}

struct PrimitiveCase {
    const char* name;
    // inputs are parameters bound from the random values; returns the op output
    std::function<Var(Tape&, const std::vector<Var>&)> op;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
};

inline std::vector<PrimitiveCase> primitive_cases() {
    namespace num = clmrc::num;
    static const Mask col_mask = {true, false, true, true, false, true};
    static const std::vector<std::size_t> ids = {2, 0, 2, 4, 1};
    return {
        {"matmul", [](Tape&, auto& in) { return num::matmul(in[0], in[1]); }, {{3, 5}, {5, 4}}},
        {"matmul_nt", [](Tape&, auto& in) { return num::matmul_nt(in[0], in[1]); }, {{3, 5}, {4, 5}}},
        {"transpose", [](Tape&, auto& in) { return num::transpose(in[0]); }, {{3, 5}}},
        {"add", [](Tape&, auto& in) { return num::add(in[0], in[1]); }, {{3, 4}, {3, 4}}},
        {"scale", [](Tape&, auto& in) { return num::scale(in[0], -1.7); }, {{3, 4}}},
        {"add_row", [](Tape&, auto& in) { return num::add_row(in[0], in[1]); }, {{3, 4}, {1, 4}}},
        {"affine", [](Tape&, auto& in) { return num::affine(in[0], in[1], in[2]); }, {{3, 5}, {5, 2}, {1, 2}}},
        {"softmax", [](Tape&, auto& in) { return num::softmax(in[0]); }, {{3, 6}}},
        {"masked_softmax", [](Tape&, auto& in) { return num::masked_softmax(in[0], col_mask); }, {{3, 6}}},
        {"layer_norm", [](Tape&, auto& in) { return num::layer_norm(in[0], in[1], in[2]); }, {{3, 6}, {1, 6}, {1, 6}}},
        {"gelu", [](Tape&, auto& in) { return num::gelu(in[0]); }, {{3, 4}}},
        {"dropout",
         [](Tape&, auto& in) {
             Rng r(77);  // same mask at every evaluation
             return num::dropout(in[0], 0.3, r);
         },
         {{4, 5}}},
        {"cross_entropy", [](Tape&, auto& in) { return num::cross_entropy(num::softmax(in[0]), 3); }, {{1, 6}}},
        {"cross_entropy_masked",
         [](Tape&, auto& in) { return num::cross_entropy(num::masked_softmax(in[0], col_mask), 2, col_mask); },
         {{1, 6}}},
        {"concat_cols", [](Tape&, auto& in) { return num::concat_cols(in[0], in[1]); }, {{3, 2}, {3, 4}}},
        {"slice_cols", [](Tape&, auto& in) { return num::slice_cols(in[0], 1, 3); }, {{3, 5}}},
        {"slice_rows", [](Tape&, auto& in) { return num::slice_rows(in[0], 1, 2); }, {{4, 3}}},
        {"gather_rows", [](Tape&, auto& in) { return num::gather_rows(in[0], ids); }, {{5, 3}}},
        {"mean_rows", [](Tape&, auto& in) { return num::mean_rows(in[0]); }, {{4, 3}}},
    };
}

// grad_check of sum(op(inputs) .* R) for a fixed random read-out R.
inline clmrc::num::GradCheckReport check_primitive(const PrimitiveCase& pc, std::uint64_t seed, double tolerance) {
    Rng rng(seed * 1000 + 17);
    std::vector<Matrix> values;
    for (auto [r, c] : pc.shapes) values.push_back(random_matrix(rng, r, c));
    clmrc::num::ParameterList params;
    for (std::size_t i = 0; i < values.size(); ++i) params.push_back({"in" + std::to_string(i), &values[i]});
    Matrix readout;
    {
        Tape t;
        std::vector<Var> in;
        for (auto& v : values) in.push_back(t.parameter(v));
        const Var out = pc.op(t, in);
        readout = random_matrix(rng, out.rows(), out.cols());
    }
    clmrc::num::GradCheckOptions o;
    o.tolerance = tolerance;
    o.fd_step = 1e-5;
    return clmrc::num::grad_check(
        [&](Tape& t) {
            std::vector<Var> in;
            for (auto& v : values) in.push_back(t.parameter(v));
            return weighted_sum(pc.op(t, in), readout);
        },
        params, o);
}

}  // namespace testutil
