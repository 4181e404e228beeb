#include "clmrc/num/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "clmrc/errors.hpp"
#include "clmrc/kernels.hpp"

namespace clmrc::num {
namespace {

const kernels::KernelTable& K() { return kernels::active(); }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() +
                         " and " + b.shape_string());
}

Tape& same_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) throw Error("op mixes tensors from different tapes");
    return a.tape();
}

bool mask_allows(const Mask& mask, std::size_t r, std::size_t c, std::size_t cols) {
    if (mask.empty()) return true;
    return mask.size() == cols ? mask[c] : mask[r * cols + c];
}

}  // namespace

Var matmul(Var a, Var b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    Matrix out(m, n);
    K().gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
    const auto ia = a.id(), ib = b.id();
    return same_tape(a, b).record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        if (t.requires_grad(ia))
            K().gemm_nt(g.data(), t.value(ib).data(), t.grad_buffer(ia).data(), m, n, k);
        if (t.requires_grad(ib))
            K().gemm_tn(t.value(ia).data(), g.data(), t.grad_buffer(ib).data(), k, m, n);
    });
}

Var matmul_nt(Var a, Var b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.cols()) shape_error("matmul_nt", av, bv);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
    Matrix out(m, n);
    K().gemm_nt(av.data(), bv.data(), out.data(), m, k, n);
    const auto ia = a.id(), ib = b.id();
    return same_tape(a, b).record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        if (t.requires_grad(ia))
            K().gemm_nn(g.data(), t.value(ib).data(), t.grad_buffer(ia).data(), m, n, k);
        if (t.requires_grad(ib))
            K().gemm_tn(g.data(), t.value(ia).data(), t.grad_buffer(ib).data(), n, m, k);
    });
}

Var transpose(Var a) {
    const auto ia = a.id();
    return a.tape().record(transpose(a.value()), {a}, [ia](Tape& t, std::uint32_t self) {
        accumulate(t.grad_buffer(ia), transpose(t.grad_buffer(self)));
    });
}

Var add(Var a, Var b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (!av.same_shape(bv)) shape_error("add", av, bv);
    Matrix out = av;
    accumulate(out, bv);
    const auto ia = a.id(), ib = b.id();
    return same_tape(a, b).record(std::move(out), {a, b}, [ia, ib](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), g);
        if (t.requires_grad(ib)) accumulate(t.grad_buffer(ib), g);
    });
}

Var scale(Var a, double factor) {
    Matrix out = a.value();
    for (double& v : out.values()) v *= factor;
    const auto ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia, factor](Tape& t, std::uint32_t self) {
        accumulate(t.grad_buffer(ia), t.grad_buffer(self), factor);
    });
}

namespace {

void add_bias_rows(Matrix& out, const Matrix& bias) {
    for (std::size_t r = 0; r < out.rows(); ++r) K().axpy(1.0, bias.data(), out.row(r).data(), out.cols());
}

void bias_backward(Tape& t, std::uint32_t bias_id, const Matrix& g) {
    Matrix& gb = t.grad_buffer(bias_id);
    for (std::size_t r = 0; r < g.rows(); ++r) K().axpy(1.0, g.row(r).data(), gb.data(), g.cols());
}

}  // namespace

Var add_row(Var x, Var bias) {
    const Matrix& xv = x.value();
    const Matrix& bv = bias.value();
    if (bv.rows() != 1 || bv.cols() != xv.cols()) shape_error("add_row", xv, bv);
    Matrix out = xv;
    add_bias_rows(out, bv);
    const auto ix = x.id(), ib = bias.id();
    return same_tape(x, bias).record(std::move(out), {x, bias}, [ix, ib](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        if (t.requires_grad(ix)) accumulate(t.grad_buffer(ix), g);
        if (t.requires_grad(ib)) bias_backward(t, ib, g);
    });
}

Var affine(Var x, Var weight, Var bias) {
    const Matrix& xv = x.value();
    const Matrix& wv = weight.value();
    const Matrix& bv = bias.value();
    if (xv.cols() != wv.rows()) shape_error("affine", xv, wv);
    if (bv.rows() != 1 || bv.cols() != wv.cols()) shape_error("affine bias", wv, bv);
    const std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
    Matrix out(m, n);
    add_bias_rows(out, bv);
    K().gemm_nn(xv.data(), wv.data(), out.data(), m, k, n);
    same_tape(x, weight);
    same_tape(x, bias);
    const auto ix = x.id(), iw = weight.id(), ibias = bias.id();
    return x.tape().record(std::move(out), {x, weight, bias},
                           [ix, iw, ibias, m, k, n](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        if (t.requires_grad(ix))
            K().gemm_nt(g.data(), t.value(iw).data(), t.grad_buffer(ix).data(), m, n, k);
        if (t.requires_grad(iw))
            K().gemm_tn(t.value(ix).data(), g.data(), t.grad_buffer(iw).data(), k, m, n);
        if (t.requires_grad(ibias)) bias_backward(t, ibias, g);
    });
}

Var masked_softmax(Var logits, const Mask& mask) {
    const Matrix& x = logits.value();
    const std::size_t rows = x.rows(), cols = x.cols();
    if (!mask.empty() && mask.size() != cols && mask.size() != rows * cols)
        throw DimensionError("masked_softmax: mask of length " + std::to_string(mask.size()) +
                             " for logits " + x.shape_string());
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double peak = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t c = 0; c < cols; ++c) {
            if (!mask_allows(mask, r, c, cols)) continue;
            any = true;
            peak = std::max(peak, x(r, c));
        }
        if (!any) throw InvalidMaskError("masked_softmax: row " + std::to_string(r) + " is fully masked");
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            if (!mask_allows(mask, r, c, cols)) continue;
            out(r, c) = std::exp(x(r, c) - peak);
            total += out(r, c);
        }
        const double inv = 1.0 / total;
        for (std::size_t c = 0; c < cols; ++c) out(r, c) *= inv;
    }
    const auto ix = logits.id();
    return logits.tape().record(std::move(out), {logits}, [ix](Tape& t, std::uint32_t self) {
        const Matrix& y = t.value(self);
        const Matrix& g = t.grad_buffer(self);
        Matrix& gx = t.grad_buffer(ix);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            const double s = K().dot(g.row(r).data(), y.row(r).data(), y.cols());
            for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - s);
        }
    });
}

Var softmax(Var logits) { return masked_softmax(logits, {}); }

Var layer_norm(Var x, Var gain, Var bias, double epsilon) {
    const Matrix& xv = x.value();
    const Matrix& gv = gain.value();
    const Matrix& bv = bias.value();
    const std::size_t rows = xv.rows(), cols = xv.cols();
    if (gv.rows() != 1 || gv.cols() != cols) shape_error("layer_norm gain", xv, gv);
    if (bv.rows() != 1 || bv.cols() != cols) shape_error("layer_norm bias", xv, bv);
    Matrix normalized(rows, cols);
    Matrix inv_std(rows, 1);
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = xv.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(var + epsilon);
        inv_std(r, 0) = inv;
        for (std::size_t c = 0; c < cols; ++c) {
            normalized(r, c) = (row[c] - mean) * inv;
            out(r, c) = gv[c] * normalized(r, c) + bv[c];
        }
    }
    const auto ix = x.id(), ig = gain.id(), ibias = bias.id();
    same_tape(x, gain);
    same_tape(x, bias);
    return x.tape().record(std::move(out), {x, gain, bias},
                           [ix, ig, ibias, xhat = std::move(normalized), inv_std = std::move(inv_std)](
                               Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        const Matrix& gv = t.value(ig);
        const std::size_t rows = g.rows(), cols = g.cols();
        if (t.requires_grad(ig)) {
            Matrix& gg = t.grad_buffer(ig);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) gg[c] += g(r, c) * xhat(r, c);
        }
        if (t.requires_grad(ibias)) bias_backward(t, ibias, g);
        if (!t.requires_grad(ix)) return;
        Matrix& gx = t.grad_buffer(ix);
        std::vector<double> dxhat(cols);
        for (std::size_t r = 0; r < rows; ++r) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                dxhat[c] = g(r, c) * gv[c];
                mean_d += dxhat[c];
                mean_dx += dxhat[c] * xhat(r, c);
            }
            mean_d /= static_cast<double>(cols);
            mean_dx /= static_cast<double>(cols);
            const double inv = inv_std(r, 0);
            for (std::size_t c = 0; c < cols; ++c)
                gx(r, c) += inv * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
        }
    });
}

Var gelu(Var x) {
    Matrix out = x.value();
    for (double& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
    const auto ix = x.id();
    return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::uint32_t self) {
        const Matrix& xv = t.value(ix);
        const Matrix& g = t.grad_buffer(self);
        Matrix& gx = t.grad_buffer(ix);
        const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double v = xv[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
            gx[i] += g[i] * (cdf + v * pdf);
        }
    });
}

Var dropout(Var x, double rate, Rng& rng) {
    if (rate <= 0.0) return x;
    if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix factors(x.rows(), x.cols());
    for (double& f : factors.values()) f = rng.bernoulli(rate) ? 0.0 : keep_scale;
    Matrix out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors[i];
    const auto ix = x.id();
    return x.tape().record(std::move(out), {x}, [ix, factors = std::move(factors)](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        Matrix& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factors[i];
    });
}

Var cross_entropy(Var probabilities, std::size_t gold_index, const Mask& mask) {
    const Matrix& p = probabilities.value();
    if (p.rows() != 1) throw DimensionError("cross_entropy expects a 1xn row, got " + p.shape_string());
    if (gold_index >= p.cols())
        throw IndexError("cross_entropy: gold index " + std::to_string(gold_index) +
                         " out of range for " + std::to_string(p.cols()) + " positions");
    if (!mask.empty() && !mask_allows(mask, 0, gold_index, p.cols()))
        throw IndexError("cross_entropy: gold index " + std::to_string(gold_index) + " is masked");
    const double pg = p[gold_index];
    Matrix out(1, 1, -std::log(pg));
    const auto ip = probabilities.id();
    return probabilities.tape().record(std::move(out), {probabilities},
                                       [ip, gold_index, pg](Tape& t, std::uint32_t self) {
        t.grad_buffer(ip)[gold_index] -= t.grad_buffer(self)[0] / pg;
    });
}

Var concat_cols(Var a, Var b) {
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.rows() != bv.rows()) shape_error("concat_cols", av, bv);
    const std::size_t ca = av.cols(), cb = bv.cols();
    Matrix out(av.rows(), ca + cb);
    for (std::size_t r = 0; r < av.rows(); ++r) {
        std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
        std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
    }
    const auto ia = a.id(), ib = b.id();
    return same_tape(a, b).record(std::move(out), {a, b}, [ia, ib, ca, cb](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            if (t.requires_grad(ia)) K().axpy(1.0, g.row(r).data(), t.grad_buffer(ia).row(r).data(), ca);
            if (t.requires_grad(ib)) K().axpy(1.0, g.row(r).data() + ca, t.grad_buffer(ib).row(r).data(), cb);
        }
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    const Matrix& av = a.value();
    if (begin + count > av.cols())
        throw DimensionError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) +
                             ") out of " + av.shape_string());
    Matrix out(av.rows(), count);
    for (std::size_t r = 0; r < av.rows(); ++r)
        std::copy_n(av.row(r).begin() + static_cast<std::ptrdiff_t>(begin), count, out.row(r).begin());
    const auto ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia, begin, count](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        Matrix& ga = t.grad_buffer(ia);
        for (std::size_t r = 0; r < g.rows(); ++r) K().axpy(1.0, g.row(r).data(), ga.row(r).data() + begin, count);
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Matrix& av = a.value();
    if (begin + count > av.rows())
        throw DimensionError("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) +
                             ") out of " + av.shape_string());
    const std::size_t cols = av.cols();
    std::vector<double> vals(av.data() + begin * cols, av.data() + (begin + count) * cols);
    const auto ia = a.id();
    return a.tape().record(Matrix(count, cols, std::move(vals)), {a}, [ia, begin](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        K().axpy(1.0, g.data(), t.grad_buffer(ia).data() + begin * g.cols(), g.size());
    });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
    const Matrix& tv = table.value();
    const std::size_t cols = tv.cols();
    Matrix out(ids.size(), cols);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] >= tv.rows())
            throw IndexError("gather_rows: id " + std::to_string(ids[r]) + " outside table of " +
                             std::to_string(tv.rows()) + " rows");
        std::copy(tv.row(ids[r]).begin(), tv.row(ids[r]).end(), out.row(r).begin());
    }
    const auto it = table.id();
    return table.tape().record(std::move(out), {table},
                               [it, rows = std::vector<std::size_t>(ids.begin(), ids.end())](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        Matrix& gt = t.grad_buffer(it);
        for (std::size_t r = 0; r < rows.size(); ++r)
            K().axpy(1.0, g.row(r).data(), gt.row(rows[r]).data(), g.cols());
    });
}

Var mean_rows(Var a) {
    const Matrix& av = a.value();
    if (av.rows() == 0) throw DimensionError("mean_rows of empty tensor");
    Matrix out(1, av.cols());
    const double inv = 1.0 / static_cast<double>(av.rows());
    for (std::size_t r = 0; r < av.rows(); ++r) K().axpy(inv, av.row(r).data(), out.data(), av.cols());
    const auto ia = a.id();
    return a.tape().record(std::move(out), {a}, [ia, inv](Tape& t, std::uint32_t self) {
        const Matrix& g = t.grad_buffer(self);
        Matrix& ga = t.grad_buffer(ia);
        for (std::size_t r = 0; r < ga.rows(); ++r) K().axpy(inv, g.data(), ga.row(r).data(), g.cols());
    });
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DimensionError("cosine_similarity: lengths " + std::to_string(u.size()) + " and " +
                             std::to_string(v.size()));
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw DegenerateVectorError("cosine_similarity of a zero-norm vector");
    return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

}  // namespace clmrc::num
