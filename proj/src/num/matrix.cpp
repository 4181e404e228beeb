#include "clmrc/num/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "clmrc/errors.hpp"
#include "clmrc/kernels.hpp"

namespace clmrc::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols)
        throw DimensionError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " given " + std::to_string(data_.size()) + " values");
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw DimensionError("ragged row list");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void accumulate(Matrix& into, const Matrix& other, double alpha) {
    if (!into.same_shape(other))
        throw DimensionError("accumulate " + other.shape_string() + " into " + into.shape_string());
    kernels::active().axpy(alpha, other.data(), into.data(), into.size());
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul " + a.shape_string() + " by " + b.shape_string());
    Matrix c(a.rows(), b.cols());
    kernels::active().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw DimensionError("compare " + a.shape_string() + " with " + b.shape_string());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace clmrc::num
