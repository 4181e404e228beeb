#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace clmrc::num {

/// Dense row-major 2-D array of doubles. Vectors are 1 x n matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void fill(double v);
    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
    bool all_finite() const;

    /// "RxC", used in error messages.
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// this += alpha * other
void accumulate(Matrix& into, const Matrix& other, double alpha = 1.0);

/// Plain (non-differentiable) product, used by oracles and inference helpers.
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace clmrc::num
