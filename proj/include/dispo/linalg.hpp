#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dispo {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);

/// Right singular system of A (m x n): A V = U diag(s).
struct RightSingularSystem {
    std::vector<double> singular_values;  // descending, length n
    Matrix v;                             // n x n, column k pairs with singular_values[k]
};

/// One-sided (Hestenes) Jacobi SVD. Rotations are applied to column pairs of A
/// until every pair is orthogonal to within `tolerance` (relative); V
/// accumulates the rotations and is orthogonal to machine precision.
RightSingularSystem right_singular_system(const Matrix& a, double tolerance = 1e-15, int max_sweeps = 100);

}  // namespace dispo
