#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rexp {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    std::span<double> data() noexcept { return values_; }
    std::span<const double> data() const noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    std::vector<double> col(std::size_t c) const;

    // "rows x cols", used in error messages.
    std::string shape() const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Horizontal concatenation; all blocks must share a row count.
Matrix hconcat(std::span<const Matrix> blocks);
Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows);

bool all_finite(std::span<const double> values) noexcept;
// Throws NumericError naming `what` when a non-finite entry is present.
void require_finite(const Matrix& m, const char* what);

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column k pairs with values[k]
};

/// Eigendecomposition of a symmetric positive semi-definite matrix by cyclic
/// Jacobi rotations. Throws ContractError when the input is not square or not
/// symmetric within 1e-10, NumericError when the sweep cap is exhausted.
SymmetricEigen eig_sym(const Matrix& s);

}  // namespace rexp
