#include "rexp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rexp/error.hpp"

namespace rexp {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw ShapeError("matrix " + shape() + " given " + std::to_string(values_.size()) +
                         " values");
    }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged initializer rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::vector<double> Matrix::col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

std::string Matrix::shape() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Matrix& m, const char* what) {
    if (!all_finite(m.data())) {
        throw NumericError(std::string(what) + " produced a non-finite entry");
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.data().data() + i * n;
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* src = b.data().data() + k * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += aik * src[j];
        }
    }
    require_finite(out, "matmul");
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: cannot multiply transpose of " + a.shape() + " by " +
                         b.shape());
    }
    Matrix out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* brow = b.data().data() + r * n;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ari = a(r, i);
            if (ari == 0.0) continue;
            double* dst = out.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += ari * brow[j];
        }
    }
    require_finite(out, "matmul");
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: cannot multiply " + a.shape() + " by transpose of " +
                         b.shape());
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            out(i, j) = std::inner_product(arow.begin(), arow.end(), brow.begin(), 0.0);
        }
    }
    require_finite(out, "matmul");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix hconcat(std::span<const Matrix> blocks) {
    if (blocks.empty()) return {};
    const std::size_t rows = blocks.front().rows();
    std::size_t cols = 0;
    for (const auto& b : blocks) {
        if (b.rows() != rows) {
            throw ShapeError("hconcat: block " + b.shape() + " does not have " +
                             std::to_string(rows) + " rows");
        }
        cols += b.cols();
    }
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        auto dst = out.row(r).begin();
        for (const auto& b : blocks) dst = std::copy(b.row(r).begin(), b.row(r).end(), dst);
    }
    return out;
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= a.rows()) throw ShapeError("select_rows: row index out of range");
        std::copy(a.row(rows[i]).begin(), a.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = 1e-10;

double off_diagonal_norm2(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return s;
}

}  // namespace

SymmetricEigen eig_sym(const Matrix& s) {
    if (s.rows() != s.cols()) {
        throw ContractError("eig_sym: matrix " + s.shape() + " is not square");
    }
    require_finite(s, "eig_sym input");
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > kSymmetryTol) {
                throw ContractError("eig_sym: matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
            }

    Matrix a = s;
    // Work on the exactly symmetrized copy.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));
    Matrix v = Matrix::identity(n);

    double total = 0.0;
    for (double x : a.data()) total += x * x;

    bool converged = n < 2;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        const double off = off_diagonal_norm2(a);
        if (off == 0.0 || off <= 1e-30 * total) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Rotation angle annihilating a(p,q): tan(2θ) = 2 a_pq / (a_qq - a_pp).
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged && off_diagonal_norm2(a) > 1e-30 * total) {
        throw NumericError("eig_sym: no convergence after " + std::to_string(kMaxSweeps) +
                           " sweeps");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
    }
    if (n > 0) {
        const double scale = std::max(1.0, std::abs(out.values.front()));
        if (out.values.back() < -kPsdTol * scale) {
            throw ContractError("eig_sym: matrix is not positive semi-definite (eigenvalue " +
                                std::to_string(out.values.back()) + ")");
        }
    }
    return out;
}

}  // namespace rexp
