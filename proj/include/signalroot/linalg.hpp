#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace signalroot {

// Small dense row-major matrix.  Everything in this project is at most
// (2n+1) x (2n+1) with n ~ tens of channels, so no attempt is made at
// blocking or factorization reuse.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    // Contiguous block [r0, r0+nr) x [c0, c0+nc).
    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        Matrix out(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j)
                out(i, j) = (*this)(r0 + i, c0 + j);
        return out;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Determinant as sign * exp(log_abs); sign == 0 marks a (numerically)
// singular matrix.
struct LogDet {
    int sign = 0;
    double log_abs = -std::numeric_limits<double>::infinity();

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

// LU with partial pivoting, sign of the determinant tracked exactly through
// the row swaps.  Works on a copy; matrices here are tiny.
inline LogDet lu_logdet(Matrix a) {
    const std::size_t n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("lu_logdet: matrix not square");
    int sign = 1;
    double log_abs = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::fabs(a(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (!(best > 0.0) || !std::isfinite(best)) return LogDet{};
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            sign = -sign;
        }
        const double pivot = a(k, k);
        if (pivot < 0.0) sign = -sign;
        log_abs += std::log(std::fabs(pivot));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = a(i, k) / pivot;
            a(i, k) = m;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
        }
    }
    if (!std::isfinite(log_abs)) return LogDet{};
    return LogDet{sign, log_abs};
}

// Cholesky probe; used to assert positive definiteness of information
// matrices at interior maxima.
inline bool is_positive_definite(const Matrix& m) {
    const std::size_t n = m.rows();
    if (n != m.cols()) return false;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return true;
}

// Solve the 2x2 system a*x = b in place; returns false when |det| underflows
// relative to the matrix scale.
inline bool solve2x2(const double a[2][2], const double b[2], double x[2]) {
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double scale = std::fabs(a[0][0]) + std::fabs(a[0][1]) + std::fabs(a[1][0]) + std::fabs(a[1][1]);
    if (!std::isfinite(det) || std::fabs(det) <= 1e-14 * scale * scale) return false;
    x[0] = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
    x[1] = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    return true;
}

}  // namespace signalroot
