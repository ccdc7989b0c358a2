#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "schoolrd/error.hpp"

namespace schoolrd {

// Row-major dense matrix, just big enough for the regression designs in this
// project (a handful of columns).
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Solves A x = b in place with partial pivoting. A is k x k.
inline std::vector<double> solve_linear(Matrix A, std::vector<double> b) {
    const std::size_t k = A.rows;
    if (A.cols != k || b.size() != k) throw ConfigError("solve_linear: shape mismatch");
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        double best = std::fabs(A(col, col));
        for (std::size_t r = col + 1; r < k; ++r) {
            const double v = std::fabs(A(r, col));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (!(best > 0.0)) throw DegenerateError("singular design matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < k; ++j) std::swap(A(piv, j), A(col, j));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < k; ++r) {
            const double f = A(r, col) / A(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < k; ++j) A(r, j) -= f * A(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < k; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

// Weighted least squares of y on the columns of X. Returns the coefficient
// vector; weights may be omitted (all-ones).
inline std::vector<double> wls_fit(const Matrix& X, const std::vector<double>& y,
                                   const std::vector<double>* w = nullptr) {
    const std::size_t n = X.rows, k = X.cols;
    if (y.size() != n) throw ConfigError("wls_fit: outcome length mismatch");
    Matrix xtx(k, k);
    std::vector<double> xty(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w ? (*w)[i] : 1.0;
        if (wi == 0.0) continue;
        for (std::size_t p = 0; p < k; ++p) {
            const double xip = X(i, p) * wi;
            xty[p] += xip * y[i];
            for (std::size_t q = 0; q <= p; ++q) xtx(p, q) += xip * X(i, q);
        }
    }
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t q = p + 1; q < k; ++q) xtx(p, q) = xtx(q, p);
    return solve_linear(std::move(xtx), std::move(xty));
}

}  // namespace schoolrd
