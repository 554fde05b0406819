#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lem {

using Vector = std::vector<double>;

// Dense row-major matrix of 64-bit reals. Small and allocation-friendly;
// everything in this toolkit is O(d^2) with d in the tens or low hundreds.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.data); }

// y = A x
inline Vector matvec(const Matrix& a, const Vector& x) {
    require(a.cols == x.size(), "matvec: shape mismatch");
    Vector y(a.rows, 0.0);
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

// y += A x
inline void matvec_add(const Matrix& a, const Vector& x, Vector& y) {
    require(a.cols == x.size() && a.rows == y.size(), "matvec_add: shape mismatch");
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += row[j] * x[j];
        y[i] += s;
    }
}

// y += A^T x. Loop order keeps row-major access on A.
inline void matvec_transpose_add(const Matrix& a, const Vector& x, Vector& y) {
    require(a.rows == x.size() && a.cols == y.size(), "matvec_transpose_add: shape mismatch");
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols; ++j) y[j] += row[j] * xi;
    }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: shape mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

// row-vector times matrix: r^T A
inline Vector vecmat(const Vector& r, const Matrix& a) {
    require(r.size() == a.rows, "vecmat: shape mismatch");
    Vector y(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double ri = r[i];
        if (ri == 0.0) continue;
        const double* row = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < a.cols; ++j) y[j] += ri * row[j];
    }
    return y;
}

// A += g v^T  (outer-product accumulation, the gradient workhorse)
inline void add_outer(Matrix& a, const Vector& g, const Vector& v) {
    require(a.rows == g.size() && a.cols == v.size(), "add_outer: shape mismatch");
    double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols; ++j) row[j] += gi * v[j];
    }
}

inline Vector hadamard(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "hadamard: shape mismatch");
    Vector c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
    return c;
}

inline void axpy(double alpha, const Vector& x, Vector& y) {
    require(x.size() == y.size(), "axpy: shape mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// max absolute row sum
inline double inf_norm(const Matrix& a) {
    double best = 0.0;
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += std::fabs(row[j]);
        if (s > best) best = s;
    }
    return best;
}

// max absolute column sum
inline double one_norm(const Matrix& a) {
    Vector col_sums(a.cols, 0.0);
    const double* row = a.data.data();
    for (std::size_t i = 0; i < a.rows; ++i, row += a.cols)
        for (std::size_t j = 0; j < a.cols; ++j) col_sums[j] += std::fabs(row[j]);
    double best = 0.0;
    for (double s : col_sums)
        if (s > best) best = s;
    return best;
}

inline double inf_norm(const Vector& v) {
    double best = 0.0;
    for (double x : v) {
        const double a = std::fabs(x);
        if (a > best) best = a;
    }
    return best;
}

}  // namespace lem
