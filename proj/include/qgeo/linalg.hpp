#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qgeo {

/// Dense row-major real matrix, sized for the small parameter counts here.
struct RealMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    RealMatrix operator*(double s) const {
        RealMatrix m = *this;
        for (auto& x : m.v) x *= s;
        return m;
    }
    RealMatrix operator-(const RealMatrix& o) const {
        RealMatrix m = *this;
        for (std::size_t i = 0; i < v.size(); ++i) m.v[i] -= o.v[i];
        return m;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

struct ComplexMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<std::complex<double>> v;

    ComplexMatrix() = default;
    ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c) {}

    std::complex<double>& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    std::complex<double> operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    RealMatrix real() const {
        RealMatrix m(rows, cols);
        for (std::size_t i = 0; i < v.size(); ++i) m.v[i] = v[i].real();
        return m;
    }
    RealMatrix imag() const {
        RealMatrix m(rows, cols);
        for (std::size_t i = 0; i < v.size(); ++i) m.v[i] = v[i].imag();
        return m;
    }
};

struct SymEigen {
    std::vector<double> values;  // ascending
    RealMatrix vectors;          // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi diagonalization of a symmetric matrix. Deterministic and
/// accurate enough for the n <= 4 matrices used in the reports.
inline SymEigen sym_eigen(const RealMatrix& A0) {
    if (A0.rows != A0.cols) throw std::invalid_argument("sym_eigen: matrix not square");
    const std::size_t n = A0.rows;
    RealMatrix A = A0;
    RealMatrix V(n, n);
    for (std::size_t i = 0; i < n; ++i) V(i, i) = 1.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += A(p, q) * A(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double tau = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen e;
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.values[i] = A(i, i);
    e.vectors = RealMatrix(n, n);
    // sort ascending, reordering columns
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (e.values[idx[j]] < e.values[idx[i]]) std::swap(idx[i], idx[j]);
    std::vector<double> sorted(n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted[j] = e.values[idx[j]];
        for (std::size_t i = 0; i < n; ++i) e.vectors(i, j) = V(i, idx[j]);
    }
    e.values = std::move(sorted);
    return e;
}

/// Eigendecomposition pseudo-inverse of a symmetric matrix. Eigenvalues with
/// |value| <= rank_tol * max|value| are treated as exact zeros; their indices
/// (in ascending eigenvalue order) are reported through `null_directions`.
inline RealMatrix pseudo_inverse_sym(const RealMatrix& A, double rank_tol = 1e-10,
                                     std::vector<std::size_t>* null_directions = nullptr) {
    const SymEigen e = sym_eigen(A);
    const std::size_t n = A.rows;
    double vmax = 0.0;
    for (double x : e.values) vmax = std::max(vmax, std::abs(x));
    const double cut = rank_tol * std::max(vmax, 1e-300);
    RealMatrix P(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(e.values[k]) <= cut) {
            if (null_directions) null_directions->push_back(k);
            continue;
        }
        const double inv = 1.0 / e.values[k];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) P(i, j) += inv * e.vectors(i, k) * e.vectors(j, k);
    }
    return P;
}

}  // namespace qgeo
