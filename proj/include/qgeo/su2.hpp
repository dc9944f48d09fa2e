#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "qgeo/errors.hpp"
#include "qgeo/vec3.hpp"

// Exact arithmetic of SU(2) states and evolutions, hbar = 1, spin generators
// J = sigma/2. Everything here is an immutable value type.

namespace qgeo {

using cplx = std::complex<double>;

/// Normalized two-component pure state.
struct QubitState {
    cplx amp0{1.0, 0.0};
    cplx amp1{0.0, 0.0};

    double norm2() const { return std::norm(amp0) + std::norm(amp1); }
    double norm() const { return std::sqrt(norm2()); }

    QubitState normalized() const {
        const double n = norm();
        if (n == 0.0) throw std::domain_error("QubitState: zero vector");
        return {amp0 / n, amp1 / n};
    }

    /// Global phase fixed so amp0 is real and non-negative; when amp0 ~ 0 the
    /// phase is carried by amp1 instead (made real positive).
    QubitState canonical() const {
        const QubitState s = normalized();
        const cplx ref = (std::abs(s.amp0) > 1e-14) ? s.amp0 : s.amp1;
        const cplx phase = std::abs(ref) / ref;
        return {s.amp0 * phase, s.amp1 * phase};
    }

    Vec3 bloch() const {
        const cplx c = std::conj(amp0) * amp1;
        return {2.0 * c.real(), 2.0 * c.imag(), std::norm(amp0) - std::norm(amp1)};
    }
};

inline cplx inner(const QubitState& a, const QubitState& b) {
    return std::conj(a.amp0) * b.amp0 + std::conj(a.amp1) * b.amp1;
}

/// 2x2 complex matrix, row major.
struct Unitary2 {
    std::array<cplx, 4> u{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{1, 0}};

    static Unitary2 identity() { return {}; }

    cplx& operator()(int r, int c) { return u[static_cast<std::size_t>(2 * r + c)]; }
    const cplx& operator()(int r, int c) const { return u[static_cast<std::size_t>(2 * r + c)]; }

    Unitary2 operator*(const Unitary2& o) const {
        Unitary2 p;
        p.u = {u[0] * o.u[0] + u[1] * o.u[2], u[0] * o.u[1] + u[1] * o.u[3],
               u[2] * o.u[0] + u[3] * o.u[2], u[2] * o.u[1] + u[3] * o.u[3]};
        return p;
    }

    Unitary2 adjoint() const {
        Unitary2 a;
        a.u = {std::conj(u[0]), std::conj(u[2]), std::conj(u[1]), std::conj(u[3])};
        return a;
    }

    QubitState apply(const QubitState& s) const {
        return {u[0] * s.amp0 + u[1] * s.amp1, u[2] * s.amp0 + u[3] * s.amp1};
    }

    cplx det() const { return u[0] * u[3] - u[1] * u[2]; }

    /// Max entrywise deviation of U U^dag from the identity.
    double unitarity_defect() const {
        const Unitary2 p = *this * adjoint();
        double d = 0.0;
        d = std::max(d, std::abs(p.u[0] - cplx{1, 0}));
        d = std::max(d, std::abs(p.u[1]));
        d = std::max(d, std::abs(p.u[2]));
        d = std::max(d, std::abs(p.u[3] - cplx{1, 0}));
        return d;
    }
};

/// X . sigma as an explicit matrix.
inline Unitary2 pauli_dot(const Vec3& v) {
    Unitary2 m;
    m.u = {cplx{v.z, 0}, cplx{v.x, -v.y}, cplx{v.x, v.y}, cplx{-v.z, 0}};
    return m;
}

/// exp(-i T X.J) = cos(|X|T/2) I - i sin(|X|T/2) (Xhat . sigma).
/// The |X| -> 0 limit is the identity continuation, handled by the sinc guard.
inline Unitary2 evolve(const Vec3& X, double T) {
    if (!X.finite() || !std::isfinite(T)) throw std::domain_error("evolve: non-finite input");
    if (T < 0.0) throw std::domain_error("evolve: negative duration");
    const double x = X.norm();
    const double half = 0.5 * x * T;
    // sin(|X|T/2)/|X| stays finite as |X| -> 0
    double s;
    if (half < 1e-4) {
        const double h2 = half * half;
        s = 0.5 * T * (1.0 - h2 / 6.0 + h2 * h2 / 120.0);
    } else {
        s = std::sin(half) / x;
    }
    const double c = std::cos(half);
    Unitary2 U;
    U.u = {cplx{c, -s * X.z}, cplx{-s * X.y, -s * X.x}, cplx{s * X.y, -s * X.x}, cplx{c, s * X.z}};
    return U;
}

inline QubitState state_from_bloch(const Vec3& r) {
    if (!r.finite()) throw std::domain_error("state_from_bloch: non-finite Bloch vector");
    if (std::abs(r.norm() - 1.0) > 1e-9)
        throw std::domain_error("state_from_bloch: Bloch vector must be unit length");
    const double ct = std::clamp(r.z, -1.0, 1.0);
    const double theta = std::acos(ct);
    const double phi = std::atan2(r.y, r.x);
    return QubitState{std::cos(0.5 * theta), std::sin(0.5 * theta) * std::polar(1.0, phi)}
        .canonical();
}

inline Vec3 bloch(const QubitState& s) { return s.normalized().bloch(); }

/// Eigenstate of X.J whose Bloch vector is +X/|X| (eigenvalue +|X|/2).
inline QubitState ground_state(const Vec3& X) {
    if (!X.finite()) throw std::domain_error("ground_state: non-finite field");
    const double x = X.norm();
    if (x < 1e-300)
        throw degenerate_error("ground_state: |X| = 0, eigenbasis undefined at the transition");
    return state_from_bloch(X / x);
}

}  // namespace qgeo
