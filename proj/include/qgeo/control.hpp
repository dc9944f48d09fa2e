#pragma once

#include <array>
#include <complex>
#include <numeric>
#include <span>
#include <vector>

#include "qgeo/errors.hpp"
#include "qgeo/field.hpp"
#include "qgeo/linalg.hpp"
#include "qgeo/models.hpp"
#include "qgeo/su2.hpp"

// Control-enhanced sensing: the optimal control H_c = -H, the closed-form
// controlled QMT T^2/4 (d_mu X . d_nu X), a two-qubit Trotterized oracle for
// it, and the residual Hamiltonians left over by imperfect adaptive steps.

namespace qgeo {

struct ControlSpec {
    std::vector<double> estimate;  // parameter point the control was tuned to
    Vec3 control_field;            // X_c = -X(estimate)
};

inline ControlSpec make_control(const HamiltonianField& field, std::span<const double> estimate) {
    return {{estimate.begin(), estimate.end()}, -field.eval(estimate)};
}

inline double control_qmt(const HamiltonianField& field, std::span<const double> lam,
                          std::size_t mu, std::size_t nu, double T) {
    if (!(T > 0.0)) throw std::domain_error("control_qmt: T must be positive");
    return 0.25 * T * T * dot(field.partial(lam, mu), field.partial(lam, nu));
}

inline RealMatrix control_qmt_matrix(const HamiltonianField& field, std::span<const double> lam,
                                     double T) {
    const std::size_t n = field.size();
    RealMatrix g(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) g(a, b) = control_qmt(field, lam, a, b, T);
    return g;
}

/// Two-qubit pure state (system x ancilla), amplitudes indexed s*2 + a.
struct TwoQubitState {
    std::array<cplx, 4> amp{};

    static TwoQubitState bell() {
        TwoQubitState s;
        s.amp = {cplx{1.0 / std::numbers::sqrt2, 0}, {}, {}, cplx{1.0 / std::numbers::sqrt2, 0}};
        return s;
    }

    /// Apply U (x) I, the ancilla is untouched.
    TwoQubitState apply_system(const Unitary2& U) const {
        TwoQubitState out;
        for (int a = 0; a < 2; ++a) {
            out.amp[static_cast<std::size_t>(0 + a)] =
                U(0, 0) * amp[static_cast<std::size_t>(a)] + U(0, 1) * amp[static_cast<std::size_t>(2 + a)];
            out.amp[static_cast<std::size_t>(2 + a)] =
                U(1, 0) * amp[static_cast<std::size_t>(a)] + U(1, 1) * amp[static_cast<std::size_t>(2 + a)];
        }
        return out;
    }
};

inline cplx inner(const TwoQubitState& a, const TwoQubitState& b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) s += std::conj(a.amp[i]) * b.amp[i];
    return s;
}

struct TrotterSpec {
    std::size_t steps = 10000;
    double fd_step = 1e-3;  // larger than the scalar-oracle default: the long
                            // step product leaves rounding noise that a small
                            // step would amplify in the difference quotient
};

/// [U_c(t) U(t, lam)]^N with t = T/N and the control tuned to lam0, computed
/// by exact repeated squaring of the identical cell.
inline Unitary2 controlled_composite(const HamiltonianField& field, std::span<const double> lam,
                                     std::span<const double> lam0, double T,
                                     std::size_t steps) {
    if (steps == 0) throw std::domain_error("controlled_composite: steps must be >= 1");
    const double t = T / static_cast<double>(steps);
    const Vec3 xc = -field.eval(lam0);
    const Unitary2 cell = evolve(xc, t) * evolve(field.eval(lam), t);
    Unitary2 W = Unitary2::identity();
    Unitary2 P = cell;
    std::size_t n = steps;
    while (n != 0) {
        if (n & 1u) W = W * P;
        P = P * P;
        n >>= 1;
    }
    return W;
}

/// Finite-difference QGT of the controlled composite on a two-qubit maximally
/// entangled probe. Converges to T^2/4 (d_mu X . d_nu X) as steps grow; the
/// Berry part vanishes on this probe.
inline ComplexMatrix control_qmt_oracle(const HamiltonianField& field, std::span<const double> lam,
                                        double T, const TrotterSpec& spec = {},
                                        const TwoQubitState& probe = TwoQubitState::bell()) {
    if (spec.steps < 100)
        throw std::invalid_argument("control_qmt_oracle: step count too low to converge");
    const std::size_t n = field.size();
    const auto state_at = [&](std::span<const double> p) {
        return probe.apply_system(controlled_composite(field, p, lam, T, spec.steps));
    };
    const TwoQubitState psi0 = state_at(lam);

    std::vector<TwoQubitState> d(n);
    std::vector<double> q(lam.begin(), lam.end());
    for (std::size_t l = 0; l < n; ++l) {
        const double saved = q[l];
        q[l] = saved + spec.fd_step;
        TwoQubitState sp = state_at(q);
        q[l] = saved - spec.fd_step;
        TwoQubitState sm = state_at(q);
        q[l] = saved;
        const cplx op = inner(psi0, sp);
        const cplx om = inner(psi0, sm);
        if (std::abs(op) < 1e-6 || std::abs(om) < 1e-6)
            throw step_too_large_error("control_qmt_oracle: phase gauge lost");
        const cplx fp = std::abs(op) / op;
        const cplx fm = std::abs(om) / om;
        for (std::size_t i = 0; i < 4; ++i)
            d[l].amp[i] = (sp.amp[i] * fp - sm.amp[i] * fm) / (2.0 * spec.fd_step);
    }

    ComplexMatrix chi(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            chi(a, b) = inner(d[a], d[b]) - inner(d[a], psi0) * inner(psi0, d[b]);
    return chi;
}

/// Same oracle with the control acting simultaneously with the coding
/// Hamiltonian (one cell, W = exp(-iT (X(lam) - X(lam0)).J)), free of the
/// product-formula defect. Used where sub-1e-6 agreement is asserted.
inline ComplexMatrix control_qmt_oracle_exact(const HamiltonianField& field,
                                              std::span<const double> lam, double T,
                                              double fd_step = 1e-5,
                                              const TwoQubitState& probe = TwoQubitState::bell()) {
    const std::size_t n = field.size();
    const Vec3 x0 = field.eval(lam);
    const auto state_at = [&](std::span<const double> p) {
        return probe.apply_system(evolve(field.eval(p) - x0, T));
    };
    const TwoQubitState psi0 = state_at(lam);
    std::vector<TwoQubitState> d(n);
    std::vector<double> q(lam.begin(), lam.end());
    for (std::size_t l = 0; l < n; ++l) {
        const double saved = q[l];
        q[l] = saved + fd_step;
        TwoQubitState sp = state_at(q);
        q[l] = saved - fd_step;
        TwoQubitState sm = state_at(q);
        q[l] = saved;
        const cplx fp = std::abs(inner(psi0, sp)) / inner(psi0, sp);
        const cplx fm = std::abs(inner(psi0, sm)) / inner(psi0, sm);
        for (std::size_t i = 0; i < 4; ++i)
            d[l].amp[i] = (sp.amp[i] * fp - sm.amp[i] * fm) / (2.0 * fd_step);
    }
    ComplexMatrix chi(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            chi(a, b) = inner(d[a], d[b]) - inner(d[a], psi0) * inner(psi0, d[b]);
    return chi;
}

/// Residual coefficient field after the accumulated adaptive steps for the
/// canonical model; exactly zero when the steps close both gaps.
inline Vec3 residual_canonical(double theta0, double phi0, double r0, double sum_dtheta,
                               double sum_dr, double h0 = 1.0) {
    const double th = theta0 + sum_dtheta;
    const double r = r0 + sum_dr;
    const std::array<double, 3> p{th, phi0, r};
    return canonical_field(h0).eval(p);
}

/// SSH counterpart: the field at (v0 + sum dv, w0, k0 + sum dk).
inline Vec3 residual_ssh(double k0, double v0, double w0, double sum_dk, double sum_dv) {
    const std::array<double, 3> p{v0 + sum_dv, w0, k0 + sum_dk};
    return ssh_field().eval(p);
}

}  // namespace qgeo
