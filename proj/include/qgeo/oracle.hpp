#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qgeo/errors.hpp"
#include "qgeo/field.hpp"
#include "qgeo/linalg.hpp"
#include "qgeo/su2.hpp"

// Independent brute-force verification path: the QGT assembled directly from
// finite-difference derivatives of the evolved state, bypassing every closed
// form in geometry.hpp.

namespace qgeo {

struct FdSpec {
    enum class Scheme { central, richardson };
    double h = 1e-5;
    Scheme scheme = Scheme::central;

    void validate() const {
        if (!(h >= 1e-9 && h <= 1e-2))
            throw std::invalid_argument("FdSpec: step must lie in [1e-9, 1e-2]");
    }
};

inline QubitState encoded_state(const HamiltonianField& field, std::span<const double> lam,
                                const QubitState& probe, double T) {
    return evolve(field.eval(lam), T).apply(probe);
}

namespace detail {

// Multiply by the phase that makes <ref|s> real positive. Naive differencing
// of arbitrarily phased states is not numerically stable even though the QGT
// itself is gauge invariant.
inline QubitState fix_phase(const QubitState& ref, const QubitState& s) {
    const cplx ov = inner(ref, s);
    if (std::abs(ov) < 0.1)
        throw step_too_large_error("finite difference: neighbouring state nearly orthogonal");
    const cplx phase = std::abs(ov) / ov;
    return {s.amp0 * phase, s.amp1 * phase};
}

inline QubitState central_derivative(const HamiltonianField& field, std::span<const double> lam,
                                     const QubitState& probe, double T, std::size_t l, double h,
                                     const QubitState& psi0) {
    std::vector<double> q(lam.begin(), lam.end());
    q[l] += h;
    const QubitState sp = fix_phase(psi0, encoded_state(field, q, probe, T));
    q[l] -= 2.0 * h;
    const QubitState sm = fix_phase(psi0, encoded_state(field, q, probe, T));
    return {(sp.amp0 - sm.amp0) / (2.0 * h), (sp.amp1 - sm.amp1) / (2.0 * h)};
}

}  // namespace detail

/// Phase-gauge-fixed derivative states |d_l psi> for every parameter.
inline std::vector<QubitState> state_derivatives(const HamiltonianField& field,
                                                 std::span<const double> lam,
                                                 const QubitState& probe, double T,
                                                 const FdSpec& spec = {}) {
    spec.validate();
    const QubitState psi0 = encoded_state(field, lam, probe, T);
    std::vector<QubitState> out(field.size());
    for (std::size_t l = 0; l < field.size(); ++l) {
        const QubitState d1 = detail::central_derivative(field, lam, probe, T, l, spec.h, psi0);
        if (spec.scheme == FdSpec::Scheme::central) {
            out[l] = d1;
        } else {
            const QubitState d2 =
                detail::central_derivative(field, lam, probe, T, l, 0.5 * spec.h, psi0);
            out[l] = {(4.0 * d2.amp0 - d1.amp0) / 3.0, (4.0 * d2.amp1 - d1.amp1) / 3.0};
        }
    }
    return out;
}

/// chi_{mu nu} = <d_mu psi|d_nu psi> - <d_mu psi|psi><psi|d_nu psi>.
inline ComplexMatrix qgt_fd(const HamiltonianField& field, std::span<const double> lam,
                            const QubitState& probe, double T, const FdSpec& spec = {}) {
    const QubitState psi0 = encoded_state(field, lam, probe, T);
    const std::vector<QubitState> d = state_derivatives(field, lam, probe, T, spec);
    const std::size_t n = field.size();
    ComplexMatrix chi(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            chi(a, b) = inner(d[a], d[b]) - inner(d[a], psi0) * inner(psi0, d[b]);
    return chi;
}

}  // namespace qgeo
