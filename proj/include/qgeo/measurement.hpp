#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "qgeo/errors.hpp"
#include "qgeo/field.hpp"
#include "qgeo/geometry.hpp"
#include "qgeo/linalg.hpp"
#include "qgeo/oracle.hpp"

// Optimal projective measurement for the (theta, r) pair of the canonical
// model: weak-commutation check, Gram-Schmidt projector construction, the
// classical Fisher information matrix of the outcome probabilities, and the
// pure-state QFIM it is compared against.
//
// The Hilbert space is two dimensional, so the orthogonal complement of the
// encoded state is a single ray: with the ground-state probe the second
// derivative vector is parallel to the first and the genuine Gram-Schmidt
// residual is the null vector. The third outcome is then reported as
// degenerate and excluded; the remaining pair {encoded state, first
// orthogonal ray} is a complete projective measurement.

namespace qgeo {

/// Imaginary coefficient of the weak commutation condition for a parameter
/// pair: (|Y_mu||Y_nu|/2) (e_mu x e_nu) . r_in. Zero iff the pair admits a
/// compatible optimal measurement on this probe.
inline double weak_commutation(const HamiltonianField& field, std::span<const double> lam,
                               std::size_t mu, std::size_t nu, double T, const Vec3& probe) {
    const GaugeFactor fm = gauge_factor(field, lam, mu, T);
    const GaugeFactor fn = gauge_factor(field, lam, nu, T);
    return 0.5 * dot(cross(fm.vector(), fn.vector()), probe);
}

struct ProjectorSet {
    QubitState encoded;               // Upsilon_1, the state itself
    QubitState raw2, raw3;            // unnormalized as constructed
    QubitState hat2;                  // normalized Upsilon_2
    std::optional<QubitState> hat3;   // absent when the residual is null
    cplx gs_coeff{0.0, 0.0};          // <U2|d_r psi>/<U2|U2>
    bool third_degenerate = false;
};

/// Closed-form magnitude of the Gram-Schmidt mixing coefficient,
/// sin(theta)/(1 + r cos(theta)). The computed coefficient carries the
/// opposite sign (it equals g_theta_r / g_theta_theta, which is negative).
inline double gs_coefficient_closed_form(double theta, double r) {
    const double den = 1.0 + r * std::cos(theta);
    if (std::abs(den) < 1e-12)
        throw coefficient_singularity_error("gs coefficient: 1 + r cos(theta) = 0");
    return std::sin(theta) / den;
}

/// Upsilon_1 = psi, Upsilon_2 = d_theta psi, Upsilon_3 = Gram-Schmidt residual
/// of d_r psi against Upsilon_2. Derivatives must come from the fixed phase
/// gauge of the oracle module.
inline ProjectorSet build_projectors(const QubitState& encoded, const QubitState& d_theta,
                                     const QubitState& d_r) {
    ProjectorSet s;
    s.encoded = encoded.normalized();
    s.raw2 = d_theta;
    const double n2sq = d_theta.norm2();
    if (n2sq < 1e-280) throw degenerate_error("build_projectors: d_theta state vanishes");
    s.gs_coeff = inner(d_theta, d_r) / n2sq;
    s.raw3 = {d_r.amp0 - s.gs_coeff * d_theta.amp0, d_r.amp1 - s.gs_coeff * d_theta.amp1};
    s.hat2 = s.raw2.normalized();
    const double rel = s.raw3.norm() / std::max(d_r.norm(), 1e-300);
    s.third_degenerate = rel < 1e-6;
    if (!s.third_degenerate) s.hat3 = s.raw3.normalized();
    return s;
}

/// Convenience: projectors for the (theta, r) pair at a point, ground-state
/// probe by default.
inline ProjectorSet build_projectors_at(const HamiltonianField& field, std::span<const double> lam,
                                        const QubitState& probe, double T,
                                        const FdSpec& spec = {}) {
    const QubitState psi = encoded_state(field, lam, probe, T);
    const auto d = state_derivatives(field, lam, probe, T, spec);
    return build_projectors(psi, d[0], d[2]);
}

struct CfimResult {
    RealMatrix fim;                 // 2x2 over (theta, r)
    double prob_sum = 0.0;          // sum of included outcome probabilities
    std::vector<int> dropped;       // outcomes removed (degenerate or no information)
    std::vector<int> limit_terms;   // outcomes evaluated through the 0/0 limit
};

namespace detail {

inline std::vector<QubitState> included_projectors(const ProjectorSet& projs) {
    std::vector<QubitState> out{projs.encoded, projs.hat2};
    if (projs.hat3) out.push_back(*projs.hat3);
    return out;
}

}  // namespace detail

/// Classical Fisher information matrix of the projector outcomes over
/// (theta, r): sum_k d_l P d_m P / P with dP by central differences.
/// Outcomes whose probability vanishes at `lam` are evaluated as the limit of
/// the quotient along `direction` (l'Hopital through the derivative
/// overlaps); if the limit carries no information either, the term is
/// dropped and recorded.
inline CfimResult cfim(const ProjectorSet& projs, const HamiltonianField& field,
                       std::span<const double> lam, const QubitState& probe, double T,
                       const FdSpec& spec = {},
                       std::array<double, 2> direction = {std::numbers::sqrt2 / 2.0,
                                                          std::numbers::sqrt2 / 2.0}) {
    spec.validate();
    const std::array<std::size_t, 2> idx{0, 2};  // theta, r
    const auto prob = [&](const QubitState& proj, std::span<const double> p) {
        return std::norm(inner(proj, encoded_state(field, p, probe, T)));
    };

    CfimResult res;
    res.fim = RealMatrix(2, 2);
    const auto projectors = detail::included_projectors(projs);
    if (projs.third_degenerate) res.dropped.push_back(3);

    std::vector<QubitState> derivs;  // lazily filled for the limit branch
    std::vector<double> q(lam.begin(), lam.end());
    for (std::size_t k = 0; k < projectors.size(); ++k) {
        const QubitState& proj = projectors[k];
        const double P = prob(proj, lam);
        res.prob_sum += P;
        if (P > 1e-12) {
            std::array<double, 2> g{};
            for (std::size_t a = 0; a < 2; ++a) {
                const double saved = q[idx[a]];
                q[idx[a]] = saved + spec.h;
                const double pp = prob(proj, q);
                q[idx[a]] = saved - spec.h;
                const double pm = prob(proj, q);
                q[idx[a]] = saved;
                g[a] = (pp - pm) / (2.0 * spec.h);
            }
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t b = 0; b < 2; ++b) res.fim(a, b) += g[a] * g[b] / P;
            continue;
        }
        // 0/0 at the construction point: both P and dP vanish, the quotient
        // has the finite directional limit 4 Re[conj(z_a) Zh] Re[conj(z_b) Zh]
        // with z_a = <proj|d_a psi> and Zh the unit phase of z . direction.
        if (derivs.empty()) derivs = state_derivatives(field, lam, probe, T, spec);
        const cplx za = inner(proj, derivs[idx[0]]);
        const cplx zb = inner(proj, derivs[idx[1]]);
        const cplx Z = direction[0] * za + direction[1] * zb;
        const double scale = std::max({std::abs(za), std::abs(zb), 1e-300});
        if (std::abs(Z) < 1e-9 * scale || scale < 1e-12) {
            res.dropped.push_back(static_cast<int>(k) + 1);
            continue;
        }
        res.limit_terms.push_back(static_cast<int>(k) + 1);
        const cplx Zh = Z / std::abs(Z);
        const std::array<double, 2> u{2.0 * std::real(std::conj(za) * Zh),
                                      2.0 * std::real(std::conj(zb) * Zh)};
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) res.fim(a, b) += u[a] * u[b];
    }
    bool any = false;
    for (double x : res.fim.v) any = any || x != 0.0;
    if (!any && res.dropped.size() >= projectors.size())
        throw degenerate_error("cfim: all outcome probabilities degenerate");
    return res;
}

/// Pure-state QFIM over (theta, r): 4 Re<d_l psi|d_m psi> + 4 <d_l psi|psi><d_m psi|psi>.
inline RealMatrix qfim_pure(const QubitState& encoded, std::span<const QubitState> derivatives) {
    const std::size_t n = derivatives.size();
    RealMatrix F(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const cplx da_psi = inner(derivatives[a], encoded);
            const cplx db_psi = inner(derivatives[b], encoded);
            F(a, b) = 4.0 * std::real(inner(derivatives[a], derivatives[b])) +
                      4.0 * std::real(da_psi * db_psi);
        }
    return F;
}

inline RealMatrix qfim_pure_at(const HamiltonianField& field, std::span<const double> lam,
                               const QubitState& probe, double T, const FdSpec& spec = {}) {
    const QubitState psi = encoded_state(field, lam, probe, T);
    const auto d = state_derivatives(field, lam, probe, T, spec);
    const std::vector<QubitState> dr{d[0], d[2]};
    return qfim_pure(psi, dr);
}

/// Optimality-condition residuals |Im[<d_l psi|U_k><U_k|psi dir>]| / |<U_k|psi dir>|
/// in the limit toward the construction point, reported per projector k != 1
/// and parameter l in (theta, r). All residuals ~ 0 iff the CFIM reaches the
/// QFIM.
inline std::vector<double> d7_residuals(const ProjectorSet& projs, const HamiltonianField& field,
                                        std::span<const double> lam, const QubitState& probe,
                                        double T, const FdSpec& spec = {},
                                        std::array<double, 2> direction = {
                                            std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0}) {
    const auto d = state_derivatives(field, lam, probe, T, spec);
    std::vector<double> out;
    std::vector<QubitState> ks{projs.hat2};
    if (projs.hat3) ks.push_back(*projs.hat3);
    for (const QubitState& proj : ks) {
        const cplx za = inner(proj, d[0]);
        const cplx zb = inner(proj, d[2]);
        const cplx Z = direction[0] * za + direction[1] * zb;
        if (std::abs(Z) < 1e-300) {
            out.push_back(0.0);
            out.push_back(0.0);
            continue;
        }
        const cplx Zh = Z / std::abs(Z);
        out.push_back(std::abs(std::imag(std::conj(za) * Zh)));
        out.push_back(std::abs(std::imag(std::conj(zb) * Zh)));
    }
    return out;
}

}  // namespace qgeo
