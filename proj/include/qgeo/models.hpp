#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "qgeo/errors.hpp"
#include "qgeo/field.hpp"
#include "qgeo/geometry.hpp"
#include "qgeo/linalg.hpp"

// The two concrete topological-phase-transition models, both as
// HamiltonianField instances feeding the generic geometry/oracle paths and as
// direct closed-form evaluators used for regression.
//
// Conventions: parameter order (theta, phi, r) for the canonical model and
// (v, w, k) for the SSH chain. The transition loci are theta = pi, r = 1 and
// k = +-pi, v = w, where the coefficient field vanishes.

namespace qgeo {

struct CanonicalParams {
    double theta = 0.0;  // [0, pi]
    double phi = 0.0;    // [0, 2 pi]
    double r = 0.0;
    double h0 = 1.0;

    std::array<double, 3> point() const { return {theta, phi, r}; }

    bool at_transition(double tol = 1e-9) const {
        return std::abs(r - 1.0) < tol && std::abs(theta - std::numbers::pi) < tol;
    }

    void validate() const {
        if (theta < -1e-12 || theta > std::numbers::pi + 1e-12)
            throw std::domain_error("CanonicalParams: theta outside [0, pi]");
        if (phi < -1e-12 || phi > 2.0 * std::numbers::pi + 1e-12)
            throw std::domain_error("CanonicalParams: phi outside [0, 2 pi]");
    }
};

struct SshParams {
    double v = 0.0;  // intracell hopping, >= 0
    double w = 0.0;  // intercell hopping, >= 0
    double k = 0.0;  // quasi-momentum in [-pi, pi]

    std::array<double, 3> point() const { return {v, w, k}; }

    bool at_transition(double tol = 1e-9) const {
        return std::abs(v - w) < tol && std::abs(std::abs(k) - std::numbers::pi) < tol;
    }

    void validate() const {
        if (v < 0.0 || w < 0.0) throw std::domain_error("SshParams: hoppings must be >= 0");
        if (std::abs(k) > std::numbers::pi + 1e-12)
            throw std::domain_error("SshParams: k outside [-pi, pi]");
    }
};

// xi = 1 + r^2 + 2 r cos(theta), rewritten as a sum of non-negative terms.
// The naive three-term sum loses ~4 digits at the transition where xi ~ 1e-12.
inline double xi_canonical(double theta, double r) {
    const double c = std::cos(0.5 * theta);
    if (r >= 0.0) return (1.0 - r) * (1.0 - r) + 4.0 * r * c * c;
    const double s = std::sin(0.5 * theta);
    return (1.0 + r) * (1.0 + r) - 4.0 * r * s * s;
}

// zeta = v^2 + w^2 + 2 v w cos(k), same rewriting (v, w >= 0).
inline double zeta_ssh(double v, double w, double k) {
    const double c = std::cos(0.5 * k);
    return (v - w) * (v - w) + 4.0 * v * w * c * c;
}

// 1 + r cos(theta) without cancellation at (theta, r) -> (pi, 1).
inline double one_plus_r_cos(double theta, double r) {
    const double c = std::cos(0.5 * theta);
    return (1.0 - r) + 2.0 * r * c * c;
}

// r + cos(theta), stable the same way.
inline double r_plus_cos(double theta, double r) {
    const double c = std::cos(0.5 * theta);
    return (r - 1.0) + 2.0 * c * c;
}

// w + v cos(k).
inline double w_plus_v_cos(double v, double w, double k) {
    const double c = std::cos(0.5 * k);
    return (w - v) + 2.0 * v * c * c;
}

/// m = 2 H0 (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta) + r) over
/// parameters (theta, phi, r), with analytic partials.
inline HamiltonianField canonical_field(double h0 = 1.0) {
    auto eval = [h0](std::span<const double> p) -> Vec3 {
        const double th = p[0], ph = p[1], r = p[2];
        return Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th) + r} *
               (2.0 * h0);
    };
    auto partial = [h0](std::span<const double> p, std::size_t l) -> Vec3 {
        const double th = p[0], ph = p[1];
        switch (l) {
            case 0:
                return Vec3{std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph),
                            -std::sin(th)} *
                       (2.0 * h0);
            case 1:
                return Vec3{-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph), 0.0} *
                       (2.0 * h0);
            default:
                return Vec3{0.0, 0.0, 2.0 * h0};
        }
    };
    return HamiltonianField({"theta", "phi", "r"}, std::move(eval), std::move(partial));
}

inline HamiltonianField canonical_field(const CanonicalParams& p) { return canonical_field(p.h0); }

/// nu = 2 (v + w cos(k), w sin(k), 0) over parameters (v, w, k).
inline HamiltonianField ssh_field() {
    auto eval = [](std::span<const double> p) -> Vec3 {
        const double v = p[0], w = p[1], k = p[2];
        return {2.0 * (v + w * std::cos(k)), 2.0 * w * std::sin(k), 0.0};
    };
    auto partial = [](std::span<const double> p, std::size_t l) -> Vec3 {
        const double w = p[1], k = p[2];
        switch (l) {
            case 0:
                return {2.0, 0.0, 0.0};
            case 1:
                return {2.0 * std::cos(k), 2.0 * std::sin(k), 0.0};
            default:
                return {-2.0 * w * std::sin(k), 2.0 * w * std::cos(k), 0.0};
        }
    };
    return HamiltonianField({"v", "w", "k"}, std::move(eval), std::move(partial));
}

inline HamiltonianField ssh_field(const SshParams&) { return ssh_field(); }

inline Vec3 ground_bloch_canonical(const CanonicalParams& p) {
    const auto pt = p.point();
    const Vec3 m = canonical_field(p).eval(pt);
    const double n = m.norm();
    if (n < 1e-12) throw degenerate_error("ground_bloch_canonical: field vanishes at the transition");
    return m / n;
}

inline Vec3 ground_bloch_ssh(const SshParams& p) {
    const auto pt = p.point();
    const Vec3 nu = ssh_field().eval(pt);
    const double n = nu.norm();
    if (n < 1e-12) throw degenerate_error("ground_bloch_ssh: field vanishes at the transition");
    return nu / n;
}

/// Maximal QMTs (g_theta, g_phi, g_r) for an optimal probe orthogonal to the
/// respective gauge direction. Finite limits at the vanishing-field point.
inline std::array<double, 3> max_qmt_canonical(const CanonicalParams& p, double T) {
    const double xi = xi_canonical(p.theta, p.r);
    const double TH = T * p.h0;
    const double sth2 = std::sin(p.theta) * std::sin(p.theta);
    if (xi < 1e-280) return {TH * TH, TH * TH * sth2, TH * TH};
    const double opc = one_plus_r_cos(p.theta, p.r);
    const double rpc = r_plus_cos(p.theta, p.r);
    const double s2 = std::pow(std::sin(TH * std::sqrt(xi)), 2);
    return {TH * TH * p.r * p.r * sth2 / xi + opc * opc * s2 / (xi * xi),
            sth2 * s2 / xi,
            TH * TH * rpc * rpc / xi + sth2 * s2 / (xi * xi)};
}

/// Maximal QMTs (g_v, g_w, g_k). The oscillatory part of g_k carries a w^2
/// factor required by the |Y_k|^2/4 derivation and by the T^2 w^2 peak value.
inline std::array<double, 3> max_qmt_ssh(const SshParams& p, double T) {
    const double z = zeta_ssh(p.v, p.w, p.k);
    if (z < 1e-280) return {T * T, T * T, T * T * p.w * p.w};
    const double sk = std::sin(p.k);
    const double vpw = p.v + p.w * std::cos(p.k);  // v + w cos k
    const double wpv = w_plus_v_cos(p.v, p.w, p.k);
    const double s2 = std::pow(std::sin(T * std::sqrt(z)), 2);
    return {T * T * vpw * vpw / z + p.w * p.w * sk * sk * s2 / (z * z),
            T * T * wpv * wpv / z + p.v * p.v * sk * sk * s2 / (z * z),
            T * T * p.w * p.w * p.v * p.v * sk * sk / z + p.w * p.w * wpv * wpv * s2 / (z * z)};
}

/// Ground-state-probe QMT matrix over (theta, phi, r). Symmetric; the
/// (theta, r) corner is -(1 + r cos th) sin th sin^2 / xi^2, the sign the
/// finite-difference oracle confirms.
inline RealMatrix ground_qmt_matrix_canonical(const CanonicalParams& p, double T) {
    if (p.at_transition())
        throw degenerate_error("ground_qmt_matrix_canonical: probe undefined at the transition");
    const double xi = xi_canonical(p.theta, p.r);
    const double opc = one_plus_r_cos(p.theta, p.r);
    const double sth = std::sin(p.theta);
    const double s2 = std::pow(std::sin(T * p.h0 * std::sqrt(xi)), 2);
    RealMatrix G(3, 3);
    G(0, 0) = opc * opc * s2 / (xi * xi);
    G(1, 1) = sth * sth * s2 / xi;
    G(2, 2) = sth * sth * s2 / (xi * xi);
    G(0, 2) = G(2, 0) = -opc * sth * s2 / (xi * xi);
    return G;
}

/// Ground-state-probe Berry curvature matrix over (theta, phi, r), evaluated
/// from the published closed form. The generic geometry path yields these
/// entries with the opposite overall sign; magnitudes and the zero pattern
/// agree. The (theta, r) pair carries no curvature.
inline RealMatrix ground_berry_matrix_canonical(const CanonicalParams& p, double T) {
    if (p.at_transition())
        throw degenerate_error("ground_berry_matrix_canonical: probe undefined at the transition");
    const double xi = xi_canonical(p.theta, p.r);
    const double opc = one_plus_r_cos(p.theta, p.r);
    const double sth = std::sin(p.theta);
    const double s2 = std::pow(std::sin(T * p.h0 * std::sqrt(xi)), 2);
    const double xi32 = std::pow(xi, 1.5);
    RealMatrix B(3, 3);
    B(0, 1) = 2.0 * opc * sth * s2 / xi32;
    B(1, 0) = -B(0, 1);
    B(1, 2) = 2.0 * sth * sth * s2 / xi32;
    B(2, 1) = -B(1, 2);
    return B;
}

/// Berry matrix time-averaged over the evolution window: the sin^2 factor is
/// replaced by its mean 1/2. Fast path of the numerical coarse graining.
inline RealMatrix coarse_berry_canonical(const CanonicalParams& p) {
    const double xi = xi_canonical(p.theta, p.r);
    if (xi < 1e-280)
        throw degenerate_error("coarse_berry_canonical: undefined at the transition");
    const double opc = one_plus_r_cos(p.theta, p.r);
    const double sth = std::sin(p.theta);
    const double xi32 = std::pow(xi, 1.5);
    RealMatrix B(3, 3);
    B(0, 1) = opc * sth / xi32;
    B(1, 0) = -B(0, 1);
    B(1, 2) = sth * sth / xi32;
    B(2, 1) = -B(1, 2);
    return B;
}

/// Coarse-grained Chern number, sign-function closed form as published
/// (evaluates to -2 inside the non-trivial phase; the quadrature of the
/// coarse Berry entry gives +2, so only the magnitude is asserted anywhere).
inline double coarse_chern_canonical(double r) {
    if (r == 1.0)
        throw transition_point_error("coarse_chern_canonical: undefined at r = 1");
    const auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    return (sgn(r - 1.0) - 1.0) * sgn(r * r - 1.0) / sgn(r - 1.0);
}

/// Ground-state-probe QMT matrix over (v, w, k); rank one, Berry matrix is
/// identically zero for this probe.
inline RealMatrix ground_qmt_matrix_ssh(const SshParams& p, double T) {
    if (p.at_transition())
        throw degenerate_error("ground_qmt_matrix_ssh: probe undefined at the transition");
    const double z = zeta_ssh(p.v, p.w, p.k);
    const double sk = std::sin(p.k);
    const double wpv = w_plus_v_cos(p.v, p.w, p.k);
    const double s2 = std::pow(std::sin(T * std::sqrt(z)), 2);
    const double z2 = z * z;
    RealMatrix G(3, 3);
    G(0, 0) = p.w * p.w * sk * sk * s2 / z2;
    G(0, 1) = G(1, 0) = -p.v * p.w * sk * sk * s2 / z2;
    G(0, 2) = G(2, 0) = -p.w * p.w * wpv * sk * s2 / z2;
    G(1, 1) = p.v * p.v * sk * sk * s2 / z2;
    G(1, 2) = G(2, 1) = p.v * p.w * wpv * sk * s2 / z2;
    G(2, 2) = p.w * p.w * wpv * wpv * s2 / z2;
    return G;
}

}  // namespace qgeo
