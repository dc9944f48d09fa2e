#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "qgeo/errors.hpp"
#include "qgeo/field.hpp"
#include "qgeo/linalg.hpp"
#include "qgeo/vec3.hpp"

// Closed-form gauge potentials and the geometric / metrological quantities
// they generate, for an arbitrary SU(2) coefficient field X(lambda):
// quantum geometric tensor, quantum metric, Berry curvature, figure of merit,
// Fisher information and Cramer-Rao bound, plus the quadratures for the
// topological invariants.

namespace qgeo {

/// Decomposition of the gauge potential for one parameter: A = -|Y| e.J with
/// magnitude |Y| >= 0 and unit direction e.
struct GaugeFactor {
    double magnitude = 0.0;
    Vec3 direction{0.0, 0.0, 0.0};

    Vec3 vector() const { return direction * magnitude; }
};

namespace detail {

// (sin(Tx) - Tx)/x^3 and (1 - cos(Tx))/x^2 with series branches below
// x = 1e-6; the limits are finite and exactly where the transitions live.
inline double sin_coeff(double x, double T) {
    const double u = T * x;
    if (std::abs(u) < 1e-6 * std::max(T, 1.0)) {
        const double u2 = u * u;
        return T * T * T * (-1.0 / 6.0 + u2 / 120.0 - u2 * u2 / 5040.0);
    }
    return (std::sin(u) - u) / (x * x * x);
}

inline double cos_coeff(double x, double T) {
    const double u = T * x;
    if (std::abs(u) < 1e-6 * std::max(T, 1.0)) {
        const double u2 = u * u;
        return T * T * (0.5 - u2 / 24.0 + u2 * u2 / 720.0);
    }
    return (1.0 - std::cos(u)) / (x * x);
}

// Unnormalized gauge vector |Y_l| e_l. The v_{l,1}, v_{l,2} unit vectors of
// the closed form are 0/0 at sin(alpha) = 0; multiplying through by the
// |dX| sin(alpha) prefactors gives the algebraically identical cross-product
// form below, which has no removable singularity.
inline Vec3 gauge_vector(const Vec3& X, const Vec3& dX, double T) {
    const double x = X.norm();
    const Vec3 c1 = cross(X, dX);
    const Vec3 c2 = cross(X, c1);
    return dX * (-T) + c2 * sin_coeff(x, T) + c1 * cos_coeff(x, T);
}

}  // namespace detail

inline GaugeFactor gauge_factor(const HamiltonianField& field, std::span<const double> lam,
                                std::size_t l, double T) {
    if (!(T > 0.0)) throw std::domain_error("gauge_factor: T must be positive");
    const Vec3 X = field.eval(lam);
    const Vec3 dX = field.partial(lam, l);
    if (!X.finite() || !dX.finite()) throw std::domain_error("gauge_factor: non-finite field");
    const Vec3 Y = detail::gauge_vector(X, dX, T);
    GaugeFactor g;
    g.magnitude = Y.norm();
    if (g.magnitude > 1e-12) g.direction = Y / g.magnitude;
    return g;
}

/// QGT entry chi_{mu nu} for a probe with unit Bloch vector r:
/// |Y_mu||Y_nu|/4 [ e_mu.e_nu - (e_mu.r)(e_nu.r) + i (e_mu x e_nu).r ].
/// Real part is the metric, imaginary part is -Omega/2.
inline std::complex<double> qgt_pair(const GaugeFactor& mu, const GaugeFactor& nu,
                                     const Vec3& probe) {
    if (std::abs(probe.norm() - 1.0) > 1e-9)
        throw std::domain_error("qgt_pair: probe Bloch vector must be unit length");
    const Vec3 ym = mu.vector();
    const Vec3 yn = nu.vector();
    const double re = 0.25 * (dot(ym, yn) - dot(ym, probe) * dot(yn, probe));
    const double im = 0.25 * dot(cross(ym, yn), probe);
    return {re, im};
}

inline double qmt_pair(const GaugeFactor& mu, const GaugeFactor& nu, const Vec3& probe) {
    return qgt_pair(mu, nu, probe).real();
}

inline double berry_pair(const GaugeFactor& mu, const GaugeFactor& nu, const Vec3& probe) {
    return -2.0 * qgt_pair(mu, nu, probe).imag();
}

/// Figure of merit r_{mu nu} = |Omega| / (2 sqrt(g_mm g_nn - g_mn^2)) in [0,1].
/// 0/0 (both the curvature and the determinant below 1e-12) resolves to 0.
inline double fom(double g_mm, double g_nn, double g_mn, double omega) {
    const double det = g_mm * g_nn - g_mn * g_mn;
    if (det < 0.25 * omega * omega - 1e-9)
        throw inconsistency_error("fom: determinant below Omega^2/4, uncertainty relation violated");
    if (std::abs(omega) < 1e-12 && det < 1e-12) return 0.0;
    const double r = 0.5 * std::abs(omega) / std::sqrt(std::max(det, 1e-300));
    return std::clamp(r, 0.0, 1.0);
}

/// Per-point bundle of all geometric quantities over the field's parameters.
struct GeometryReport {
    std::vector<std::string> names;
    ComplexMatrix qgt;
    RealMatrix qmt;    // G
    RealMatrix berry;  // Omega
    RealMatrix fom;    // |Omega|-based, symmetric, zero diagonal
    RealMatrix qfim;   // F = 4 G
    RealMatrix qcrb;   // pinv(F)/M
    int repetitions = 1;
    std::vector<std::size_t> singular_directions;  // rank-deficient eigendirections of F
};

inline GeometryReport geometry_report(const HamiltonianField& field, std::span<const double> lam,
                                      const Vec3& probe, double T, int M = 1) {
    if (M < 1) throw std::domain_error("geometry_report: repetitions must be >= 1");
    const std::size_t n = field.size();
    std::vector<GaugeFactor> f(n);
    for (std::size_t l = 0; l < n; ++l) f[l] = gauge_factor(field, lam, l, T);

    GeometryReport rep;
    rep.names = field.parameter_names();
    rep.repetitions = M;
    rep.qgt = ComplexMatrix(n, n);
    rep.qmt = RealMatrix(n, n);
    rep.berry = RealMatrix(n, n);
    rep.fom = RealMatrix(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const auto chi = qgt_pair(f[a], f[b], probe);
            rep.qgt(a, b) = chi;
            rep.qmt(a, b) = chi.real();
            rep.berry(a, b) = -2.0 * chi.imag();
        }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            rep.fom(a, b) = (a == b) ? 0.0
                                     : fom(rep.qmt(a, a), rep.qmt(b, b), rep.qmt(a, b),
                                           rep.berry(a, b));
    rep.qfim = rep.qmt * 4.0;
    rep.qcrb = pseudo_inverse_sym(rep.qfim, 1e-10, &rep.singular_directions) * (1.0 / M);
    return rep;
}

struct Rectangle {
    double lo1, hi1, lo2, hi2;
};

struct GridSpec {
    std::size_t n1 = 256;
    std::size_t n2 = 512;
};

struct QuadratureResult {
    double estimate = 0.0;          // refined (doubled-grid) value
    double refinement_delta = 0.0;  // |refined - coarse|
    bool converged = true;          // refinement_delta <= 1e-3
};

namespace detail {

inline double trapezoid_2d(const std::function<double(double, double)>& f, const Rectangle& d,
                           std::size_t n1, std::size_t n2) {
    const double h1 = (d.hi1 - d.lo1) / static_cast<double>(n1 - 1);
    const double h2 = (d.hi2 - d.lo2) / static_cast<double>(n2 - 1);
    double sum = 0.0;  // fixed row-major summation order keeps results deterministic
    for (std::size_t i = 0; i < n1; ++i) {
        const double x = d.lo1 + h1 * static_cast<double>(i);
        const double wx = (i == 0 || i == n1 - 1) ? 0.5 : 1.0;
        double row = 0.0;
        for (std::size_t j = 0; j < n2; ++j) {
            const double y = d.lo2 + h2 * static_cast<double>(j);
            const double wy = (j == 0 || j == n2 - 1) ? 0.5 : 1.0;
            row += wy * f(x, y);
        }
        sum += wx * row;
    }
    return sum * h1 * h2;
}

}  // namespace detail

/// First Chern number (1/2pi) integral of a Berry curvature field over a
/// rectangle, composite trapezoid with one refinement doubling.
inline QuadratureResult chern_number(const std::function<double(double, double)>& omega,
                                     const Rectangle& domain, const GridSpec& grid = {}) {
    if (grid.n1 < 32 || grid.n2 < 32)
        throw std::invalid_argument("chern_number: grid resolution must be >= 32x32");
    const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
    const double coarse = inv2pi * detail::trapezoid_2d(omega, domain, grid.n1, grid.n2);
    const double fine = inv2pi * detail::trapezoid_2d(omega, domain, 2 * grid.n1, 2 * grid.n2);
    QuadratureResult r;
    r.estimate = fine;
    r.refinement_delta = std::abs(fine - coarse);
    r.converged = r.refinement_delta <= 1e-3;
    return r;
}

struct WindingResult {
    double closed_form = 0.0;
    double quadrature = 0.0;
};

/// Winding number of the vector (v + w cos k, w sin k) around the origin over
/// the Brillouin zone: closed form (1 - sgn(v-w))/2 and the trapezoid
/// quadrature of the angle derivative w(w + v cos k)/(v^2 + w^2 + 2 v w cos k).
inline WindingResult winding_number(double v, double w, std::size_t nodes = 4096) {
    if (v == 0.0 && w == 0.0) throw std::domain_error("winding_number: v = w = 0");
    if (v == w) throw transition_point_error("winding_number: undefined at v = w");
    WindingResult res;
    res.closed_form = 0.5 * (1.0 - (v > w ? 1.0 : -1.0));
    const double pi = std::numbers::pi;
    const double h = 2.0 * pi / static_cast<double>(nodes - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double k = -pi + h * static_cast<double>(i);
        const double weight = (i == 0 || i == nodes - 1) ? 0.5 : 1.0;
        const double den = v * v + w * w + 2.0 * v * w * std::cos(k);
        sum += weight * w * (w + v * std::cos(k)) / den;
    }
    res.quadrature = sum * h / (2.0 * pi);
    return res;
}

/// Time average (1/window) integral of f over [center - window/2, center + window/2]
/// by composite Simpson quadrature with at least 200 nodes per oscillation
/// period (`period_hint`).
inline double coarse_grain(const std::function<double(double)>& f, double center, double window,
                           double period_hint) {
    if (!(window > 0.0)) throw std::domain_error("coarse_grain: window must be positive");
    if (!(period_hint > 0.0)) throw std::domain_error("coarse_grain: period hint must be positive");
    std::size_t n = static_cast<std::size_t>(std::ceil(200.0 * window / period_hint));
    n = std::max<std::size_t>(n, 200);
    if (n % 2 == 1) ++n;  // Simpson needs an even interval count
    const double a = center - 0.5 * window;
    const double h = window / static_cast<double>(n);
    double sum = f(a) + f(a + window);
    for (std::size_t i = 1; i < n; ++i) {
        const double w = (i % 2 == 1) ? 4.0 : 2.0;
        sum += w * f(a + h * static_cast<double>(i));
    }
    const double integral = sum * h / 3.0;
    if (!std::isfinite(integral)) throw std::domain_error("coarse_grain: non-finite integrand");
    return integral / window;
}

}  // namespace qgeo
