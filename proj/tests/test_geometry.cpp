#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "qgeo/geometry.hpp"
#include "qgeo/models.hpp"

using namespace qgeo;
using std::numbers::pi;

namespace {

std::mt19937_64 make_rng(unsigned s) { return std::mt19937_64(s); }

CanonicalParams random_canonical(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uth(0.2, pi - 0.2);
    std::uniform_real_distribution<double> uph(0.0, 2.0 * pi);
    std::uniform_real_distribution<double> ur(0.05, 1.9);
    return {uth(rng), uph(rng), ur(rng)};
}

}  // namespace

TEST_CASE("gauge_factor: field parallel to its derivative") {
    // X || dX kills the oscillatory branch: |Y| = T |dX|, e = -dX/|dX|
    auto field = HamiltonianField(
        {"a"}, [](std::span<const double> p) { return Vec3{0.0, 0.0, 1.0 + p[0]}; },
        [](std::span<const double>, std::size_t) { return Vec3{0.0, 0.0, 1.0}; });
    const double lam[] = {0.5};
    const GaugeFactor g = gauge_factor(field, lam, 0, 7.0);
    CHECK(g.magnitude == Catch::Approx(7.0).epsilon(1e-12));
    CHECK(g.direction.z == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("gauge_factor: canonical theta direction near the transition") {
    const double eps = 1e-6;
    const double phi0 = 0.7;
    const auto field = canonical_field(1.0);
    const double lam[] = {pi - eps, phi0, 1.0 - eps};
    const GaugeFactor g = gauge_factor(field, lam, 0, 10.0);
    CHECK(std::abs(g.direction.x - std::cos(phi0)) < 1e-4);
    CHECK(std::abs(g.direction.y - std::sin(phi0)) < 1e-4);
    CHECK(std::abs(g.direction.z) < 1e-4);
}

TEST_CASE("gauge_factor: SSH momentum direction near the transition") {
    const double eps = 1e-6;
    const auto field = ssh_field();
    const double lam[] = {1.0 - eps, 1.0, pi - eps};
    const GaugeFactor g = gauge_factor(field, lam, 2, 10.0);
    CHECK(std::abs(g.direction.x) < 1e-4);
    CHECK(std::abs(g.direction.y - 1.0) < 1e-4);
    CHECK(std::abs(g.direction.z) < 1e-4);
}

TEST_CASE("gauge_factor invariants: unit direction and the magnitude bound") {
    auto rng = make_rng(21);
    std::uniform_real_distribution<double> ut(0.1, 20.0);
    const auto cf = canonical_field(1.0);
    const auto sf = ssh_field();
    std::uniform_real_distribution<double> uv(0.05, 2.0);
    std::uniform_real_distribution<double> uk(-pi, pi);
    for (int i = 0; i < 1000; ++i) {
        const double T = ut(rng);
        {
            const auto p = random_canonical(rng).point();
            for (std::size_t l = 0; l < 3; ++l) {
                const GaugeFactor g = gauge_factor(cf, p, l, T);
                const double bound = T * cf.partial(p, l).norm();
                CHECK(g.magnitude <= bound + 1e-10);
                if (g.magnitude > 1e-12)
                    CHECK(std::abs(g.direction.norm() - 1.0) < 1e-10);
            }
        }
        {
            const std::array<double, 3> p{uv(rng), uv(rng), uk(rng)};
            for (std::size_t l = 0; l < 3; ++l) {
                const GaugeFactor g = gauge_factor(sf, p, l, T);
                CHECK(g.magnitude <= T * sf.partial(p, l).norm() + 1e-10);
            }
        }
    }
}

TEST_CASE("qgt_pair: diagonal entry with orthogonal probe is |Y|^2/4, real") {
    const auto field = canonical_field(1.0);
    const double lam[] = {1.0, 0.3, 0.4};
    const GaugeFactor g = gauge_factor(field, lam, 0, 10.0);
    // unit probe orthogonal to the direction
    const Vec3 probe = cross(g.direction, Vec3{0, 0, 1}).normalized();
    const auto chi = qgt_pair(g, g, probe);
    CHECK(chi.real() == Catch::Approx(0.25 * g.magnitude * g.magnitude).epsilon(1e-12));
    CHECK(chi.imag() == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("qgt_pair: equal directions have no imaginary part; hermiticity holds") {
    auto rng = make_rng(33);
    const auto field = canonical_field(1.0);
    std::uniform_real_distribution<double> ut(0.5, 15.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const auto p = random_canonical(rng).point();
        const double T = ut(rng);
        const GaugeFactor a = gauge_factor(field, p, 0, T);
        const GaugeFactor b = gauge_factor(field, p, 2, T);
        Vec3 probe{n(rng), n(rng), n(rng)};
        if (probe.norm() < 1e-2) continue;
        probe = probe.normalized();
        CHECK(qgt_pair(a, a, probe).imag() == Catch::Approx(0.0).margin(1e-14));
        const auto ab = qgt_pair(a, b, probe);
        const auto ba = qgt_pair(b, a, probe);
        CHECK(std::abs(ab - std::conj(ba)) < 1e-12 * std::max(1.0, std::abs(ab)));
    }
}

TEST_CASE("maximal QMT values at and off the transition") {
    const auto field = canonical_field(1.0);
    // exact transition point, optimal probe: T^2
    {
        const double lam[] = {pi, 0.0, 1.0};
        const GaugeFactor g = gauge_factor(field, lam, 0, 10.0);
        const Vec3 probe = cross(g.direction, Vec3{0, 0, 1}).normalized();
        CHECK(qmt_pair(g, g, probe) == Catch::Approx(100.0).margin(5e-4));
    }
    {
        const double lam[] = {pi - 0.1, 0.0, 1.0};
        const GaugeFactor g = gauge_factor(field, lam, 0, 10.0);
        const Vec3 probe = cross(g.direction, Vec3{0, 0, 1}).normalized();
        CHECK(qmt_pair(g, g, probe) == Catch::Approx(99.9271).margin(5e-4));
    }
}

TEST_CASE("berry: canonical ground probe has no (theta, r) curvature") {
    auto rng = make_rng(44);
    const auto field = canonical_field(1.0);
    std::uniform_real_distribution<double> ut(0.5, 15.0);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_canonical(rng).point();
        const double T = ut(rng);
        const Vec3 probe = field.eval(p).normalized();
        const GaugeFactor a = gauge_factor(field, p, 0, T);
        const GaugeFactor b = gauge_factor(field, p, 2, T);
        CHECK(std::abs(berry_pair(a, b, probe)) < 1e-10);
    }
}

TEST_CASE("berry: SSH ground probe has identically zero curvature") {
    auto rng = make_rng(45);
    const auto field = ssh_field();
    std::uniform_real_distribution<double> uv(0.05, 2.0);
    std::uniform_real_distribution<double> uk(-pi + 0.05, pi - 0.05);
    std::uniform_real_distribution<double> ut(0.5, 15.0);
    for (int i = 0; i < 1000; ++i) {
        const std::array<double, 3> p{uv(rng), uv(rng), uk(rng)};
        if (ssh_field().eval(p).norm() < 1e-3) continue;
        const double T = ut(rng);
        const Vec3 probe = field.eval(p).normalized();
        std::array<GaugeFactor, 3> f;
        for (std::size_t l = 0; l < 3; ++l) f[l] = gauge_factor(field, p, l, T);
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b)
                CHECK(std::abs(berry_pair(f[a], f[b], probe)) < 1e-10);
        // with zero curvature the whole figure-of-merit matrix vanishes
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = a + 1; b < 3; ++b)
                CHECK(fom(qmt_pair(f[a], f[a], probe), qmt_pair(f[b], f[b], probe),
                          qmt_pair(f[a], f[b], probe), berry_pair(f[a], f[b], probe)) ==
                      Catch::Approx(0.0).margin(1e-6));
    }
}

TEST_CASE("uncertainty inequality and FOM range on random probes") {
    auto rng = make_rng(55);
    const auto field = canonical_field(1.0);
    std::uniform_real_distribution<double> ut(0.5, 15.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_canonical(rng).point();
        const double T = ut(rng);
        Vec3 probe{n(rng), n(rng), n(rng)};
        if (probe.norm() < 1e-2) continue;
        probe = probe.normalized();
        std::array<GaugeFactor, 3> f;
        for (std::size_t l = 0; l < 3; ++l) f[l] = gauge_factor(field, p, l, T);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = a + 1; b < 3; ++b) {
                const double gaa = qmt_pair(f[a], f[a], probe);
                const double gbb = qmt_pair(f[b], f[b], probe);
                const double gab = qmt_pair(f[a], f[b], probe);
                const double om = berry_pair(f[a], f[b], probe);
                CHECK(gaa * gbb - gab * gab >= 0.25 * om * om - 1e-9);
                const double r = fom(gaa, gbb, gab, om);
                CHECK(r >= 0.0);
                CHECK(r <= 1.0);
            }
        }
    }
}

TEST_CASE("fom: special values") {
    CHECK(fom(2.0, 3.0, 0.5, 0.0) == 0.0);
    CHECK(fom(0.0, 0.0, 0.0, 0.0) == 0.0);  // 0/0 convention
    CHECK_THROWS_AS(fom(1.0, 1.0, 0.999, 1.9), inconsistency_error);
    // canonical ground probe off the transition: full trade-off for (theta, phi)
    const auto field = canonical_field(1.0);
    const double lam[] = {2.0, 0.9, 0.5};
    const Vec3 probe = field.eval(lam).normalized();
    const GaugeFactor a = gauge_factor(field, lam, 0, 10.0);
    const GaugeFactor b = gauge_factor(field, lam, 1, 10.0);
    const double r = fom(qmt_pair(a, a, probe), qmt_pair(b, b, probe), qmt_pair(a, b, probe),
                         berry_pair(a, b, probe));
    CHECK(r == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("no probe satisfies the triple orthogonality obstruction") {
    // min over the Bloch sphere of max(|e_th.r|, |e_ph.r|, |(e_th x e_ph).r|)
    const auto field = canonical_field(1.0);
    for (const auto& lam : {std::array<double, 3>{2.0, 0.9, 0.5},
                            std::array<double, 3>{1.2, 4.0, 1.4}}) {
        const GaugeFactor a = gauge_factor(field, lam, 0, 10.0);
        const GaugeFactor b = gauge_factor(field, lam, 1, 10.0);
        const Vec3 c = cross(a.direction, b.direction).normalized();
        double best = 1e9;
        const int nth = 200, nph = 400;
        for (int i = 0; i <= nth; ++i) {
            const double th = pi * i / nth;
            for (int j = 0; j < nph; ++j) {
                const double ph = 2.0 * pi * j / nph;
                const Vec3 r{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                             std::cos(th)};
                const double m = std::max(
                    {std::abs(dot(a.direction, r)), std::abs(dot(b.direction, r)),
                     std::abs(dot(c, r))});
                best = std::min(best, m);
            }
        }
        CHECK(best > 0.1);
    }
}

TEST_CASE("geometry_report: structure, QFIM scaling, QCRB repetitions") {
    const auto field = canonical_field(1.0);
    const double lam[] = {2.0, 0.9, 0.5};
    const Vec3 probe = field.eval(lam).normalized();
    const GeometryReport rep = geometry_report(field, lam, probe, 10.0, 1);
    const GeometryReport rep4 = geometry_report(field, lam, probe, 10.0, 4);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            CHECK(rep.qfim(a, b) == 4.0 * rep.qmt(a, b));  // exact by construction
            CHECK(rep.qmt(a, b) == Catch::Approx(rep.qmt(b, a)).margin(1e-12));
            CHECK(rep.berry(a, b) == Catch::Approx(-rep.berry(b, a)).margin(1e-12));
            const auto chi = rep.qgt(a, b);
            CHECK(chi.real() == Catch::Approx(rep.qmt(a, b)).margin(1e-12));
            CHECK(chi.imag() == Catch::Approx(-0.5 * rep.berry(a, b)).margin(1e-12));
            CHECK(rep4.qcrb(a, b) == Catch::Approx(rep.qcrb(a, b) / 4.0).margin(1e-12));
        }
}

TEST_CASE("geometry_report: near-transition limits live in the right entries") {
    const auto field = canonical_field(1.0);
    const double eps = 1e-6;
    for (const double T : {5.0, 10.0, 50.0}) {
        // theta information peaks with theta at its critical value
        {
            const double lam[] = {pi, 0.3, 1.0 - eps};
            const Vec3 probe = field.eval(lam).normalized();
            const GeometryReport rep = geometry_report(field, lam, probe, T, 1);
            CHECK(std::abs(rep.qmt(0, 0) - T * T) < 1e-3 * T * T);
        }
        // r information peaks with r at its critical value
        {
            const double lam[] = {pi - eps, 0.3, 1.0};
            const Vec3 probe = field.eval(lam).normalized();
            const GeometryReport rep = geometry_report(field, lam, probe, T, 1);
            CHECK(std::abs(rep.qmt(2, 2) - T * T) < 1e-3 * T * T);
            CHECK(std::abs(rep.qmt(1, 1)) < 1e-3 * T * T);  // no phi information
        }
        // SSH: hopping entries on the v = w path, momentum entry on the k = pi path
        {
            const auto sf = ssh_field();
            const double w0 = 1.4;
            const double lam[] = {w0, w0, pi - eps};
            const Vec3 probe = sf.eval(lam).normalized();
            const GeometryReport rep = geometry_report(sf, lam, probe, T, 1);
            CHECK(std::abs(rep.qmt(0, 0) - T * T) < 1e-3 * T * T);
            CHECK(std::abs(rep.qmt(1, 1) - T * T) < 1e-3 * T * T);
            const double lam2[] = {w0 - eps, w0, pi};
            const Vec3 probe2 = sf.eval(lam2).normalized();
            const GeometryReport rep2 = geometry_report(sf, lam2, probe2, T, 1);
            CHECK(std::abs(rep2.qmt(2, 2) - T * T * w0 * w0) < 1e-3 * T * T * w0 * w0);
        }
    }
}

TEST_CASE("chern_number: zero field and printed coarse-grained curvature") {
    const auto zero = chern_number([](double, double) { return 0.0; },
                                   {0.0, pi, 0.0, 2.0 * pi});
    CHECK(zero.estimate == Catch::Approx(0.0).margin(1e-12));
    CHECK(zero.converged);

    for (const double r : {0.5, 0.3}) {
        const auto res = chern_number(
            [r](double th, double) {
                return coarse_berry_canonical({th, 0.0, r})(0, 1);
            },
            {0.0, pi, 0.0, 2.0 * pi});
        CHECK(std::abs(std::abs(res.estimate) - 2.0) < 1e-3);
        CHECK(res.converged);
    }
    const auto trivial = chern_number(
        [](double th, double) { return coarse_berry_canonical({th, 0.0, 1.5})(0, 1); },
        {0.0, pi, 0.0, 2.0 * pi});
    CHECK(std::abs(trivial.estimate) < 1e-3);

    CHECK_THROWS_AS(chern_number([](double, double) { return 0.0; }, {0, 1, 0, 1}, {16, 16}),
                    std::invalid_argument);
}

TEST_CASE("winding_number: closed form, quadrature, and the transition guard") {
    CHECK(winding_number(0.5, 1.0).closed_form == 1.0);
    CHECK(winding_number(2.0, 1.0).closed_form == 0.0);
    CHECK_THROWS_AS(winding_number(1.0, 1.0), transition_point_error);
    CHECK_THROWS_AS(winding_number(0.0, 0.0), std::domain_error);

    auto rng = make_rng(66);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    int done = 0;
    while (done < 50) {
        const double v = u(rng), w = u(rng);
        if (std::abs(v - w) < 0.02) continue;
        ++done;
        const WindingResult res = winding_number(v, w);
        CHECK(std::abs(res.quadrature - res.closed_form) < 1e-6);
    }
}

TEST_CASE("coarse_grain: constants, sin^2 mean, and the canonical curvature") {
    CHECK(coarse_grain([](double) { return 3.25; }, 10.0, 5.0, 1.0) ==
          Catch::Approx(3.25).epsilon(1e-12));

    // sin^2 over an integer number of periods averages to 1/2
    const double omega = 1.7;
    const double period = pi / omega;
    CHECK(coarse_grain([omega](double t) { return std::pow(std::sin(omega * t), 2); }, 40.0,
                       30.0 * period, period) == Catch::Approx(0.5).margin(1e-3));

    // time-dependent curvature averaged over >= 20 oscillation periods matches
    // the sin^2 -> 1/2 fast path
    const CanonicalParams p{2.2, 0.4, 0.6};
    const double xi = xi_canonical(p.theta, p.r);
    const double osc_period = 2.0 * pi / (2.0 * std::sqrt(xi));  // 2 pi / |X|
    const auto omega_t = [&](double t) {
        return ground_berry_matrix_canonical(p, t)(0, 1);
    };
    const double avg = coarse_grain(omega_t, 100.0, 20.0 * osc_period, osc_period);
    CHECK(avg == Catch::Approx(coarse_berry_canonical(p)(0, 1)).margin(1e-3));
}

TEST_CASE("chern_number flags a non-convergent refinement") {
    // a spike much narrower than the grid spacing: the doubling changes the answer
    const auto res = chern_number(
        [](double x, double) { return 1.0 / ((x - 1.0) * (x - 1.0) + 1e-7); },
        {0.0, pi, 0.0, 2.0 * pi}, {32, 32});
    CHECK_FALSE(res.converged);
    CHECK(res.refinement_delta > 1e-3);
}

TEST_CASE("geometry_report flags singular bound directions near the transition") {
    const auto field = canonical_field(1.0);
    const double lam[] = {pi - 1e-6, 0.3, 1.0};
    const Vec3 probe = field.eval(lam).normalized();
    const GeometryReport rep = geometry_report(field, lam, probe, 10.0, 1);
    CHECK_FALSE(rep.singular_directions.empty());  // phi direction carries no information
}
