// qgeo: geometry of parameterized SU(2) dynamics from the command line.
//
// Subcommands:
//   geometry  - full geometric report (QGT, metric, curvature, FOM, QFIM,
//               QCRB) at a single parameter point
//   scan      - the same quantities over a 1D/2D parameter grid, CSV or JSON
//   adaptive  - replay a step schedule or run the hill-climb search toward
//               the transition point and recover the initial values
//   verify    - closed forms against the finite-difference oracle suites
//
// Exit codes: 0 success, 2 configuration error, 3 numerical degeneracy,
// 4 verification failure, 5 non-convergence.

#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include <CLI11.hpp>

#include "qgeo/adaptive.hpp"
#include "qgeo/control.hpp"
#include "qgeo/errors.hpp"
#include "qgeo/expr.hpp"
#include "qgeo/geometry.hpp"
#include "qgeo/measurement.hpp"
#include "qgeo/models.hpp"
#include "qgeo/oracle.hpp"
#include "qgeo/runio.hpp"

namespace {

using namespace qgeo;
using namespace qgeo::cli;
using std::numbers::pi;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitVerifyFailed = 4;
constexpr int kExitNonConvergence = 5;

struct RawOptions {
    RunConfig cfg;
    // raw parameter spec strings, keyed like the flags
    std::string theta, phi, r, v, w, k;
    std::string grid;                      // "name=lo:hi:count,name2=..."
    std::vector<std::string> sets;         // custom-model "name=spec" bindings
    std::string config_path;               // registered for --help; handled pre-parse
    bool schedule_given = false;
    std::string custom_params;             // "a,b,c"
    std::string x1, x2, x3;                // custom coefficient expressions
    bool inject_sign_flip = false;         // verify negative control
};

struct ModelSetup {
    HamiltonianField field;
    std::vector<ParamSpec> specs;  // one per field parameter, same order
};

void collect_spec(std::map<std::string, ParamSpec>& into, const std::string& name,
                  const std::string& raw) {
    if (!raw.empty()) into[name] = parse_param_spec(raw);
}

ModelSetup build_model(const RawOptions& opt) {
    const RunConfig& cfg = opt.cfg;
    std::map<std::string, ParamSpec> params;
    collect_spec(params, "theta", opt.theta);
    collect_spec(params, "phi", opt.phi);
    collect_spec(params, "r", opt.r);
    collect_spec(params, "v", opt.v);
    collect_spec(params, "w", opt.w);
    collect_spec(params, "k", opt.k);
    for (const std::string& s : opt.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects name=value, got '" + s + "'");
        params[s.substr(0, eq)] = parse_param_spec(s.substr(eq + 1));
    }
    if (!opt.grid.empty()) {
        std::size_t start = 0;
        while (start < opt.grid.size()) {
            auto comma = opt.grid.find(',', start);
            // range specs contain ':' but no ',', so a plain split is safe
            const std::string tok = opt.grid.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--grid expects name=lo:hi:count items");
            params[tok.substr(0, eq)] = parse_param_spec(tok.substr(eq + 1));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }

    const auto lookup = [&params](const std::string& name, double fallback) {
        ParamSpec def;
        def.value = fallback;
        const auto it = params.find(name);
        return it == params.end() ? def : it->second;
    };

    if (cfg.model == "canonical") {
        ModelSetup s{canonical_field(cfg.h0), {}};
        s.specs = {lookup("theta", pi / 2.0), lookup("phi", 0.0), lookup("r", 0.0)};
        return s;
    }
    if (cfg.model == "ssh") {
        ModelSetup s{ssh_field(), {}};
        s.specs = {lookup("v", 1.0), lookup("w", 1.0), lookup("k", 0.0)};
        return s;
    }
    if (cfg.model == "custom") {
        if (opt.custom_params.empty() || opt.x1.empty() || opt.x2.empty() || opt.x3.empty())
            throw std::invalid_argument(
                "custom model needs --custom-params and --X1 --X2 --X3 expressions");
        std::vector<std::string> names;
        std::size_t start = 0;
        while (start <= opt.custom_params.size()) {
            auto comma = opt.custom_params.find(',', start);
            const std::string tok = opt.custom_params.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!tok.empty()) names.push_back(tok);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        const auto e1 = CompiledExpr::parse(opt.x1, names);
        const auto e2 = CompiledExpr::parse(opt.x2, names);
        const auto e3 = CompiledExpr::parse(opt.x3, names);
        ModelSetup s{HamiltonianField::with_numeric_partials(
                         names,
                         [e1, e2, e3](std::span<const double> p) {
                             return Vec3{e1.evaluate(p), e2.evaluate(p), e3.evaluate(p)};
                         }),
                     {}};
        for (const std::string& n : names) s.specs.push_back(lookup(n, 0.0));
        return s;
    }
    throw std::invalid_argument("unknown model '" + cfg.model + "'");
}

std::vector<double> point_of(const ModelSetup& m) {
    std::vector<double> p;
    for (const auto& s : m.specs) {
        if (s.range)
            throw std::invalid_argument("this command needs a single parameter point, not ranges");
        p.push_back(s.value);
    }
    return p;
}

std::string angle_unit(const std::string& name) {
    return (name == "theta" || name == "phi" || name == "k") ? "rad" : "1";
}

void write_output(const RunConfig& cfg, const Table& t) {
    if (cfg.out.empty()) {
        emit_table(std::cout, t, cfg.format);
        return;
    }
    std::ofstream os(cfg.out);
    if (!os) throw std::invalid_argument("cannot open output file '" + cfg.out + "'");
    emit_table(os, t, cfg.format);
}

FdSpec fd_spec_of(const RunConfig& cfg) {
    FdSpec spec;
    spec.h = cfg.fd_step;
    if (cfg.fd_scheme == "central")
        spec.scheme = FdSpec::Scheme::central;
    else if (cfg.fd_scheme == "richardson")
        spec.scheme = FdSpec::Scheme::richardson;
    else
        throw std::invalid_argument("fd scheme must be central or richardson");
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------- geometry

int cmd_geometry(const RawOptions& opt) {
    const ModelSetup m = build_model(opt);
    const std::vector<double> lam = point_of(m);
    const Vec3 probe = resolve_probe(opt.cfg.probe, m.field, lam, opt.cfg.T);
    const GeometryReport rep =
        geometry_report(m.field, lam, probe, opt.cfg.T, opt.cfg.repetitions);

    Table t;
    std::vector<double> row;
    const auto& names = m.field.parameter_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        t.columns.push_back({names[i], angle_unit(names[i])});
        row.push_back(lam[i]);
    }
    t.columns.push_back({"T", "time"});
    row.push_back(opt.cfg.T);
    t.columns.push_back({"M", "1"});
    row.push_back(static_cast<double>(rep.repetitions));
    const auto add_matrix = [&](const std::string& prefix, const RealMatrix& mat) {
        for (std::size_t a = 0; a < mat.rows; ++a)
            for (std::size_t b = 0; b < mat.cols; ++b) {
                t.columns.push_back({prefix + "_" + names[a] + "_" + names[b], "1"});
                row.push_back(mat(a, b));
            }
    };
    add_matrix("qgt_re", rep.qgt.real());
    add_matrix("qgt_im", rep.qgt.imag());
    add_matrix("g", rep.qmt);
    add_matrix("berry", rep.berry);
    add_matrix("fom", rep.fom);
    add_matrix("qfim", rep.qfim);
    add_matrix("qcrb", rep.qcrb);
    t.columns.push_back({"qcrb_singular_count", "1"});
    row.push_back(static_cast<double>(rep.singular_directions.size()));
    t.rows.push_back(std::move(row));
    write_output(opt.cfg, t);
    return kExitOk;
}

// -------------------------------------------------------------------- scan

struct GridAxis {
    std::size_t param = 0;
    double lo = 0.0, step = 0.0;
    std::size_t count = 1;
};

std::vector<GridAxis> grid_axes(const ModelSetup& m) {
    std::vector<GridAxis> axes;
    for (std::size_t i = 0; i < m.specs.size(); ++i) {
        if (!m.specs[i].range) continue;
        const RangeSpec& r = *m.specs[i].range;
        axes.push_back({i, r.lo, (r.hi - r.lo) / static_cast<double>(r.count - 1), r.count});
    }
    if (axes.empty() || axes.size() > 2)
        throw std::invalid_argument("scan needs one or two ranged parameters");
    return axes;
}

double guarded(const std::function<double()>& f) {
    try {
        return f();
    } catch (const degenerate_error&) {
        return std::nan("");
    }
}

int cmd_scan(const RawOptions& opt) {
    const RunConfig& cfg = opt.cfg;
    const ModelSetup m = build_model(opt);
    const std::vector<GridAxis> axes = grid_axes(m);
    const std::size_t total = axes.size() == 1 ? axes[0].count : axes[0].count * axes[1].count;

    std::vector<double> base;
    for (const auto& s : m.specs) base.push_back(s.range ? 0.0 : s.value);
    const auto& names = m.field.parameter_names();

    Table t;
    for (std::size_t i = 0; i < names.size(); ++i)
        t.columns.push_back({names[i], angle_unit(names[i])});

    const bool canonical = cfg.model == "canonical";
    const bool ssh = cfg.model == "ssh";
    if (canonical) {
        for (const char* c : {"g_max_theta", "g_max_phi", "g_max_r", "g_theta_theta",
                              "g_phi_phi", "g_r_r", "g_theta_r", "berry_theta_phi",
                              "berry_phi_r", "coarse_berry_theta_phi", "coarse_chern",
                              "fom_theta_phi", "control_g_theta", "control_g_phi",
                              "control_g_r"})
            t.columns.push_back({c, "1"});
    } else if (ssh) {
        for (const char* c : {"g_max_v", "g_max_w", "g_max_k", "g_v_v", "g_w_w", "g_k_k",
                              "g_v_w", "g_v_k", "g_w_k", "winding_closed",
                              "winding_quadrature", "control_g_v", "control_g_w",
                              "control_g_k"})
            t.columns.push_back({c, "1"});
    } else {
        for (std::size_t i = 0; i < names.size(); ++i)
            t.columns.push_back({"g_" + names[i] + "_" + names[i], "1"});
        for (std::size_t a = 0; a < names.size(); ++a)
            for (std::size_t b = a + 1; b < names.size(); ++b)
                t.columns.push_back({"berry_" + names[a] + "_" + names[b], "1"});
    }

    t.rows.assign(total, {});
    parallel_for(total, [&](std::size_t idx) {
        std::vector<double> lam = base;
        if (axes.size() == 1) {
            lam[axes[0].param] = axes[0].lo + axes[0].step * static_cast<double>(idx);
        } else {
            const std::size_t i = idx / axes[1].count;  // row-major over the grid
            const std::size_t j = idx % axes[1].count;
            lam[axes[0].param] = axes[0].lo + axes[0].step * static_cast<double>(i);
            lam[axes[1].param] = axes[1].lo + axes[1].step * static_cast<double>(j);
        }
        std::vector<double> row(lam.begin(), lam.end());
        if (canonical) {
            const CanonicalParams p{lam[0], lam[1], lam[2], cfg.h0};
            const auto gm = max_qmt_canonical(p, cfg.T);
            row.insert(row.end(), {gm[0], gm[1], gm[2]});
            RealMatrix G(3, 3), B(3, 3), Bc(3, 3);
            const bool ok_ground = !p.at_transition();
            if (ok_ground) {
                G = ground_qmt_matrix_canonical(p, cfg.T);
                B = ground_berry_matrix_canonical(p, cfg.T);
            }
            const double nan = std::nan("");
            row.insert(row.end(),
                       ok_ground
                           ? std::initializer_list<double>{G(0, 0), G(1, 1), G(2, 2), G(0, 2),
                                                           B(0, 1), B(1, 2)}
                           : std::initializer_list<double>{nan, nan, nan, nan, nan, nan});
            row.push_back(guarded([&] { return coarse_berry_canonical(p)(0, 1); }));
            row.push_back(guarded([&] { return coarse_chern_canonical(p.r); }));
            row.push_back(ok_ground ? fom(G(0, 0), G(1, 1), 0.0, B(0, 1)) : nan);
            row.insert(row.end(), {control_qmt(m.field, lam, 0, 0, cfg.T),
                                   control_qmt(m.field, lam, 1, 1, cfg.T),
                                   control_qmt(m.field, lam, 2, 2, cfg.T)});
        } else if (ssh) {
            const SshParams p{lam[0], lam[1], lam[2]};
            const auto gm = max_qmt_ssh(p, cfg.T);
            row.insert(row.end(), {gm[0], gm[1], gm[2]});
            const double nan = std::nan("");
            if (!p.at_transition()) {
                const RealMatrix G = ground_qmt_matrix_ssh(p, cfg.T);
                row.insert(row.end(),
                           {G(0, 0), G(1, 1), G(2, 2), G(0, 1), G(0, 2), G(1, 2)});
            } else {
                row.insert(row.end(), {nan, nan, nan, nan, nan, nan});
            }
            if (p.v != p.w) {
                const WindingResult wres = winding_number(p.v, p.w, cfg.winding_nodes);
                row.insert(row.end(), {wres.closed_form, wres.quadrature});
            } else {
                row.insert(row.end(), {nan, nan});
            }
            row.insert(row.end(), {control_qmt(m.field, lam, 0, 0, cfg.T),
                                   control_qmt(m.field, lam, 1, 1, cfg.T),
                                   control_qmt(m.field, lam, 2, 2, cfg.T)});
        } else {
            const Vec3 probe = resolve_probe(cfg.probe, m.field, lam, cfg.T);
            std::vector<GaugeFactor> f(m.field.size());
            for (std::size_t l = 0; l < m.field.size(); ++l)
                f[l] = gauge_factor(m.field, lam, l, cfg.T);
            for (std::size_t l = 0; l < m.field.size(); ++l)
                row.push_back(qmt_pair(f[l], f[l], probe));
            for (std::size_t a = 0; a < m.field.size(); ++a)
                for (std::size_t b = a + 1; b < m.field.size(); ++b)
                    row.push_back(berry_pair(f[a], f[b], probe));
        }
        t.rows[idx] = std::move(row);
    });
    write_output(cfg, t);
    return kExitOk;
}

// ---------------------------------------------------------------- adaptive

int cmd_adaptive(const RawOptions& opt) {
    const RunConfig& cfg = opt.cfg;
    if (cfg.model != "canonical" && cfg.model != "ssh")
        throw std::invalid_argument("adaptive runs support the canonical and ssh models");
    const bool canonical = cfg.model == "canonical";

    const bool has_schedule = opt.schedule_given;
    const bool has_policy = !cfg.policy.empty();
    if (has_schedule == has_policy)
        throw std::invalid_argument("adaptive needs either a step schedule or a policy, not both");

    const ModelSetup m = build_model(opt);
    const std::vector<double> lam0 = point_of(m);  // true initial values

    AdaptiveTrace trace;
    if (has_schedule) {
        StepSchedule schedule{parse_step_list(cfg.steps_angle),
                              parse_step_list(cfg.steps_amplitude)};
        trace = canonical
                    ? run_schedule_canonical(lam0[0], lam0[1], lam0[2], schedule, cfg.T,
                                             cfg.noise_sigma, cfg.seed, cfg.h0)
                    : run_schedule_ssh(lam0[2], lam0[0], lam0[1], schedule, cfg.T,
                                       cfg.noise_sigma, cfg.seed);
    } else {
        SearchPolicy policy;
        if (cfg.policy == "fixed")
            policy.kind = SearchPolicy::Kind::fixed_step;
        else if (cfg.policy == "shrinking")
            policy.kind = SearchPolicy::Kind::shrinking_step;
        else
            throw std::invalid_argument("policy must be 'fixed' or 'shrinking'");
        policy.initial_step = cfg.policy_step0;
        PeakCriterion criterion;
        criterion.eta = cfg.eta;
        trace = canonical
                    ? auto_search_canonical(lam0[0], lam0[1], lam0[2], policy, criterion,
                                            cfg.max_iters, cfg.T, cfg.noise_sigma, cfg.seed,
                                            cfg.h0)
                    : auto_search_ssh(lam0[2], lam0[0], lam0[1], policy, criterion,
                                      cfg.max_iters, cfg.T, cfg.noise_sigma, cfg.seed);
    }

    const std::string a = canonical ? "theta" : "k";
    const std::string b = canonical ? "r" : "v";
    const double true_a = canonical ? lam0[0] : lam0[2];
    const double true_b = canonical ? lam0[2] : lam0[0];
    Table t;
    t.columns = {{"iteration", "1"},
                 {"cum_" + a, angle_unit(a)},
                 {"cum_" + b, "1"},
                 {a, angle_unit(a)},
                 {b, "1"},
                 {"qmt", "1"},
                 {"residual_norm", "1"},
                 {"est_" + a + "0", angle_unit(a)},
                 {"est_" + b + "0", "1"},
                 {"dev_" + a, angle_unit(a)},
                 {"dev_" + b, "1"},
                 {"status", "1"}};
    const double status = trace.converged ? 0.0 : static_cast<double>(kExitNonConvergence);
    for (const TraceRow& r : trace.rows)
        t.rows.push_back({static_cast<double>(r.iteration), r.cum_angle, r.cum_amplitude,
                          r.angle, r.amplitude, r.qmt, r.residual_norm, r.est_angle0,
                          r.est_amplitude0, std::abs(r.est_angle0 - true_a),
                          std::abs(r.est_amplitude0 - true_b), status});
    write_output(cfg, t);
    return trace.converged ? kExitOk : kExitNonConvergence;
}

// ------------------------------------------------------------------ verify

struct CheckResult {
    std::string name;
    bool passed = false;
    double max_dev = 0.0;
    double tolerance = 0.0;
};

template <typename Fn>
CheckResult run_check(const std::string& name, double tol, Fn&& deviation) {
    CheckResult r;
    r.name = name;
    r.tolerance = tol;
    r.max_dev = deviation();
    r.passed = r.max_dev <= tol;
    return r;
}

int cmd_verify(const RawOptions& opt) {
    const double T = opt.cfg.T;
    const FdSpec fd = fd_spec_of(opt.cfg);
    std::mt19937_64 rng(opt.cfg.seed == 0 ? 2718281828ULL : opt.cfg.seed);
    std::uniform_real_distribution<double> uth(0.2, pi - 0.2), uph(0.0, 2.0 * pi),
        ur(0.05, 1.9), uv(0.05, 2.0), uk(-pi + 0.2, pi - 0.2);
    const auto cf = canonical_field(1.0);
    const auto sf = ssh_field();
    const double flip = opt.inject_sign_flip ? -1.0 : 1.0;

    std::vector<CheckResult> results;

    results.push_back(run_check("canonical-qgt-closed-vs-oracle", 1e-6, [&] {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const std::array<double, 3> lam{uth(rng), uph(rng), ur(rng)};
            const Vec3 rin = cf.eval(lam).normalized();
            const ComplexMatrix chi_fd = qgt_fd(cf, lam, state_from_bloch(rin), T, fd);
            std::array<GaugeFactor, 3> f;
            for (std::size_t l = 0; l < 3; ++l) f[l] = gauge_factor(cf, lam, l, T);
            for (std::size_t a = 0; a < 3; ++a)
                for (std::size_t b = 0; b < 3; ++b)
                    worst = std::max(worst, std::abs(qgt_pair(f[a], f[b], rin) - chi_fd(a, b)));
        }
        return worst;
    }));

    results.push_back(run_check("ssh-qgt-closed-vs-oracle", 1e-6, [&] {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const std::array<double, 3> lam{uv(rng), uv(rng), uk(rng)};
            if (sf.eval(lam).norm() < 0.05) continue;
            const Vec3 rin = sf.eval(lam).normalized();
            const ComplexMatrix chi_fd = qgt_fd(sf, lam, state_from_bloch(rin), T, fd);
            std::array<GaugeFactor, 3> f;
            for (std::size_t l = 0; l < 3; ++l) f[l] = gauge_factor(sf, lam, l, T);
            for (std::size_t a = 0; a < 3; ++a)
                for (std::size_t b = 0; b < 3; ++b)
                    worst = std::max(worst, std::abs(qgt_pair(f[a], f[b], rin) - chi_fd(a, b)));
        }
        return worst;
    }));

    results.push_back(run_check("canonical-ground-matrix-vs-oracle", 1e-6, [&] {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const CanonicalParams p{uth(rng), uph(rng), ur(rng)};
            RealMatrix G = ground_qmt_matrix_canonical(p, T);
            G(0, 2) *= flip;  // negative-control fixture hook
            G(2, 0) *= flip;
            const RealMatrix Gfd =
                qgt_fd(cf, p.point(), state_from_bloch(cf.eval(p.point()).normalized()), T, fd)
                    .real();
            worst = std::max(worst, (G - Gfd).max_abs());
        }
        return worst;
    }));

    results.push_back(run_check("ssh-ground-matrix-vs-oracle", 1e-6, [&] {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const SshParams p{uv(rng), uv(rng), uk(rng)};
            if (sf.eval(p.point()).norm() < 0.05) continue;
            const RealMatrix G = ground_qmt_matrix_ssh(p, T);
            const RealMatrix Gfd =
                qgt_fd(sf, p.point(), state_from_bloch(sf.eval(p.point()).normalized()), T, fd)
                    .real();
            worst = std::max(worst, (G - Gfd).max_abs());
        }
        return worst;
    }));

    results.push_back(run_check("qmt-bound-chain", 1e-9, [&] {
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const CanonicalParams p{uth(rng), uph(rng), ur(rng)};
            const auto gm = max_qmt_canonical(p, T);
            const RealMatrix G = ground_qmt_matrix_canonical(p, T);
            for (std::size_t l = 0; l < 3; ++l) {
                const double sup = 0.25 * T * T * cf.partial(p.point(), l).norm2();
                worst = std::max(worst, G(l, l) - gm[l]);
                worst = std::max(worst, gm[l] - sup);
            }
        }
        return std::max(worst, 0.0);
    }));

    results.push_back(run_check("control-trotter-vs-closed", 2e-4, [&] {
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            const std::array<double, 3> lam{uth(rng), uph(rng), ur(rng)};
            const ComplexMatrix chi = control_qmt_oracle(cf, lam, T);
            for (std::size_t a = 0; a < 3; ++a)
                for (std::size_t b = 0; b < 3; ++b) {
                    const double target = control_qmt(cf, lam, a, b, T);
                    worst = std::max(worst, std::abs(chi(a, b).real() - target) /
                                                std::max(1.0, std::abs(target)));
                }
        }
        return worst;
    }));

    results.push_back(run_check("measurement-cfim-vs-qfim", 1e-4, [&] {
        double worst = 0.0;
        int done = 0;
        while (done < 5) {
            const std::array<double, 3> lam{uth(rng), uph(rng), ur(rng)};
            const QubitState probe = state_from_bloch(cf.eval(lam).normalized());
            const RealMatrix F = qfim_pure_at(cf, lam, probe, T, fd);
            if (std::max(F(0, 0), F(1, 1)) < 0.5) continue;
            ++done;
            const ProjectorSet s = build_projectors_at(cf, lam, probe, T, fd);
            const CfimResult J = cfim(s, cf, lam, probe, T, fd);
            worst = std::max(worst, (F - J.fim).max_abs() / F.max_abs());
        }
        return worst;
    }));

    results.push_back(run_check("qgt-hermiticity-and-uncertainty", 1e-9, [&] {
        std::normal_distribution<double> n(0.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const std::array<double, 3> lam{uth(rng), uph(rng), ur(rng)};
            Vec3 probe{n(rng), n(rng), n(rng)};
            if (probe.norm() < 1e-2) continue;
            probe = probe.normalized();
            std::array<GaugeFactor, 3> f;
            for (std::size_t l = 0; l < 3; ++l) f[l] = gauge_factor(cf, lam, l, T);
            for (std::size_t a = 0; a < 3; ++a)
                for (std::size_t b = 0; b < 3; ++b) {
                    const auto ab = qgt_pair(f[a], f[b], probe);
                    worst = std::max(worst, std::abs(ab - std::conj(qgt_pair(f[b], f[a], probe))));
                    if (a != b) {
                        const double det = qgt_pair(f[a], f[a], probe).real() *
                                               qgt_pair(f[b], f[b], probe).real() -
                                           ab.real() * ab.real();
                        const double om = -2.0 * ab.imag();
                        worst = std::max(worst, 0.25 * om * om - det);
                    }
                }
        }
        return worst;
    }));

    bool all_ok = true;
    for (const CheckResult& r : results) {
        all_ok = all_ok && r.passed;
        std::cout << (r.passed ? "ok   " : "FAIL ") << r.name << "  max dev "
                  << fmt_double(r.max_dev) << " (tol " << fmt_double(r.tolerance) << ")\n";
    }
    std::cout << (all_ok ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    return all_ok ? kExitOk : kExitVerifyFailed;
}

// Splice config-file entries into the argument list right after the
// subcommand so that explicitly given flags, which come later, win.
std::vector<std::string> splice_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    if (path.empty()) return args;
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::vector<std::string> spliced;
    if (!args.empty()) spliced.push_back(args[0]);  // the subcommand token
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq <= first)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value, got '" + line + "'");
        const auto key_end = line.find_last_not_of(" \t", eq - 1);
        std::string value = line.substr(eq + 1);
        const auto vfirst = value.find_first_not_of(" \t");
        const auto vlast = value.find_last_not_of(" \t\r");
        value = vfirst == std::string::npos ? "" : value.substr(vfirst, vlast - vfirst + 1);
        spliced.push_back("--" + line.substr(first, key_end - first + 1));
        spliced.push_back(value);
    }
    spliced.insert(spliced.end(), args.begin() + (args.empty() ? 0 : 1), args.end());
    return spliced;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometry of parameterized SU(2) quantum dynamics"};
    app.require_subcommand(1);

    RawOptions opt;
    RunConfig& cfg = opt.cfg;

    const auto add_common = [&](CLI::App* sub) {
        // command-line flags win over config entries: the file tokens are
        // spliced in ahead of the explicit flags and every option keeps the
        // last value it sees
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--config", opt.config_path,
                        "key=value configuration file; flags win over file entries");
        sub->add_option("--model", cfg.model, "canonical | ssh | custom");
        sub->add_option("--T", cfg.T, "total evolution time");
        sub->add_option("--H0", cfg.h0, "canonical field scale");
        sub->add_option("--probe", cfg.probe, "ground | bloch:x,y,z | optimal:<param>");
        sub->add_option("--M", cfg.repetitions, "estimation repetitions");
        sub->add_option("--out", cfg.out, "output path (default stdout)");
        sub->add_option("--format", cfg.format, "csv | json");
        sub->add_option("--fd-step", cfg.fd_step, "finite-difference step");
        sub->add_option("--fd-scheme", cfg.fd_scheme, "central | richardson");
        sub->add_option("--noise-sigma", cfg.noise_sigma, "gaussian noise on measured QMT");
        sub->add_option("--seed", cfg.seed, "random seed");
        sub->add_option("--grid", opt.grid, "name=lo:hi:count[,name=...] range overrides");
        sub->add_option("--theta", opt.theta, "canonical theta value or range");
        sub->add_option("--phi", opt.phi, "canonical phi value or range");
        sub->add_option("--r", opt.r, "canonical r value or range");
        sub->add_option("--v", opt.v, "ssh v value or range");
        sub->add_option("--w", opt.w, "ssh w value or range");
        sub->add_option("--k", opt.k, "ssh k value or range");
        sub->add_option("--set", opt.sets, "custom-model name=value bindings")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        sub->add_option("--custom-params", opt.custom_params, "custom parameter names a,b,c");
        sub->add_option("--X1", opt.x1, "custom field x-component expression");
        sub->add_option("--X2", opt.x2, "custom field y-component expression");
        sub->add_option("--X3", opt.x3, "custom field z-component expression");
        sub->add_option("--winding-nodes", cfg.winding_nodes, "winding quadrature nodes");
    };

    CLI::App* geometry = app.add_subcommand("geometry", "geometric report at one point");
    add_common(geometry);
    CLI::App* scan = app.add_subcommand("scan", "grid scan of geometric quantities");
    add_common(scan);
    CLI::App* adaptive = app.add_subcommand("adaptive", "adaptive estimation runs");
    add_common(adaptive);
    auto* steps_a_opt =
        adaptive->add_option("--steps-theta,--steps-k", cfg.steps_angle,
                             "comma-separated angle steps (expressions allowed)");
    auto* steps_b_opt = adaptive->add_option("--steps-r,--steps-v", cfg.steps_amplitude,
                                             "comma-separated amplitude steps");
    adaptive->add_option("--policy", cfg.policy, "fixed | shrinking (search mode)");
    adaptive->add_option("--step0", cfg.policy_step0, "initial search step");
    adaptive->add_option("--eta", cfg.eta, "peak criterion relative tolerance");
    adaptive->add_option("--max-iters", cfg.max_iters, "search iteration budget");
    CLI::App* verify = app.add_subcommand("verify", "oracle verification suites");
    add_common(verify);
    verify->add_flag("--inject-sign-flip", opt.inject_sign_flip,
                     "negative control: flip one closed-form sign")
        ->group("");  // hidden

    std::vector<std::string> args;
    try {
        args = splice_config(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);  // CLI11 consumes the vector form back to front
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    opt.schedule_given = steps_a_opt->count() > 0 || steps_b_opt->count() > 0;
    try {
        if (geometry->parsed()) return cmd_geometry(opt);
        if (scan->parsed()) return cmd_scan(opt);
        if (adaptive->parsed()) return cmd_adaptive(opt);
        if (verify->parsed()) return cmd_verify(opt);
        std::cerr << "no subcommand given\n";
        return kExitConfig;
    } catch (const degenerate_error& e) {
        std::cerr << "degenerate point: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
