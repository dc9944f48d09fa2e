#pragma once

#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qgeo/expr.hpp"
#include "qgeo/field.hpp"
#include "qgeo/geometry.hpp"
#include "qgeo/models.hpp"

// Run configuration and machine-readable emission for the command-line
// surface: parameter/grid specs, probe selection, byte-stable CSV and JSON
// writers, and the deterministic scan parallelism.

namespace qgeo::cli {

struct RangeSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

struct ParamSpec {
    double value = 0.0;
    std::optional<RangeSpec> range;
};

struct RunConfig {
    std::string model = "canonical";  // canonical | ssh | custom
    std::vector<std::string> custom_params;
    std::vector<std::string> custom_exprs;  // three coefficient expressions
    std::map<std::string, ParamSpec> params;
    double T = 10.0;
    double h0 = 1.0;
    std::string probe = "ground";  // ground | bloch:x,y,z | optimal:<param>
    int repetitions = 1;
    std::string format = "csv";  // csv | json
    std::string out;             // empty = stdout
    double fd_step = 1e-5;
    std::string fd_scheme = "central";  // central | richardson
    std::size_t chern_n1 = 256, chern_n2 = 512;
    std::size_t winding_nodes = 4096;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    // adaptive
    std::string steps_angle;      // comma-separated expressions (theta / k steps)
    std::string steps_amplitude;  // r / v steps
    std::string policy;           // empty | fixed | shrinking
    double policy_step0 = 0.3;
    double eta = 1e-3;
    std::size_t max_iters = 100000;
};

inline double parse_value_expr(const std::string& text) {
    try {
        return evaluate_scalar_expression(text);
    } catch (const expr_error& e) {
        throw std::invalid_argument(std::string("config value '") + text + "': " + e.what());
    }
}

/// "lo:hi:count" (each bound an expression) or a single scalar expression.
inline ParamSpec parse_param_spec(const std::string& text) {
    ParamSpec spec;
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) {
        spec.value = parse_value_expr(text);
        return spec;
    }
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw std::invalid_argument("range spec needs lo:hi:count, got '" + text + "'");
    RangeSpec r;
    r.lo = parse_value_expr(text.substr(0, c1));
    r.hi = parse_value_expr(text.substr(c1 + 1, c2 - c1 - 1));
    const long n = std::strtol(text.c_str() + c2 + 1, nullptr, 10);
    if (n < 2) throw std::invalid_argument("grid count must be >= 2 in '" + text + "'");
    r.count = static_cast<std::size_t>(n);
    if (!(r.hi > r.lo) && n > 1)
        throw std::invalid_argument("empty range in '" + text + "'");
    spec.range = r;
    return spec;
}

inline std::vector<double> parse_step_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string tok =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) out.push_back(parse_value_expr(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

/// 17 significant digits, C locale semantics: byte-stable across runs.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct ColumnSpec {
    std::string name;
    std::string unit;  // bracket annotation for the CSV header
};

struct Table {
    std::vector<ColumnSpec> columns;
    std::vector<std::vector<double>> rows;
};

inline void emit_csv(std::ostream& os, const Table& t) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c) os << ',';
        os << t.columns[c].name << '[' << t.columns[c].unit << ']';
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            os << fmt_double(row[c]);
        }
        os << '\n';
    }
}

inline void emit_json(std::ostream& os, const Table& t) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (std::isnan(row[c]))
                obj[t.columns[c].name] = nullptr;
            else
                obj[t.columns[c].name] = row[c];
        }
        arr.push_back(std::move(obj));
    }
    os << arr.dump(2) << '\n';
}

inline void emit_table(std::ostream& os, const Table& t, const std::string& format) {
    if (format == "csv")
        emit_csv(os, t);
    else if (format == "json")
        emit_json(os, t);
    else
        throw std::invalid_argument("unknown output format '" + format + "'");
}

/// Unit Bloch vector orthogonal to the gauge direction of `param`, the probe
/// that attains the maximal QMT for that parameter.
inline Vec3 optimal_probe(const HamiltonianField& field, std::span<const double> lam,
                          std::size_t param, double T) {
    const GaugeFactor f = gauge_factor(field, lam, param, T);
    if (f.magnitude <= 1e-12)
        throw degenerate_error("optimal probe: gauge direction undefined (vanishing factor)");
    const Vec3 e = f.direction;
    // cross with the axis least aligned with e
    const double ax = std::abs(e.x), ay = std::abs(e.y), az = std::abs(e.z);
    Vec3 axis{1.0, 0.0, 0.0};
    if (ay <= ax && ay <= az)
        axis = {0.0, 1.0, 0.0};
    else if (az <= ax && az <= ay)
        axis = {0.0, 0.0, 1.0};
    return cross(e, axis).normalized();
}

inline Vec3 resolve_probe(const std::string& probe, const HamiltonianField& field,
                          std::span<const double> lam, double T) {
    if (probe == "ground") {
        const Vec3 X = field.eval(lam);
        const double n = X.norm();
        if (n < 1e-12)
            throw degenerate_error("ground probe undefined where the field vanishes; "
                                   "evaluate along a limit path instead");
        return X / n;
    }
    if (probe.rfind("bloch:", 0) == 0) {
        const std::string body = probe.substr(6);
        const auto c1 = body.find(',');
        const auto c2 = body.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::invalid_argument("probe bloch needs three components: bloch:x,y,z");
        Vec3 r{parse_value_expr(body.substr(0, c1)),
               parse_value_expr(body.substr(c1 + 1, c2 - c1 - 1)),
               parse_value_expr(body.substr(c2 + 1))};
        if (std::abs(r.norm() - 1.0) > 1e-9)
            throw std::invalid_argument("probe bloch vector must be unit length");
        return r;
    }
    if (probe.rfind("optimal:", 0) == 0) {
        const std::string name = probe.substr(8);
        const auto& names = field.parameter_names();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return optimal_probe(field, lam, i, T);
        throw std::invalid_argument("probe optimal: unknown parameter '" + name + "'");
    }
    throw std::invalid_argument("unknown probe '" + probe + "'");
}

/// Scan worker count: QGEO_THREADS caps it, hardware concurrency is the
/// default, always at least one.
inline std::size_t scan_threads() {
    std::size_t n = std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
    if (const char* env = std::getenv("QGEO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
    }
    return n;
}

/// Deterministic data-parallel map: blocks of indices per worker, results
/// stored by index, emitted by the caller in order.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers = std::min(scan_threads(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t block = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(count, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace qgeo::cli
