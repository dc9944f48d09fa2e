#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qgeo/vec3.hpp"

namespace qgeo {

/// SU(2) coefficient field X(lambda) with its partial derivatives, over an
/// ordered list of named real parameters.
class HamiltonianField {
public:
    using EvalFn = std::function<Vec3(std::span<const double>)>;
    using PartialFn = std::function<Vec3(std::span<const double>, std::size_t)>;

    HamiltonianField(std::vector<std::string> names, EvalFn eval, PartialFn partial)
        : names_(std::move(names)), eval_(std::move(eval)), partial_(std::move(partial)) {}

    /// Field with partials produced by central differences of `eval`.
    static HamiltonianField with_numeric_partials(std::vector<std::string> names, EvalFn eval,
                                                  double h = 1e-6) {
        EvalFn ev = eval;
        PartialFn pf = [ev, h](std::span<const double> p, std::size_t l) {
            std::vector<double> q(p.begin(), p.end());
            q[l] += h;
            const Vec3 a = ev(q);
            q[l] -= 2.0 * h;
            const Vec3 b = ev(q);
            return (a - b) / (2.0 * h);
        };
        return HamiltonianField(std::move(names), std::move(ev), std::move(pf));
    }

    const std::vector<std::string>& parameter_names() const { return names_; }
    std::size_t size() const { return names_.size(); }

    Vec3 eval(std::span<const double> p) const { return eval_(p); }
    Vec3 partial(std::span<const double> p, std::size_t l) const { return partial_(p, l); }

    /// Consistency self-check: max deviation between the supplied partials and
    /// central finite differences of eval at `p`.
    double partial_consistency(std::span<const double> p, double h = 1e-6) const {
        double worst = 0.0;
        std::vector<double> q(p.begin(), p.end());
        for (std::size_t l = 0; l < size(); ++l) {
            const double saved = q[l];
            q[l] = saved + h;
            const Vec3 a = eval_(q);
            q[l] = saved - h;
            const Vec3 b = eval_(q);
            q[l] = saved;
            const Vec3 fd = (a - b) / (2.0 * h);
            const Vec3 d = fd - partial_(p, l);
            worst = std::max(worst, std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)}));
        }
        return worst;
    }

private:
    std::vector<std::string> names_;
    EvalFn eval_;
    PartialFn partial_;
};

}  // namespace qgeo
