#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

#include "qgeo/runio.hpp"

using namespace qgeo;
using namespace qgeo::cli;
using std::numbers::pi;

TEST_CASE("param spec parsing: scalars, expressions, ranges") {
    CHECK(parse_param_spec("0.5").value == Catch::Approx(0.5));
    CHECK(parse_param_spec("pi/2").value == Catch::Approx(pi / 2.0));
    const ParamSpec r = parse_param_spec("0:pi:128");
    REQUIRE(r.range.has_value());
    CHECK(r.range->lo == 0.0);
    CHECK(r.range->hi == Catch::Approx(pi));
    CHECK(r.range->count == 128);
    CHECK_THROWS_AS(parse_param_spec("0:pi:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_param_spec("0:pi"), std::invalid_argument);
    CHECK_THROWS_AS(parse_param_spec("nonsense"), std::invalid_argument);
}

TEST_CASE("step list parsing") {
    const auto steps = parse_step_list("pi/3,pi/5, 0.25");
    REQUIRE(steps.size() == 3);
    CHECK(steps[0] == Catch::Approx(pi / 3.0));
    CHECK(steps[2] == Catch::Approx(0.25));
    CHECK(parse_step_list("").empty());
}

TEST_CASE("CSV emission is byte stable with bracketed units") {
    Table t;
    t.columns = {{"theta", "rad"}, {"g", "1"}};
    t.rows = {{pi, 100.0}, {0.1, 0.3333333333333333}};
    std::ostringstream a, b;
    emit_csv(a, t);
    emit_csv(b, t);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("theta[rad],g[1]\n", 0) == 0);
    CHECK(a.str().find("3.1415926535897931") != std::string::npos);
}

TEST_CASE("JSON emission mirrors the CSV field names without units") {
    Table t;
    t.columns = {{"theta", "rad"}, {"g", "1"}};
    t.rows = {{0.5, std::nan("")}};
    std::ostringstream os;
    emit_json(os, t);
    const auto j = nlohmann::json::parse(os.str());
    REQUIRE(j.is_array());
    CHECK(j[0]["theta"] == 0.5);
    CHECK(j[0]["g"].is_null());
    CHECK_THROWS_AS(emit_table(os, t, "yaml"), std::invalid_argument);
}

TEST_CASE("probe resolution") {
    const auto field = canonical_field(1.0);
    const double lam[] = {1.2, 0.4, 0.5};
    const Vec3 g = resolve_probe("ground", field, lam, 10.0);
    CHECK((g - field.eval(lam).normalized()).norm() < 1e-15);

    const Vec3 b = resolve_probe("bloch:0,0,1", field, lam, 10.0);
    CHECK(b.z == 1.0);
    CHECK_THROWS_AS(resolve_probe("bloch:0,0,2", field, lam, 10.0), std::invalid_argument);

    const Vec3 o = resolve_probe("optimal:theta", field, lam, 10.0);
    const GaugeFactor f = gauge_factor(field, lam, 0, 10.0);
    CHECK(std::abs(dot(o, f.direction)) < 1e-12);
    CHECK(o.norm() == Catch::Approx(1.0));
    CHECK_THROWS_AS(resolve_probe("optimal:bogus", field, lam, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(resolve_probe("slartibartfast", field, lam, 10.0), std::invalid_argument);

    const double tpt[] = {pi, 0.0, 1.0};
    CHECK_THROWS_AS(resolve_probe("ground", field, tpt, 10.0), degenerate_error);
}

TEST_CASE("parallel_for covers every index exactly once in any partition") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}
