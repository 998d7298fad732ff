#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pucci/graph_ops.hpp"

using namespace pucci;

namespace {

const Domain unit_interval = Domain::box(1, {0, 0, 0}, {1, 0, 0});

DataCloud line_cloud(std::vector<double> xs) {
    std::vector<Point> pts;
    for (double x : xs) pts.push_back({x, 0, 0});
    return DataCloud(unit_interval, Density::uniform(unit_interval), pts, 0);
}

OperatorParams hand_params() {
    OperatorParams p;
    p.alpha = p.beta = 0.5;
    p.Lambda = 1.0;
    p.tau = 7.0;
    p.epsilon = 0.15;
    return p;
}

GraphFunction squares(const DataCloud& c) {
    GraphFunction u(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) u[i] = c[i][0] * c[i][0];
    return u;
}

// Brute-force oracle: enumerate every (j, k) pair by plain distance scans.
double oracle_pucci(const DataCloud& c, const OperatorParams& p, const GraphFunction& u,
                    std::size_t i, bool upper) {
    double best = upper ? -1e300 : 1e300, sum = 0;
    int cnt = 0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double dij = std::sqrt(dist2(c[i], c[j]));
        if (dij < p.epsilon) {
            sum += u[j];
            ++cnt;
        }
        if (dij >= p.Lambda * p.epsilon) continue;
        const Point refl = reflect(c[i], c[j]);
        std::size_t near = 0;
        bool any = false;
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (dist2(c[k], refl) < dist2(c[near], refl)) near = k;
            if (std::sqrt(dist2(c[k], refl)) >= p.reflect_radius()) continue;
            any = true;
            const double v = 0.5 * (u[j] + u[k]);
            best = upper ? std::max(best, v) : std::min(best, v);
        }
        if (!any) {  // nearest-vertex fallback
            const double v = 0.5 * (u[j] + u[near]);
            best = upper ? std::max(best, v) : std::min(best, v);
        }
    }
    return (p.alpha * best + p.beta * sum / cnt - u[i]) / (p.epsilon * p.epsilon);
}

}  // namespace

TEST_CASE("reflected_ball examples") {
    const auto c = line_cloud({0.3, 0.4, 0.5, 0.6, 0.7});
    CHECK(reflected_ball(c, 2, 0, 0.1575, Fallback::Strict) == std::vector<std::size_t>{3, 4});
    CHECK(reflected_ball(c, 2, 2, 0.01, Fallback::Strict) == std::vector<std::size_t>{2});

    const auto d = line_cloud({0.2, 0.4, 0.5, 0.7});
    std::size_t fb = 0;
    CHECK(reflected_ball(d, 1, 0, 0.0625, Fallback::NearestVertex, &fb) ==
          std::vector<std::size_t>{2});
    CHECK(fb == 1);
    try {
        reflected_ball(d, 1, 0, 0.0625, Fallback::Strict);
        FAIL("expected an error");
    } catch (const ReflectedNeighborhoodError& e) {
        REQUIRE(e.sites().size() == 1);
        CHECK(e.sites()[0].center == 1);
        CHECK(e.sites()[0].partner == 0);
    }
}

TEST_CASE("pucci hand oracle") {
    const auto c = line_cloud({0.3, 0.4, 0.5, 0.6, 0.7});
    const auto u = squares(c);
    const auto p = hand_params();
    CHECK(std::abs(eval_pucci(c, p, u, 2, Sign::Max) - 1.814815) < 1e-6);
    CHECK(std::abs(eval_pucci(c, p, u, 2, Sign::Min) + 0.851852) < 1e-6);
    CHECK(std::abs(eval_pucci(c, p, u, 2, Sign::Max) - 49.0 / 27.0) < 1e-12);
    CHECK(std::abs(eval_pucci(c, p, u, 2, Sign::Min) + 23.0 / 27.0) < 1e-12);
    CHECK(eval_pucci(c, p, u, 2, Sign::Max) == doctest::Approx(oracle_pucci(c, p, u, 2, true)));
    const GraphFunction k(5, 3.25);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(eval_pucci(c, p, k, i, Sign::Max) == 0.0);
        CHECK(eval_pucci(c, p, k, i, Sign::Min) == 0.0);
    }
}

TEST_CASE("tug-of-war hand oracle") {
    const auto c = line_cloud({0.3, 0.4, 0.5, 0.6, 0.7});
    const auto u = squares(c);
    CHECK(std::abs(eval_tugofwar(c, {2.0, 0.15}, u, 2) - 8.0 / 27.0) < 1e-12);
    CHECK(std::abs(eval_tugofwar(c, {4.0, 0.15}, u, 2) - 0.355556) < 1e-6);
    CHECK_THROWS_AS(eval_tugofwar(c, {1.5, 0.15}, u, 2), ConfigError);
}

TEST_CASE("example1 degenerate simplex and weight validation") {
    const auto c = line_cloud({0.3, 0.4, 0.5, 0.6, 0.7});
    const auto u = squares(c);
    const auto p = hand_params();
    // B_eps(0.5) = {0.4, 0.5, 0.6}; all weight on 0.4, whose reflection is 0.6
    const double v = eval_example1(c, p, std::vector<double>{1, 0, 0}, u, 2);
    const double want = (0.5 * (0.5 * (0.16 + 0.36)) + 0.5 * (0.77 / 3) - 0.25) / 0.0225;
    CHECK(v == doctest::Approx(want).epsilon(1e-12));
    CHECK_THROWS_AS(eval_example1(c, p, std::vector<double>{0.5, 0.2, 0.2}, u, 2), ConfigError);
    CHECK(eval_example1(c, p, std::vector<double>{0.2, 0.3, 0.5}, GraphFunction(5, 1.0), 2) == 0.0);
}

TEST_CASE("operator invariants and ordering on random instances") {
    Rng rng(2024);
    for (int inst = 0; inst < 30; ++inst) {
        const int dim = 1 + inst % 2;
        const Domain d = Domain::box(dim, {0, 0, 0}, {1, 1, 0});
        const auto c = sample_cloud(d, Density::uniform(d), 300, 100 + inst);
        OperatorParams p;
        p.alpha = rng.uniform(0.0, 0.9);
        p.beta = 1.0 - p.alpha;
        p.Lambda = 1.0 + rng.uniform(0, 1);
        p.tau = 1.0 + rng.uniform(0, 3);
        p.epsilon = dim == 1 ? 0.05 : 0.15;
        GraphFunction u(c.size());
        for (auto& v : u) v = rng.uniform(-1, 1);
        const double norm_u = 1.0;
        const double tol = 1e-12 * norm_u / (p.epsilon * p.epsilon) * 10;
        for (std::size_t i = 0; i < c.size(); i += 7) {
            const double hi = eval_pucci(c, p, u, i, Sign::Max);
            const double lo = eval_pucci(c, p, u, i, Sign::Min);
            const double mid = eval_operator(c, OperatorSpec::example1(p), u, i);
            CHECK(lo <= mid + tol);
            CHECK(mid <= hi + tol);
            GraphFunction shifted = u, scaled = u;
            for (auto& v : shifted) v += 0.75;
            for (auto& v : scaled) v *= 3.0;
            CHECK(std::abs(eval_pucci(c, p, shifted, i, Sign::Max) - hi) <= tol * 2);
            CHECK(std::abs(eval_pucci(c, p, scaled, i, Sign::Min) - 3 * lo) <= tol * 3);
            // monotonicity: raise u away from i
            GraphFunction w = u;
            for (std::size_t k = 0; k < w.size(); ++k)
                if (k != i) w[k] += rng.uniform(0, 0.1);
            CHECK(eval_pucci(c, p, w, i, Sign::Max) >= hi - tol);
        }
        if (inst < 5)
            for (std::size_t i = 0; i < c.size(); i += 37)
                CHECK(eval_pucci(c, p, u, i, Sign::Max) ==
                      doctest::Approx(oracle_pucci(c, p, u, i, true)).epsilon(1e-12));
    }
}

TEST_CASE("stencil evaluation equals per-vertex evaluation bitwise") {
    const Domain d = Domain::box(2, {0, 0, 0}, {1, 1, 0});
    const auto c = sample_cloud(d, Density::uniform(d), 1500, 9);
    Rng rng(1);
    GraphFunction u(c.size());
    for (auto& v : u) v = rng.uniform(-1, 1);
    OperatorParams p;
    p.alpha = 0.4;
    p.beta = 0.6;
    p.tau = 2.0;
    p.epsilon = 0.1;
    std::vector<std::size_t> verts;
    for (std::size_t i = 0; i < c.size(); i += 3) verts.push_back(i);
    for (const OperatorSpec& spec :
         {OperatorSpec::pucci(Sign::Max, p), OperatorSpec::pucci(Sign::Min, p),
          OperatorSpec::example1(p), OperatorSpec::tug_of_war(4.0, 0.1, 2)}) {
        const auto ref = reference::eval_field(c, spec, u, verts);
        const Stencil st(c, spec, verts);
        const auto fast = eval_field(st, u);
        REQUIRE(fast.size() == ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) REQUIRE(fast[k] == ref[k]);
        if (spec.uses_pairs()) {
            const Stencil lean(c, spec, verts, 10);
            CHECK_FALSE(lean.pairs_stored());
            const auto otf = eval_field(lean, u);
            for (std::size_t k = 0; k < ref.size(); ++k) REQUIRE(otf[k] == ref[k]);
        }
        for (int t : {1, 2, 3}) {
            set_num_threads(t);
            CHECK(eval_field(st, u) == fast);
        }
        set_num_threads(0);
    }
}

TEST_CASE("strict policy aggregates sites") {
    const auto d = line_cloud({0.2, 0.4, 0.5, 0.7});
    OperatorParams p;
    p.alpha = p.beta = 0.5;
    p.epsilon = 0.25;
    p.tau = 1.0;
    p.fallback = Fallback::Strict;
    const auto spec = OperatorSpec::pucci(Sign::Max, p);
    CHECK_THROWS_AS(Stencil(d, spec, {0, 1, 2, 3}), ReflectedNeighborhoodError);
    CHECK_THROWS_AS(reference::eval_field(d, spec, GraphFunction(4, 0.0), {0, 1, 2, 3}),
                    ReflectedNeighborhoodError);
    p.fallback = Fallback::NearestVertex;
    const Stencil ok(d, OperatorSpec::pucci(Sign::Max, p), {0, 1, 2, 3});
    CHECK(ok.fallbacks() > 0);
}

TEST_CASE("params validation") {
    OperatorParams p;
    p.alpha = 0.3;
    p.beta = 0.6;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.beta = 0.7;
    CHECK(p.validate().empty());
    p.epsilon = 0.6;
    p.eps_max = 1.0;
    CHECK(p.validate().size() == 1);
    p.eps_max = 0.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    const auto t = OperatorSpec::tug_of_war(2.0, 0.1, 2);
    CHECK(t.params.alpha == 0.0);
    CHECK(OperatorSpec::tug_of_war(4.0, 0.1, 1).params.beta == doctest::Approx(0.6));
}

TEST_CASE("large 1D balls match the brute-force oracle") {
    const Domain I = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    const DataCloud c = sample_cloud(I, Density::uniform(I), 3000, 17);
    GraphFunction u(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) u[i] = std::sin(7.0 * c[i][0]) + 0.01 * (i % 5);
    OperatorParams p;
    p.epsilon = 0.3;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < c.size(); i += 301) rows.push_back(i);
    for (Sign s : {Sign::Max, Sign::Min}) {
        for (std::size_t i : rows)
            CHECK(eval_pucci(c, p, u, i, s) ==
                  doctest::Approx(oracle_pucci(c, p, u, i, s == Sign::Max)).epsilon(1e-12));
        const auto spec = OperatorSpec::pucci(s, p);
        CHECK(eval_field(Stencil(c, spec, rows), u) == reference::eval_field(c, spec, u, rows));
    }
}
