#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pucci/geometry.hpp"

using namespace pucci;

namespace {

DataCloud line_cloud(std::vector<double> xs) {
    const Domain d = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    std::vector<Point> pts;
    for (double x : xs) pts.push_back({x, 0, 0});
    return DataCloud(d, Density::uniform(d), pts, 0);
}

std::vector<std::size_t> brute_ball(const DataCloud& c, const Point& x, double r) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (dist2(c[i], x) < r * r) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("domain signed distance") {
    const Domain box = Domain::box(2, {0, 0, 0}, {1, 2, 0});
    CHECK(box.signed_distance({0.25, 1.0, 0}) == doctest::Approx(0.25));
    CHECK(box.signed_distance({1.5, 1.0, 0}) == doctest::Approx(-0.5));
    CHECK_FALSE(box.contains({0.0, 1.0, 0}));
    const Domain ann = Domain::annulus(2, {0, 0, 0}, 0.25, 1.0);
    CHECK(ann.signed_distance({0.5, 0, 0}) == doctest::Approx(0.25));
    CHECK(ann.exterior_ball_radius() == 0.25);
    CHECK(ann.volume() == doctest::Approx(M_PI * (1 - 0.0625)));
    CHECK_THROWS_AS(Domain::box(4, {}, {}), ConfigError);
}

TEST_CASE("sample_cloud is reproducible and interior") {
    const Domain d = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    const auto a = sample_cloud(d, Density::uniform(d), 4, 11);
    const auto b = sample_cloud(d, Density::uniform(d), 4, 11);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i] == b[i]);
        CHECK(d.contains(a[i]));
    }
}

TEST_CASE("uniform draws have mean 0.5") {
    const Domain d = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    const auto c = sample_cloud(d, Density::uniform(d), 1000000, 3);
    double s = 0;
    for (const Point& p : c.points()) s += p[0];
    CHECK(std::abs(s / 1e6 - 0.5) < 0.002);
}

TEST_CASE("affine density fraction") {
    const Domain d = Domain::box(2, {0, 0, 0}, {1, 1, 0});
    const Density phi = Density::affine(d, 1.0, {1.0, 0, 0});
    CHECK(phi.mass() == doctest::Approx(1.0));
    CHECK(phi.lower() == doctest::Approx(1.0 / 1.5));
    const auto c = sample_cloud(d, phi, 100000, 5);
    std::size_t hit = 0;
    for (const Point& p : c.points()) hit += p[0] > 0.5;
    CHECK(std::abs(static_cast<double>(hit) / 1e5 - 0.875 / 1.5) < 0.005);
}

TEST_CASE("density validation") {
    const Domain d = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    CHECK_THROWS_AS(Density::affine(d, -0.5, {1.0, 0, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(Density::affine(d, 2.0, {0, 0, 0}, false).validate(), ConfigError);
    CHECK_NOTHROW(Density::affine(d, 1.0, {0, 0, 0}, false).validate());
}

TEST_CASE("ball_query hand cloud") {
    const auto c = line_cloud({0.3, 0.4, 0.5, 0.6, 0.7});
    CHECK(ball_query(c, {0.5, 0, 0}, 0.15) == std::vector<std::size_t>{1, 2, 3});
    CHECK(ball_query(c, {0.3, 0, 0}, 1e-9) == std::vector<std::size_t>{0});
    CHECK(ball_query(c, {0.35, 0, 0}, 0.01).empty());
    // strict inequality at the boundary of the ball
    const auto q = line_cloud({0.25, 0.5, 0.75});
    CHECK(ball_query(q, {0.5, 0, 0}, 0.25) == std::vector<std::size_t>{1});
}

TEST_CASE("ball_query matches brute force") {
    for (int dim = 1; dim <= 3; ++dim) {
        const Domain d = Domain::box(dim, {0, 0, 0}, {1, 1, 1});
        const auto c = sample_cloud(d, Density::uniform(d), 2000, 17 + dim, {0.05, 0.2});
        Rng rng(99);
        for (int t = 0; t < 1000; ++t) {
            Point x{};
            for (int k = 0; k < dim; ++k) x[k] = rng.uniform(-0.1, 1.1);
            const double r = rng.uniform(0.001, 0.4);
            REQUIRE(ball_query(c, x, r) == brute_ball(c, x, r));
        }
    }
}

TEST_CASE("nearest breaks ties by index") {
    const auto c = line_cloud({0.2, 0.4, 0.5, 0.7});
    CHECK(c.nearest({0.6, 0, 0}) == 2);
    CHECK(c.nearest({0.01, 0, 0}) == 0);
    CHECK(c.nearest({5.0, 0, 0}) == 3);
}

TEST_CASE("mu_ball examples") {
    const Domain d = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    const Density u = Density::uniform(d);
    CHECK(mu_ball(u, d, {0.5, 0, 0}, 0.1) == doctest::Approx(0.2).epsilon(1e-4));
    CHECK(mu_ball(u, d, {0.05, 0, 0}, 0.1) == doctest::Approx(0.15).epsilon(1e-4));
    const Density lin = Density::affine(d, 0.0, {2.0, 0, 0}, false);
    CHECK(mu_ball(lin, d, {0.5, 0, 0}, 0.1) == doctest::Approx(0.2).epsilon(1e-4));
}

TEST_CASE("mu_ball 2D accuracy and bounds") {
    const Domain d = Domain::box(2, {0, 0, 0}, {1, 1, 0});
    const Density u = Density::uniform(d);
    CHECK(mu_ball(u, d, {0.5, 0.5, 0}, 0.2) == doctest::Approx(M_PI * 0.04).epsilon(1e-4));
    // quarter disk at the corner
    CHECK(mu_ball(u, d, {0, 0, 0}, 0.3) == doctest::Approx(M_PI * 0.09 / 4).epsilon(1e-4));
    const Density phi = Density::affine(d, 1.0, {1.0, 0, 0});
    double prev = 0;
    for (double r : {0.05, 0.1, 0.2, 0.4}) {
        const Point x{0.1, 0.7, 0};
        const double m = mu_ball(phi, d, x, r);
        const double leb = lebesgue_ball(d, x, r);
        CHECK(m >= prev);
        CHECK(m >= phi.lower() * leb * (1 - 1e-12));
        CHECK(m <= phi.upper() * leb * (1 + 1e-12));
        prev = m;
    }
}

TEST_CASE("boundary strip") {
    const auto c = line_cloud({0.05, 0.3, 0.5, 0.95});
    CHECK(boundary_strip(c, 0.1) == std::vector<std::size_t>{0, 3});
    CHECK(boundary_strip(c, 2.0).size() == 4);
    const auto inner = line_cloud({0.5});
    CHECK_THROWS_AS(boundary_strip(inner, 0.1), EmptyStripError);

    const Domain ann = Domain::annulus(2, {0, 0, 0}, 0.25, 1.0);
    const auto a = sample_cloud(ann, Density::uniform(ann), 3000, 8);
    const auto s = boundary_strip(a, 0.1);
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double rho = norm(a[i]);
        if (rho <= 0.35 || rho >= 0.9) want.push_back(i);
    }
    CHECK(s == want);
}

TEST_CASE("cloud csv") {
    const auto c = line_cloud({0.25, 0.5});
    CHECK(cloud_csv(c) == "index,x1\n0,0.25\n1,0.5\n");
}

TEST_CASE("two seeds agree on coarse histogram") {
    const Domain d = Domain::box(2, {0, 0, 0}, {1, 1, 0});
    const Density phi = Density::affine(d, 1.0, {1.0, 0, 0});
    const std::size_t n = 40000;
    const auto a = sample_cloud(d, phi, n, 1);
    const auto b = sample_cloud(d, phi, n, 2);
    auto hist = [](const DataCloud& c) {
        std::vector<double> h(16, 0.0);
        for (const Point& p : c.points())
            h[std::min(3, int(p[0] * 4)) * 4 + std::min(3, int(p[1] * 4))] += 1;
        return h;
    };
    const auto ha = hist(a), hb = hist(b);
    for (int k = 0; k < 16; ++k) {
        const double p = (ha[k] + hb[k]) / (2.0 * n);
        const double sd = std::sqrt(2.0 * n * p * (1 - p));
        CHECK(std::abs(ha[k] - hb[k]) < 5 * sd);
    }
}
