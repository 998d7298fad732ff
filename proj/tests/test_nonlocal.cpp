#include <doctest.h>

#include <cmath>
#include <vector>

#include "pucci/io.hpp"
#include "pucci/nonlocal.hpp"
#include "pucci/partition.hpp"

using namespace pucci;

namespace {

const Domain square = Domain::box(2, {-1, -1, 0}, {1, 1, 0});
const Domain unit_square = Domain::box(2, {0, 0, 0}, {1, 1, 0});

OperatorParams half(double eps) {
    OperatorParams p;
    p.alpha = p.beta = 0.5;
    p.epsilon = eps;
    return p;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]) - mx;
        sxy += a * (std::log(y[i]) - my);
        sxx += a * a;
    }
    return sxy / sxx;
}

}  // namespace

TEST_CASE("constant field gives zero") {
    const auto v = AnalyticField::constant(3.0);
    const Density d = Density::uniform(square);
    for (Sign s : {Sign::Max, Sign::Min})
        CHECK(std::abs(eval_nonlocal(v, {0.1, 0.2, 0}, half(0.1), {}, s, square, d).value) < 1e-12);
}

TEST_CASE("affine field gives the drift term") {
    const Point a{0.6, -0.8, 0};
    const auto v = AnalyticField::affine(1.0, a);
    const Density d = Density::uniform(square);
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto hi = eval_nonlocal(v, {0.1, 0.2, 0}, half(eps), {}, Sign::Max, square, d);
        const auto lo = eval_nonlocal(v, {0.1, 0.2, 0}, half(eps), {}, Sign::Min, square, d);
        CHECK(hi.value == doctest::Approx(0.25).epsilon(1e-8));
        CHECK(lo.value == doctest::Approx(-0.25).epsilon(1e-8));
        CHECK(std::abs(hi.mean_term) < 1e-8);
    }
}

TEST_CASE("square norm against the closed form") {
    // pair: 1 + (|x|+ε)τ + τ²ε²/2, mean: N/(N+2)
    const auto v = AnalyticField::square_norm();
    const Density d = Density::uniform(square);
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto r = eval_nonlocal(v, {0.5, 0, 0}, half(eps), {}, Sign::Max, square, d);
        CHECK(r.pair_term == doctest::Approx(1.5 + eps + 0.5 * eps * eps).epsilon(1e-9));
        CHECK(r.mean_term == doctest::Approx(0.5).epsilon(1e-3));
        const auto m = eval_nonlocal(v, {0.5, 0, 0}, half(eps), {}, Sign::Min, square, d);
        CHECK(m.pair_term == doctest::Approx(-0.5 + 0.25 * eps * eps).epsilon(1e-6));
        CHECK(m.value <= r.value);
    }
}

TEST_CASE("limit operator examples") {
    OperatorParams p = half(0.1);
    Matrix3 h{};
    CHECK(eval_limit({}, h, 1.0, {}, p, Sign::Max, 2) == 0.0);
    h[0][0] = h[1][1] = 2.0;
    CHECK(eval_limit({1, 0, 0}, h, 1.0, {}, p, Sign::Max, 2) == doctest::Approx(1.0));
    CHECK(eval_limit({1, 0, 0}, h, 1.0, {}, p, Sign::Min, 2) == doctest::Approx(0.5));
    h[0][1] = 1.0;
    CHECK_THROWS_AS(eval_limit({1, 0, 0}, h, 1.0, {}, p, Sign::Max, 2), InputError);
}

TEST_CASE("eigen extremes") {
    Matrix3 h{{{2, 1, 0}, {1, 2, 0}, {0, 0, -1}}};
    auto [a, b] = eigen_extremes(h, 2);
    CHECK(a == doctest::Approx(1.0));
    CHECK(b == doctest::Approx(3.0));
    std::tie(a, b) = eigen_extremes(h, 3);
    CHECK(a == doctest::Approx(-1.0));
    CHECK(b == doctest::Approx(3.0));
    Matrix3 g{{{4, 1, 2}, {1, 3, 0.5}, {2, 0.5, 1}}};
    std::tie(a, b) = eigen_extremes(g, 3);
    // characteristic polynomial vanishes at both
    auto det = [&](double l) {
        Matrix3 m = g;
        for (int k = 0; k < 3; ++k) m[k][k] -= l;
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    CHECK(std::abs(det(a)) < 1e-9);
    CHECK(std::abs(det(b)) < 1e-9);
    CHECK(a < b);
}

TEST_CASE("tug-of-war limit") {
    Matrix3 h{};
    h[0][0] = 2.0;
    h[1][1] = 4.0;
    // Δ∞ along e1: 2, Δ = 6
    CHECK(eval_limit_tow({1, 0, 0}, h, 1.0, {}, 0.5, 0.5, 2) ==
          doctest::Approx(0.5 + 0.5 / 8 * 6));
    CHECK_THROWS_AS(eval_limit_tow({}, h, 1.0, {}, 0.5, 0.5, 2), InputError);
}

TEST_CASE("expansion consistency") {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    SUBCASE("square norm, max") {
        const auto v = AnalyticField::square_norm();
        const Density d = Density::uniform(square);
        const Point x{0.5, 0, 0};
        std::vector<double> err;
        for (double e : eps) {
            OperatorParams p = half(e);
            const double lim = eval_limit(*v.gradient(x), v.hessian(x), d(x), d.gradient(x), p,
                                          Sign::Max, 2);
            err.push_back(std::abs(eval_nonlocal(v, x, p, {}, Sign::Max, square, d).value - lim));
        }
        CHECK(slope(eps, err) >= 0.9);
    }
    SUBCASE("cos(x1), affine density, both signs") {
        const auto v = AnalyticField::cos_x1();
        const Density d = Density::affine(unit_square, 1.0, {1, 0, 0});
        const Point x{0.5, 0.5, 0};
        for (Sign s : {Sign::Max, Sign::Min}) {
            std::vector<double> err;
            for (double e : eps) {
                OperatorParams p = half(e);
                const double lim =
                    eval_limit(*v.gradient(x), v.hessian(x), d(x), d.gradient(x), p, s, 2);
                err.push_back(std::abs(eval_nonlocal(v, x, p, {}, s, unit_square, d).value - lim));
            }
            CHECK(slope(eps, err) >= 0.9);
        }
    }
}

TEST_CASE("min below max") {
    const Density d = Density::affine(unit_square, 1.0, {1, 0, 0});
    const auto f = AnalyticField::cos_x1(3.0);
    const auto g = AnalyticField::square_norm({0.3, 0.7, 0});
    for (const Point& x : {Point{0.3, 0.3, 0}, Point{0.5, 0.8, 0}, Point{0.7, 0.4, 0}})
        for (const AnalyticField* v : {&f, &g}) {
            const auto lo = eval_nonlocal(*v, x, half(0.1), {}, Sign::Min, unit_square, d);
            const auto hi = eval_nonlocal(*v, x, half(0.1), {}, Sign::Max, unit_square, d);
            CHECK(lo.value <= hi.value);
        }
}

TEST_CASE("drift absorption") {
    const auto a = AnalyticField::affine(0.0, {1, 2, 0});
    const auto c = AnalyticField::cos_x1(2.0);
    for (const AnalyticField* v : {&a, &c}) {
        const auto r = check_drift_absorption(*v, {0.3, 0.4, 0}, half(0.1), {}, 2);
        CHECK(r.holds);
        CHECK(r.absorbed >= r.drift);
    }
    // with the drift over ε² instead of 2ε² an affine field fails by a factor 2
    const auto r = check_drift_absorption(a, {0.3, 0.4, 0}, half(0.1), {}, 2);
    CHECK_FALSE(r.literal_holds);
}

TEST_CASE("quadrature convergence") {
    const auto v = AnalyticField::cos_x1(3.0);
    const Density d = Density::affine(unit_square, 1.0, {1, 0, 0});
    NonlocalQuadrature q;
    q.resolution_error = true;
    const Point x{0.4, 0.6, 0};
    for (Sign s : {Sign::Max, Sign::Min}) {
        const auto base = eval_nonlocal(v, x, half(0.1), q, s, unit_square, d);
        const auto fine = eval_nonlocal(v, x, half(0.1), q.doubled(), s, unit_square, d);
        CHECK(std::abs(fine.value - base.value) <= 2.0 * base.resolution_error + 1e-12);
    }
    NonlocalQuadrature bad;
    bad.directions = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("extension candidates find the exact extremum in 1D") {
    const Domain I = Domain::box(1, {0, 0, 0}, {1, 0, 0});
    const Density d = Density::uniform(I);
    const DataCloud cloud = sample_cloud(I, d, 400, 7);
    const TransportMap map(cloud, 0.05);
    GraphFunction u(cloud.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(9.0 * cloud[i][0]) + 0.1 * (i % 3);
    const Extension ext(map, u);
    OperatorParams p = half(0.1);
    const double hr = p.tau * p.epsilon * p.epsilon;
    for (double x0 : {0.3, 0.55, 0.8}) {
        const Point x{x0, 0, 0};
        const auto r = eval_nonlocal(ext, x, p, {}, Sign::Max, I, d);
        // dense scan of z, never above the candidate-based value
        double scan = -1e300;
        for (int k = -20000; k <= 20000; ++k) {
            const Point z{0.1 * (1 - 1e-9) * k / 20000.0, 0, 0};
            scan = std::max(scan, ext(x + z) + *ext.ball_extreme(x - z, hr, true));
        }
        const double scan_term = (scan - 2.0 * ext(x)) / (2 * p.epsilon * p.epsilon);
        CHECK(scan_term <= r.pair_term + 1e-9);
        CHECK(r.mean_term == doctest::Approx(
                                 (ext.ball_integral(d, I, x, 0.1)->first /
                                      ext.ball_integral(d, I, x, 0.1)->second -
                                  ext(x)) /
                                 0.01));
    }
}

TEST_CASE("barrier function examples") {
    BarrierSpec s;
    s.sigma = 1.0;
    s.xi = {0.5, 0.5, 0};
    auto b = barrier_phi(s, s.xi, 2);
    CHECK(b.phi == 1.0);
    CHECK(norm(b.grad) == 0.0);
    b = barrier_phi(s, {1.5, 0.5, 0}, 2);
    CHECK(b.phi == doctest::Approx(0.5));
    CHECK(norm(b.grad) == doctest::Approx(0.5));
    s.sigma = 3.0;
    for (double t : {0.0, 0.1, 1.0, 10.0}) {
        const auto c = barrier_phi(s, {0.5 + t, 0.5, 0}, 2);
        CHECK(c.Phi >= 0.0);
        CHECK(c.Phi < 1.0);
    }
    // hessian by central differences
    const Point x{0.9, 0.2, 0};
    const auto c = barrier_phi(s, x, 2);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const auto bp = barrier_phi(s, xp, 2), bm = barrier_phi(s, xm, 2);
        CHECK((bp.phi - bm.phi) / (2 * h) == doctest::Approx(c.grad[i]).epsilon(1e-6));
        for (int j = 0; j < 2; ++j)
            CHECK((bp.grad[j] - bm.grad[j]) / (2 * h) == doctest::Approx(c.hess[i][j]).epsilon(1e-5));
    }
}

TEST_CASE("barrier constants and verification") {
    const double R = 2.5, r = 0.25;
    const Domain box = Domain::box(1, {-R - 1, 0, 0}, {R + 1, 0, 0});
    const Density d = Density::uniform(box);
    OperatorParams p = half(0.01);
    const auto c0 = barrier_constants(p, d, 1, r, R, 1.0);
    // C1 = ((Λ+τ)² + 2Rτ)/(R+1), φ0 = φ1 = 1/7
    CHECK(c0.C1 == doctest::Approx(9.0 / 3.5));
    CHECK(c0.C2 == doctest::Approx(1.0 / 3.0));
    CHECK(c0.C3 == doctest::Approx(9.0 / 3.5));
    CHECK(c0.sigma0 == doctest::Approx((1 + c0.b) / c0.a));
    CHECK(c0.eps_bound_rR == 0.0);

    BarrierSpec s;
    s.sigma = 2.0 * c0.sigma0;
    s.r = r;
    s.R = R;
    std::vector<Point> xs;
    for (int k = 0; k < 8; ++k) xs.push_back({(k % 2 ? -1.0 : 1.0) * (r + (R - r) * k / 7.0), 0, 0});
    const auto rep = verify_barrier_lower_bound(s, p, box, d, xs);
    CHECK(rep.violations.empty());
    CHECK(rep.samples == 8);
    CHECK_FALSE(rep.preconditions.empty());  // ε is above the small-ε bounds
    const auto j = nlohmann::json::parse(rep.json());
    CHECK(j["violations"].size() == 0);
    CHECK(j["constants"]["sigma0"].get<double>() == doctest::Approx(c0.sigma0));

    // A = 0: L⁻Ψ = 0 and ψ = 0, nothing to violate on the ψ side
    s.A = 0.0;
    const auto rep0 = verify_barrier_lower_bound(s, p, box, d, xs);
    for (const auto& v : rep0.violations) CHECK(v.kind != "psi");
}
