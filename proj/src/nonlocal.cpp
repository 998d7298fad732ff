#include "pucci/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pucci/io.hpp"

namespace pucci {

// Analytic fields ----------------------------------------------------------------

AnalyticField AnalyticField::constant(double c) {
    return AnalyticField([c](const Point&) { return c; }, [](const Point&) { return Point{}; },
                         [](const Point&) { return Matrix3{}; });
}

AnalyticField AnalyticField::affine(double c, const Point& a) {
    return AnalyticField([c, a](const Point& x) { return c + dot(a, x); },
                         [a](const Point&) { return a; }, [](const Point&) { return Matrix3{}; });
}

AnalyticField AnalyticField::square_norm(const Point& x0) {
    return AnalyticField([x0](const Point& x) { return dist2(x, x0); },
                         [x0](const Point& x) { return 2.0 * (x - x0); },
                         [](const Point&) {
                             Matrix3 h{};
                             for (int k = 0; k < 3; ++k) h[k][k] = 2.0;
                             return h;
                         });
}

AnalyticField AnalyticField::cos_x1(double k) {
    return AnalyticField([k](const Point& x) { return std::cos(k * x[0]); },
                         [k](const Point& x) { return Point{-k * std::sin(k * x[0]), 0.0, 0.0}; },
                         [k](const Point& x) {
                             Matrix3 h{};
                             h[0][0] = -k * k * std::cos(k * x[0]);
                             return h;
                         });
}

// Quadrature ---------------------------------------------------------------------

void NonlocalQuadrature::validate() const {
    if (directions < 1) throw ConfigError("quadrature.directions", "must be >= 1");
    if (radial_levels < 1) throw ConfigError("quadrature.radial_levels", "must be >= 1");
    if (h_samples < 1) throw ConfigError("quadrature.h_samples", "must be >= 1");
    if (ball_resolution < 2) throw ConfigError("quadrature.ball_resolution", "must be >= 2");
}

NonlocalQuadrature NonlocalQuadrature::halved() const {
    NonlocalQuadrature q = *this;
    q.directions = std::max(1, directions / 2);
    q.radial_levels = std::max(1, radial_levels / 2);
    q.h_samples = std::max(1, h_samples / 2);
    q.ball_resolution = std::max(2, ball_resolution / 2);
    q.resolution_error = false;
    return q;
}

NonlocalQuadrature NonlocalQuadrature::doubled() const {
    NonlocalQuadrature q = *this;
    q.directions = 2 * directions;
    q.radial_levels = 2 * radial_levels;
    q.h_samples = 2 * h_samples;
    q.ball_resolution = 2 * ball_resolution;
    q.resolution_error = false;
    return q;
}

int NonlocalQuadrature::refine_levels(int dim) const {
    if (ball_refine >= 0) return ball_refine;
    return dim == 1 ? 10 : dim == 2 ? 3 : 1;
}

namespace {

// Unit directions: ±1 in 1D, equally spaced angles in 2D, a Fibonacci sphere in 3D.
std::vector<Point> unit_directions(int dim, int count) {
    std::vector<Point> d;
    if (dim == 1) return {Point{1, 0, 0}, Point{-1, 0, 0}};
    if (dim == 2) {
        for (int k = 0; k < count; ++k) {
            const double t = 2.0 * std::numbers::pi * k / count;
            d.push_back(Point{std::cos(t), std::sin(t), 0.0});
        }
        return d;
    }
    for (int a = 0; a < 3; ++a)
        for (double s : {1.0, -1.0}) {
            Point e{};
            e[a] = s;
            d.push_back(e);
        }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / count;
        const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
        d.push_back(Point{rr * std::cos(golden * k), rr * std::sin(golden * k), z});
    }
    return d;
}

Point clip_to(const Point& z, double rmax) {
    const double n = norm(z);
    return n > rmax ? (rmax / n) * z : z;
}

class PairEvaluator {
public:
    PairEvaluator(const Field& v, const Point& x, int dim, double h_radius, int h_samples,
                  bool upper)
        : v_(v), x_(x), dim_(dim), rho_(h_radius * (1.0 - 1e-12)), upper_(upper),
          hdirs_(unit_directions(dim, h_samples)) {}

    // ext_{|h| < ρ} v(c + h)
    double h_extreme(const Point& c) const {
        if (auto e = v_.ball_extreme(c, rho_ / (1.0 - 1e-12), upper_)) return *e;
        double best = v_(c);
        auto take = [&](const Point& y) {
            const double f = v_(y);
            best = upper_ ? std::max(best, f) : std::min(best, f);
        };
        for (const Point& d : hdirs_) take(c + rho_ * d);
        if (auto g = v_.gradient(c)) {
            const double gn = norm(*g);
            if (gn > 0.0) {
                const Point d = (1.0 / gn) * *g;
                take(c + rho_ * d);
                take(c - rho_ * d);
            }
        }
        return best;
    }

    double pair(const Point& z) const { return v_(x_ + z) + h_extreme(x_ - z); }
    bool better(double a, double b) const { return upper_ ? a > b : a < b; }
    int dim() const { return dim_; }

private:
    const Field& v_;
    Point x_;
    int dim_;
    double rho_;
    bool upper_;
    std::vector<Point> hdirs_;
};

struct PairResult {
    double value;
    Point z;
};

PairResult pair_extreme(const PairEvaluator& ev, const Field& v, const Point& x, double zr,
                        double hr, const NonlocalQuadrature& quad) {
    const int dim = ev.dim();
    const double rmax = zr * (1.0 - 1e-12);
    PairResult best{ev.pair(Point{}), Point{}};
    auto consider = [&](const Point& z) {
        const double p = ev.pair(z);
        if (ev.better(p, best.value)) best = {p, z};
    };
    const auto dirs = unit_directions(dim, quad.directions);
    for (const Point& d : dirs)
        for (int l = 1; l <= quad.radial_levels; ++l)
            consider((rmax * l / quad.radial_levels) * d);
    std::vector<Point> cand;
    v.z_candidates(x, zr, hr, cand);
    for (const Point& z : cand)
        if (norm(z) < zr) consider(z);
    if (!quad.refine_z) return best;
    // pattern search on the coordinate axes, clipped to the ball
    double step = rmax / (2.0 * quad.radial_levels);
    const double stop = 1e-7 * rmax;
    while (step > stop) {
        bool moved = false;
        for (int k = 0; k < dim && !moved; ++k)
            for (double s : {1.0, -1.0}) {
                Point z = best.z;
                z[k] += s * step;
                z = clip_to(z, rmax);
                const double p = ev.pair(z);
                if (ev.better(p, best.value)) {
                    best = {p, z};
                    moved = true;
                    break;
                }
            }
        if (!moved) step *= 0.5;
    }
    return best;
}

double mean_term(const Field& v, const Point& x, double eps, const NonlocalQuadrature& quad,
                 const Domain& domain, const Density& density, std::vector<std::string>& warn) {
    const double vx = v(x);
    if (auto bi = v.ball_integral(density, domain, x, eps)) {
        if (bi->second <= 0.0) {
            warn.push_back("mean term: B_eps(x) has zero mass");
            return 0.0;
        }
        return (bi->first / bi->second - vx) / (eps * eps);
    }
    if (const double fs = v.feature_scale(); fs > 0.0 && 2.0 * eps / quad.ball_resolution > fs)
        warn.push_back("quadrature resolution conflict: ball grid coarser than partition cells");
    double num = 0.0, den = 0.0;
    ball_quadrature(domain, x, eps, quad.ball_resolution, quad.refine_levels(domain.dim()),
                    [&](const Point& y, double w) {
                        const double m = w * density(y);
                        num += m * (v(y) - vx);
                        den += m;
                    });
    if (den <= 0.0) {
        warn.push_back("mean term: B_eps(x) has zero mass");
        return 0.0;
    }
    return num / den / (eps * eps);
}

NonlocalValue eval_once(const Field& v, const Point& x, const OperatorParams& params,
                        const NonlocalQuadrature& quad, Sign sign, const Domain& domain,
                        const Density& density) {
    NonlocalValue out;
    const double eps = params.epsilon;
    if (params.alpha > 0.0) {
        const double hr = params.tau * eps * eps;
        const PairEvaluator ev(v, x, domain.dim(), hr, quad.h_samples, sign == Sign::Max);
        const PairResult p = pair_extreme(ev, v, x, params.Lambda * eps, hr, quad);
        out.pair_term = (p.value - 2.0 * v(x)) / (2.0 * eps * eps);
    }
    if (params.beta > 0.0)
        out.mean_term = mean_term(v, x, eps, quad, domain, density, out.warnings);
    out.value = params.alpha * out.pair_term + params.beta * out.mean_term;
    return out;
}

}  // namespace

NonlocalValue eval_nonlocal(const Field& v, const Point& x, const OperatorParams& params,
                            const NonlocalQuadrature& quad, Sign sign, const Domain& domain,
                            const Density& density) {
    params.validate();
    quad.validate();
    NonlocalValue out = eval_once(v, x, params, quad, sign, domain, density);
    if (quad.resolution_error) {
        const NonlocalValue coarse = eval_once(v, x, params, quad.halved(), sign, domain, density);
        out.resolution_error = std::abs(out.value - coarse.value);
    }
    return out;
}

// Limit operators ----------------------------------------------------------------

std::pair<double, double> eigen_extremes(const Matrix3& h, int dim) {
    double scale = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) scale = std::max(scale, std::abs(h[i][j]));
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
            if (std::abs(h[i][j] - h[j][i]) > 1e-10 * std::max(1.0, scale))
                throw InputError("Hessian is not symmetric");
    if (dim == 1) return {h[0][0], h[0][0]};
    if (dim == 2) {
        const double m = 0.5 * (h[0][0] + h[1][1]);
        const double d = std::hypot(0.5 * (h[0][0] - h[1][1]), h[0][1]);
        return {m - d, m + d};
    }
    // cyclic Jacobi on a copy
    Matrix3 a = h;
    for (int sweep = 0; sweep < 50; ++sweep) {
        const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if (off <= 1e-30 * std::max(1.0, scale * scale)) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    const double e[3] = {a[0][0], a[1][1], a[2][2]};
    return {*std::min_element(e, e + 3), *std::max_element(e, e + 3)};
}

namespace {

double trace(const Matrix3& h, int dim) {
    double t = 0.0;
    for (int k = 0; k < dim; ++k) t += h[k][k];
    return t;
}

double drift_dot(const Point& grad, double phi, const Point& grad_phi) {
    if (!(phi > 0.0)) throw InputError("density must be positive at the evaluation point");
    return dot(grad, grad_phi) / phi;
}

}  // namespace

double eval_limit(const Point& grad, const Matrix3& hess, double phi, const Point& grad_phi,
                  const OperatorParams& params, Sign sign, int dim) {
    const auto [l1, lN] = eigen_extremes(hess, dim);
    const double a = params.alpha, b = params.beta;
    const double g = norm(grad);
    const double lam = sign == Sign::Max ? lN : l1;
    const double drift = sign == Sign::Max ? g : -g;
    return 0.5 * a * params.Lambda * lam + b / (2.0 * (dim + 2)) * trace(hess, dim) +
           0.5 * a * params.tau * drift + b / (dim + 2.0) * drift_dot(grad, phi, grad_phi);
}

double eval_limit_tow(const Point& grad, const Matrix3& hess, double phi, const Point& grad_phi,
                      double alpha, double beta, int dim) {
    const double g2 = dot(grad, grad);
    if (g2 == 0.0) throw InputError("normalized infinity Laplacian undefined at a critical point");
    double hgg = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) hgg += hess[i][j] * grad[i] * grad[j];
    return 0.5 * alpha * hgg / g2 +
           beta / (2.0 * (dim + 2)) * (trace(hess, dim) + 2.0 * drift_dot(grad, phi, grad_phi));
}

DriftCheck check_drift_absorption(const Field& v, const Point& x, const OperatorParams& params,
                                  const NonlocalQuadrature& quad, int dim) {
    params.validate();
    quad.validate();
    const double eps = params.epsilon, hr = params.tau * eps * eps;
    const PairEvaluator ev(v, x, dim, hr, quad.h_samples, true);
    const double vx = v(x);
    DriftCheck out;
    out.drift = (ev.h_extreme(x) - vx) / (2.0 * eps * eps);
    const PairResult p = pair_extreme(ev, v, x, params.Lambda * eps, hr, quad);
    out.absorbed = (p.value - 2.0 * vx) / (2.0 * eps * eps);
    const double tol = 1e-12 * std::max(1.0, std::abs(out.drift));
    out.holds = out.absorbed >= out.drift - tol;
    out.literal_holds = out.absorbed >= 2.0 * out.drift - tol;
    return out;
}

// Barriers -----------------------------------------------------------------------

BarrierValue barrier_phi(const BarrierSpec& spec, const Point& x, int dim) {
    BarrierValue b;
    Point d{};
    for (int k = 0; k < dim; ++k) d[k] = x[k] - spec.xi[k];
    const double t2 = dot(d, d), s = spec.sigma;
    b.phi = std::pow(1.0 + t2, -s);
    const double g = -2.0 * s * std::pow(1.0 + t2, -s - 1.0);
    const double q = 4.0 * s * (s + 1.0) * std::pow(1.0 + t2, -s - 2.0);
    for (int i = 0; i < dim; ++i) {
        b.grad[i] = g * d[i];
        for (int j = 0; j < dim; ++j) b.hess[i][j] = (i == j ? g : 0.0) + q * d[i] * d[j];
    }
    b.Phi = 1.0 - b.phi;
    for (int i = 0; i < 3; ++i) {
        b.grad_Phi[i] = -b.grad[i];
        for (int j = 0; j < 3; ++j) b.hess_Phi[i][j] = -b.hess[i][j];
    }
    return b;
}

BarrierConstants barrier_constants(const OperatorParams& params, const Density& density, int dim,
                                   double r, double R, double sigma) {
    if (!(r > 0.0) || !(R > r)) throw ConfigError("barrier", "need 0 < r < R");
    if (!(sigma > 0.0)) throw ConfigError("barrier.sigma", "must be positive");
    const double phi0 = density.lower(), phi1 = density.upper(), L = density.lipschitz();
    const double Lt = params.Lambda + params.tau;
    BarrierConstants c;
    c.C1 = (Lt * Lt + 2.0 * R * params.tau) / (R + 1.0);
    c.C2 = phi0 / ((dim + 2.0) * phi1);
    c.C3 = (c.C1 * phi1 + 2.0 * L) / phi0;
    c.a = params.beta * c.C2 / (R * R + 1.0) * (r * r / (1.0 + r * r));
    c.b = (c.C1 + c.C3) * (R + 1.0);
    c.sigma0 = (1.0 + c.b) / c.a;
    c.eps0_bound_1 = 1.0 / std::sqrt(2.0 * (sigma + 2.0) * c.C1 * (R + 1.0));
    c.eps_bound_rR =
        sigma > c.sigma0 ? 1.0 - std::pow((1.0 + c.b) / (c.a * sigma), 1.0 / sigma) : 0.0;
    c.log_C_Omega = std::log(2.0) + sigma * std::log(R * R + 1.0) - std::log(sigma);
    return c;
}

double barrier_psi_ratio(const BarrierSpec& spec, const BarrierConstants& c,
                         const OperatorParams& params, const Point& x, int dim) {
    double t2 = 0.0;
    for (int k = 0; k < dim; ++k) t2 += (x[k] - spec.xi[k]) * (x[k] - spec.xi[k]);
    const double s = spec.sigma;
    const double grow = std::exp((-s - 1.0) * std::log1p(-params.epsilon));
    return spec.A * s *
           ((c.C1 + c.C3) * grow - params.beta * c.C2 * (s + 1.0) * t2 / (1.0 + t2));
}

namespace {

// φ(y)/φ(x), evaluated in log space so large σ neither underflows nor overflows.
class NormalizedBarrier : public Field {
public:
    NormalizedBarrier(const BarrierSpec& spec, const Point& x, int dim)
        : spec_(spec), dim_(dim), log_x_(std::log1p(t2(x))) {}
    double operator()(const Point& y) const override {
        return std::exp(-spec_.sigma * (std::log1p(t2(y)) - log_x_));
    }
    std::optional<Point> gradient(const Point& y) const override {
        const double t = t2(y);
        Point g{};
        const double f = (*this)(y) * (-2.0 * spec_.sigma / (1.0 + t));
        for (int k = 0; k < dim_; ++k) g[k] = f * (y[k] - spec_.xi[k]);
        return g;
    }

private:
    double t2(const Point& y) const {
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) s += (y[k] - spec_.xi[k]) * (y[k] - spec_.xi[k]);
        return s;
    }
    BarrierSpec spec_;
    int dim_;
    double log_x_;
};

}  // namespace

BarrierReport verify_barrier_lower_bound(const BarrierSpec& spec, const OperatorParams& params,
                                         const Domain& domain, const Density& density,
                                         std::span<const Point> samples,
                                         const NonlocalQuadrature& quad) {
    params.validate();
    const int dim = domain.dim();
    BarrierReport rep;
    rep.spec = spec;
    rep.dim = dim;
    rep.epsilon = params.epsilon;
    rep.samples = samples.size();
    rep.constants = barrier_constants(params, density, dim, spec.r, spec.R, spec.sigma);
    const BarrierConstants& c = rep.constants;
    const double eps = params.epsilon;
    if (spec.sigma < c.sigma0)
        rep.preconditions.push_back("sigma " + fmt12(spec.sigma) + " < sigma0 " + fmt12(c.sigma0));
    if (eps > c.eps0_bound_1)
        rep.preconditions.push_back("epsilon " + fmt12(eps) + " > 1/sqrt(2(sigma+2)C1(R+1)) = " +
                                    fmt12(c.eps0_bound_1));
    if (eps > c.eps_bound_rR)
        rep.preconditions.push_back("epsilon " + fmt12(eps) +
                                    " > 1 - ((1+b)/(a sigma))^(1/sigma) = " +
                                    fmt12(c.eps_bound_rR));
    for (const Point& x : samples) {
        double t = 0.0;
        for (int k = 0; k < dim; ++k) t += (x[k] - spec.xi[k]) * (x[k] - spec.xi[k]);
        t = std::sqrt(t);
        if (t < spec.r || t > spec.R) {
            rep.preconditions.push_back("sample outside r <= |x - xi| <= R");
            rep.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const NormalizedBarrier v(spec, x, dim);
        const double L = eval_nonlocal(v, x, params, quad, Sign::Min, domain, density).value;
        rep.ratios.push_back(L);
        const double tol = 1e-9 * std::max(1.0, spec.sigma);
        if (L < spec.sigma - tol) rep.violations.push_back({x, L, spec.sigma, "phi"});
        const double psi = barrier_psi_ratio(spec, c, params, x, dim);
        if (spec.A * L + psi < -tol * std::max(1.0, std::abs(psi)))
            rep.violations.push_back({x, spec.A * L, -psi, "psi"});
    }
    std::sort(rep.preconditions.begin(), rep.preconditions.end());
    rep.preconditions.erase(std::unique(rep.preconditions.begin(), rep.preconditions.end()),
                            rep.preconditions.end());
    return rep;
}

std::string BarrierReport::json() const {
    nlohmann::json j;
    j["sigma"] = spec.sigma;
    j["xi"] = point_json(spec.xi, dim);
    j["r"] = spec.r;
    j["R"] = spec.R;
    j["epsilon"] = epsilon;
    j["samples"] = samples;
    j["constants"] = {{"C1", constants.C1},
                      {"C2", constants.C2},
                      {"C3", constants.C3},
                      {"a", constants.a},
                      {"b", constants.b},
                      {"sigma0", constants.sigma0},
                      {"eps0_bound_1", constants.eps0_bound_1},
                      {"eps_bound_rR", constants.eps_bound_rR},
                      {"log_C_Omega", constants.log_C_Omega}};
    auto vs = nlohmann::json::array();
    for (const auto& v : violations)
        vs.push_back({{"x", point_json(v.x, dim)}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"kind", v.kind}});
    j["violations"] = std::move(vs);
    j["preconditions"] = preconditions;
    return j.dump(2) + "\n";
}

}  // namespace pucci
