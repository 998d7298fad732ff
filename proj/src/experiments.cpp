#include "pucci/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pucci/io.hpp"

namespace pucci {

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InputError("fit_loglog: need >= 2 paired points");
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("fit_loglog: non-positive value");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]) - mx, b = std::log(y[i]) - my;
        sxx += a * a;
        sxy += a * b;
        syy += b * b;
    }
    if (sxx == 0.0) throw InputError("fit_loglog: all x equal");
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    f.flagged = f.r2 < 0.8;
    return f;
}

namespace {

std::vector<std::string> point_cells(const Point& x, int dim) {
    std::vector<std::string> c;
    for (int k = 0; k < dim; ++k) c.push_back(fmt12(x[k]));
    return c;
}

std::vector<std::string> point_header(int dim) {
    std::vector<std::string> h;
    for (int k = 0; k < dim; ++k) h.push_back("x" + std::to_string(k + 1));
    return h;
}

}  // namespace

// Concentration ------------------------------------------------------------------

ConcentrationReport concentration_scan(const Domain& domain, const Density& density,
                                       std::vector<double> eps, std::size_t n,
                                       std::span<const Point> samples, std::uint64_t seed) {
    if (eps.empty() || samples.empty()) throw ConfigError("experiment", "need eps values and sample points");
    const double emax = *std::max_element(eps.begin(), eps.end());
    for (const Point& x : samples)
        if (domain.distance_to_boundary(x) < emax || !domain.contains(x))
            throw DomainError("concentration: sample point outside Omega_{-eps}");
    const DataCloud cloud = sample_cloud(domain, density, n, seed, eps);
    ConcentrationReport rep;
    std::vector<double> es, rel;
    for (double e : eps) {
        ConcentrationRow row{e, 0.0, 0.0};
        const auto m = static_cast<std::ptrdiff_t>(samples.size());
        std::vector<double> ab(samples.size()), re(samples.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t s = 0; s < m; ++s) {
            const Point& x = samples[static_cast<std::size_t>(s)];
            const double frac =
                static_cast<double>(cloud.count_in_ball(x, e)) / static_cast<double>(n);
            const double mu = mu_ball(density, domain, x, e);
            ab[static_cast<std::size_t>(s)] = std::abs(frac - mu);
            re[static_cast<std::size_t>(s)] = std::abs(frac / mu - 1.0);
        }
        row.max_abs = *std::max_element(ab.begin(), ab.end());
        row.max_rel = *std::max_element(re.begin(), re.end());
        rep.rows.push_back(row);
        es.push_back(e);
        rel.push_back(row.max_rel);
    }
    if (es.size() >= 2) rep.fit = fit_loglog(es, rel);
    return rep;
}

std::string ConcentrationReport::csv() const {
    CsvWriter w({"epsilon", "max_abs_error", "max_rel_error"});
    for (const auto& r : rows) w.row({fmt12(r.epsilon), fmt12(r.max_abs), fmt12(r.max_rel)});
    return w.str();
}

// Discrete to nonlocal -----------------------------------------------------------

D2NReport check_discrete_to_nonlocal(const TransportMap& map, const OperatorParams& params,
                                     const GraphFunction& u, std::span<const Point> samples,
                                     const NonlocalQuadrature& quad) {
    params.validate();
    const DataCloud& cloud = map.cloud();
    const Domain& domain = cloud.domain();
    const double eps = params.epsilon;
    for (const Point& x : samples)
        if (!domain.contains(x) || domain.distance_to_boundary(x) < eps)
            throw DomainError("d2n: sample point outside Omega_{-eps}");
    D2NReport rep;
    rep.dim = cloud.dim();
    rep.event = map.event();
    for (double v : u) rep.u_sup = std::max(rep.u_sup, std::abs(v));
    const Extension ext(map, u);
    OperatorParams wide = params;
    wide.Lambda += eps * eps;
    wide.tau += 2.0 * eps;
    wide.eps_max = std::numeric_limits<double>::infinity();
    const DataCloud graph = cloud.reindexed({eps, params.Lambda * eps, params.reflect_radius()});
    rep.rows.resize(samples.size());
    const auto m = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < m; ++s) {
        D2NRow& row = rep.rows[static_cast<std::size_t>(s)];
        row.x = samples[static_cast<std::size_t>(s)];
        row.vertex = map(row.x);
        row.lhs = eval_pucci(graph, params, u, row.vertex, Sign::Max);
        row.rhs = eval_nonlocal(ext, row.x, wide, quad, Sign::Max, domain, cloud.density()).value;
        double sum = 0.0;
        std::size_t cnt = 0;
        graph.for_each_in_ball(cloud[row.vertex], eps, [&](std::size_t j) {
            sum += u[j];
            ++cnt;
        });
        const double graph_mean = sum / static_cast<double>(cnt);
        double cont_mean = 0.0;
        if (auto bi = ext.ball_integral(cloud.density(), domain, row.x, eps)) {
            cont_mean = bi->first / bi->second;
        } else {
            double num = 0.0, den = 0.0;
            ball_quadrature(domain, row.x, eps, quad.ball_resolution, quad.refine_levels(rep.dim),
                            [&](const Point& y, double w) {
                                const double mw = w * cloud.density()(y);
                                num += mw * ext(y);
                                den += mw;
                            });
            cont_mean = num / den;
        }
        row.beta_gap = rep.u_sup > 0.0
                           ? std::abs(graph_mean - cont_mean) / (rep.u_sup * eps * eps)
                           : 0.0;
    }
    for (const auto& r : rep.rows) {
        if (rep.u_sup > 0.0)
            rep.max_violation = std::max(rep.max_violation, std::max(0.0, r.lhs - r.rhs) / rep.u_sup);
        rep.max_beta_gap = std::max(rep.max_beta_gap, r.beta_gap);
    }
    return rep;
}

std::string D2NReport::csv() const {
    auto h = point_header(dim);
    for (const char* c : {"vertex", "lhs", "rhs", "normalized_violation", "beta_gap"}) h.push_back(c);
    CsvWriter w(h);
    for (const auto& r : rows) {
        auto c = point_cells(r.x, dim);
        c.push_back(std::to_string(r.vertex));
        c.push_back(fmt12(r.lhs));
        c.push_back(fmt12(r.rhs));
        c.push_back(fmt12(u_sup > 0.0 ? std::max(0.0, r.lhs - r.rhs) / u_sup : 0.0));
        c.push_back(fmt12(r.beta_gap));
        w.row(c);
    }
    return w.str();
}

// Hölder quotients ---------------------------------------------------------------

HolderFit holder_fit(const DataCloud& cloud, const GraphFunction& u, double eps,
                     const Point& center, double radius, std::vector<double> gammas,
                     std::size_t max_vertices, std::uint64_t seed) {
    if (!(eps > 0.0)) throw ConfigError("experiment.epsilon", "must be positive");
    if (u.size() != cloud.size()) throw InputError("holder_fit: function length differs from cloud size");
    if (gammas.empty())
        for (int k = 1; k <= 10; ++k) gammas.push_back(0.1 * k);
    for (double g : gammas)
        if (!(g > 0.0 && g <= 1.0)) throw ConfigError("experiment.gammas", "gamma must lie in (0,1]");
    std::sort(gammas.begin(), gammas.end());

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (dist2(cloud[i], center) < radius * radius) idx.push_back(i);
    if (idx.size() < 2) throw InputError("holder_fit: fewer than two vertices in the region");
    HolderFit fit;
    fit.epsilon = eps;
    fit.gammas = gammas;
    if (idx.size() > max_vertices) {
        // partial Fisher–Yates with a seeded stream, then ascending order
        Rng rng(derive_seed(seed, 0x401d));
        for (std::size_t k = 0; k < max_vertices; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng.uniform() * static_cast<double>(idx.size() - k));
            std::swap(idx[k], idx[std::min(j, idx.size() - 1)]);
        }
        idx.resize(max_vertices);
        std::sort(idx.begin(), idx.end());
        fit.subsampled = true;
    }
    fit.vertices = idx.size();
    const std::size_t G = gammas.size();
    std::vector<double> eg(G);
    for (std::size_t g = 0; g < G; ++g) eg[g] = std::pow(eps, gammas[g]);
    std::vector<Point> pts(idx.size());
    std::vector<double> val(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        pts[k] = cloud[idx[k]];
        val[k] = u[idx[k]];
    }
    const auto m = static_cast<std::ptrdiff_t>(idx.size());
    std::vector<double> best(G, 0.0);
#pragma omp parallel
    {
        std::vector<double> local(G, 0.0);
#pragma omp for schedule(dynamic, 64)
        for (std::ptrdiff_t a = 0; a < m; ++a) {
            const auto i = static_cast<std::size_t>(a);
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                const double du = std::abs(val[i] - val[j]);
                if (du == 0.0) continue;
                const double ld = 0.5 * std::log(dist2(pts[i], pts[j]));
                for (std::size_t g = 0; g < G; ++g) {
                    const double q = du / (std::exp(gammas[g] * ld) + eg[g]);
                    if (q > local[g]) local[g] = q;
                }
            }
        }
#pragma omp critical
        for (std::size_t g = 0; g < G; ++g) best[g] = std::max(best[g], local[g]);
    }
    fit.Q = best;
    const double qmin = *std::min_element(best.begin(), best.end());
    fit.gamma_star = gammas.front();
    for (std::size_t g = 0; g < G; ++g)
        if (best[g] <= 2.0 * qmin) fit.gamma_star = gammas[g];
    fit.C = fit.at(fit.gamma_star);
    return fit;
}

double HolderFit::at(double gamma) const {
    std::size_t b = 0;
    for (std::size_t g = 1; g < gammas.size(); ++g)
        if (std::abs(gammas[g] - gamma) < std::abs(gammas[b] - gamma)) b = g;
    return Q.at(b);
}

std::string HolderFit::csv() const {
    CsvWriter w({"gamma", "Q", "epsilon", "vertices", "subsampled", "selected"});
    for (std::size_t g = 0; g < gammas.size(); ++g)
        w.row({fmt12(gammas[g]), fmt12(Q[g]), fmt12(epsilon), std::to_string(vertices),
               subsampled ? "1" : "0", gammas[g] == gamma_star ? "1" : "0"});
    return w.str();
}

// PDE convergence ----------------------------------------------------------------

void ConvergenceLadder::validate() const {
    if (levels.empty()) throw ConfigError("experiment.levels", "ladder needs at least one level");
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (levels[k].first < 2) throw ConfigError("experiment.levels", "n must be >= 2");
        if (!(levels[k].second > 0.0)) throw ConfigError("experiment.levels", "epsilon must be positive");
        if (k > 0 && !(levels[k].second < levels[k - 1].second))
            throw ConfigError("experiment.levels", "epsilon must decrease along the ladder");
    }
    if (!(a > 0.0)) throw ConfigError("experiment.a", "must be positive");
    if (!(delta_exponent >= 1.0)) throw ConfigError("experiment.delta_exponent", "must be >= 1");
    if (grid_points < 2) throw ConfigError("experiment.grid_points", "must be >= 2");
}

std::vector<Point> evaluation_grid(const Domain& domain, int points, double margin) {
    const auto [lo, hi] = domain.bounding_box();
    const int dim = domain.dim();
    std::vector<Point> out;
    const int n1 = dim > 1 ? points : 1, n2 = dim > 2 ? points : 1;
    auto coord = [&](int k, int i) { return lo[k] + (hi[k] - lo[k]) * i / (points - 1); };
    for (int c = 0; c < n2; ++c)
        for (int b = 0; b < n1; ++b)
            for (int a = 0; a < points; ++a) {
                Point x{};
                x[0] = coord(0, a);
                if (dim > 1) x[1] = coord(1, b);
                if (dim > 2) x[2] = coord(2, c);
                if (domain.contains(x) && domain.distance_to_boundary(x) > margin) out.push_back(x);
            }
    return out;
}

ConvergenceReport convergence_study(const Domain& domain, const Density& density,
                                    const ConvergenceLadder& ladder,
                                    const std::function<ProblemSpec(double)>& make_problem,
                                    const PointFunction& reference, std::uint64_t seed) {
    ladder.validate();
    const int N = domain.dim();
    const auto grid = evaluation_grid(domain, ladder.grid_points, ladder.grid_margin);
    if (grid.empty()) throw ConfigError("experiment.grid_margin", "evaluation grid is empty");
    ConvergenceReport rep;
    std::vector<double> es, errs;
    for (std::size_t k = 0; k < ladder.levels.size(); ++k) {
        const auto [n, eps] = ladder.levels[k];
        const ProblemSpec ps = make_problem(eps);
        const DataCloud cloud =
            sample_cloud(domain, density, n, derive_seed(seed, k), query_radii(ps.op));
        const Solution sol = solve_dpp(cloud, ps);
        const TransportMap map(cloud, std::pow(eps, ladder.delta_exponent));
        ConvergenceRow row;
        row.n = n;
        row.epsilon = eps;
        row.compat = static_cast<double>(n) * std::pow(eps, 3.0 * N + 4.0 + (N + 2.0) * ladder.a);
        row.iterations = sol.report.iterations;
        row.converged = sol.report.converged;
        row.event = map.event();
        for (const Point& x : grid)
            row.sup_error = std::max(row.sup_error, std::abs(sol.u[map(x)] - reference(x)));
        rep.rows.push_back(row);
        es.push_back(eps);
        errs.push_back(row.sup_error);
    }
    rep.strictly_decreasing = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        if (!(rep.rows[k].sup_error < rep.rows[k - 1].sup_error)) rep.strictly_decreasing = false;
    bool positive = es.size() >= 2;
    for (double e : errs) positive = positive && e > 0.0;
    if (positive) rep.fit = fit_loglog(es, errs);
    return rep;
}

std::string ConvergenceReport::csv() const {
    CsvWriter w({"n", "epsilon", "compat_exponent", "iterations", "converged", "event", "sup_error"});
    for (const auto& r : rows)
        w.row({std::to_string(r.n), fmt12(r.epsilon), fmt12(r.compat), std::to_string(r.iterations),
               r.converged ? "1" : "0", r.event ? "1" : "0", fmt12(r.sup_error)});
    return w.str();
}

// Boundary continuity ------------------------------------------------------------

BoundaryModulus boundary_continuity_probe(const DataCloud& cloud, const GraphFunction& u,
                                          const PointFunction& g, std::vector<double> deltas) {
    if (u.size() != cloud.size()) throw InputError("boundary probe: function length differs from cloud size");
    std::sort(deltas.begin(), deltas.end());
    BoundaryModulus out;
    out.deltas = deltas;
    out.modulus.assign(deltas.size(), 0.0);
    out.counts.assign(deltas.size(), 0);
    const Domain& d = cloud.domain();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point x = d.project_to_boundary(cloud[i]);
        const double dist = std::sqrt(dist2(cloud[i], x));
        const double diff = std::abs(u[i] - g(x));
        for (std::size_t k = 0; k < deltas.size(); ++k)
            if (dist < deltas[k]) {
                out.modulus[k] = std::max(out.modulus[k], diff);
                ++out.counts[k];
            }
    }
    return out;
}

std::string BoundaryModulus::csv() const {
    CsvWriter w({"delta", "modulus", "count"});
    for (std::size_t k = 0; k < deltas.size(); ++k)
        w.row({fmt12(deltas[k]), fmt12(modulus[k]), std::to_string(counts[k])});
    return w.str();
}

// Expansion ----------------------------------------------------------------------

ExpansionReport expansion_scan(const AnalyticField& v, const Point& x, OperatorParams params,
                               Sign sign, std::vector<double> eps, const Domain& domain,
                               const Density& density, NonlocalQuadrature quad) {
    if (eps.empty()) throw ConfigError("experiment.epsilons", "need at least one epsilon");
    const double emax = *std::max_element(eps.begin(), eps.end());
    if (domain.distance_to_boundary(x) <= params.Lambda * emax + params.tau * emax * emax)
        throw DomainError("expansion: x too close to the boundary for the largest epsilon");
    quad.resolution_error = true;
    const int N = domain.dim();
    const auto grad = v.gradient(x);
    const double lim = eval_limit(grad ? *grad : Point{}, v.hessian(x), density(x),
                                  density.gradient(x), params, sign, N);
    ExpansionReport rep;
    rep.rows.resize(eps.size());
    const auto m = static_cast<std::ptrdiff_t>(eps.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < m; ++k) {
        OperatorParams p = params;
        p.epsilon = eps[static_cast<std::size_t>(k)];
        p.eps_max = std::max(p.eps_max, 2.0 * p.epsilon);
        const NonlocalValue nv = eval_nonlocal(v, x, p, quad, sign, domain, density);
        rep.rows[static_cast<std::size_t>(k)] = {p.epsilon, nv.value, lim, std::abs(nv.value - lim),
                                                 nv.resolution_error};
    }
    rep.exact = true;
    std::vector<double> es, errs;
    for (const auto& r : rep.rows) {
        if (r.error > 1e-9) rep.exact = false;
        es.push_back(r.epsilon);
        errs.push_back(r.error);
    }
    if (!rep.exact && es.size() >= 2) {
        for (double& e : errs) e = std::max(e, 1e-300);
        rep.fit = fit_loglog(es, errs);
    }
    return rep;
}

std::string ExpansionReport::csv() const {
    CsvWriter w({"epsilon", "nonlocal", "limit", "error", "resolution_error"});
    for (const auto& r : rows)
        w.row({fmt12(r.epsilon), fmt12(r.nonlocal), fmt12(r.limit), fmt12(r.error),
               fmt12(r.resolution_error)});
    return w.str();
}

// Barrier ------------------------------------------------------------------------

BarrierRun run_barrier(const BarrierExperiment& cfg, const OperatorParams& params,
                       std::uint64_t seed, const NonlocalQuadrature& quad) {
    if (cfg.dim < 1 || cfg.dim > 3) throw ConfigError("experiment.dim", "must be 1, 2 or 3");
    if (!(cfg.r > 0.0 && cfg.R > cfg.r)) throw ConfigError("experiment.r", "need 0 < r < R");
    if (!(cfg.sigma_factor > 0.0)) throw ConfigError("experiment.sigma_factor", "must be positive");
    const int N = cfg.dim;
    Point lo{}, hi{};
    for (int k = 0; k < N; ++k) {
        lo[k] = -cfg.R - 1.0;
        hi[k] = cfg.R + 1.0;
    }
    const Domain box = Domain::box(N, lo, hi);
    const Density mu = Density::uniform(box);
    OperatorParams p = params;
    p.epsilon = cfg.epsilon;
    const BarrierConstants c0 = barrier_constants(p, mu, N, cfg.r, cfg.R, 1.0);
    BarrierSpec spec;
    spec.sigma = cfg.sigma_factor * c0.sigma0;
    spec.r = cfg.r;
    spec.R = cfg.R;
    spec.A = cfg.A;
    spec.B = cfg.B;

    // uniform in the shell r <= |x| <= R
    BarrierRun run;
    Rng rng(derive_seed(seed, 0xba1));
    while (run.points.size() < cfg.samples) {
        Point x{};
        double t2 = 0.0;
        for (int k = 0; k < N; ++k) {
            x[k] = rng.uniform(-cfg.R, cfg.R);
            t2 += x[k] * x[k];
        }
        if (t2 >= cfg.r * cfg.r && t2 <= cfg.R * cfg.R) run.points.push_back(x);
    }
    run.report = verify_barrier_lower_bound(spec, p, box, mu, run.points, quad);
    run.ratio = run.report.ratios;
    return run;
}

std::string BarrierRun::csv() const {
    const int dim = report.dim;
    auto h = point_header(dim);
    for (const char* c : {"L_minus_phi_over_phi", "sigma", "ok"}) h.push_back(c);
    CsvWriter w(h);
    for (std::size_t k = 0; k < points.size(); ++k) {
        auto c = point_cells(points[k], dim);
        c.push_back(fmt12(ratio[k]));
        c.push_back(fmt12(report.spec.sigma));
        c.push_back(ratio[k] >= report.spec.sigma - 1e-9 * report.spec.sigma ? "1" : "0");
        w.row(c);
    }
    return w.str();
}

}  // namespace pucci
