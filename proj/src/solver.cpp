#include "pucci/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "pucci/io.hpp"
#include "pucci/nonlocal.hpp"

namespace pucci {

double ProblemSpec::effective_strip_width() const {
    if (strip_width > 0.0) return strip_width;
    const OperatorParams& p = op.params;
    return p.Lambda * p.epsilon + p.tau * p.epsilon * p.epsilon;
}

void ProblemSpec::validate() const {
    if (op.type == OperatorType::TugOfWar) {
        TugOfWarParams{op.p, op.params.epsilon}.validate();
    } else {
        op.params.validate();
    }
    if (!(op.params.beta > 0.0)) throw ConfigError("operator.beta", "solver needs beta > 0");
    if (!g) throw ConfigError("problem.g", "boundary data required");
    if (!(tolerance > 0.0)) throw ConfigError("problem.tolerance", "must be positive");
    if (max_iterations == 0) throw ConfigError("problem.max_iterations", "must be positive");
}

std::string SolveReport::json() const {
    nlohmann::json j{{"iterations", iterations}, {"residual", residual},
                     {"sup_change", sup_change}, {"fallbacks", fallbacks},
                     {"wall_ms", wall_ms},       {"converged", converged}};
    return j.dump(2) + "\n";
}

double sweep(const Stencil& st, std::span<const double> rhs, GraphFunction& u, SweepOrder order) {
    const OperatorParams& p = st.spec().params;
    const std::size_t m = st.rows();
    if (rhs.size() != m) throw InputError("sweep: rhs length differs from stencil rows");
    const auto vert = st.vertices();
    double change = 0.0;
    if (order == SweepOrder::GaussSeidel) {
        for (std::size_t r = 0; r < m; ++r) {
            const double nv = p.alpha * st.pair_term(r, u) + p.beta * st.mean_term(r, u) - rhs[r];
            change = std::max(change, std::abs(nv - u[vert[r]]));
            u[vert[r]] = nv;
        }
        return change;
    }
    std::vector<double> next(m);
    const auto mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) reduction(max : change)
    for (std::ptrdiff_t s = 0; s < mm; ++s) {
        const auto r = static_cast<std::size_t>(s);
        next[r] = p.alpha * st.pair_term(r, u) + p.beta * st.mean_term(r, u) - rhs[r];
        change = std::max(change, std::abs(next[r] - u[vert[r]]));
    }
    for (std::size_t r = 0; r < m; ++r) u[vert[r]] = next[r];
    return change;
}

Solution solve_dpp(const DataCloud& cloud, const ProblemSpec& spec) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    Solution sol;
    sol.strip = boundary_strip(cloud, spec.effective_strip_width());
    std::vector<char> on_strip(cloud.size(), 0);
    for (std::size_t i : sol.strip) on_strip[i] = 1;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (!on_strip[i]) sol.interior.push_back(i);

    GraphFunction& u = sol.u;
    u.assign(cloud.size(), 0.0);
    std::vector<Point> strip_pts;
    strip_pts.reserve(sol.strip.size());
    for (std::size_t i : sol.strip) {
        u[i] = spec.g(cloud[i]);
        strip_pts.push_back(cloud[i]);
    }
    const DataCloud strip_cloud(cloud.domain(), cloud.density(), strip_pts, cloud.seed());
    for (std::size_t i : sol.interior) u[i] = u[sol.strip[strip_cloud.nearest(cloud[i])]];

    SolveReport& rep = sol.report;
    if (!sol.interior.empty()) {
        const Stencil st(cloud, spec.op, sol.interior);
        rep.fallbacks = st.fallbacks();
        const double eps = spec.op.params.epsilon, e2 = eps * eps;
        std::vector<double> rhs(sol.interior.size(), 0.0);
        if (spec.f)
            for (std::size_t r = 0; r < rhs.size(); ++r) rhs[r] = e2 * spec.f(cloud[sol.interior[r]]);
        const double stop = spec.tolerance * e2;
        while (rep.iterations < spec.max_iterations) {
            rep.sup_change = sweep(st, rhs, u, spec.order);
            ++rep.iterations;
            if (rep.sup_change <= stop) {
                rep.converged = true;
                break;
            }
        }
        const GraphFunction lu = eval_field(st, u);
        for (std::size_t r = 0; r < lu.size(); ++r)
            rep.residual = std::max(rep.residual, std::abs(lu[r] - rhs[r] / e2));
    } else {
        rep.converged = true;
    }
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

std::string solution_csv(const DataCloud& cloud, const GraphFunction& u) {
    std::vector<std::string> header{"index"};
    for (int k = 0; k < cloud.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
    header.push_back("u");
    CsvWriter csv(header);
    std::vector<std::string> row(header.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        row[0] = std::to_string(i);
        for (int k = 0; k < cloud.dim(); ++k) row[k + 1] = fmt12(cloud[i][k]);
        row.back() = fmt12(u[i]);
        csv.row(row);
    }
    return csv.str();
}

// Verifiers --------------------------------------------------------------------

PucciBoundReport verify_pucci_bounds(const DataCloud& cloud, const OperatorParams& params,
                                     const GraphFunction& u, double rho,
                                     const std::vector<std::size_t>& interior) {
    PucciBoundReport rep;
    if (interior.empty()) return rep;
    const double slack = 1e-8 / (params.epsilon * params.epsilon);
    const GraphFunction lp = eval_field(cloud, OperatorSpec::pucci(Sign::Max, params), u, interior);
    const GraphFunction lm = eval_field(cloud, OperatorSpec::pucci(Sign::Min, params), u, interior);
    rep.min_plus = std::numeric_limits<double>::infinity();
    rep.max_minus = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < interior.size(); ++r) {
        rep.min_plus = std::min(rep.min_plus, lp[r]);
        rep.max_minus = std::max(rep.max_minus, lm[r]);
        if (lp[r] < -rho - slack) rep.plus_violations.push_back(interior[r]);
        if (lm[r] > rho + slack) rep.minus_violations.push_back(interior[r]);
    }
    return rep;
}

ComparisonReport check_comparison(const DataCloud& cloud, const OperatorParams& params,
                                  const GraphFunction& u, const GraphFunction& v,
                                  const std::vector<std::size_t>& strip) {
    if (u.size() != cloud.size() || v.size() != cloud.size())
        throw InputError("check_comparison: function length differs from cloud size");
    ComparisonReport rep;
    rep.max_excess = -std::numeric_limits<double>::infinity();
    std::vector<char> on_strip(cloud.size(), 0);
    for (std::size_t i : strip) {
        on_strip[i] = 1;
        if (u[i] > v[i] + 1e-8) rep.strip_ordered = false;
    }
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!on_strip[i]) interior.push_back(i);
        rep.max_excess = std::max(rep.max_excess, u[i] - v[i]);
        if (u[i] > v[i] + 1e-8) rep.violations.push_back(i);
    }
    if (!interior.empty()) {
        const Stencil st(cloud, OperatorSpec::pucci(Sign::Max, params), interior);
        const GraphFunction lu = eval_field(st, u), lv = eval_field(st, v);
        const double slack = 1e-8 / (params.epsilon * params.epsilon);
        for (std::size_t r = 0; r < interior.size(); ++r)
            if (lu[r] < lv[r] - slack) rep.operator_ordered = false;
    }
    return rep;
}

UniformBoundReport uniform_bound_check(const DataCloud& cloud, const OperatorParams& params,
                                       const GraphFunction& u, double rho, double sup_g,
                                       const std::vector<std::size_t>& interior) {
    UniformBoundReport rep;
    rep.rho = rho;
    rep.sup_g = sup_g;
    for (double v : u) rep.sup_u = std::max(rep.sup_u, std::abs(v));
    const Domain& d = cloud.domain();
    const Point xi = d.exterior_pole(1.0);
    rep.R = d.max_distance_from(xi);
    const BarrierConstants c0 = barrier_constants(params, cloud.density(), d.dim(), 1.0, rep.R, 1.0);
    rep.sigma = 1.01 * c0.sigma0;
    rep.log_C_Omega = barrier_constants(params, cloud.density(), d.dim(), 1.0, rep.R, rep.sigma)
                          .log_C_Omega;
    if (rho > 0.0) {
        const double lg = rep.log_C_Omega + std::log(rho);
        rep.bound = lg > 700.0 ? std::numeric_limits<double>::infinity() : sup_g + std::exp(lg);
    } else {
        rep.bound = sup_g;
    }
    rep.precondition_ok = verify_pucci_bounds(cloud, params, u, rho, interior).ok();
    rep.pass = rep.precondition_ok && rep.sup_u <= rep.bound + 1e-8;
    return rep;
}

std::string UniformBoundReport::json() const {
    nlohmann::json j{{"sup_u", sup_u},   {"sup_g", sup_g},
                     {"rho", rho},       {"sigma", sigma},
                     {"R", R},           {"log_C_Omega", log_C_Omega},
                     {"bound", std::isfinite(bound) ? nlohmann::json(bound) : nlohmann::json("inf")},
                     {"precondition_ok", precondition_ok},
                     {"pass", pass}};
    return j.dump(2) + "\n";
}

}  // namespace pucci
