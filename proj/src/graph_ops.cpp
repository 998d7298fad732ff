#include "pucci/graph_ops.hpp"

#include <algorithm>
#include <bit>
#include <optional>
#include <cmath>
#include <limits>

#include "pucci/io.hpp"

namespace pucci {

namespace {

// The same floating-point expression is used by every evaluation path so the
// stencil and per-vertex results agree bit for bit.
inline double combine(double alpha, double pair, double beta, double mean, double ui,
                      double eps) {
    return (alpha * pair + beta * mean - ui) / (eps * eps);
}

double mean_over(const GraphFunction& u, std::span<const std::size_t> idx) {
    double s = 0.0;
    for (std::size_t j : idx) s += u[j];
    return s / static_cast<double>(idx.size());
}

// 1D clouds with large balls: values sorted by position in a window around Z_i
// with a sparse table, so each reflected-ball extremum is O(log n).
class LineWindow {
public:
    LineWindow(const DataCloud& cloud, const GraphFunction& u, double lo, double hi, bool upper)
        : upper_(upper) {
        std::vector<std::pair<double, double>> pv;
        cloud.for_each_in_ball(Point{0.5 * (lo + hi), 0, 0}, 0.5 * (hi - lo) * (1 + 1e-9),
                               [&](std::size_t k) { pv.emplace_back(cloud[k][0], u[k]); });
        std::sort(pv.begin(), pv.end());
        xs_.reserve(pv.size());
        std::vector<double> base;
        for (const auto& [x, v] : pv) {
            xs_.push_back(x);
            base.push_back(v);
        }
        table_.push_back(std::move(base));
        for (std::size_t len = 2; len <= xs_.size(); len *= 2) {
            const auto& prev = table_.back();
            std::vector<double> next(xs_.size() - len + 1);
            for (std::size_t k = 0; k < next.size(); ++k)
                next[k] = upper ? std::max(prev[k], prev[k + len / 2])
                                : std::min(prev[k], prev[k + len / 2]);
            table_.push_back(std::move(next));
        }
    }
    // extremum over points p with dist2(p, c) < r², if any
    bool extreme(double c, double r, double& out) const {
        const double r2 = r * r;
        auto inside = [&](double p) { return (p - c) * (p - c) < r2; };
        const auto a = std::partition_point(xs_.begin(), xs_.end(),
                                            [&](double p) { return p < c && !inside(p); });
        const auto b = std::partition_point(a, xs_.end(),
                                            [&](double p) { return p < c || inside(p); });
        if (a >= b) return false;
        const auto lo = static_cast<std::size_t>(a - xs_.begin());
        const auto len = static_cast<std::size_t>(b - a);
        const int lev = std::bit_width(len) - 1;
        const std::size_t w = std::size_t{1} << lev;
        const double x = table_[lev][lo], y = table_[lev][lo + len - w];
        out = upper_ ? std::max(x, y) : std::min(x, y);
        return true;
    }

private:
    bool upper_;
    std::vector<double> xs_;
    std::vector<std::vector<double>> table_;
};

double extreme_pairs(const DataCloud& cloud, const OperatorParams& p, const GraphFunction& u,
                     std::size_t i, bool upper, std::size_t* fallbacks) {
    const auto outer = ball_query(cloud, cloud[i], p.Lambda * p.epsilon);
    double best = upper ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
    const double r = p.reflect_radius();
    std::optional<LineWindow> line;
    if (cloud.dim() == 1 && outer.size() > 512) {
        const double reach = p.Lambda * p.epsilon + 2.0 * r;
        line.emplace(cloud, u, cloud[i][0] - reach, cloud[i][0] + reach, upper);
    }
    for (std::size_t j : outer) {
        const Point c = reflect(cloud[i], cloud[j]);
        double ext = 0.0;
        bool any = false;
        if (line) {
            any = line->extreme(c[0], r, ext);
        } else {
            // extremum over B_r(2 Z_i - Z_j) without materializing the list
            ext = upper ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
            cloud.for_each_in_ball(c, r, [&](std::size_t k) {
                any = true;
                ext = upper ? std::max(ext, u[k]) : std::min(ext, u[k]);
            });
        }
        if (!any) ext = u[reflected_ball(cloud, i, j, r, p.fallback, fallbacks).front()];
        const double v = 0.5 * (u[j] + ext);
        best = upper ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

}  // namespace

std::vector<std::string> OperatorParams::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("operator.beta", "beta must lie in (0,1]");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("operator.alpha", "alpha must lie in [0,1)");
    if (std::abs(alpha + beta - 1.0) > 1e-12)
        throw ConfigError("operator.alpha", "alpha + beta must equal 1");
    if (!(Lambda >= 1.0)) throw ConfigError("operator.lambda", "Lambda must be >= 1");
    if (!(tau >= 1.0)) throw ConfigError("operator.tau", "tau must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("operator.epsilon", "epsilon must be positive");
    if (!(epsilon < eps_max))
        throw ConfigError("operator.epsilon", "epsilon must be below eps_max (" + fmt12(eps_max) + ")");
    std::vector<std::string> warn;
    if (epsilon >= 0.5) warn.push_back("epsilon >= 0.5: far from the asymptotic regime");
    return warn;
}

void TugOfWarParams::validate() const {
    if (!(p >= 2.0)) throw ConfigError("operator.p", "p must be >= 2");
    if (!(epsilon > 0.0)) throw ConfigError("operator.epsilon", "epsilon must be positive");
}

OperatorSpec OperatorSpec::pucci(Sign sign, const OperatorParams& params) {
    OperatorSpec s;
    s.type = sign == Sign::Max ? OperatorType::PucciMax : OperatorType::PucciMin;
    s.params = params;
    return s;
}

OperatorSpec OperatorSpec::example1(const OperatorParams& params, Example1Weights w) {
    OperatorSpec s;
    s.type = OperatorType::Example1;
    s.params = params;
    s.weights = std::move(w);
    return s;
}

OperatorSpec OperatorSpec::tug_of_war(double p, double epsilon, int dim, Fallback fallback) {
    TugOfWarParams t{p, epsilon};
    t.validate();
    OperatorSpec s;
    s.type = OperatorType::TugOfWar;
    s.p = p;
    s.params.beta = t.beta(dim);
    s.params.alpha = 1.0 - s.params.beta;
    s.params.Lambda = 1.0;
    s.params.tau = 1.0;
    s.params.epsilon = epsilon;
    s.params.fallback = fallback;
    s.params.eps_max = std::numeric_limits<double>::infinity();
    return s;
}

std::string OperatorSpec::name() const {
    switch (type) {
        case OperatorType::PucciMax: return "pucci_max";
        case OperatorType::PucciMin: return "pucci_min";
        case OperatorType::Example1: return "example1";
        case OperatorType::TugOfWar: return "tug_of_war";
    }
    return "?";
}

std::vector<double> query_radii(const OperatorSpec& spec) {
    const OperatorParams& p = spec.params;
    std::vector<double> r{p.epsilon};
    if (spec.uses_pairs()) {
        r.push_back(p.Lambda * p.epsilon);
        r.push_back(p.reflect_radius());
    }
    return r;
}

std::vector<std::size_t> reflected_ball(const DataCloud& cloud, std::size_t i, std::size_t j,
                                        double r, Fallback policy, std::size_t* fallbacks) {
    if (!(r > 0.0)) throw ConfigError("operator.tau", "reflected radius must be positive");
    const Point c = reflect(cloud[i], cloud[j]);
    auto out = ball_query(cloud, c, r);
    if (!out.empty()) return out;
    if (policy == Fallback::Strict) throw ReflectedNeighborhoodError({{i, j, r}});
    if (fallbacks) ++*fallbacks;
    return {cloud.nearest(c)};
}

double eval_pucci(const DataCloud& cloud, const OperatorParams& params, const GraphFunction& u,
                  std::size_t i, Sign sign) {
    const auto ball = ball_query(cloud, cloud[i], params.epsilon);
    const double mean = mean_over(u, ball);
    const double pair =
        params.alpha > 0.0 ? extreme_pairs(cloud, params, u, i, sign == Sign::Max, nullptr) : 0.0;
    return combine(params.alpha, pair, params.beta, mean, u[i], params.epsilon);
}

double eval_example1(const DataCloud& cloud, const OperatorParams& params,
                     std::span<const double> weights, const GraphFunction& u, std::size_t i) {
    const auto outer = ball_query(cloud, cloud[i], params.Lambda * params.epsilon);
    if (weights.size() != outer.size())
        throw ConfigError("operator.weights", "one weight per B_{Lambda eps} neighbor required");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("operator.weights", "weights must be nonnegative");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-8)
        throw ConfigError("operator.weights", "weights must sum to 1 (got " + fmt12(wsum) + ")");
    double pair = 0.0;
    if (params.alpha > 0.0)
        for (std::size_t t = 0; t < outer.size(); ++t) {
            const std::size_t k = cloud.nearest(reflect(cloud[i], cloud[outer[t]]));
            pair += weights[t] * (0.5 * (u[outer[t]] + u[k]));
        }
    const double mean = mean_over(u, ball_query(cloud, cloud[i], params.epsilon));
    return combine(params.alpha, pair, params.beta, mean, u[i], params.epsilon);
}

double eval_tugofwar(const DataCloud& cloud, const TugOfWarParams& params, const GraphFunction& u,
                     std::size_t i) {
    params.validate();
    const auto ball = ball_query(cloud, cloud[i], params.epsilon);
    double lo = u[ball.front()], hi = lo;
    for (std::size_t j : ball) {
        lo = std::min(lo, u[j]);
        hi = std::max(hi, u[j]);
    }
    const double beta = params.beta(cloud.dim());
    const double alpha = 1.0 - beta;
    return combine(alpha, 0.5 * (lo + hi), beta, mean_over(u, ball), u[i], params.epsilon);
}

double eval_operator(const DataCloud& cloud, const OperatorSpec& spec, const GraphFunction& u,
                     std::size_t i) {
    switch (spec.type) {
        case OperatorType::PucciMax: return eval_pucci(cloud, spec.params, u, i, Sign::Max);
        case OperatorType::PucciMin: return eval_pucci(cloud, spec.params, u, i, Sign::Min);
        case OperatorType::TugOfWar:
            return eval_tugofwar(cloud, {spec.p, spec.params.epsilon}, u, i);
        case OperatorType::Example1: {
            const auto outer = ball_query(cloud, cloud[i], spec.params.Lambda * spec.params.epsilon);
            std::vector<double> w = spec.weights
                                        ? spec.weights(i, outer)
                                        : std::vector<double>(outer.size(), 1.0 / static_cast<double>(outer.size()));
            return eval_example1(cloud, spec.params, w, u, i);
        }
    }
    return 0.0;
}

// Stencil ----------------------------------------------------------------------

Stencil::Stencil(const DataCloud& cloud, OperatorSpec spec, std::vector<std::size_t> vertices,
                 std::size_t pair_budget)
    : cloud_(cloud.reindexed(query_radii(spec))),
      spec_(std::move(spec)),
      vertices_(std::move(vertices)) {
    const OperatorParams& p = spec_.params;
    const std::size_t m = vertices_.size();
    std::vector<std::size_t> tmp;
    auto query = [&](const Point& x, double r) {
        tmp.clear();
        cloud_.for_each_in_ball(x, r, [&](std::size_t j) { tmp.push_back(j); });
        std::sort(tmp.begin(), tmp.end());
    };

    ball_start_.assign(m + 1, 0);
    for (std::size_t r = 0; r < m; ++r) {
        query(cloud_[vertices_[r]], p.epsilon);
        ball_.insert(ball_.end(), tmp.begin(), tmp.end());
        ball_start_[r + 1] = ball_.size();
    }
    if (!spec_.uses_pairs()) return;

    outer_start_.assign(m + 1, 0);
    for (std::size_t r = 0; r < m; ++r) {
        query(cloud_[vertices_[r]], p.Lambda * p.epsilon);
        outer_.insert(outer_.end(), tmp.begin(), tmp.end());
        outer_start_[r + 1] = outer_.size();
        if (spec_.type == OperatorType::Example1) {
            const std::vector<std::size_t> nb(tmp.begin(), tmp.end());
            std::vector<double> w =
                spec_.weights ? spec_.weights(vertices_[r], nb)
                              : std::vector<double>(nb.size(), 1.0 / static_cast<double>(nb.size()));
            if (w.size() != nb.size())
                throw ConfigError("operator.weights", "one weight per B_{Lambda eps} neighbor required");
            double s = 0.0;
            for (double v : w) s += v;
            if (std::abs(s - 1.0) > 1e-8)
                throw ConfigError("operator.weights", "weights must sum to 1 (got " + fmt12(s) + ")");
            weight_.insert(weight_.end(), w.begin(), w.end());
        }
    }

    // reflected lists; example1 only needs the nearest vertex
    std::vector<ReflectedNeighborhoodError::Site> bad;
    pair_start_.assign(outer_.size() + 1, 0);
    pairs_stored_ = true;
    for (std::size_t r = 0; r < m && pairs_stored_; ++r) {
        const std::size_t i = vertices_[r];
        for (std::size_t t = outer_start_[r]; t < outer_start_[r + 1]; ++t) {
            const Point c = reflect(cloud_[i], cloud_[outer_[t]]);
            if (spec_.type == OperatorType::Example1) {
                tmp.assign(1, cloud_.nearest(c));
            } else {
                query(c, p.reflect_radius());
                if (tmp.empty()) {
                    if (p.fallback == Fallback::Strict) {
                        bad.push_back({i, outer_[t], p.reflect_radius()});
                    } else {
                        ++fallbacks_;
                        tmp.assign(1, cloud_.nearest(c));
                    }
                }
            }
            pair_.insert(pair_.end(), tmp.begin(), tmp.end());
            pair_start_[t + 1] = pair_.size();
            if (pair_.size() > pair_budget) pairs_stored_ = false;
        }
    }
    if (!bad.empty()) throw ReflectedNeighborhoodError(std::move(bad));
    if (!pairs_stored_) {
        // too large: count fallbacks and validate, keep nothing
        pair_.clear();
        pair_.shrink_to_fit();
        pair_start_.clear();
        fallbacks_ = 0;
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t t = outer_start_[r]; t < outer_start_[r + 1]; ++t) {
                if (spec_.type == OperatorType::Example1) continue;
                const Point c = reflect(cloud_[vertices_[r]], cloud_[outer_[t]]);
                if (cloud_.count_in_ball(c, p.reflect_radius()) == 0) {
                    if (p.fallback == Fallback::Strict)
                        bad.push_back({vertices_[r], outer_[t], p.reflect_radius()});
                    else
                        ++fallbacks_;
                }
            }
        if (!bad.empty()) throw ReflectedNeighborhoodError(std::move(bad));
    }
}

double Stencil::mean_term(std::size_t r, const GraphFunction& u) const {
    double s = 0.0;
    for (std::size_t k = ball_start_[r]; k < ball_start_[r + 1]; ++k) s += u[ball_[k]];
    return s / static_cast<double>(ball_start_[r + 1] - ball_start_[r]);
}

double Stencil::pair_term(std::size_t r, const GraphFunction& u) const {
    const OperatorParams& p = spec_.params;
    if (spec_.type == OperatorType::TugOfWar) {
        double lo = u[ball_[ball_start_[r]]], hi = lo;
        for (std::size_t k = ball_start_[r]; k < ball_start_[r + 1]; ++k) {
            lo = std::min(lo, u[ball_[k]]);
            hi = std::max(hi, u[ball_[k]]);
        }
        return 0.5 * (lo + hi);
    }
    if (!spec_.uses_pairs()) return 0.0;
    const std::size_t i = vertices_[r];
    if (spec_.type == OperatorType::Example1) {
        double s = 0.0;
        for (std::size_t t = outer_start_[r]; t < outer_start_[r + 1]; ++t) {
            const std::size_t k = pairs_stored_ ? pair_[pair_start_[t]]
                                                : cloud_.nearest(reflect(cloud_[i], cloud_[outer_[t]]));
            s += weight_[t] * (0.5 * (u[outer_[t]] + u[k]));
        }
        return s;
    }
    const bool upper = spec_.type == OperatorType::PucciMax;
    double best = upper ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
    std::vector<std::size_t> tmp;
    for (std::size_t t = outer_start_[r]; t < outer_start_[r + 1]; ++t) {
        double ext;
        if (pairs_stored_) {
            ext = u[pair_[pair_start_[t]]];
            for (std::size_t q = pair_start_[t]; q < pair_start_[t + 1]; ++q)
                ext = upper ? std::max(ext, u[pair_[q]]) : std::min(ext, u[pair_[q]]);
        } else {
            const Point c = reflect(cloud_[i], cloud_[outer_[t]]);
            bool any = false;
            ext = 0.0;
            cloud_.for_each_in_ball(c, p.reflect_radius(), [&](std::size_t k) {
                if (!any) {
                    ext = u[k];
                    any = true;
                } else {
                    ext = upper ? std::max(ext, u[k]) : std::min(ext, u[k]);
                }
            });
            if (!any) ext = u[cloud_.nearest(c)];
        }
        const double v = 0.5 * (u[outer_[t]] + ext);
        best = upper ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

double Stencil::apply(std::size_t r, const GraphFunction& u) const {
    const OperatorParams& p = spec_.params;
    return combine(p.alpha, pair_term(r, u), p.beta, mean_term(r, u), u[vertices_[r]], p.epsilon);
}

GraphFunction eval_field(const Stencil& stencil, const GraphFunction& u) {
    if (u.size() != stencil.cloud().size())
        throw InputError("eval_field: function length differs from cloud size");
    const auto m = static_cast<std::ptrdiff_t>(stencil.rows());
    GraphFunction out(stencil.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < m; ++r)
        out[static_cast<std::size_t>(r)] = stencil.apply(static_cast<std::size_t>(r), u);
    return out;
}

GraphFunction eval_field(const DataCloud& cloud, const OperatorSpec& spec, const GraphFunction& u,
                         const std::vector<std::size_t>& vertices) {
    return eval_field(Stencil(cloud, spec, vertices), u);
}

namespace reference {

GraphFunction eval_field(const DataCloud& cloud, const OperatorSpec& spec, const GraphFunction& u,
                         const std::vector<std::size_t>& vertices) {
    GraphFunction out;
    out.reserve(vertices.size());
    std::vector<ReflectedNeighborhoodError::Site> bad;
    for (std::size_t i : vertices) {
        try {
            out.push_back(eval_operator(cloud, spec, u, i));
        } catch (const ReflectedNeighborhoodError& e) {
            bad.insert(bad.end(), e.sites().begin(), e.sites().end());
            out.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (!bad.empty()) throw ReflectedNeighborhoodError(std::move(bad));
    return out;
}

}  // namespace reference

}  // namespace pucci
