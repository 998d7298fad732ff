#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pucci/geometry.hpp"

namespace pucci {

enum class Sign { Max, Min };
enum class Fallback { NearestVertex, Strict };

struct OperatorParams {
    double alpha = 0.5;
    double beta = 0.5;
    double Lambda = 1.0;
    double tau = 1.0;
    double epsilon = 0.1;
    Fallback fallback = Fallback::NearestVertex;
    double eps_max = 1.0;

    /// Throws ConfigError; returns non-fatal warnings.
    std::vector<std::string> validate() const;
    double reflect_radius() const { return tau * epsilon * epsilon; }
};

struct TugOfWarParams {
    double p = 2.0;
    double epsilon = 0.1;

    double beta(int dim) const { return (dim + 2.0) / (dim + p); }
    double alpha(int dim) const { return 1.0 - beta(dim); }
    void validate() const;
};

enum class OperatorType { PucciMax, PucciMin, Example1, TugOfWar };

/// Per-vertex simplex weights for the Example-1 operator: receives the
/// vertex and its B_{Λε} neighbors (ascending), returns one weight each.
using Example1Weights =
    std::function<std::vector<double>(std::size_t i, std::span<const std::size_t> ball)>;

struct OperatorSpec {
    OperatorType type = OperatorType::PucciMax;
    OperatorParams params;
    double p = 2.0;           ///< tug-of-war only
    Example1Weights weights;  ///< example1 only; empty means uniform

    static OperatorSpec pucci(Sign sign, const OperatorParams& params);
    static OperatorSpec example1(const OperatorParams& params, Example1Weights w = {});
    /// α, β from p and the dimension; Λ = τ = 1.
    static OperatorSpec tug_of_war(double p, double epsilon, int dim,
                                   Fallback fallback = Fallback::NearestVertex);

    bool uses_pairs() const {
        return params.alpha > 0.0 && type != OperatorType::TugOfWar;
    }
    std::string name() const;
};

/// B_r(2 Z_i − Z_j) ∩ X_n, ascending. When empty: the nearest vertex under
/// the nearest-vertex policy (and ++*fallbacks), an error under strict.
std::vector<std::size_t> reflected_ball(const DataCloud& cloud, std::size_t i, std::size_t j,
                                        double r, Fallback policy,
                                        std::size_t* fallbacks = nullptr);

double eval_pucci(const DataCloud& cloud, const OperatorParams& params, const GraphFunction& u,
                  std::size_t i, Sign sign);
/// `weights` aligns with ball_query(cloud, Z_i, Λε).
double eval_example1(const DataCloud& cloud, const OperatorParams& params,
                     std::span<const double> weights, const GraphFunction& u, std::size_t i);
double eval_tugofwar(const DataCloud& cloud, const TugOfWarParams& params, const GraphFunction& u,
                     std::size_t i);
/// Dispatch on the spec type.
double eval_operator(const DataCloud& cloud, const OperatorSpec& spec, const GraphFunction& u,
                     std::size_t i);

/// Precomputed neighbor lists for a vertex subset. Rows follow `vertices`.
/// Reflected-ball lists are stored when they fit in `pair_budget` entries
/// and recomputed on the fly otherwise.
class Stencil {
public:
    Stencil(const DataCloud& cloud, OperatorSpec spec, std::vector<std::size_t> vertices,
            std::size_t pair_budget = std::size_t{1} << 26);

    const DataCloud& cloud() const noexcept { return cloud_; }
    const OperatorSpec& spec() const noexcept { return spec_; }
    std::span<const std::size_t> vertices() const noexcept { return vertices_; }
    std::size_t rows() const noexcept { return vertices_.size(); }
    std::size_t fallbacks() const noexcept { return fallbacks_; }
    bool pairs_stored() const noexcept { return pairs_stored_; }

    /// Pair-extremum term (or the tug-of-war (min+max)/2) at row r.
    double pair_term(std::size_t r, const GraphFunction& u) const;
    /// Mean of u over B_ε(Z_i) at row r.
    double mean_term(std::size_t r, const GraphFunction& u) const;
    double apply(std::size_t r, const GraphFunction& u) const;

private:
    DataCloud cloud_;
    OperatorSpec spec_;
    std::vector<std::size_t> vertices_;
    std::vector<std::size_t> ball_start_;
    std::vector<std::uint32_t> ball_;
    std::vector<std::size_t> outer_start_;
    std::vector<std::uint32_t> outer_;
    std::vector<std::size_t> pair_start_;
    std::vector<std::uint32_t> pair_;
    std::vector<double> weight_;  // example1, one per outer entry
    bool pairs_stored_ = false;
    std::size_t fallbacks_ = 0;
};

/// L u at every stencil row (OpenMP over rows).
GraphFunction eval_field(const Stencil& stencil, const GraphFunction& u);
/// Convenience: builds a stencil for `vertices`.
GraphFunction eval_field(const DataCloud& cloud, const OperatorSpec& spec, const GraphFunction& u,
                         const std::vector<std::size_t>& vertices);

namespace reference {
/// Serial per-vertex evaluation, kept as the oracle for eval_field.
GraphFunction eval_field(const DataCloud& cloud, const OperatorSpec& spec, const GraphFunction& u,
                         const std::vector<std::size_t>& vertices);
}  // namespace reference

/// Radii the operator queries, for DataCloud::reindexed.
std::vector<double> query_radii(const OperatorSpec& spec);

}  // namespace pucci
