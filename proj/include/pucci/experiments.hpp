#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pucci/nonlocal.hpp"
#include "pucci/partition.hpp"
#include "pucci/solver.hpp"

namespace pucci {

/// Least-squares fit of log y = slope · log x + intercept.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool flagged = false;  ///< r2 < 0.8
};
/// Throws InputError for fewer than two points or non-positive entries.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

// Concentration ------------------------------------------------------------------

struct ConcentrationRow {
    double epsilon = 0.0;
    double max_abs = 0.0;  ///< max |card/n − μ(B_ε(x))|
    double max_rel = 0.0;  ///< max |card/(n μ(B_ε(x))) − 1|
};
struct ConcentrationReport {
    std::vector<ConcentrationRow> rows;
    LogLogFit fit;  ///< max_rel against ε
    std::string csv() const;
};
ConcentrationReport concentration_scan(const Domain& domain, const Density& density,
                                       std::vector<double> eps, std::size_t n,
                                       std::span<const Point> samples, std::uint64_t seed);

// Discrete to nonlocal -----------------------------------------------------------

struct D2NRow {
    Point x{};
    std::size_t vertex = 0;  ///< T_ε(x)
    double lhs = 0.0;        ///< L⁺ on the graph at T_ε(x)
    double rhs = 0.0;        ///< L⁺ with Λ+ε², τ+2ε on the extension at x
    double beta_gap = 0.0;   ///< |graph mean − μ-average of u∘T| / (‖u‖∞ ε²)
};
struct D2NReport {
    std::vector<D2NRow> rows;
    double u_sup = 0.0;
    double max_violation = 0.0;  ///< max(0, lhs − rhs) / ‖u‖∞
    double max_beta_gap = 0.0;
    bool event = false;  ///< partition event of the map
    int dim = 1;
    std::string csv() const;
};
D2NReport check_discrete_to_nonlocal(const TransportMap& map, const OperatorParams& params,
                                     const GraphFunction& u, std::span<const Point> samples,
                                     const NonlocalQuadrature& quad = {});

// Hölder quotients ---------------------------------------------------------------

struct HolderFit {
    std::vector<double> gammas;
    std::vector<double> Q;
    double gamma_star = 0.0;  ///< largest γ with Q(γ) <= 2 min Q
    double C = 0.0;           ///< Q(γ*)
    double epsilon = 0.0;
    std::size_t vertices = 0;  ///< region vertices used
    bool subsampled = false;
    std::string csv() const;
    /// Q at the grid value closest to γ.
    double at(double gamma) const;
};
/// Region: B_radius(center) ∩ X_n.
HolderFit holder_fit(const DataCloud& cloud, const GraphFunction& u, double eps,
                     const Point& center, double radius, std::vector<double> gammas = {},
                     std::size_t max_vertices = 20000, std::uint64_t seed = 0);

// PDE convergence ----------------------------------------------------------------

struct ConvergenceLadder {
    std::vector<std::pair<std::size_t, double>> levels;  ///< (n_k, ε_k), ε decreasing
    double a = 0.5;               ///< compatibility exponent parameter
    double delta_exponent = 1.5;  ///< transport map cell size δ = ε^delta_exponent
    double grid_margin = 0.05;    ///< evaluation grid: 50^N lattice ∩ Ω_{−margin}
    int grid_points = 50;
    void validate() const;
};

struct ConvergenceRow {
    std::size_t n = 0;
    double epsilon = 0.0;
    double compat = 0.0;  ///< n ε^{3N+4+(N+2)a}
    std::size_t iterations = 0;
    bool converged = false;
    bool event = false;
    double sup_error = 0.0;
};
struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    bool strictly_decreasing = false;
    LogLogFit fit;  ///< sup_error against ε
    std::string csv() const;
};

/// `make_problem(ε)` builds the level problem (its g should match `reference`).
ConvergenceReport convergence_study(const Domain& domain, const Density& density,
                                    const ConvergenceLadder& ladder,
                                    const std::function<ProblemSpec(double)>& make_problem,
                                    const PointFunction& reference, std::uint64_t seed);

/// The 50^N lattice over the bounding box restricted to Ω_{−margin}.
std::vector<Point> evaluation_grid(const Domain& domain, int points, double margin);

// Boundary continuity ------------------------------------------------------------

struct BoundaryModulus {
    std::vector<double> deltas;
    std::vector<double> modulus;  ///< nondecreasing in δ
    std::vector<std::size_t> counts;
    std::string csv() const;
};
BoundaryModulus boundary_continuity_probe(const DataCloud& cloud, const GraphFunction& u,
                                          const PointFunction& g, std::vector<double> deltas);

// Expansion ----------------------------------------------------------------------

struct ExpansionRow {
    double epsilon = 0.0;
    double nonlocal = 0.0;
    double limit = 0.0;
    double error = 0.0;
    double resolution_error = 0.0;
};
struct ExpansionReport {
    std::vector<ExpansionRow> rows;
    bool exact = false;  ///< every error below 1e-9 (nothing to fit)
    LogLogFit fit;       ///< only when not exact
    std::string csv() const;
};
ExpansionReport expansion_scan(const AnalyticField& v, const Point& x, OperatorParams params,
                               Sign sign, std::vector<double> eps, const Domain& domain,
                               const Density& density, NonlocalQuadrature quad = {});

// Barrier ------------------------------------------------------------------------

struct BarrierExperiment {
    int dim = 1;
    double r = 0.25;
    double R = 2.5;
    double sigma_factor = 2.0;  ///< σ = factor · σ0
    double epsilon = 0.01;
    std::size_t samples = 200;
    double A = 1.0;
    double B = 0.0;
};
struct BarrierRun {
    BarrierReport report;
    std::vector<Point> points;
    std::vector<double> ratio;  ///< L⁻φ / φ at each point
    std::string csv() const;
};
/// Samples uniformly from r <= |x| <= R (pole at the origin); the μ-average
/// uses a uniform density on the cube (−R−1, R+1)^N so no ball is clipped.
BarrierRun run_barrier(const BarrierExperiment& cfg, const OperatorParams& params,
                       std::uint64_t seed, const NonlocalQuadrature& quad = {});

}  // namespace pucci
