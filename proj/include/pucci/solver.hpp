#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "pucci/graph_ops.hpp"

namespace pucci {

enum class SweepOrder { Jacobi, GaussSeidel };

using PointFunction = std::function<double(const Point&)>;

/// L u = f on X_n \ O_ε, u = g on the strip O_ε.
struct ProblemSpec {
    OperatorSpec op;
    PointFunction f;  ///< empty means f ≡ 0
    PointFunction g;  ///< required
    double strip_width = 0.0;  ///< <= 0 selects Λε + τε²
    double tolerance = 1e-6;   ///< stop when the sup-change is <= tolerance · ε²
    std::size_t max_iterations = 100000;
    SweepOrder order = SweepOrder::Jacobi;

    double effective_strip_width() const;
    void validate() const;
};

struct SolveReport {
    std::size_t iterations = 0;
    double residual = 0.0;    ///< sup |L u − f| over interior vertices
    double sup_change = 0.0;  ///< at the last sweep
    std::size_t fallbacks = 0;
    double wall_ms = 0.0;
    bool converged = false;
    std::string json() const;
};

struct Solution {
    GraphFunction u;
    SolveReport report;
    std::vector<std::size_t> strip;     ///< ascending
    std::vector<std::size_t> interior;  ///< ascending
};

Solution solve_dpp(const DataCloud& cloud, const ProblemSpec& spec);

/// One fixed-point sweep u_i ← α·pair + β·mean − rhs_r over the stencil rows.
/// Returns the sup-change. Gauss–Seidel updates in row order and runs serially.
double sweep(const Stencil& stencil, std::span<const double> rhs, GraphFunction& u,
             SweepOrder order);

/// Solution dump: index,x1[,x2[,x3]],u
std::string solution_csv(const DataCloud& cloud, const GraphFunction& u);

// Verifiers ---------------------------------------------------------------------

struct PucciBoundReport {
    std::vector<std::size_t> plus_violations;   ///< L⁺u < −ρ − 1e-8/ε²
    std::vector<std::size_t> minus_violations;  ///< L⁻u > ρ + 1e-8/ε²
    double min_plus = 0.0;   ///< min over the set of L⁺u
    double max_minus = 0.0;  ///< max over the set of L⁻u
    bool ok() const { return plus_violations.empty() && minus_violations.empty(); }
};

PucciBoundReport verify_pucci_bounds(const DataCloud& cloud, const OperatorParams& params,
                                     const GraphFunction& u, double rho,
                                     const std::vector<std::size_t>& interior);

struct ComparisonReport {
    std::vector<std::size_t> violations;  ///< vertices with u > v + 1e-8
    double max_excess = 0.0;              ///< max (u − v), may be negative
    bool strip_ordered = true;            ///< u <= v + 1e-8 on the strip
    bool operator_ordered = true;         ///< L⁺u >= L⁺v − 1e-8/ε² on the interior
    bool ok() const { return violations.empty(); }
};

ComparisonReport check_comparison(const DataCloud& cloud, const OperatorParams& params,
                                  const GraphFunction& u, const GraphFunction& v,
                                  const std::vector<std::size_t>& strip);

struct UniformBoundReport {
    double sup_u = 0.0;
    double sup_g = 0.0;
    double rho = 0.0;
    double sigma = 0.0;
    double R = 0.0;
    double log_C_Omega = 0.0;  ///< log(2 (R²+1)^σ / σ)
    double bound = 0.0;        ///< ‖g‖∞ + C_Ω ρ (inf when it overflows)
    bool precondition_ok = false;  ///< Pucci bounds hold
    bool pass = false;
    std::string json() const;
};

/// ‖u‖∞ <= ‖g‖∞ + C_Ω ρ with C_Ω from a barrier with pole at distance 1 from Ω
/// and σ = 1.01 σ0(1, R).
UniformBoundReport uniform_bound_check(const DataCloud& cloud, const OperatorParams& params,
                                       const GraphFunction& u, double rho, double sup_g,
                                       const std::vector<std::size_t>& interior);

}  // namespace pucci
