#pragma once

#include <span>
#include <string>
#include <vector>

#include "pucci/field.hpp"
#include "pucci/geometry.hpp"
#include "pucci/graph_ops.hpp"

namespace pucci {

/// Discretization of sup_{|z|<Λε} sup_{|h|<τε²} and of the μ-average.
struct NonlocalQuadrature {
    int directions = 32;     ///< z directions (2D angles, 3D sphere points; 1D always ±1)
    int radial_levels = 8;   ///< z radii per direction, the last one at the rim
    int h_samples = 16;      ///< h directions at radius τε²
    int ball_resolution = kDefaultBallResolution;
    int ball_refine = -1;    ///< < 0 picks a dimension-dependent default
    bool refine_z = true;    ///< pattern search around the best sampled z
    bool resolution_error = false;  ///< also evaluate at half resolution

    void validate() const;
    NonlocalQuadrature halved() const;
    NonlocalQuadrature doubled() const;
    int refine_levels(int dim) const;
};

struct NonlocalValue {
    double value = 0.0;
    double pair_term = 0.0;  ///< ext_z δ^±(v,x,z) / (2ε²)
    double mean_term = 0.0;  ///< μ-average of (v(y) − v(x)) / ε² over B_ε(x)
    double resolution_error = 0.0;
    std::vector<std::string> warnings;
};

/// L^±_{Ω,Λ,τ,ε} v(x) with the μ-average taken against `density` on `domain`.
NonlocalValue eval_nonlocal(const Field& v, const Point& x, const OperatorParams& params,
                            const NonlocalQuadrature& quad, Sign sign, const Domain& domain,
                            const Density& density);

/// Extreme eigenvalues (λ_1, λ_N) of the leading dim×dim block.
std::pair<double, double> eigen_extremes(const Matrix3& h, int dim);

/// Limit operator of the expansion: sign = max gives
/// (αΛ/2)λ_N + β/(2(N+2)) tr H + (ατ/2)|∇v| + β/(N+2) ∇v·∇φ/φ.
double eval_limit(const Point& grad, const Matrix3& hess, double phi, const Point& grad_phi,
                  const OperatorParams& params, Sign sign, int dim);
/// (α/2) Δ^N_∞ v + β/(2(N+2)) (Δv + 2 ∇v·∇φ/φ).
double eval_limit_tow(const Point& grad, const Matrix3& hess, double phi, const Point& grad_phi,
                      double alpha, double beta, int dim);

/// Drift absorption: sup_h (v(x+h) − v(x))/(2ε²) against sup_z δ⁺/(2ε²),
/// both over the same samples.
struct DriftCheck {
    double drift = 0.0;     ///< sup_h (v(x+h) − v(x)) / (2ε²)
    double absorbed = 0.0;  ///< sup_z δ⁺(v,x,z) / (2ε²)
    bool holds = false;
    bool literal_holds = false;  ///< same with the drift divided by ε² instead of 2ε²
};
DriftCheck check_drift_absorption(const Field& v, const Point& x, const OperatorParams& params,
                                  const NonlocalQuadrature& quad, int dim);

// Barriers ---------------------------------------------------------------------

struct BarrierSpec {
    double sigma = 1.0;
    Point xi{};
    double r = 0.25;
    double R = 2.5;
    double A = 1.0;
    double B = 0.0;
};

struct BarrierValue {
    double phi = 1.0;  ///< (1 + |x − ξ|²)^{−σ}
    Point grad{};
    Matrix3 hess{};
    double Phi = 0.0;  ///< 1 − phi
    Point grad_Phi{};
    Matrix3 hess_Phi{};
};
BarrierValue barrier_phi(const BarrierSpec& spec, const Point& x, int dim);

struct BarrierConstants {
    double C1 = 0, C2 = 0, C3 = 0;
    double a = 0, b = 0;
    double sigma0 = 0;
    double eps0_bound_1 = 0;   ///< 1/sqrt(2(σ+2) C1 (R+1))
    double eps_bound_rR = 0;   ///< 1 − ((1+b)/(aσ))^{1/σ}, 0 when σ <= σ0
    double log_C_Omega = 0;    ///< log(2 (R²+1)^σ / σ)
};
BarrierConstants barrier_constants(const OperatorParams& params, const Density& density, int dim,
                                   double r, double R, double sigma);

/// ψ(x) / φ(x) for the Ψ = Aφ − B, ψ pair.
double barrier_psi_ratio(const BarrierSpec& spec, const BarrierConstants& c,
                         const OperatorParams& params, const Point& x, int dim);

struct BarrierViolation {
    Point x{};
    double lhs = 0.0;
    double rhs = 0.0;
    std::string kind;
};

struct BarrierReport {
    BarrierSpec spec;
    BarrierConstants constants;
    double epsilon = 0.0;
    std::size_t samples = 0;
    std::vector<BarrierViolation> violations;
    std::vector<std::string> preconditions;  ///< unmet hypotheses (data, not errors)
    std::vector<double> ratios;  ///< L⁻φ/φ per sample, NaN when skipped
    int dim = 1;
    std::string json() const;
};

/// Evaluates L⁻φ at each sample (normalized by φ(x), which is exact by positive
/// homogeneity) and records violations of L⁻φ ≥ σφ and L⁻Ψ + ψ ≥ 0.
BarrierReport verify_barrier_lower_bound(const BarrierSpec& spec, const OperatorParams& params,
                                         const Domain& domain, const Density& density,
                                         std::span<const Point> samples,
                                         const NonlocalQuadrature& quad = {});

}  // namespace pucci
