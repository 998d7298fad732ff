#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "pucci/common.hpp"

namespace pucci {

class Domain;
class Density;

/// A real function on R^N that the nonlocal operators can evaluate. Fields
/// that know more about their own structure override the optional hooks.
class Field {
public:
    virtual ~Field() = default;
    virtual double operator()(const Point& x) const = 0;

    /// Exact sup (upper) or inf over the open ball B_r(c), if available.
    virtual std::optional<double> ball_extreme(const Point&, double, bool) const {
        return std::nullopt;
    }
    /// Exact (∫_{B_r(x)∩Ω} v dμ, μ(B_r(x)∩Ω)), if available.
    virtual std::optional<std::pair<double, double>> ball_integral(const Density&,
                                                                   const Domain&,
                                                                   const Point&,
                                                                   double) const {
        return std::nullopt;
    }
    /// Appends shifts z with |z| < r at which z -> v(x+z) + ext_{|h|<h_radius} v(x-z+h)
    /// may attain its extremes.
    virtual void z_candidates(const Point&, double, double, std::vector<Point>&) const {}
    /// Length scale of the field's own structure (0 for smooth fields).
    virtual double feature_scale() const { return 0.0; }
    virtual std::optional<Point> gradient(const Point&) const { return std::nullopt; }
};

/// Smooth function with closed-form derivatives.
class AnalyticField : public Field {
public:
    using Scalar = std::function<double(const Point&)>;
    using Vector = std::function<Point(const Point&)>;
    using MatrixFn = std::function<Matrix3(const Point&)>;

    AnalyticField(Scalar f, Vector grad, MatrixFn hess)
        : f_(std::move(f)), grad_(std::move(grad)), hess_(std::move(hess)) {}

    double operator()(const Point& x) const override { return f_(x); }
    std::optional<Point> gradient(const Point& x) const override {
        if (!grad_) return std::nullopt;
        return grad_(x);
    }
    Matrix3 hessian(const Point& x) const { return hess_(x); }

    static AnalyticField constant(double c);
    static AnalyticField affine(double c, const Point& a);
    /// |x - x0|^2
    static AnalyticField square_norm(const Point& x0 = {});
    /// cos(k x1)
    static AnalyticField cos_x1(double k = 1.0);

private:
    Scalar f_;
    Vector grad_;
    MatrixFn hess_;
};

}  // namespace pucci
