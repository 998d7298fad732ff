#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pucci/common.hpp"

namespace pucci {

enum class DomainKind { Box, Ball, Annulus };

/// Bounded open domain in R^N, N in {1,2,3}. Boxes are axis aligned; balls
/// and annuli are Euclidean (in 1D a ball is an interval and an annulus is
/// a pair of intervals).
class Domain {
public:
    static Domain box(int dim, const Point& lo, const Point& hi);
    static Domain ball(int dim, const Point& center, double radius);
    static Domain annulus(int dim, const Point& center, double inner, double outer);

    int dim() const noexcept { return dim_; }
    DomainKind kind() const noexcept { return kind_; }
    const Point& lo() const noexcept { return lo_; }
    const Point& hi() const noexcept { return hi_; }
    const Point& center() const noexcept { return center_; }
    double inner_radius() const noexcept { return inner_; }
    double outer_radius() const noexcept { return outer_; }

    /// Exact signed distance: positive inside, negative outside.
    double signed_distance(const Point& x) const;
    bool contains(const Point& x) const { return signed_distance(x) > 0.0; }
    /// Distance to the boundary for interior points (0 outside).
    double distance_to_boundary(const Point& x) const;
    /// Closest boundary point.
    Point project_to_boundary(const Point& x) const;

    double volume() const;
    /// Bounding box (lo, hi); unused coordinates are zero.
    std::pair<Point, Point> bounding_box() const;
    double diameter() const;
    /// max_{x in closure} |x - xi|.
    double max_distance_from(const Point& xi) const;
    /// dist(xi, domain) for xi outside (0 if inside).
    double distance_from(const Point& xi) const;
    /// Radius of the uniform exterior ball condition (+inf for convex kinds).
    double exterior_ball_radius() const;
    /// A point at distance exactly `gap` from the closure, used as a barrier pole.
    Point exterior_pole(double gap) const;

    std::string describe() const;

private:
    Domain() = default;
    int dim_ = 1;
    DomainKind kind_ = DomainKind::Box;
    Point lo_{}, hi_{}, center_{};
    double inner_ = 0.0, outer_ = 0.0;
};

/// Probability density on a domain. Only uniform and affine profiles are
/// supported; affine is phi(x) = (intercept + slope . x) / normalizer.
class Density {
public:
    enum class Kind { Uniform, Affine };

    static Density uniform(const Domain& domain);
    /// With `normalize` the coefficients are rescaled to unit mass; without,
    /// they are used verbatim and `validate` checks the mass.
    static Density affine(const Domain& domain, double intercept, const Point& slope,
                          bool normalize = true);

    double operator()(const Point& x) const {
        return (intercept_ + dot(slope_, x)) / normalizer_;
    }
    Point gradient(const Point&) const { return (1.0 / normalizer_) * slope_; }

    Kind kind() const noexcept { return kind_; }
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    double lipschitz() const noexcept { return norm(slope_) / normalizer_; }
    /// Integral over the domain (closed form).
    double mass() const noexcept { return mass_; }
    double intercept() const noexcept { return intercept_; }
    const Point& slope() const noexcept { return slope_; }
    double normalizer() const noexcept { return normalizer_; }
    std::string id() const;

    /// Throws ConfigError on phi0 <= 0, unbounded phi1 or |mass - 1| > 1e-6.
    void validate() const;

private:
    Density() = default;
    Kind kind_ = Kind::Uniform;
    double intercept_ = 1.0;
    Point slope_{};
    double normalizer_ = 1.0;
    double lower_ = 1.0, upper_ = 1.0, mass_ = 1.0;
};

/// Uniform-grid spatial index for fixed-radius queries.
class GridIndex {
public:
    GridIndex(std::span<const Point> points, int dim, double cell_side);

    double cell_side() const noexcept { return side_; }

    /// Calls f(i) for every i with |p_i - x| < r; order is cell-major.
    template <class F>
    void for_each_in_ball(std::span<const Point> points, const Point& x, double r,
                          F&& f) const;

private:
    void cell_range(const Point& x, double r, std::array<long, 3>& lo,
                    std::array<long, 3>& hi) const;
    int dim_;
    double side_;
    Point origin_{};
    std::array<long, 3> counts_{1, 1, 1};
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> items_;
};

template <class F>
void GridIndex::for_each_in_ball(std::span<const Point> points, const Point& x, double r,
                                 F&& f) const {
    std::array<long, 3> lo{}, hi{};
    cell_range(x, r, lo, hi);
    const double r2 = r * r;
    for (long c2 = lo[2]; c2 <= hi[2]; ++c2) {
        for (long c1 = lo[1]; c1 <= hi[1]; ++c1) {
            const long row = (c2 * counts_[1] + c1) * counts_[0];
            const std::uint32_t b = start_[static_cast<std::size_t>(row + lo[0])];
            const std::uint32_t e = start_[static_cast<std::size_t>(row + hi[0] + 1)];
            for (std::uint32_t k = b; k < e; ++k) {
                const std::uint32_t i = items_[k];
                if (dist2(points[i], x) < r2) f(static_cast<std::size_t>(i));
            }
        }
    }
}

/// The sampled vertex set together with its domain, density and spatial
/// indexes. Immutable; copies share the point storage.
class DataCloud {
public:
    DataCloud(Domain domain, Density density, std::vector<Point> points,
              std::uint64_t seed, std::vector<double> radii = {});

    /// New cloud sharing the points with grids for the given query radii.
    DataCloud reindexed(std::vector<double> radii) const;

    std::size_t size() const noexcept { return points_->size(); }
    int dim() const noexcept { return domain_.dim(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const Domain& domain() const noexcept { return domain_; }
    const Density& density() const noexcept { return density_; }
    std::span<const Point> points() const noexcept { return *points_; }
    const Point& operator[](std::size_t i) const { return (*points_)[i]; }

    /// Visits {i : |Z_i - x| < r} in unspecified order.
    template <class F>
    void for_each_in_ball(const Point& x, double r, F&& f) const {
        pick_grid(r).for_each_in_ball(*points_, x, r, std::forward<F>(f));
    }
    std::size_t count_in_ball(const Point& x, double r) const;
    /// Nearest vertex to y; distances within 1e-12 tie and go to the lowest index.
    std::size_t nearest(const Point& y) const;

private:
    const GridIndex& pick_grid(double r) const;
    Domain domain_;
    Density density_;
    std::shared_ptr<const std::vector<Point>> points_;
    std::uint64_t seed_;
    std::vector<std::shared_ptr<const GridIndex>> grids_;  // ascending cell side
};

/// n i.i.d. draws from the density by rejection from the bounding box.
DataCloud sample_cloud(const Domain& domain, const Density& density, std::size_t n,
                       std::uint64_t seed, std::vector<double> radii = {});

/// Indices with |Z_i - x| < r in ascending order.
std::vector<std::size_t> ball_query(const DataCloud& cloud, const Point& x, double r);

/// Default midpoint resolution per axis for ball quadrature.
inline constexpr int kDefaultBallResolution = 64;

/// Midpoint tensor quadrature over B_r(x) ∩ domain. Cells cut by the sphere
/// or the domain boundary are subdivided `refine` more levels. Calls
/// f(y, w) for each quadrature node y with Lebesgue weight w.
void ball_quadrature(const Domain& domain, const Point& x, double r, int resolution,
                     int refine, const std::function<void(const Point&, double)>& f);

/// mu(B_r(x) ∩ domain).
double mu_ball(const Density& density, const Domain& domain, const Point& x, double r,
               int resolution = kDefaultBallResolution);
/// Lebesgue |B_r(x) ∩ domain|.
double lebesgue_ball(const Domain& domain, const Point& x, double r,
                     int resolution = kDefaultBallResolution);

/// Indices with distance_to_boundary(Z_i) <= width, ascending. Throws
/// EmptyStripError when nothing qualifies.
std::vector<std::size_t> boundary_strip(const DataCloud& cloud, double width);

/// Volume of the unit ball in R^N.
double unit_ball_volume(int dim);

// Serialization -------------------------------------------------------------

/// `index,x1[,x2[,x3]]` with %.12g numbers and LF line endings.
std::string cloud_csv(const DataCloud& cloud);
/// Sidecar {n, seed, domain, density}.
std::string cloud_sidecar_json(const DataCloud& cloud);

}  // namespace pucci
