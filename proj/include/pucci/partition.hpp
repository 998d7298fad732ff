#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pucci/field.hpp"
#include "pucci/geometry.hpp"

namespace pucci {

/// One histogram cell: a grid cell clipped to the domain, possibly with tiny
/// neighbors merged into it.
struct HistogramCell {
    std::size_t id = 0;               ///< linear grid id of the representative cell
    std::vector<std::size_t> members; ///< linear grid ids of all merged cells
    double measure = 0.0;             ///< |B ∩ Ω|
    std::size_t count = 0;            ///< residents n_i
    double phi = 0.0;                 ///< n_i / (n |B ∩ Ω|)
    /// Piecewise-linear profile t -> |B ∩ Ω ∩ {x1 < t}| given by its knots.
    std::vector<double> knots, cum;
    Point box_lo{}, box_hi{};         ///< bounding box of the clipped region
    double diameter = 0.0;
};

struct HistogramDensity {
    int dim = 1;
    double delta = 0.0;
    double side = 0.0;                ///< grid side c·δ
    Point origin{};
    std::array<long, 3> counts{1, 1, 1};
    std::vector<HistogramCell> cells;
    std::vector<std::int32_t> cell_of_grid;  ///< grid id -> cell index, -1 outside Ω
    std::size_t n = 0;
    std::size_t merged = 0;           ///< grid cells merged into a neighbor
    double sup_error = 0.0;           ///< sampled sup |φ_δ − φ|

    std::size_t grid_id(const Point& x) const;
    /// Histogram cell index containing x (x inside the grid), or -1.
    long cell_at(const Point& x) const;
    double value(const Point& x) const;
    std::string csv() const;
};

/// side_factor <= 0 selects the default 1/sqrt(N).
HistogramDensity build_histogram(const DataCloud& cloud, double delta, double side_factor = 0.0);

struct TransportOptions {
    double side_factor = 0.0;
    double exponent_a = 0.5;
    double lambda = 0.0;  ///< <= 0 selects δ^{(2+a)/(3+a)}
    double c0 = 1.0;
};

/// Partition {U_i} of Ω into x1-slabs of the histogram cells and the
/// projection T(x) = owner of the slab containing x.
class TransportMap {
public:
    struct Slab {
        std::uint32_t owner;
        double lo, hi;  ///< x1 bounds
    };

    TransportMap(const DataCloud& cloud, double delta, TransportOptions opts = {});

    const DataCloud& cloud() const noexcept { return cloud_; }
    const HistogramDensity& histogram() const noexcept { return hist_; }
    double delta() const noexcept { return hist_.delta; }
    double lambda() const noexcept { return lambda_; }
    bool event() const noexcept { return event_; }
    std::size_t empty_cells() const noexcept { return empty_cells_; }
    /// n δ^N λ², the exponent in the partition success probability.
    double event_exponent() const;

    /// Index of the vertex owning x. Throws DomainError for x outside Ω.
    std::size_t operator()(const Point& x) const;
    /// Same lookup without the domain check (points outside Ω go to the
    /// nearest vertex).
    std::size_t lookup(const Point& x) const;

    std::span<const Slab> slabs(std::size_t cell) const {
        return {slabs_.data() + slab_start_[cell], slab_start_[cell + 1] - slab_start_[cell]};
    }
    /// μ_ε(U_i) for every vertex.
    std::vector<double> cell_masses() const;
    std::string json() const;

private:
    friend class Extension;
    DataCloud cloud_;
    HistogramDensity hist_;
    double lambda_ = 0.0;
    bool event_ = false;
    std::size_t empty_cells_ = 0;
    std::vector<Slab> slabs_;
    std::vector<std::size_t> slab_start_;
    std::vector<std::int32_t> fallback_owner_;  ///< per cell, -1 unless empty
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> exact_;
};

inline TransportMap build_transport(const DataCloud& cloud, double delta,
                                    TransportOptions opts = {}) {
    return TransportMap(cloud, delta, opts);
}

/// The piecewise-constant extension x -> u(T(x)). Outside Ω the value of
/// the nearest vertex is used. Holds a reference to the map.
class Extension : public Field {
public:
    Extension(const TransportMap& map, GraphFunction u);

    double operator()(const Point& x) const override { return u_[map_->lookup(x)]; }
    std::optional<double> ball_extreme(const Point& c, double r, bool upper) const override;
    std::optional<std::pair<double, double>> ball_integral(const Density& density,
                                                           const Domain& domain,
                                                           const Point& x,
                                                           double r) const override;
    void z_candidates(const Point& x, double r, double h_radius,
                      std::vector<Point>& out) const override;
    double feature_scale() const override { return map_->histogram().side; }

    const GraphFunction& values() const noexcept { return u_; }
    /// ∫_Ω (u∘T) dμ_ε as an exact sum over slabs.
    double integral() const;

private:
    double range_extreme(std::size_t a, std::size_t b, bool upper) const;
    const TransportMap* map_;
    GraphFunction u_;
    // sparse tables over slab owner values, one level per power of two
    std::vector<std::vector<double>> max_, min_;
    // 1D only: vertices sorted by x1 with sparse tables over their values
    std::vector<std::uint32_t> by_x_;
    std::vector<double> xs_;
    std::vector<std::vector<double>> pmax_, pmin_;
};

inline Extension extend(const TransportMap& map, GraphFunction u) {
    return Extension(map, std::move(u));
}

inline std::size_t transport(const TransportMap& map, const Point& x) { return map(x); }

}  // namespace pucci
