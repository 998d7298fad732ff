#include "pucci/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pucci/io.hpp"

namespace pucci {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim)
        throw ConfigError("domain.dim", "dimension must be 1, 2 or 3");
}

Point zero_unused(Point p, int dim) {
    for (int k = dim; k < kMaxDim; ++k) p[k] = 0.0;
    return p;
}

}  // namespace

double unit_ball_volume(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: throw ConfigError("domain.dim", "dimension must be 1, 2 or 3");
    }
}

// Domain ---------------------------------------------------------------------

Domain Domain::box(int dim, const Point& lo, const Point& hi) {
    check_dim(dim);
    Domain d;
    d.dim_ = dim;
    d.kind_ = DomainKind::Box;
    d.lo_ = zero_unused(lo, dim);
    d.hi_ = zero_unused(hi, dim);
    for (int k = 0; k < dim; ++k) {
        if (!(d.hi_[k] > d.lo_[k])) throw ConfigError("domain.hi", "box must satisfy lo < hi");
        d.center_[k] = 0.5 * (d.lo_[k] + d.hi_[k]);
    }
    return d;
}

Domain Domain::ball(int dim, const Point& center, double radius) {
    check_dim(dim);
    if (!(radius > 0.0)) throw ConfigError("domain.radius", "radius must be positive");
    Domain d;
    d.dim_ = dim;
    d.kind_ = DomainKind::Ball;
    d.center_ = zero_unused(center, dim);
    d.outer_ = radius;
    return d;
}

Domain Domain::annulus(int dim, const Point& center, double inner, double outer) {
    check_dim(dim);
    if (!(inner > 0.0)) throw ConfigError("domain.inner_radius", "must be positive");
    if (!(outer > inner)) throw ConfigError("domain.outer_radius", "must exceed inner_radius");
    Domain d;
    d.dim_ = dim;
    d.kind_ = DomainKind::Annulus;
    d.center_ = zero_unused(center, dim);
    d.inner_ = inner;
    d.outer_ = outer;
    return d;
}

double Domain::signed_distance(const Point& x) const {
    switch (kind_) {
        case DomainKind::Box: {
            double inside = std::numeric_limits<double>::infinity();
            double out2 = 0.0;
            for (int k = 0; k < dim_; ++k) {
                inside = std::min({inside, x[k] - lo_[k], hi_[k] - x[k]});
                const double o = std::max({lo_[k] - x[k], x[k] - hi_[k], 0.0});
                out2 += o * o;
            }
            return out2 > 0.0 ? -std::sqrt(out2) : inside;
        }
        case DomainKind::Ball:
            return outer_ - std::sqrt(dist2(x, center_));
        case DomainKind::Annulus: {
            const double rho = std::sqrt(dist2(x, center_));
            return std::min(rho - inner_, outer_ - rho);
        }
    }
    return 0.0;
}

double Domain::distance_to_boundary(const Point& x) const {
    return std::max(signed_distance(x), 0.0);
}

Point Domain::project_to_boundary(const Point& x) const {
    switch (kind_) {
        case DomainKind::Box: {
            Point p = x;
            if (signed_distance(x) <= 0.0) {
                for (int k = 0; k < dim_; ++k) p[k] = std::clamp(x[k], lo_[k], hi_[k]);
                return p;
            }
            int best = 0;
            bool upper = false;
            double dbest = std::numeric_limits<double>::infinity();
            for (int k = 0; k < dim_; ++k) {
                if (x[k] - lo_[k] < dbest) { dbest = x[k] - lo_[k]; best = k; upper = false; }
                if (hi_[k] - x[k] < dbest) { dbest = hi_[k] - x[k]; best = k; upper = true; }
            }
            p[best] = upper ? hi_[best] : lo_[best];
            return p;
        }
        case DomainKind::Ball:
        case DomainKind::Annulus: {
            const Point v = x - center_;
            const double rho = norm(v);
            Point dir{1.0, 0.0, 0.0};
            if (rho > 0.0) dir = (1.0 / rho) * v;
            double target = outer_;
            if (kind_ == DomainKind::Annulus && std::abs(rho - inner_) < std::abs(outer_ - rho))
                target = inner_;
            return center_ + target * dir;
        }
    }
    return x;
}

double Domain::volume() const {
    switch (kind_) {
        case DomainKind::Box: {
            double v = 1.0;
            for (int k = 0; k < dim_; ++k) v *= hi_[k] - lo_[k];
            return v;
        }
        case DomainKind::Ball:
            return unit_ball_volume(dim_) * std::pow(outer_, dim_);
        case DomainKind::Annulus:
            return unit_ball_volume(dim_) * (std::pow(outer_, dim_) - std::pow(inner_, dim_));
    }
    return 0.0;
}

std::pair<Point, Point> Domain::bounding_box() const {
    if (kind_ == DomainKind::Box) return {lo_, hi_};
    Point lo{}, hi{};
    for (int k = 0; k < dim_; ++k) {
        lo[k] = center_[k] - outer_;
        hi[k] = center_[k] + outer_;
    }
    return {lo, hi};
}

double Domain::diameter() const {
    if (kind_ == DomainKind::Box) return std::sqrt(dist2(lo_, hi_));
    return 2.0 * outer_;
}

double Domain::max_distance_from(const Point& xi) const {
    if (kind_ == DomainKind::Box) {
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) {
            const double d = std::max(std::abs(xi[k] - lo_[k]), std::abs(xi[k] - hi_[k]));
            s += d * d;
        }
        return std::sqrt(s);
    }
    return std::sqrt(dist2(xi, center_)) + outer_;
}

double Domain::distance_from(const Point& xi) const {
    return std::max(-signed_distance(xi), 0.0);
}

double Domain::exterior_ball_radius() const {
    if (kind_ == DomainKind::Annulus) return inner_;
    return std::numeric_limits<double>::infinity();
}

Point Domain::exterior_pole(double gap) const {
    Point p = center_;
    if (kind_ == DomainKind::Box)
        p[0] = hi_[0] + gap;
    else
        p[0] = center_[0] + outer_ + gap;
    return p;
}

std::string Domain::describe() const { return to_json(*this).dump(); }

// Density --------------------------------------------------------------------

Density Density::uniform(const Domain& domain) {
    Density d;
    d.kind_ = Kind::Uniform;
    d.intercept_ = 1.0;
    d.normalizer_ = domain.volume();
    d.lower_ = d.upper_ = 1.0 / d.normalizer_;
    d.mass_ = 1.0;
    return d;
}

Density Density::affine(const Domain& domain, double intercept, const Point& slope,
                        bool normalize) {
    Density d;
    d.kind_ = Kind::Affine;
    d.intercept_ = intercept;
    d.slope_ = zero_unused(slope, domain.dim());
    // Boxes, balls and annuli are centrally symmetric: the mean of x is the center.
    const double raw_mass = domain.volume() * (intercept + dot(d.slope_, domain.center()));
    d.normalizer_ = normalize ? raw_mass : 1.0;
    if (normalize && !(raw_mass > 0.0))
        throw ConfigError("density.intercept", "affine density has non-positive mass");
    double lo = intercept, hi = intercept;
    if (domain.kind() == DomainKind::Box) {
        for (int k = 0; k < domain.dim(); ++k) {
            const double a = d.slope_[k] * domain.lo()[k];
            const double b = d.slope_[k] * domain.hi()[k];
            lo += std::min(a, b);
            hi += std::max(a, b);
        }
    } else {
        const double c = dot(d.slope_, domain.center());
        const double s = norm(d.slope_) * domain.outer_radius();
        lo += c - s;
        hi += c + s;
    }
    d.lower_ = lo / d.normalizer_;
    d.upper_ = hi / d.normalizer_;
    d.mass_ = raw_mass / d.normalizer_;
    return d;
}

std::string Density::id() const {
    if (kind_ == Kind::Uniform) return "uniform";
    std::ostringstream os;
    os << "affine(" << fmt12(intercept_ / normalizer_) << ";[" << fmt12(slope_[0] / normalizer_)
       << ',' << fmt12(slope_[1] / normalizer_) << ',' << fmt12(slope_[2] / normalizer_) << "])";
    return os.str();
}

void Density::validate() const {
    if (!(lower_ > 0.0))
        throw ConfigError("density.intercept", "density lower bound phi0 must be positive (got " +
                                                   fmt12(lower_) + ")");
    if (!std::isfinite(upper_)) throw ConfigError("density", "upper bound phi1 must be finite");
    if (std::abs(mass_ - 1.0) > 1e-6)
        throw ConfigError("density.normalize",
                          "density is not normalized (mass " + fmt12(mass_) + ")");
}

// GridIndex ------------------------------------------------------------------

GridIndex::GridIndex(std::span<const Point> points, int dim, double cell_side)
    : dim_(dim), side_(cell_side) {
    if (!(side_ > 0.0)) throw Error("grid cell side must be positive");
    Point lo{}, hi{};
    for (int k = 0; k < dim; ++k) {
        lo[k] = std::numeric_limits<double>::infinity();
        hi[k] = -std::numeric_limits<double>::infinity();
    }
    for (const Point& p : points)
        for (int k = 0; k < dim; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    if (points.empty()) lo = hi = Point{};
    const double cap = std::max<double>(1024.0, 8.0 * static_cast<double>(points.size()));
    for (;;) {
        double total = 1.0;
        for (int k = 0; k < dim; ++k) {
            counts_[k] = static_cast<long>(std::floor((hi[k] - lo[k]) / side_)) + 1;
            total *= static_cast<double>(counts_[k]);
        }
        if (total <= cap) break;
        side_ *= 1.5;
    }
    origin_ = lo;
    const std::size_t ncell =
        static_cast<std::size_t>(counts_[0] * counts_[1] * counts_[2]);
    std::vector<std::uint32_t> cell(points.size());
    start_.assign(ncell + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        long c[3] = {0, 0, 0};
        for (int k = 0; k < dim; ++k)
            c[k] = std::clamp(static_cast<long>(std::floor((points[i][k] - origin_[k]) / side_)),
                              0L, counts_[k] - 1);
        cell[i] = static_cast<std::uint32_t>((c[2] * counts_[1] + c[1]) * counts_[0] + c[0]);
        ++start_[cell[i] + 1];
    }
    for (std::size_t c = 0; c < ncell; ++c) start_[c + 1] += start_[c];
    items_.resize(points.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i)
        items_[fill[cell[i]]++] = static_cast<std::uint32_t>(i);
}

void GridIndex::cell_range(const Point& x, double r, std::array<long, 3>& lo,
                           std::array<long, 3>& hi) const {
    for (int k = 0; k < 3; ++k) {
        if (k >= dim_) {
            lo[k] = hi[k] = 0;
            continue;
        }
        const double a = std::floor((x[k] - r - origin_[k]) / side_);
        const double b = std::floor((x[k] + r - origin_[k]) / side_);
        const double top = static_cast<double>(counts_[k] - 1);
        lo[k] = static_cast<long>(std::clamp(a, 0.0, top));
        hi[k] = static_cast<long>(std::clamp(b, 0.0, top));
    }
}

// DataCloud ------------------------------------------------------------------

DataCloud::DataCloud(Domain domain, Density density, std::vector<Point> points,
                     std::uint64_t seed, std::vector<double> radii)
    : domain_(std::move(domain)),
      density_(std::move(density)),
      points_(std::make_shared<const std::vector<Point>>(std::move(points))),
      seed_(seed) {
    *this = reindexed(std::move(radii));
}

DataCloud DataCloud::reindexed(std::vector<double> radii) const {
    DataCloud out = *this;
    const std::size_t n = std::max<std::size_t>(points_->size(), 1);
    const auto [lo, hi] = domain_.bounding_box();
    double box = 1.0;
    for (int k = 0; k < dim(); ++k) box *= hi[k] - lo[k];
    // occupancy grid: about two points per cell
    radii.push_back(std::pow(2.0 * box / static_cast<double>(n), 1.0 / dim()));
    std::sort(radii.begin(), radii.end());
    std::vector<double> sides;
    for (double r : radii) {
        if (!(r > 0.0)) continue;
        if (!sides.empty() && r < 1.25 * sides.back())
            sides.back() = r;
        else
            sides.push_back(r);
    }
    out.grids_.clear();
    for (double s : sides)
        out.grids_.push_back(std::make_shared<const GridIndex>(*points_, dim(), s));
    return out;
}

const GridIndex& DataCloud::pick_grid(double r) const {
    for (const auto& g : grids_)
        if (g->cell_side() >= r) return *g;
    return *grids_.back();
}

std::size_t DataCloud::count_in_ball(const Point& x, double r) const {
    std::size_t c = 0;
    for_each_in_ball(x, r, [&](std::size_t) { ++c; });
    return c;
}

std::size_t DataCloud::nearest(const Point& y) const {
    if (points_->empty()) throw Error("nearest() on an empty cloud");
    // distances within kTieTol count as ties, resolved by the lowest index,
    // so that rounding in 2Z_i - Z_j does not pick a side
    constexpr double kTieTol = 1e-12;
    double r = grids_.front()->cell_side();
    for (;;) {
        double bd = std::numeric_limits<double>::infinity();
        for_each_in_ball(y, r, [&](std::size_t i) { bd = std::min(bd, dist2((*points_)[i], y)); });
        if (std::isfinite(bd)) {
            const double lim = std::sqrt(bd) + kTieTol;
            if (lim < r) {
                std::size_t best = std::numeric_limits<std::size_t>::max();
                for_each_in_ball(y, r, [&](std::size_t i) {
                    if (i < best && std::sqrt(dist2((*points_)[i], y)) <= lim) best = i;
                });
                return best;
            }
        }
        r *= 2.0;
    }
}

DataCloud sample_cloud(const Domain& domain, const Density& density, std::size_t n,
                       std::uint64_t seed, std::vector<double> radii) {
    if (n < 1) throw ConfigError("cloud.n", "n must be at least 1");
    density.validate();
    Rng rng(seed);
    const auto [lo, hi] = domain.bounding_box();
    const double phi1 = density.upper();
    std::vector<Point> pts;
    pts.reserve(n);
    std::uint64_t proposals = 0;
    while (pts.size() < n) {
        Point x{};
        for (int k = 0; k < domain.dim(); ++k) x[k] = rng.uniform(lo[k], hi[k]);
        ++proposals;
        const double accept = rng.uniform() * phi1;
        if (domain.contains(x) && accept < density(x)) pts.push_back(x);
        if (proposals >= 1000000 &&
            static_cast<double>(pts.size()) < 1e-6 * static_cast<double>(proposals))
            throw DegenerateDensityError("rejection sampler acceptance rate below 1e-6");
    }
    return DataCloud(domain, density, std::move(pts), seed, std::move(radii));
}

std::vector<std::size_t> ball_query(const DataCloud& cloud, const Point& x, double r) {
    std::vector<std::size_t> out;
    cloud.for_each_in_ball(x, r, [&](std::size_t i) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
}

// Quadrature -----------------------------------------------------------------

namespace {

struct BallQuad {
    const Domain& domain;
    const Point& x;
    double r;
    const std::function<void(const Point&, double)>& f;

    void cell(const Point& y, double half, int refine) const {
        const int dim = domain.dim();
        double far2 = 0.0, near2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double d = std::abs(y[k] - x[k]);
            far2 += (d + half) * (d + half);
            const double e = std::max(d - half, 0.0);
            near2 += e * e;
        }
        if (near2 >= r * r) return;
        const double reach = half * std::sqrt(static_cast<double>(dim));
        const double sd = domain.signed_distance(y);
        if (sd <= -reach) return;
        const double vol = std::pow(2.0 * half, dim);
        if (far2 < r * r && sd >= reach) {
            f(y, vol);
            return;
        }
        if (refine <= 0) {
            if (dist2(y, x) < r * r && sd > 0.0) f(y, vol);
            return;
        }
        const double q = 0.5 * half;
        const int children = 1 << dim;
        for (int c = 0; c < children; ++c) {
            Point z = y;
            for (int k = 0; k < dim; ++k) z[k] += ((c >> k) & 1) ? q : -q;
            cell(z, q, refine - 1);
        }
    }
};

}  // namespace

void ball_quadrature(const Domain& domain, const Point& x, double r, int resolution,
                     int refine, const std::function<void(const Point&, double)>& f) {
    const int dim = domain.dim();
    const double h = 2.0 * r / resolution;
    const BallQuad q{domain, x, r, f};
    const int n1 = dim > 1 ? resolution : 1;
    const int n2 = dim > 2 ? resolution : 1;
    for (int c = 0; c < n2; ++c)
        for (int b = 0; b < n1; ++b)
            for (int a = 0; a < resolution; ++a) {
                Point y = x;
                y[0] = x[0] - r + (a + 0.5) * h;
                if (dim > 1) y[1] = x[1] - r + (b + 0.5) * h;
                if (dim > 2) y[2] = x[2] - r + (c + 0.5) * h;
                q.cell(y, 0.5 * h, refine);
            }
}

double mu_ball(const Density& density, const Domain& domain, const Point& x, double r,
               int resolution) {
    double s = 0.0;
    ball_quadrature(domain, x, r, resolution, 4,
                    [&](const Point& y, double w) { s += density(y) * w; });
    return s;
}

double lebesgue_ball(const Domain& domain, const Point& x, double r, int resolution) {
    double s = 0.0;
    ball_quadrature(domain, x, r, resolution, 4, [&](const Point&, double w) { s += w; });
    return s;
}

std::vector<std::size_t> boundary_strip(const DataCloud& cloud, double width) {
    if (!(width > 0.0)) throw ConfigError("problem.strip_width", "must be positive");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.domain().distance_to_boundary(cloud[i]) <= width) out.push_back(i);
    if (out.empty()) throw EmptyStripError("boundary strip of width " + fmt12(width) + " is empty");
    return out;
}

// Serialization ----------------------------------------------------------------

std::string cloud_csv(const DataCloud& cloud) {
    std::vector<std::string> header{"index"};
    for (int k = 0; k < cloud.dim(); ++k) header.push_back("x" + std::to_string(k + 1));
    CsvWriter csv(header);
    std::vector<std::string> row(header.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        row[0] = std::to_string(i);
        for (int k = 0; k < cloud.dim(); ++k) row[k + 1] = fmt12(cloud[i][k]);
        csv.row(row);
    }
    return csv.str();
}

std::string cloud_sidecar_json(const DataCloud& cloud) {
    nlohmann::json j;
    j["n"] = cloud.size();
    j["seed"] = cloud.seed();
    j["domain"] = to_json(cloud.domain());
    j["density"] = cloud.density().id();
    return j.dump(2) + "\n";
}

}  // namespace pucci
