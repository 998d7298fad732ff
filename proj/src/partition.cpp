#include "pucci/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "pucci/io.hpp"

namespace pucci {

namespace {

struct GridCellShape {
    double measure = 0.0;
    std::vector<double> knots, cum;  // x1 profile
    Point lo{}, hi{};                // bounding box of the part inside Ω
};

// Exact clip of an axis-aligned cell against a box domain.
GridCellShape clip_box(const Domain& d, const Point& lo, double s) {
    GridCellShape c;
    double cross = 1.0;
    for (int k = 0; k < d.dim(); ++k) {
        c.lo[k] = std::max(lo[k], d.lo()[k]);
        c.hi[k] = std::min(lo[k] + s, d.hi()[k]);
        if (c.hi[k] <= c.lo[k]) return GridCellShape{};
        if (k > 0) cross *= c.hi[k] - c.lo[k];
    }
    c.measure = cross * (c.hi[0] - c.lo[0]);
    c.knots = {c.lo[0], c.hi[0]};
    c.cum = {0.0, c.measure};
    return c;
}

// Intervals making up a 1D ball or annulus.
std::vector<std::pair<double, double>> intervals_1d(const Domain& d) {
    const double c = d.center()[0], R = d.outer_radius();
    if (d.kind() == DomainKind::Ball) return {{c - R, c + R}};
    const double r = d.inner_radius();
    return {{c - R, c - r}, {c + r, c + R}};
}

GridCellShape clip_interval(const Domain& d, const Point& lo, double s) {
    GridCellShape c;
    std::vector<double> knots{lo[0]}, cum{0.0};
    bool any = false;
    for (auto [a, b] : intervals_1d(d)) {
        const double u = std::max(a, lo[0]), v = std::min(b, lo[0] + s);
        if (v <= u) continue;
        if (!any) {
            c.lo[0] = u;
            knots = {u};
        } else {
            knots.push_back(u);
            cum.push_back(cum.back());
        }
        knots.push_back(v);
        cum.push_back(cum.back() + (v - u));
        c.hi[0] = v;
        any = true;
    }
    if (!any) return GridCellShape{};
    c.measure = cum.back();
    c.knots = std::move(knots);
    c.cum = std::move(cum);
    return c;
}

// Curved domains in 2D/3D: exact when the cell is well inside, otherwise a
// midpoint sub-grid with q nodes per axis.
GridCellShape clip_curved(const Domain& d, const Point& lo, double s) {
    const int dim = d.dim();
    Point mid = lo;
    for (int k = 0; k < dim; ++k) mid[k] += 0.5 * s;
    const double half_diag = 0.5 * s * std::sqrt(static_cast<double>(dim));
    const double sd = d.signed_distance(mid);
    if (sd <= -half_diag) return GridCellShape{};
    if (sd >= half_diag) {
        GridCellShape c;
        c.measure = std::pow(s, dim);
        c.knots = {lo[0], lo[0] + s};
        c.cum = {0.0, c.measure};
        c.lo = lo;
        for (int k = 0; k < dim; ++k) c.hi[k] = lo[k] + s;
        return c;
    }
    const int q = dim == 2 ? 48 : 16;
    const double h = s / q;
    const double w = std::pow(h, dim);
    std::vector<double> column(q, 0.0);
    GridCellShape c;
    for (int k = 0; k < dim; ++k) {
        c.lo[k] = std::numeric_limits<double>::infinity();
        c.hi[k] = -std::numeric_limits<double>::infinity();
    }
    const int n2 = dim > 2 ? q : 1;
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
            for (int e = 0; e < n2; ++e) {
                Point y = lo;
                y[0] += (a + 0.5) * h;
                y[1] += (b + 0.5) * h;
                if (dim > 2) y[2] += (e + 0.5) * h;
                if (!d.contains(y)) continue;
                column[a] += w;
                for (int k = 0; k < dim; ++k) {
                    c.lo[k] = std::min(c.lo[k], y[k] - 0.5 * h);
                    c.hi[k] = std::max(c.hi[k], y[k] + 0.5 * h);
                }
            }
    c.measure = std::accumulate(column.begin(), column.end(), 0.0);
    if (c.measure <= 0.0) return GridCellShape{};
    c.knots.resize(q + 1);
    c.cum.assign(q + 1, 0.0);
    for (int a = 0; a <= q; ++a) c.knots[a] = lo[0] + a * h;
    for (int a = 0; a < q; ++a) c.cum[a + 1] = c.cum[a] + column[a];
    return c;
}

// Sum of piecewise-linear cumulative profiles on the union of their knots.
void merge_profiles(const std::vector<const GridCellShape*>& parts, std::vector<double>& knots,
                    std::vector<double>& cum) {
    knots.clear();
    for (const auto* p : parts) knots.insert(knots.end(), p->knots.begin(), p->knots.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    cum.assign(knots.size(), 0.0);
    for (const auto* p : parts) {
        for (std::size_t k = 0; k < knots.size(); ++k) {
            const double t = knots[k];
            if (t <= p->knots.front()) continue;
            if (t >= p->knots.back()) {
                cum[k] += p->cum.back();
                continue;
            }
            const auto it = std::upper_bound(p->knots.begin(), p->knots.end(), t);
            const std::size_t j = static_cast<std::size_t>(it - p->knots.begin());
            const double a = p->knots[j - 1], b = p->knots[j];
            cum[k] += p->cum[j - 1] + (p->cum[j] - p->cum[j - 1]) * (t - a) / (b - a);
        }
    }
}

// Smallest t with profile(t) = target.
double invert_profile(const std::vector<double>& knots, const std::vector<double>& cum,
                      double target) {
    if (target <= 0.0) return knots.front();
    if (target >= cum.back()) return knots.back();
    const auto it = std::lower_bound(cum.begin(), cum.end(), target);
    const std::size_t j = static_cast<std::size_t>(it - cum.begin());
    const double f0 = cum[j - 1], f1 = cum[j];
    return knots[j - 1] + (knots[j] - knots[j - 1]) * (target - f0) / (f1 - f0);
}

double eval_profile(const std::vector<double>& knots, const std::vector<double>& cum, double t) {
    if (t <= knots.front()) return 0.0;
    if (t >= knots.back()) return cum.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - knots.begin());
    return cum[j - 1] + (cum[j] - cum[j - 1]) * (t - knots[j - 1]) / (knots[j] - knots[j - 1]);
}

std::uint64_t point_key(const Point& p, int dim) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int k = 0; k < dim; ++k) {
        const double v = p[k] == 0.0 ? 0.0 : p[k];
        h ^= std::bit_cast<std::uint64_t>(v);
        h *= 0x100000001b3ULL;
        h ^= h >> 29;
    }
    return h;
}

}  // namespace

// HistogramDensity -------------------------------------------------------------

std::size_t HistogramDensity::grid_id(const Point& x) const {
    std::size_t id = 0, stride = 1;
    for (int k = 0; k < dim; ++k) {
        const long c = std::clamp(static_cast<long>(std::floor((x[k] - origin[k]) / side)), 0L,
                                  counts[k] - 1);
        id += static_cast<std::size_t>(c) * stride;
        stride *= static_cast<std::size_t>(counts[k]);
    }
    return id;
}

long HistogramDensity::cell_at(const Point& x) const {
    for (int k = 0; k < dim; ++k) {
        const double t = (x[k] - origin[k]) / side;
        if (t < 0.0 || t > static_cast<double>(counts[k])) return -1;
    }
    return cell_of_grid[grid_id(x)];
}

double HistogramDensity::value(const Point& x) const {
    const long c = cell_at(x);
    return c < 0 ? 0.0 : cells[static_cast<std::size_t>(c)].phi;
}

std::string HistogramDensity::csv() const {
    CsvWriter w({"cell_id", "count", "measure", "phi_delta"});
    for (const auto& c : cells)
        w.row({std::to_string(c.id), std::to_string(c.count), fmt12(c.measure), fmt12(c.phi)});
    return w.str();
}

HistogramDensity build_histogram(const DataCloud& cloud, double delta, double side_factor) {
    if (!(delta > 0.0)) throw ConfigError("partition.delta", "delta must be positive");
    const Domain& dom = cloud.domain();
    const int dim = dom.dim();
    HistogramDensity h;
    h.dim = dim;
    h.delta = delta;
    h.n = cloud.size();
    const double c = side_factor > 0.0 ? side_factor : 1.0 / std::sqrt(static_cast<double>(dim));
    h.side = c * delta;
    const auto [blo, bhi] = dom.bounding_box();
    h.origin = blo;
    double total = 1.0;
    for (int k = 0; k < dim; ++k) {
        h.counts[k] = std::max(1L, static_cast<long>(std::ceil((bhi[k] - blo[k]) / h.side - 1e-12)));
        total *= static_cast<double>(h.counts[k]);
    }
    if (total > 5e7) throw ConfigError("partition.delta", "histogram grid too fine");
    const std::size_t ncell = static_cast<std::size_t>(total);

    // clip every grid cell
    std::vector<GridCellShape> shape(ncell);
    for (std::size_t g = 0; g < ncell; ++g) {
        Point lo = h.origin;
        std::size_t rest = g;
        for (int k = 0; k < dim; ++k) {
            lo[k] += static_cast<double>(rest % static_cast<std::size_t>(h.counts[k])) * h.side;
            rest /= static_cast<std::size_t>(h.counts[k]);
        }
        if (dom.kind() == DomainKind::Box)
            shape[g] = clip_box(dom, lo, h.side);
        else if (dim == 1)
            shape[g] = clip_interval(dom, lo, h.side);
        else
            shape[g] = clip_curved(dom, lo, h.side);
    }

    // point counts per grid cell
    std::vector<std::size_t> grid_count(ncell, 0);
    for (const Point& p : cloud.points()) ++grid_count[h.grid_id(p)];

    // merge tiny cells into their largest face neighbor
    const double tiny = 1e-3 * std::pow(delta, dim);
    std::vector<std::size_t> parent(ncell);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t g) {
        while (parent[g] != g) g = parent[g] = parent[parent[g]];
        return g;
    };
    std::size_t stride[3] = {1, 1, 1};
    for (int k = 1; k < dim; ++k) stride[k] = stride[k - 1] * static_cast<std::size_t>(h.counts[k - 1]);
    auto coord = [&](std::size_t g, int k) {
        return static_cast<long>((g / stride[k]) % static_cast<std::size_t>(h.counts[k]));
    };
    for (std::size_t g = 0; g < ncell; ++g) {
        const bool is_tiny = shape[g].measure < tiny && (shape[g].measure > 0.0 || grid_count[g] > 0);
        if (!is_tiny) continue;
        std::size_t best = g;
        double best_m = 0.0;
        for (int k = 0; k < dim; ++k)
            for (int s : {-1, 1}) {
                const long ck = coord(g, k) + s;
                if (ck < 0 || ck >= h.counts[k]) continue;
                const std::size_t nb = s < 0 ? g - stride[k] : g + stride[k];
                if (shape[nb].measure > best_m) {
                    best_m = shape[nb].measure;
                    best = nb;
                }
            }
        if (best != g && best_m >= tiny) {
            parent[find(g)] = find(best);
            ++h.merged;
        }
    }

    h.cell_of_grid.assign(ncell, -1);
    std::vector<std::vector<std::size_t>> groups(ncell);
    for (std::size_t g = 0; g < ncell; ++g)
        if (shape[g].measure > 0.0 || grid_count[g] > 0) groups[find(g)].push_back(g);
    for (std::size_t root = 0; root < ncell; ++root) {
        auto& mem = groups[root];
        if (mem.empty()) continue;
        HistogramCell cell;
        cell.id = root;
        cell.members = mem;
        std::vector<const GridCellShape*> parts;
        for (int k = 0; k < dim; ++k) {
            cell.box_lo[k] = std::numeric_limits<double>::infinity();
            cell.box_hi[k] = -std::numeric_limits<double>::infinity();
        }
        for (std::size_t g : mem) {
            cell.count += grid_count[g];
            if (shape[g].measure <= 0.0) continue;
            cell.measure += shape[g].measure;
            parts.push_back(&shape[g]);
            for (int k = 0; k < dim; ++k) {
                cell.box_lo[k] = std::min(cell.box_lo[k], shape[g].lo[k]);
                cell.box_hi[k] = std::max(cell.box_hi[k], shape[g].hi[k]);
            }
        }
        if (cell.measure <= 0.0)
            throw DomainError("histogram cell with residents has zero measure; refine delta");
        merge_profiles(parts, cell.knots, cell.cum);
        cell.diameter = std::sqrt(dist2(cell.box_lo, cell.box_hi));
        cell.phi = static_cast<double>(cell.count) /
                   (static_cast<double>(h.n) * cell.measure);
        const auto idx = static_cast<std::int32_t>(h.cells.size());
        for (std::size_t g : mem) h.cell_of_grid[g] = idx;
        h.cells.push_back(std::move(cell));
    }
    if (h.cells.empty()) throw DomainError("histogram has no cells inside the domain");

    // sampled sup |φ_δ − φ| at the corners and center of each clipped box
    const Density& phi = cloud.density();
    for (const auto& cell : h.cells) {
        const int corners = 1 << dim;
        for (int m = 0; m <= corners; ++m) {
            Point y{};
            for (int k = 0; k < dim; ++k)
                y[k] = m == corners ? 0.5 * (cell.box_lo[k] + cell.box_hi[k])
                                    : (((m >> k) & 1) ? cell.box_hi[k] : cell.box_lo[k]);
            if (dom.signed_distance(y) < 0.0) continue;
            h.sup_error = std::max(h.sup_error, std::abs(cell.phi - phi(y)));
        }
    }
    return h;
}

// TransportMap ---------------------------------------------------------------

TransportMap::TransportMap(const DataCloud& cloud, double delta, TransportOptions opts)
    : cloud_(cloud), hist_(build_histogram(cloud, delta, opts.side_factor)) {
    const int dim = cloud.dim();
    lambda_ = opts.lambda > 0.0
                  ? opts.lambda
                  : std::pow(delta, (2.0 + opts.exponent_a) / (3.0 + opts.exponent_a));

    // residents per cell, ordered by x1 then index
    const std::size_t ncell = hist_.cells.size();
    std::vector<std::vector<std::uint32_t>> residents(ncell);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const long c = hist_.cell_of_grid[hist_.grid_id(cloud[i])];
        if (c < 0) throw DomainError("vertex outside every histogram cell");
        residents[static_cast<std::size_t>(c)].push_back(static_cast<std::uint32_t>(i));
    }

    fallback_owner_.assign(ncell, -1);
    slab_start_.assign(ncell + 1, 0);
    bool diam_ok = true;
    for (std::size_t c = 0; c < ncell; ++c) {
        const HistogramCell& cell = hist_.cells[c];
        auto& res = residents[c];
        std::sort(res.begin(), res.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double xa = cloud[a][0], xb = cloud[b][0];
            return xa < xb || (xa == xb && a < b);
        });
        if (cell.diameter > delta * (1.0 + 1e-12)) diam_ok = false;
        if (res.empty()) {
            ++empty_cells_;
            // nearest resident of the nearest nonempty cell
            Point mid{};
            for (int k = 0; k < dim; ++k) mid[k] = 0.5 * (cell.box_lo[k] + cell.box_hi[k]);
            double best = std::numeric_limits<double>::infinity();
            std::size_t bc = c;
            for (std::size_t o = 0; o < ncell; ++o) {
                if (hist_.cells[o].count == 0) continue;
                Point om{};
                for (int k = 0; k < dim; ++k)
                    om[k] = 0.5 * (hist_.cells[o].box_lo[k] + hist_.cells[o].box_hi[k]);
                const double d2 = dist2(mid, om);
                if (d2 < best) {
                    best = d2;
                    bc = o;
                }
            }
            std::uint32_t owner = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                if (hist_.cell_of_grid[hist_.grid_id(cloud[i])] != static_cast<long>(bc)) continue;
                const double d2 = dist2(cloud[i], mid);
                if (d2 < bd) {
                    bd = d2;
                    owner = static_cast<std::uint32_t>(i);
                }
            }
            fallback_owner_[c] = static_cast<std::int32_t>(owner);
            slabs_.push_back({owner, cell.knots.front(), cell.knots.back()});
        } else {
            const std::size_t m = res.size();
            double prev = cell.knots.front();
            for (std::size_t k = 0; k < m; ++k) {
                const double next =
                    k + 1 == m ? cell.knots.back()
                               : invert_profile(cell.knots, cell.cum,
                                                cell.measure * static_cast<double>(k + 1) /
                                                    static_cast<double>(m));
                slabs_.push_back({res[k], prev, next});
                prev = next;
            }
        }
        slab_start_[c + 1] = slabs_.size();
    }

    for (std::size_t i = 0; i < cloud.size(); ++i)
        exact_[point_key(cloud[i], dim)].push_back(static_cast<std::uint32_t>(i));

    event_ = empty_cells_ == 0 && diam_ok && hist_.sup_error <= opts.c0 * (lambda_ + delta);
}

double TransportMap::event_exponent() const {
    return static_cast<double>(cloud_.size()) * std::pow(hist_.delta, cloud_.dim()) * lambda_ *
           lambda_;
}

std::size_t TransportMap::operator()(const Point& x) const {
    if (!cloud_.domain().contains(x)) throw DomainError("transport: point outside the domain");
    return lookup(x);
}

std::size_t TransportMap::lookup(const Point& x) const {
    if (auto it = exact_.find(point_key(x, cloud_.dim())); it != exact_.end())
        for (std::uint32_t i : it->second)
            if (cloud_[i] == x) return i;
    const long c = hist_.cell_at(x);
    if (c < 0 || !cloud_.domain().contains(x)) return cloud_.nearest(x);
    const auto cell = static_cast<std::size_t>(c);
    if (fallback_owner_[cell] >= 0) return static_cast<std::size_t>(fallback_owner_[cell]);
    const auto s = slabs(cell);
    // first slab whose upper end exceeds x1
    auto it = std::upper_bound(s.begin(), s.end(), x[0],
                               [](double v, const Slab& sl) { return v < sl.hi; });
    if (it == s.end()) --it;
    return it->owner;
}

std::vector<double> TransportMap::cell_masses() const {
    std::vector<double> mass(cloud_.size(), 0.0);
    for (std::size_t c = 0; c < hist_.cells.size(); ++c) {
        const HistogramCell& cell = hist_.cells[c];
        for (const Slab& s : slabs(c))
            mass[s.owner] += cell.phi * (eval_profile(cell.knots, cell.cum, s.hi) -
                                         eval_profile(cell.knots, cell.cum, s.lo));
    }
    return mass;
}

std::string TransportMap::json() const {
    nlohmann::json j;
    j["delta"] = hist_.delta;
    j["lambda"] = lambda_;
    j["event_flag"] = event_;
    j["event_exponent"] = event_exponent();
    j["sup_error"] = hist_.sup_error;
    j["empty_cells"] = empty_cells_;
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t c = 0; c < hist_.cells.size(); ++c) {
        const HistogramCell& cell = hist_.cells[c];
        for (const Slab& s : slabs(c)) {
            const double m = cell.phi * (eval_profile(cell.knots, cell.cum, s.hi) -
                                         eval_profile(cell.knots, cell.cum, s.lo));
            cells.push_back({{"owner", s.owner},
                             {"parent_cell", cell.id},
                             {"slab_lo", s.lo},
                             {"slab_hi", s.hi},
                             {"mass", m}});
        }
    }
    j["cells"] = std::move(cells);
    return j.dump() + "\n";
}

// Extension ------------------------------------------------------------------

namespace {

void build_sparse(std::vector<double> base, std::vector<std::vector<double>>& mx,
                  std::vector<std::vector<double>>& mn) {
    const std::size_t m = base.size();
    mx.assign(1, base);
    mn.assign(1, std::move(base));
    for (std::size_t len = 2; len <= m; len *= 2) {
        const auto& pm = mx.back();
        const auto& pn = mn.back();
        std::vector<double> nm(m - len + 1), nn(m - len + 1);
        for (std::size_t k = 0; k + len <= m; ++k) {
            nm[k] = std::max(pm[k], pm[k + len / 2]);
            nn[k] = std::min(pn[k], pn[k + len / 2]);
        }
        mx.push_back(std::move(nm));
        mn.push_back(std::move(nn));
    }
}

// inclusive range [a, b]
double sparse_query(const std::vector<std::vector<double>>& mx,
                    const std::vector<std::vector<double>>& mn, std::size_t a, std::size_t b,
                    bool upper) {
    const std::size_t len = b - a + 1;
    const int lev = std::bit_width(len) - 1;
    const std::size_t w = std::size_t{1} << lev;
    return upper ? std::max(mx[lev][a], mx[lev][b + 1 - w])
                 : std::min(mn[lev][a], mn[lev][b + 1 - w]);
}

}  // namespace

Extension::Extension(const TransportMap& map, GraphFunction u) : map_(&map), u_(std::move(u)) {
    if (u_.size() != map.cloud().size())
        throw InputError("extension: function length differs from cloud size");
    std::vector<double> base(map.slabs_.size());
    for (std::size_t k = 0; k < base.size(); ++k) base[k] = u_[map.slabs_[k].owner];
    build_sparse(std::move(base), max_, min_);
    if (map.cloud().dim() == 1) {
        const DataCloud& cl = map.cloud();
        by_x_.resize(cl.size());
        std::iota(by_x_.begin(), by_x_.end(), 0u);
        std::stable_sort(by_x_.begin(), by_x_.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return cl[a][0] < cl[b][0]; });
        xs_.resize(cl.size());
        std::vector<double> vals(cl.size());
        for (std::size_t k = 0; k < cl.size(); ++k) {
            xs_[k] = cl[by_x_[k]][0];
            vals[k] = u_[by_x_[k]];
        }
        build_sparse(std::move(vals), pmax_, pmin_);
    }
}

double Extension::range_extreme(std::size_t a, std::size_t b, bool upper) const {
    return sparse_query(max_, min_, a, b, upper);
}

std::optional<double> Extension::ball_extreme(const Point& c, double r, bool upper) const {
    const HistogramDensity& h = map_->hist_;
    const int dim = h.dim;
    double best = upper ? -std::numeric_limits<double>::infinity()
                        : std::numeric_limits<double>::infinity();
    auto take = [&](double v) { best = upper ? std::max(best, v) : std::min(best, v); };
    if (!map_->cloud_.domain().contains(c) || map_->cloud_.domain().signed_distance(c) < r)
        take(u_[map_->cloud_.nearest(c)]);
    // T(Z_i) = Z_i, so vertex values inside the ball count too
    if (dim == 1) {
        auto a = std::upper_bound(xs_.begin(), xs_.end(), c[0] - r);
        auto b = std::lower_bound(xs_.begin(), xs_.end(), c[0] + r);
        if (a < b)
            take(sparse_query(pmax_, pmin_, static_cast<std::size_t>(a - xs_.begin()),
                              static_cast<std::size_t>(b - xs_.begin()) - 1, upper));
    } else {
        map_->cloud_.for_each_in_ball(c, r, [&](std::size_t i) { take(u_[i]); });
    }

    long lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int k = 0; k < dim; ++k) {
        lo[k] = std::max(0L, static_cast<long>(std::floor((c[k] - r - h.origin[k]) / h.side)));
        hi[k] = std::min(h.counts[k] - 1,
                         static_cast<long>(std::floor((c[k] + r - h.origin[k]) / h.side)));
        if (hi[k] < lo[k]) return best;
    }
    for (long c2 = lo[2]; c2 <= hi[2]; ++c2)
        for (long c1 = lo[1]; c1 <= hi[1]; ++c1)
            for (long c0 = lo[0]; c0 <= hi[0]; ++c0) {
                const std::size_t g = static_cast<std::size_t>(
                    (c2 * h.counts[1] + c1) * h.counts[0] + c0);
                const std::int32_t cell = h.cell_of_grid[g];
                if (cell < 0) continue;
                // distance from c to the grid cell in the transverse axes
                const long cc[3] = {c0, c1, c2};
                double perp = 0.0;
                for (int k = 1; k < dim; ++k) {
                    const double a = h.origin[k] + static_cast<double>(cc[k]) * h.side;
                    const double e = std::max({a - c[k], c[k] - a - h.side, 0.0});
                    perp += e * e;
                }
                if (perp >= r * r) continue;
                const double w = std::sqrt(r * r - perp);
                const double a0 = h.origin[0] + static_cast<double>(c0) * h.side;
                const double lo1 = std::max(c[0] - w, a0), hi1 = std::min(c[0] + w, a0 + h.side);
                if (hi1 <= lo1) continue;
                const auto s = map_->slabs(static_cast<std::size_t>(cell));
                const std::size_t base = map_->slab_start_[static_cast<std::size_t>(cell)];
                // slabs with (lo, hi) overlapping the open window (lo1, hi1)
                auto first = std::upper_bound(s.begin(), s.end(), lo1,
                                              [](double v, const TransportMap::Slab& sl) {
                                                  return v < sl.hi;
                                              });
                auto last = std::lower_bound(s.begin(), s.end(), hi1,
                                             [](const TransportMap::Slab& sl, double v) {
                                                 return sl.lo < v;
                                             });
                if (first >= last) continue;
                take(range_extreme(base + static_cast<std::size_t>(first - s.begin()),
                                   base + static_cast<std::size_t>(last - s.begin()) - 1, upper));
            }
    return best;
}

std::optional<std::pair<double, double>> Extension::ball_integral(const Density& density,
                                                                  const Domain& domain,
                                                                  const Point& x,
                                                                  double r) const {
    if (domain.dim() != 1 || domain.kind() != DomainKind::Box) return std::nullopt;
    // 1D box: slabs are intervals and φ is affine, so the midpoint rule is exact
    const double a = std::max(x[0] - r, domain.lo()[0]);
    const double b = std::min(x[0] + r, domain.hi()[0]);
    double num = 0.0, den = 0.0;
    if (b <= a) return std::make_pair(0.0, 0.0);
    const auto& slabs = map_->slabs_;
    auto it = std::upper_bound(slabs.begin(), slabs.end(), a,
                               [](double v, const TransportMap::Slab& sl) { return v < sl.hi; });
    for (; it != slabs.end() && it->lo < b; ++it) {
        const double u = std::max(it->lo, a), v = std::min(it->hi, b);
        if (v <= u) continue;
        const double m = density(Point{0.5 * (u + v), 0, 0}) * (v - u);
        num += u_[it->owner] * m;
        den += m;
    }
    return std::make_pair(num, den);
}

void Extension::z_candidates(const Point& x, double r, double h_radius,
                             std::vector<Point>& out) const {
    const DataCloud& cloud = map_->cloud_;
    std::vector<std::size_t> idx;
    cloud.for_each_in_ball(x, r, [&](std::size_t i) { idx.push_back(i); });
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) out.push_back(cloud[i] - x);
    if (cloud.dim() != 1) return;
    // 1D: z -> v(x+z) + ext v over (x-z-ρ, x-z+ρ) is piecewise constant between
    // these breakpoints, so the interval midpoints cover every value it takes
    const double rho = h_radius;
    std::vector<double> bp{-r, r};
    auto add = [&](double z) {
        if (z > -r && z < r) bp.push_back(z);
    };
    auto edges = [&](double b) {
        add(b - x[0]);
        add(x[0] - rho - b);
        add(x[0] + rho - b);
    };
    const auto& slabs = map_->slabs_;
    const double lo = x[0] - r - rho, hi = x[0] + r + rho;
    auto it = std::upper_bound(slabs.begin(), slabs.end(), lo,
                               [](double v, const TransportMap::Slab& sl) { return v < sl.hi; });
    for (; it != slabs.end() && it->lo < hi; ++it) {
        edges(it->lo);
        edges(it->hi);
    }
    auto a = std::upper_bound(xs_.begin(), xs_.end(), lo);
    auto b = std::lower_bound(xs_.begin(), xs_.end(), hi);
    for (; a < b; ++a) {
        add(x[0] - rho - *a);
        add(x[0] + rho - *a);
    }
    const Domain& d = cloud.domain();
    if (d.kind() == DomainKind::Box) {
        edges(d.lo()[0]);
        edges(d.hi()[0]);
    } else {
        edges(d.center()[0] - d.outer_radius());
        edges(d.center()[0] + d.outer_radius());
        if (d.kind() == DomainKind::Annulus) {
            edges(d.center()[0] - d.inner_radius());
            edges(d.center()[0] + d.inner_radius());
        }
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    for (std::size_t k = 0; k + 1 < bp.size(); ++k)
        out.push_back(Point{0.5 * (bp[k] + bp[k + 1]), 0.0, 0.0});
}

double Extension::integral() const {
    double s = 0.0;
    const HistogramDensity& h = map_->hist_;
    for (std::size_t c = 0; c < h.cells.size(); ++c) {
        const HistogramCell& cell = h.cells[c];
        for (const auto& sl : map_->slabs(c))
            s += u_[sl.owner] * cell.phi *
                 (eval_profile(cell.knots, cell.cum, sl.hi) - eval_profile(cell.knots, cell.cum, sl.lo));
    }
    return s;
}

}  // namespace pucci
