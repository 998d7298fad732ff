#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pucci {

/// Point in R^N for N <= 3. Unused trailing coordinates are kept at zero so
/// distances can always be taken over all three components.
using Point = std::array<double, 3>;

/// Real values indexed by cloud vertex.
using GraphFunction = std::vector<double>;

inline constexpr int kMaxDim = 3;

inline double dot(const Point& a, const Point& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double dist2(const Point& a, const Point& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline Point operator+(const Point& a, const Point& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Point operator-(const Point& a, const Point& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Point operator*(double s, const Point& a) {
    return {s * a[0], s * a[1], s * a[2]};
}

/// Reflection of q through c, i.e. 2c - q.
inline Point reflect(const Point& c, const Point& q) {
    return {2.0 * c[0] - q[0], 2.0 * c[1] - q[1], 2.0 * c[2] - q[2]};
}

/// Symmetric matrix storage for N <= 3 (row-major, unused rows/cols zero).
using Matrix3 = std::array<std::array<double, 3>, 3>;

// ---------------------------------------------------------------------------
// Errors. The CLI maps ConfigError to exit code 2 and every other Error to 3.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration. `path` names the offending field, e.g.
/// "density.intercept".
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Point outside the domain where one is required.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed numerical input (e.g. an asymmetric Hessian).
class InputError : public Error {
public:
    using Error::Error;
};

/// Sampler could not make progress.
class DegenerateDensityError : public Error {
public:
    using Error::Error;
};

/// Boundary strip without any vertex.
class EmptyStripError : public Error {
public:
    using Error::Error;
};

/// Empty reflected neighborhood under the strict policy. Carries every
/// offending (i, j, r) triple.
class ReflectedNeighborhoodError : public Error {
public:
    struct Site {
        std::size_t center;
        std::size_t partner;
        double radius;
    };
    explicit ReflectedNeighborhoodError(std::vector<Site> sites);
    const std::vector<Site>& sites() const noexcept { return sites_; }

private:
    std::vector<Site> sites_;
};

// ---------------------------------------------------------------------------
// Threading. The global worker count is honored by every parallel kernel.
// ---------------------------------------------------------------------------

/// Sets the worker count for OpenMP kernels; n <= 0 restores the default
/// (one per hardware thread).
void set_num_threads(int n);
int num_threads();

// ---------------------------------------------------------------------------
// Random numbers. std::mt19937_64 is fully specified by the standard; the
// double mapping is done by hand so streams match across standard libraries.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

/// Deterministic derivation of a child seed (e.g. per ladder level).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pucci
