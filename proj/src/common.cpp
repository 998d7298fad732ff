#include "pucci/common.hpp"

#include <algorithm>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pucci {

namespace {

std::string describe_sites(const std::vector<ReflectedNeighborhoodError::Site>& sites) {
    std::ostringstream os;
    os << "empty reflected neighborhood at " << sites.size() << " site(s)";
    const std::size_t shown = std::min<std::size_t>(sites.size(), 8);
    for (std::size_t k = 0; k < shown; ++k) {
        os << (k == 0 ? ": " : ", ") << "(i=" << sites[k].center << ", j=" << sites[k].partner
           << ", r=" << sites[k].radius << ")";
    }
    if (shown < sites.size()) os << ", ...";
    return os.str();
}

int default_threads() {
#ifdef _OPENMP
    return omp_get_num_procs();
#else
    return 1;
#endif
}

int g_threads = 0;

}  // namespace

ReflectedNeighborhoodError::ReflectedNeighborhoodError(std::vector<Site> sites)
    : Error(describe_sites(sites)), sites_(std::move(sites)) {}

void set_num_threads(int n) {
    g_threads = n > 0 ? n : 0;
#ifdef _OPENMP
    omp_set_num_threads(num_threads());
#endif
}

int num_threads() { return g_threads > 0 ? g_threads : default_threads(); }

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pucci
