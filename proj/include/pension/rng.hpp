#pragma once

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cstdint>
#include <random>

namespace pension {

/// Independent Gaussian stream for one (seed, path, stream) triple. Streams
/// depend only on their key, so the draws of a path do not change with the
/// number of paths, the block size or the thread count.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream = 0);

    /// Ziggurat normal; unlike the standard library's, its algorithm is fixed
    /// across platforms, which keeps outputs portable.
    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::uint64_t bits() { return engine_(); }

    /// The engine seed derived from the key (exposed for tests).
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t path, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_;
};

}  // namespace pension
