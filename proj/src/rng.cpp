#include "pension/rng.hpp"

namespace pension {

namespace {

// splitmix64 finaliser
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t PathRng::derive_seed(std::uint64_t seed, std::uint64_t path, std::uint64_t stream) {
    return mix(mix(mix(seed) ^ path) ^ (stream * 0xd1b54a32d192ed03ull));
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream)
    : engine_(derive_seed(seed, path, stream)) {}

}  // namespace pension
