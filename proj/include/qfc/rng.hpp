// rng.hpp — Seedable, splittable random streams plus random-state generators.
// Each trajectory/trial derives an independent substream from
// (master seed, index), so ensembles parallelize without shared state.

#pragma once

#include "qfc/linalg.hpp"

#include <cstdint>
#include <random>

namespace qfc {

using RngEngine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x1ULL));
}

inline RngEngine make_engine(std::uint64_t master, std::uint64_t index = 0) {
    return RngEngine(derive_seed(master, index));
}

inline double normal_draw(RngEngine& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    return dist(rng);
}

// Ginibre matrix: i.i.d. standard complex Gaussian entries.
Matrix ginibre(Index rows, Index cols, RngEngine& rng);

// Haar-random unitary via QR with R-diagonal phase fix.
Matrix random_unitary(Index dim, RngEngine& rng);

PureState random_pure_state(Index dim, RngEngine& rng);

// Full-rank random mixed state, rho = GG†/Tr(GG†).
DensityMatrix random_density_matrix(Index dim, RngEngine& rng);

} // namespace qfc
