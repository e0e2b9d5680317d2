#pragma once

#include <cstdint>
#include <string_view>

#include "pearl/matrix.hpp"

namespace pearl {

// Deterministic splittable generator. Substreams are derived by hashing a
// purpose label into the parent's root identity, so the stream a subsystem
// sees depends only on (seed, chain of labels) and never on how many draws
// other subsystems made.
//
// Draws use the SplitMix64 output function over a Weyl sequence; normals use
// Box-Muller with a cached spare. An Rng instance is single-threaded.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent substream identified by (this rng's identity, label).
    // Calling fork twice with the same label yields identical substreams;
    // callers use one label per purpose.
    Rng fork(std::string_view label) const;

    std::uint64_t next_u64();
    // Uniform on [0, 1).
    double next_double();
    // Standard normal.
    double next_gaussian();

    std::uint64_t root() const noexcept { return root_; }

private:
    std::uint64_t root_ = 0;
    std::uint64_t state_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// k x cols matrix of i.i.d. normal(mean, std^2) entries. std = 0 yields the
// constant matrix. std < 0 is invalid-parameter.
Matrix gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std);

// FNV-1a over arbitrary bytes; used for content hashes (frequency matrices,
// schemas) and label-based stream splitting.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ull);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 14695981039346656037ull);

}  // namespace pearl
