#include "pearl/rng.hpp"

#include <cmath>
#include <numbers>

#include "pearl/error.hpp"

namespace pearl {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) {
    return fnv1a64(text.data(), text.size(), seed);
}

Rng::Rng(std::uint64_t seed) : root_(mix64(seed + kGolden)), state_(root_) {}

Rng Rng::fork(std::string_view label) const {
    Rng child(0);
    child.root_ = mix64(root_ ^ fnv1a64(label));
    child.state_ = child.root_;
    child.has_spare_ = false;
    return child;
}

std::uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] keeps the log finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

Matrix gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std) {
    require(std >= 0.0, ErrorKind::invalid_parameter, "gaussian_sample: std must be >= 0");
    Matrix m(rows, cols);
    double* d = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) d[i] = mean + std * rng.next_gaussian();
    return m;
}

}  // namespace pearl
