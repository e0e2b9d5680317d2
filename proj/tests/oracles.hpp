#pragma once

// Test-only oracles: central finite differences and brute-force sensitivity
// sweeps. Everything here is independent of the library's analytic gradient
// and sensitivity code paths it is used to check.

#include <cmath>
#include <functional>
#include <vector>

#include "pearl/auxinfo.hpp"
#include "pearl/cfembed.hpp"
#include "pearl/matrix.hpp"
#include "pearl/rng.hpp"

namespace oracles {

// Central finite difference of a scalar function over a parameter vector.
inline std::vector<double> central_diff(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Largest entry-wise deviation normalized by the largest gradient magnitude.
// The floor keeps blocks whose true gradient is (numerically) zero from
// turning roundoff-vs-truncation noise into a spurious O(1) ratio.
inline double max_rel_error(const std::vector<double>& analytic,
                            const std::vector<double>& numeric, double scale_floor = 1e-6) {
    double scale = scale_floor;
    for (double v : analytic) scale = std::max(scale, std::abs(v));
    for (double v : numeric) scale = std::max(scale, std::abs(v));
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
    return worst;
}

inline std::vector<double> to_vector(const pearl::Matrix& m) {
    return {m.flat().begin(), m.flat().end()};
}

// L2 distance between the stacked (re, im) coordinates of two embeddings.
inline double embedding_distance(const pearl::CfEmbedding& a, const pearl::CfEmbedding& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.k; ++i) {
        const double dr = a.re[i] - b.re[i];
        const double di = a.im[i] - b.im[i];
        s += dr * dr + di * di;
    }
    return std::sqrt(s);
}

// Worst embedding change over `trials` random one-record replacements of
// random datasets with n <= max_n, d <= max_d, k <= max_k. Returns the
// largest ratio of observed change to the claimed bound 2 sqrt(k) / n.
inline double cf_sensitivity_sweep(std::size_t trials, std::size_t max_n, std::size_t max_d,
                                   std::size_t max_k, pearl::Rng& rng) {
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 1 + rng.next_u64() % max_n;
        const std::size_t d = 1 + rng.next_u64() % max_d;
        const std::size_t k = 1 + rng.next_u64() % max_k;
        pearl::Matrix data(n, d);
        for (double& v : data.flat()) v = rng.next_double();
        pearl::Matrix freq_values = pearl::gaussian_sample(rng, k, d, 0.0, 3.0);
        const auto freqs = pearl::FrequencyMatrix::from_matrix(std::move(freq_values));
        pearl::Matrix neighbor = data;
        const std::size_t row = rng.next_u64() % n;
        for (std::size_t c = 0; c < d; ++c) neighbor(row, c) = rng.next_double();
        const double change = embedding_distance(pearl::embed(data, freqs),
                                                 pearl::embed(neighbor, freqs));
        const double bound = 2.0 * std::sqrt(static_cast<double>(k)) / static_cast<double>(n);
        worst_ratio = std::max(worst_ratio, change / bound);
    }
    return worst_ratio;
}

// Same sweep for the mean pairwise distance against 2 sqrt(d) / n.
inline double pairwise_sensitivity_sweep(std::size_t trials, std::size_t max_n, std::size_t max_d,
                                         pearl::Rng& rng) {
    double worst_ratio = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.next_u64() % (max_n - 1);
        const std::size_t d = 1 + rng.next_u64() % max_d;
        pearl::Matrix data(n, d);
        for (double& v : data.flat()) v = rng.next_double();
        pearl::Matrix neighbor = data;
        const std::size_t row = rng.next_u64() % n;
        for (std::size_t c = 0; c < d; ++c) neighbor(row, c) = rng.next_double();
        const double change = std::abs(pearl::mean_pairwise_distance(data) -
                                       pearl::mean_pairwise_distance(neighbor));
        const double bound = 2.0 * std::sqrt(static_cast<double>(d)) / static_cast<double>(n);
        worst_ratio = std::max(worst_ratio, change / bound);
    }
    return worst_ratio;
}

}  // namespace oracles
