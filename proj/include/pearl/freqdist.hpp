#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pearl/matrix.hpp"
#include "pearl/rng.hpp"

namespace pearl {

// Zero-mean diagonal-Gaussian law over frequency space, parameterized by
// log standard deviations so that gradient ascent on the critic stays on
// positive scales without an explicit constraint.
struct SamplingDistribution {
    std::size_t dim = 0;
    std::vector<double> log_std;  // per-dimension, std = exp(log_std)

    static SamplingDistribution isotropic(std::size_t dim, double std);
    static SamplingDistribution from_log_std(std::vector<double> log_std);

    std::vector<double> std() const;
};

// The k frequency vectors shared by the target and generated embeddings.
// Drawn once per pipeline; the content hash travels with every embedding so
// that mixing draws is detectable.
struct FrequencyMatrix {
    std::size_t k = 0;
    std::size_t dim = 0;
    Matrix freqs;  // k x dim, row i is t_i
    std::uint64_t hash = 0;

    static FrequencyMatrix from_matrix(Matrix freqs);
};

FrequencyMatrix sample_frequencies(const SamplingDistribution& base, std::size_t k, Rng& rng);

double log_density(const SamplingDistribution& dist, std::span<const double> t);

// w_i = exp(log critic(t_i) - log base(t_i)); with normalize, rescaled so the
// weights sum to k (computed in log space for stability).
std::vector<double> importance_weights(const SamplingDistribution& critic,
                                       const SamplingDistribution& base,
                                       const FrequencyMatrix& freqs, bool normalize);

// k x dim matrix of dw_i / d log_std_j of the critic.
Matrix weights_grad_logstd(const SamplingDistribution& critic, const SamplingDistribution& base,
                           const FrequencyMatrix& freqs, bool normalize);

// (1/k) sum_i w_i f_i — the importance-sampling estimate of E_omega[f] from
// draws under the base distribution.
double weighted_expectation(std::span<const double> f_values, std::span<const double> weights);

}  // namespace pearl
