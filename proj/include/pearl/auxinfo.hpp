#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pearl/matrix.hpp"
#include "pearl/privacy.hpp"
#include "pearl/rng.hpp"

namespace pearl {

// Differentially private statistics released once before training. The mean
// pairwise distance fixes the base frequency scale; the label histogram, when
// released, drives conditional sampling.
struct AuxRelease {
    double mean_pairwise_distance = 0.0;  // DP value, post-floor
    double sigma0 = 0.0;                  // 1 / mean_pairwise_distance
    std::optional<std::vector<double>> label_probs;
    std::vector<std::size_t> ledger_event_ids;
};

// Exact average Euclidean distance over all unordered record pairs; rejects
// entries outside [0,1].
double mean_pairwise_distance(const Matrix& data);

// Estimate over max_pairs random pairs. For exploratory use on n > 2e4 only;
// the DP release always uses the exact statistic.
double mean_pairwise_distance_subsampled(const Matrix& data, std::size_t max_pairs, Rng& rng);

// L2 sensitivity 2 sqrt(d) / n of the mean pairwise distance under one-record
// replacement.
double pairwise_sensitivity(std::size_t d, std::size_t n);

// sigma0 = 1 / dp_mean_distance, applied isotropically.
double derive_sigma0(double dp_mean_distance, std::size_t d);

// Noisy values at or below this floor (times sqrt(d)) are clamped before
// inversion.
constexpr double kMeanDistanceFloorPerSqrtD = 1e-3;

// One-shot release guard over a fixed dataset: each statistic can be released
// exactly once per instance, and each release charges the ledger exactly once.
class AuxReleaser {
public:
    explicit AuxReleaser(const Matrix& data) : data_(&data) {}

    // DP mean pairwise distance: exact statistic + Gaussian noise at
    // sensitivity * sigma_aux, floored at 1e-3 sqrt(d). sigma_aux = 0 is the
    // non-private sentinel.
    double release_mean_distance(double sigma_aux, Rng& rng, RdpLedger& ledger);

    // DP label histogram over class_count classes: normalized counts plus
    // Gaussian noise at L2 sensitivity sqrt(2)/n, clipped at 0, renormalized.
    std::vector<double> release_label_histogram(std::span<const std::size_t> labels,
                                                std::size_t class_count, double sigma_aux,
                                                Rng& rng, RdpLedger& ledger);

private:
    const Matrix* data_;
    bool mean_released_ = false;
    bool hist_released_ = false;
};

}  // namespace pearl
