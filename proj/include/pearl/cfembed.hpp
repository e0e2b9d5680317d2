#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pearl/freqdist.hpp"
#include "pearl/matrix.hpp"
#include "pearl/rng.hpp"

namespace pearl {

// Empirical characteristic function of a dataset evaluated at k shared
// frequencies, split into real/imaginary parts. A raw embedding always lies
// inside the sqrt(k) ball; a sanitized one carries the Gaussian-mechanism
// noise scale that produced it and may leave the ball (it is deliberately not
// re-clipped).
struct CfEmbedding {
    std::size_t k = 0;
    std::vector<double> re;
    std::vector<double> im;
    std::size_t n_source = 0;
    bool sanitized = false;
    double noise_std = 0.0;     // per-coordinate std actually added (0 if raw)
    std::uint64_t freq_hash = 0;

    double l2_norm() const;
};

// Squared characteristic-function distance together with the per-frequency
// squared moduli it averages; the critic consumes the per-frequency terms.
struct CfdValue {
    double value = 0.0;
    std::vector<double> per_frequency;
};

// re_i = (1/n) sum_j cos(t_i . x_j), im_i likewise with sin. Sequential
// reduction over records keeps replays bitwise identical.
CfEmbedding embed(const Matrix& data, const FrequencyMatrix& freqs);

// L2 sensitivity of the stacked embedding under one-record replacement.
double cf_sensitivity(std::size_t k, std::size_t n);

// One-shot Gaussian mechanism: adds i.i.d. normal(0, (delta*sigma)^2) noise to
// each of the 2k stacked coordinates. sigma = 0 is the non-private sentinel
// and leaves the values unchanged (still marked sanitized); sigma < 0 is
// rejected, as is sanitizing twice.
CfEmbedding sanitize(const CfEmbedding& emb, double noise_std_multiplier, Rng& rng);

// (1/k) sum_i |a_i - b_i|^2 over the complex coordinates.
CfdValue cfd(const CfEmbedding& a, const CfEmbedding& b);

// sum_i w_i |a_i - b_i|^2 (no 1/k factor; unit weights give k times cfd).
CfdValue weighted_cfd(const CfEmbedding& a, const CfEmbedding& b, std::span<const double> weights);

// Exact gradient of weighted_cfd(target, embed(gen_points)) with respect to
// every generated point.
Matrix loss_grad_points(const CfEmbedding& target, const Matrix& gen_points,
                        const FrequencyMatrix& freqs, std::span<const double> weights);

// Gradient of the weighted CFD with respect to the critic's log_std, through
// the weights only (the per-frequency errors are fixed).
std::vector<double> loss_grad_logstd(const CfEmbedding& target, const CfEmbedding& gen_emb,
                                     const FrequencyMatrix& freqs,
                                     const SamplingDistribution& critic,
                                     const SamplingDistribution& base, bool normalize);

// Fused training-path variant: one pass over the cos/sin table yields both the
// loss value and the point gradient. loss_grad_points is this with the value
// discarded.
struct LossAndGrad {
    CfdValue loss;
    Matrix point_grad;
    CfEmbedding gen_embedding;
};
LossAndGrad weighted_cfd_and_point_grad(const CfEmbedding& target, const Matrix& gen_points,
                                        const FrequencyMatrix& freqs,
                                        std::span<const double> weights);

}  // namespace pearl
