#include "pearl/freqdist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pearl/error.hpp"

namespace pearl {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)

// Keeps exp() away from the underflow-to-zero region so weights stay
// strictly positive.
constexpr double kMinLogWeight = -700.0;

std::uint64_t hash_matrix(const Matrix& m) {
    const std::uint64_t dims[2] = {m.rows(), m.cols()};
    const std::uint64_t h = fnv1a64(dims, sizeof(dims));
    return fnv1a64(m.data(), m.size() * sizeof(double), h);
}

}  // namespace

SamplingDistribution SamplingDistribution::isotropic(std::size_t dim, double std) {
    require(dim >= 1, ErrorKind::invalid_parameter, "sampling distribution needs dim >= 1");
    require(std > 0.0 && std::isfinite(std), ErrorKind::invalid_parameter,
            "sampling distribution std must be finite and > 0");
    SamplingDistribution d;
    d.dim = dim;
    d.log_std.assign(dim, std::log(std));
    return d;
}

SamplingDistribution SamplingDistribution::from_log_std(std::vector<double> log_std) {
    require(!log_std.empty(), ErrorKind::invalid_parameter, "sampling distribution needs dim >= 1");
    for (double v : log_std)
        require(std::isfinite(v), ErrorKind::invalid_parameter, "log_std entries must be finite");
    SamplingDistribution d;
    d.dim = log_std.size();
    d.log_std = std::move(log_std);
    return d;
}

std::vector<double> SamplingDistribution::std() const {
    std::vector<double> s(log_std.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(log_std[i]);
    return s;
}

FrequencyMatrix FrequencyMatrix::from_matrix(Matrix freqs) {
    FrequencyMatrix f;
    f.k = freqs.rows();
    f.dim = freqs.cols();
    f.freqs = std::move(freqs);
    f.hash = hash_matrix(f.freqs);
    return f;
}

FrequencyMatrix sample_frequencies(const SamplingDistribution& base, std::size_t k, Rng& rng) {
    require(k >= 1, ErrorKind::invalid_parameter, "sample_frequencies: k must be >= 1");
    Matrix freqs(k, base.dim);
    const std::vector<double> std = base.std();
    for (std::size_t i = 0; i < k; ++i) {
        double* row = freqs.data() + i * base.dim;
        for (std::size_t j = 0; j < base.dim; ++j) row[j] = std[j] * rng.next_gaussian();
    }
    return FrequencyMatrix::from_matrix(std::move(freqs));
}

double log_density(const SamplingDistribution& dist, std::span<const double> t) {
    require(t.size() == dist.dim, ErrorKind::invalid_parameter, "log_density dimension mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < dist.dim; ++j) {
        const double s = std::exp(dist.log_std[j]);
        const double z = t[j] / s;
        sum += -kHalfLog2Pi - dist.log_std[j] - 0.5 * z * z;
    }
    return sum;
}

namespace {

std::vector<double> log_ratios(const SamplingDistribution& critic, const SamplingDistribution& base,
                               const FrequencyMatrix& freqs) {
    require(critic.dim == base.dim && critic.dim == freqs.dim, ErrorKind::invalid_parameter,
            "importance_weights dimension mismatch");
    std::vector<double> lr(freqs.k);
    for (std::size_t i = 0; i < freqs.k; ++i) {
        const auto t = freqs.freqs.row(i);
        lr[i] = log_density(critic, t) - log_density(base, t);
    }
    return lr;
}

}  // namespace

std::vector<double> importance_weights(const SamplingDistribution& critic,
                                       const SamplingDistribution& base,
                                       const FrequencyMatrix& freqs, bool normalize) {
    std::vector<double> lr = log_ratios(critic, base, freqs);
    std::vector<double> w(lr.size());
    if (!normalize) {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(std::max(lr[i], kMinLogWeight));
        return w;
    }
    const double lmax = *std::max_element(lr.begin(), lr.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(std::max(lr[i] - lmax, kMinLogWeight));
        sum += w[i];
    }
    const double scale = static_cast<double>(w.size()) / sum;
    for (double& v : w) v = std::max(v * scale, 5e-324);
    return w;
}

Matrix weights_grad_logstd(const SamplingDistribution& critic, const SamplingDistribution& base,
                           const FrequencyMatrix& freqs, bool normalize) {
    const std::vector<double> w = importance_weights(critic, base, freqs, normalize);
    const std::size_t k = freqs.k, d = freqs.dim;
    // g_ij = d log w_i / d log_std_j = (t_ij / std_j)^2 - 1
    Matrix g(k, d);
    const std::vector<double> std = critic.std();
    for (std::size_t i = 0; i < k; ++i) {
        const double* t = freqs.freqs.data() + i * d;
        double* grow = g.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            const double z = t[j] / std[j];
            grow[j] = z * z - 1.0;
        }
    }
    Matrix grad(k, d);
    if (!normalize) {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < d; ++j) grad(i, j) = w[i] * g(i, j);
        return grad;
    }
    // Normalized weights keep sum w = k, so each row's gradient is corrected
    // by the weighted mean of g over the draw.
    std::vector<double> mean_g(d, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < d; ++j) mean_g[j] += w[i] * g(i, j);
    for (std::size_t j = 0; j < d; ++j) mean_g[j] /= static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < d; ++j) grad(i, j) = w[i] * (g(i, j) - mean_g[j]);
    return grad;
}

double weighted_expectation(std::span<const double> f_values, std::span<const double> weights) {
    require(f_values.size() == weights.size(), ErrorKind::invalid_parameter,
            "weighted_expectation length mismatch");
    require(!f_values.empty(), ErrorKind::invalid_parameter, "weighted_expectation of empty vectors");
    double sum = 0.0;
    for (std::size_t i = 0; i < f_values.size(); ++i) sum += weights[i] * f_values[i];
    return sum / static_cast<double>(f_values.size());
}

}  // namespace pearl
