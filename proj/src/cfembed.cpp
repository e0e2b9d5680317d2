#include "pearl/cfembed.hpp"

#include <cmath>

#include "pearl/error.hpp"

namespace pearl {

double CfEmbedding::l2_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += re[i] * re[i] + im[i] * im[i];
    return std::sqrt(s);
}

CfEmbedding embed(const Matrix& data, const FrequencyMatrix& freqs) {
    require(data.rows() >= 1, ErrorKind::invalid_parameter, "embed: empty dataset");
    require(data.cols() == freqs.dim, ErrorKind::invalid_parameter,
            "embed: data and frequency dimensions differ");
    const std::size_t n = data.rows(), d = data.cols(), k = freqs.k;
    CfEmbedding e;
    e.k = k;
    e.re.assign(k, 0.0);
    e.im.assign(k, 0.0);
    e.n_source = n;
    e.freq_hash = freqs.hash;
    // Frequency-major: each output coordinate is one fixed-order sum over
    // records, so the reduction order is independent of thread count.
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(k); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* t = freqs.freqs.data() + i * d;
        double cre = 0.0, cim = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double* x = data.data() + j * d;
            double dot = 0.0;
            for (std::size_t l = 0; l < d; ++l) dot += t[l] * x[l];
            cre += std::cos(dot);
            cim += std::sin(dot);
        }
        e.re[i] = cre / static_cast<double>(n);
        e.im[i] = cim / static_cast<double>(n);
    }
    return e;
}

double cf_sensitivity(std::size_t k, std::size_t n) {
    require(k >= 1, ErrorKind::invalid_parameter, "cf_sensitivity: k must be >= 1");
    require(n >= 1, ErrorKind::invalid_parameter, "cf_sensitivity: n must be >= 1");
    return 2.0 * std::sqrt(static_cast<double>(k)) / static_cast<double>(n);
}

CfEmbedding sanitize(const CfEmbedding& emb, double noise_std_multiplier, Rng& rng) {
    require(!emb.sanitized, ErrorKind::invalid_state, "sanitize: embedding already sanitized");
    require(noise_std_multiplier >= 0.0 && std::isfinite(noise_std_multiplier),
            ErrorKind::invalid_parameter, "sanitize: noise multiplier must be >= 0");
    CfEmbedding out = emb;
    out.sanitized = true;
    const double delta = cf_sensitivity(emb.k, emb.n_source);
    out.noise_std = delta * noise_std_multiplier;
    if (out.noise_std > 0.0) {
        for (std::size_t i = 0; i < out.k; ++i) out.re[i] += out.noise_std * rng.next_gaussian();
        for (std::size_t i = 0; i < out.k; ++i) out.im[i] += out.noise_std * rng.next_gaussian();
    }
    return out;
}

namespace {

void check_pair(const CfEmbedding& a, const CfEmbedding& b) {
    require(a.k == b.k, ErrorKind::invalid_parameter, "cfd: embeddings have different k");
    require(a.freq_hash == b.freq_hash, ErrorKind::invalid_parameter,
            "cfd: embeddings come from different frequency draws");
}

}  // namespace

CfdValue cfd(const CfEmbedding& a, const CfEmbedding& b) {
    check_pair(a, b);
    CfdValue v;
    v.per_frequency.resize(a.k);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.k; ++i) {
        const double dr = a.re[i] - b.re[i];
        const double di = a.im[i] - b.im[i];
        v.per_frequency[i] = dr * dr + di * di;
        sum += v.per_frequency[i];
    }
    v.value = sum / static_cast<double>(a.k);
    return v;
}

CfdValue weighted_cfd(const CfEmbedding& a, const CfEmbedding& b, std::span<const double> weights) {
    check_pair(a, b);
    require(weights.size() == a.k, ErrorKind::invalid_parameter, "weighted_cfd: weight length != k");
    CfdValue v;
    v.per_frequency.resize(a.k);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.k; ++i) {
        const double dr = a.re[i] - b.re[i];
        const double di = a.im[i] - b.im[i];
        v.per_frequency[i] = dr * dr + di * di;
        sum += weights[i] * v.per_frequency[i];
    }
    v.value = sum;
    return v;
}

LossAndGrad weighted_cfd_and_point_grad(const CfEmbedding& target, const Matrix& gen_points,
                                        const FrequencyMatrix& freqs,
                                        std::span<const double> weights) {
    require(target.freq_hash == freqs.hash, ErrorKind::invalid_parameter,
            "loss gradient: target embedding does not match the frequency draw");
    require(gen_points.cols() == freqs.dim, ErrorKind::invalid_parameter,
            "loss gradient: point dimension does not match frequencies");
    require(gen_points.all_finite(), ErrorKind::invalid_parameter,
            "loss gradient: generated points must be finite");
    require(weights.size() == freqs.k, ErrorKind::invalid_parameter,
            "loss gradient: weight length != k");
    const std::size_t B = gen_points.rows(), k = freqs.k;

    // dots = G * F^T, then cos/sin tables reused by the embedding average and
    // the gradient coefficients.
    Matrix cost = matmul_nt(gen_points, freqs.freqs);  // B x k, holds dots first
    Matrix sint(B, k);
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(B); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double* crow = cost.data() + j * k;
        double* srow = sint.data() + j * k;
        for (std::size_t i = 0; i < k; ++i) {
            const double dot = crow[i];
            crow[i] = std::cos(dot);
            srow[i] = std::sin(dot);
        }
    }

    LossAndGrad out;
    CfEmbedding& gen = out.gen_embedding;
    gen.k = k;
    gen.re.assign(k, 0.0);
    gen.im.assign(k, 0.0);
    gen.n_source = B;
    gen.freq_hash = freqs.hash;
    const double invB = 1.0 / static_cast<double>(B);
    for (std::size_t j = 0; j < B; ++j) {
        const double* crow = cost.data() + j * k;
        const double* srow = sint.data() + j * k;
        for (std::size_t i = 0; i < k; ++i) {
            gen.re[i] += crow[i];
            gen.im[i] += srow[i];
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        gen.re[i] *= invB;
        gen.im[i] *= invB;
    }

    out.loss = weighted_cfd(target, gen, weights);

    // dL/dg_j = (2/B) sum_i w_i t_i [ -(p_i - a_i) sin(t_i.g_j) + (q_i - b_i) cos(t_i.g_j) ]
    std::vector<double> wdr(k), wdi(k);
    for (std::size_t i = 0; i < k; ++i) {
        wdr[i] = 2.0 * invB * weights[i] * (gen.re[i] - target.re[i]);
        wdi[i] = 2.0 * invB * weights[i] * (gen.im[i] - target.im[i]);
    }
#pragma omp parallel for schedule(static)
    for (long long jj = 0; jj < static_cast<long long>(B); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double* crow = cost.data() + j * k;
        const double* srow = sint.data() + j * k;
        // Coefficient per (point, frequency), written over the cos table.
        for (std::size_t i = 0; i < k; ++i)
            crow[i] = -wdr[i] * srow[i] + wdi[i] * crow[i];
    }
    out.point_grad = matmul(cost, freqs.freqs);  // B x d
    return out;
}

Matrix loss_grad_points(const CfEmbedding& target, const Matrix& gen_points,
                        const FrequencyMatrix& freqs, std::span<const double> weights) {
    return weighted_cfd_and_point_grad(target, gen_points, freqs, weights).point_grad;
}

std::vector<double> loss_grad_logstd(const CfEmbedding& target, const CfEmbedding& gen_emb,
                                     const FrequencyMatrix& freqs,
                                     const SamplingDistribution& critic,
                                     const SamplingDistribution& base, bool normalize) {
    const CfdValue errors = cfd(target, gen_emb);
    const Matrix wg = weights_grad_logstd(critic, base, freqs, normalize);
    std::vector<double> grad(freqs.dim, 0.0);
    for (std::size_t i = 0; i < freqs.k; ++i) {
        const double e = errors.per_frequency[i];
        const double* row = wg.data() + i * freqs.dim;
        for (std::size_t j = 0; j < freqs.dim; ++j) grad[j] += row[j] * e;
    }
    return grad;
}

}  // namespace pearl
