#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pearl/cfembed.hpp"
#include "pearl/error.hpp"

using namespace pearl;

namespace {

FrequencyMatrix single_freq(double t) { return FrequencyMatrix::from_matrix(Matrix(1, 1, t)); }

}  // namespace

TEST_CASE("embed: zero record, two-point cancellation, norm bound") {
    // Single record at the origin: re = 1, im = 0 at every frequency.
    Rng rng(2);
    const auto freqs = FrequencyMatrix::from_matrix(gaussian_sample(rng, 8, 3, 0.0, 2.0));
    const auto e = embed(Matrix(1, 3, 0.0), freqs);
    for (std::size_t i = 0; i < e.k; ++i) {
        CHECK(e.re[i] == doctest::Approx(1.0));
        CHECK(e.im[i] == doctest::Approx(0.0));
    }
    CHECK_FALSE(e.sanitized);
    CHECK(e.n_source == 1);

    // d=1, data {0, pi}, t=1: both parts average to zero.
    Matrix two(2, 1);
    two(1, 0) = std::numbers::pi;
    const auto e2 = embed(two, single_freq(1.0));
    CHECK(e2.re[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(e2.im[0] == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(embed(Matrix(0, 1), single_freq(1.0)), Error);
}

TEST_CASE("embed: fuzzed norm bound ||phi|| <= sqrt(k)") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.next_u64() % 20;
        const std::size_t d = 1 + rng.next_u64() % 4;
        const std::size_t k = 1 + rng.next_u64() % 16;
        Matrix data(n, d);
        for (double& v : data.flat()) v = 10.0 * (rng.next_double() - 0.5);
        const auto freqs = FrequencyMatrix::from_matrix(gaussian_sample(rng, k, d, 0.0, 5.0));
        const auto e = embed(data, freqs);
        CHECK(e.l2_norm() <= std::sqrt(static_cast<double>(k)) + 1e-12);
    }
}

TEST_CASE("cf_sensitivity closed form and brute-force soundness") {
    CHECK(cf_sensitivity(1, 2) == doctest::Approx(1.0));
    CHECK(cf_sensitivity(4, 100) == doctest::Approx(0.04));
    CHECK_THROWS_AS(cf_sensitivity(0, 1), Error);
    CHECK_THROWS_AS(cf_sensitivity(1, 0), Error);

    Rng rng(23);
    CHECK(oracles::cf_sensitivity_sweep(200, 4, 2, 3, rng) <= 1.0 + 1e-12);

    // The pi-phase pair attains the bound at k=1: t*x_n = 0 vs t*x_n' = pi.
    Matrix a(3, 1, 0.25), b(3, 1, 0.25);
    a(2, 0) = 0.0;
    b(2, 0) = 1.0;
    const auto freqs = single_freq(std::numbers::pi);
    const double change = oracles::embedding_distance(embed(a, freqs), embed(b, freqs));
    CHECK(std::abs(change - 2.0 / 3.0) <= 1e-12);
}

TEST_CASE("sanitize: one-shot, determinism, noise scale") {
    Rng rng(4);
    const auto freqs = FrequencyMatrix::from_matrix(gaussian_sample(rng, 16, 2, 0.0, 1.0));
    Matrix data(10, 2);
    for (double& v : data.flat()) v = rng.next_double();
    const auto raw = embed(data, freqs);

    Rng n1(99), n2(99);
    const auto s1 = sanitize(raw, 2.0, n1);
    const auto s2 = sanitize(raw, 2.0, n2);
    CHECK(s1.sanitized);
    CHECK(s1.noise_std == doctest::Approx(cf_sensitivity(16, 10) * 2.0));
    for (std::size_t i = 0; i < s1.k; ++i) {
        CHECK(s1.re[i] == s2.re[i]);
        CHECK(s1.im[i] == s2.im[i]);
    }

    CHECK_THROWS_AS(sanitize(s1, 2.0, n1), Error);      // double sanitization
    CHECK_THROWS_AS(sanitize(raw, -0.5, n1), Error);    // negative multiplier

    // sigma = 0 is the non-private sentinel: values unchanged.
    const auto s0 = sanitize(raw, 0.0, n1);
    CHECK(s0.sanitized);
    CHECK(s0.noise_std == 0.0);
    for (std::size_t i = 0; i < s0.k; ++i) CHECK(s0.re[i] == raw.re[i]);

    // Per-coordinate noise std over many sanitizations within 2% of delta*sigma.
    const auto tiny_freqs = single_freq(1.0);
    const auto tiny = embed(Matrix(4, 1, 0.3), tiny_freqs);
    const double target = cf_sensitivity(1, 4) * 1.5;
    Rng noise_rng(7);
    double ss = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        const auto s = sanitize(tiny, 1.5, noise_rng);
        const double dre = s.re[0] - tiny.re[0];
        const double dim = s.im[0] - tiny.im[0];
        ss += dre * dre + dim * dim;
    }
    const double observed = std::sqrt(ss / (2.0 * reps));
    CHECK(std::abs(observed - target) / target < 0.02);
}

TEST_CASE("cfd: metric axioms and single-term arithmetic") {
    Rng rng(6);
    const auto freqs = FrequencyMatrix::from_matrix(gaussian_sample(rng, 8, 2, 0.0, 1.0));
    Matrix da(5, 2), db(5, 2);
    for (double& v : da.flat()) v = rng.next_double();
    for (double& v : db.flat()) v = rng.next_double();
    const auto a = embed(da, freqs);
    const auto b = embed(db, freqs);

    CHECK(cfd(a, a).value == 0.0);
    CHECK(cfd(a, b).value == cfd(b, a).value);
    CHECK(cfd(a, b).value >= 0.0);
    for (double e : cfd(a, b).per_frequency) CHECK(e >= 0.0);

    // k=1, a=(1,0), b=(0,0) -> 1.
    CfEmbedding ea, eb;
    ea.k = eb.k = 1;
    ea.re = {1.0};
    ea.im = {0.0};
    eb.re = {0.0};
    eb.im = {0.0};
    ea.n_source = eb.n_source = 1;
    ea.freq_hash = eb.freq_hash = 123;
    CHECK(cfd(ea, eb).value == doctest::Approx(1.0));

    // Mixing frequency draws is an error.
    const auto other = FrequencyMatrix::from_matrix(gaussian_sample(rng, 8, 2, 0.0, 1.0));
    const auto c = embed(da, other);
    CHECK_THROWS_AS(cfd(a, c), Error);
}

TEST_CASE("weighted_cfd: unit weights, one-hot, identity") {
    Rng rng(8);
    const auto freqs = FrequencyMatrix::from_matrix(gaussian_sample(rng, 12, 2, 0.0, 1.0));
    Matrix da(6, 2), db(6, 2);
    for (double& v : da.flat()) v = rng.next_double();
    for (double& v : db.flat()) v = rng.next_double();
    const auto a = embed(da, freqs);
    const auto b = embed(db, freqs);

    const std::vector<double> ones(freqs.k, 1.0);
    CHECK(weighted_cfd(a, b, ones).value ==
          doctest::Approx(static_cast<double>(freqs.k) * cfd(a, b).value).epsilon(1e-15));

    std::vector<double> onehot(freqs.k, 0.0);
    onehot[3] = 1.0;
    CHECK(weighted_cfd(a, b, onehot).value == doctest::Approx(cfd(a, b).per_frequency[3]));

    CHECK(weighted_cfd(a, a, onehot).value == 0.0);
}

TEST_CASE("loss_grad_points: hand derivative at B=1, d=1, k=1") {
    const double t = 1.3, g = 0.7;
    const auto freqs = single_freq(t);
    CfEmbedding target;
    target.k = 1;
    target.re = {0.2};
    target.im = {-0.4};
    target.n_source = 1;
    target.sanitized = true;
    target.freq_hash = freqs.hash;

    const std::vector<double> w = {1.0};
    const Matrix grad = loss_grad_points(target, Matrix(1, 1, g), freqs, w);
    const double c = std::cos(t * g), s = std::sin(t * g);
    const double expected = 2.0 * (c - 0.2) * (-s) * t + 2.0 * (s - (-0.4)) * c * t;
    CHECK(grad(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss_grad_points: zero at the embedding match, finite-difference agreement") {
    Rng rng(31);
    const auto freqs = FrequencyMatrix::from_matrix(gaussian_sample(rng, 5, 2, 0.0, 1.5));
    Matrix pts(3, 2);
    for (double& v : pts.flat()) v = rng.next_double();
    auto matched = embed(pts, freqs);
    matched.sanitized = true;
    const std::vector<double> ones(freqs.k, 1.0);
    const Matrix zero_grad = loss_grad_points(matched, pts, freqs, ones);
    for (double v : zero_grad.flat()) CHECK(std::abs(v) < 1e-12);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng r(seed + 100);
        const std::size_t B = 1 + r.next_u64() % 4;
        const std::size_t d = 1 + r.next_u64() % 3;
        const std::size_t k = 1 + r.next_u64() % 5;
        const auto fr = FrequencyMatrix::from_matrix(gaussian_sample(r, k, d, 0.0, 1.0));
        Matrix tdata(4, d);
        for (double& v : tdata.flat()) v = r.next_double();
        auto target = embed(tdata, fr);
        target.sanitized = true;
        std::vector<double> w(k);
        for (double& v : w) v = 0.2 + r.next_double();
        Matrix gp(B, d);
        for (double& v : gp.flat()) v = 2.0 * (r.next_double() - 0.5);

        const Matrix analytic = loss_grad_points(target, gp, fr, w);
        const auto loss_of = [&](const std::vector<double>& flat) {
            Matrix p(B, d);
            std::copy(flat.begin(), flat.end(), p.data());
            return weighted_cfd_and_point_grad(target, p, fr, w).loss.value;
        };
        const auto numeric = oracles::central_diff(loss_of, oracles::to_vector(gp), 1e-5);
        CHECK(oracles::max_rel_error(oracles::to_vector(analytic), numeric) < 1e-5);
    }
}

TEST_CASE("loss_grad_logstd: zero cases and finite-difference agreement") {
    Rng rng(57);
    const auto base = SamplingDistribution::isotropic(2, 1.0);
    const auto freqs = sample_frequencies(base, 16, rng);
    Matrix da(6, 2), db(6, 2);
    for (double& v : da.flat()) v = rng.next_double();
    for (double& v : db.flat()) v = rng.next_double();
    auto a = embed(da, freqs);
    a.sanitized = true;
    const auto b = embed(db, freqs);

    // a == b: every e_i = 0, so the gradient vanishes (any weights).
    auto a_raw = a;
    const auto self = loss_grad_logstd(a, a_raw, freqs, base, base, true);
    for (double v : self) CHECK(v == 0.0);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng r(seed + 500);
        const std::size_t d = 1 + r.next_u64() % 3;
        const std::size_t k = 2 + r.next_u64() % 12;
        const auto base_d = SamplingDistribution::isotropic(d, 1.0);
        Rng fr_rng = r.fork("freqs");
        const auto fr = sample_frequencies(base_d, k, fr_rng);
        Matrix ta(5, d), tb(5, d);
        for (double& v : ta.flat()) v = r.next_double();
        for (double& v : tb.flat()) v = r.next_double();
        auto target = embed(ta, fr);
        target.sanitized = true;
        const auto gen = embed(tb, fr);
        std::vector<double> logstd(d);
        for (double& v : logstd) v = 0.4 * (r.next_double() - 0.5);

        for (bool normalize : {false, true}) {
            const auto critic = SamplingDistribution::from_log_std(logstd);
            const auto analytic = loss_grad_logstd(target, gen, fr, critic, base_d, normalize);
            const auto loss_of = [&](const std::vector<double>& ls) {
                const auto c = SamplingDistribution::from_log_std(ls);
                const auto w = importance_weights(c, base_d, fr, normalize);
                return weighted_cfd(target, gen, w).value;
            };
            const auto numeric = oracles::central_diff(loss_of, logstd, 1e-5);
            CHECK(oracles::max_rel_error(analytic, numeric) < 1e-5);
        }
    }
}

TEST_CASE("loss_grad_logstd: constant errors with normalized weights give zero gradient") {
    // Fabricated embeddings whose per-frequency errors are all equal.
    const auto base = SamplingDistribution::isotropic(1, 1.0);
    Rng rng(71);
    const auto freqs = sample_frequencies(base, 8, rng);
    CfEmbedding a, b;
    a.k = b.k = freqs.k;
    a.freq_hash = b.freq_hash = freqs.hash;
    a.n_source = b.n_source = 1;
    a.re.assign(freqs.k, 0.5);
    a.im.assign(freqs.k, 0.0);
    b.re.assign(freqs.k, 0.1);
    b.im.assign(freqs.k, 0.0);
    a.sanitized = true;
    const auto critic = SamplingDistribution::isotropic(1, 0.8);
    const auto grad = loss_grad_logstd(a, b, freqs, critic, base, true);
    for (double v : grad) CHECK(std::abs(v) < 1e-12);
}
