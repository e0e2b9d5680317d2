#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pearl/error.hpp"
#include "pearl/evalsuite.hpp"

using namespace pearl;

namespace {

Schema grid_schema() {
    Schema s;
    s.columns = {
        {"u", ColumnKind::continuous, 0.0, 1.0, {}},
        {"v", ColumnKind::continuous, 0.0, 1.0, {}},
        {"c", ColumnKind::categorical, 0.0, 1.0, {"a", "b", "c"}},
    };
    return s;
}

// Encoded sample matching grid_schema: two uniforms + a one-hot block.
Matrix encoded_sample(std::size_t n, Rng& rng) {
    Matrix m(n, 5);
    for (std::size_t r = 0; r < n; ++r) {
        m(r, 0) = rng.next_double();
        m(r, 1) = rng.next_double();
        m(r, 2 + rng.next_u64() % 3) = 1.0;
    }
    return m;
}

}  // namespace

TEST_CASE("mmd: hand value for point masses at 0 and 1") {
    // All real mass at 0, all synthetic mass at 1, h = 1:
    // MMD^2 = 2 - 2 exp(-1/2).
    Matrix a(5, 1, 0.0), b(5, 1, 1.0);
    const double expected = 2.0 - 2.0 * std::exp(-0.5);
    CHECK(mmd(a, b, 1.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(mmd_biased(a, b, 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mmd: identical samples and permutation-scale null") {
    Rng rng(3);
    Matrix x = gaussian_sample(rng, 200, 2, 0.0, 1.0);
    CHECK(std::abs(mmd_biased(x, x)) <= 1e-12);

    // Unbiased statistic on two independent draws of the same law sits within
    // a few null standard errors of zero; estimate the scale by permutation.
    Matrix y = gaussian_sample(rng, 200, 2, 0.0, 1.0);
    const double h = mmd_auto_bandwidth(x, y);
    const double observed = mmd(x, y, h);
    // Pool and re-split repeatedly.
    Matrix pooled(400, 2);
    for (std::size_t i = 0; i < 200; ++i)
        for (std::size_t c = 0; c < 2; ++c) {
            pooled(i, c) = x(i, c);
            pooled(200 + i, c) = y(i, c);
        }
    std::vector<double> null_vals;
    std::vector<std::size_t> idx(400);
    for (std::size_t i = 0; i < 400; ++i) idx[i] = i;
    Rng perm(9);
    for (int p = 0; p < 60; ++p) {
        for (std::size_t i = 400; i-- > 1;) {
            const std::size_t j = perm.next_u64() % (i + 1);
            std::swap(idx[i], idx[j]);
        }
        Matrix pa(200, 2), pb(200, 2);
        for (std::size_t i = 0; i < 200; ++i)
            for (std::size_t c = 0; c < 2; ++c) {
                pa(i, c) = pooled(idx[i], c);
                pb(i, c) = pooled(idx[200 + i], c);
            }
        null_vals.push_back(mmd(pa, pb, h));
    }
    double mean = 0.0, var = 0.0;
    for (double v : null_vals) mean += v;
    mean /= null_vals.size();
    for (double v : null_vals) var += (v - mean) * (v - mean);
    var /= null_vals.size();
    CHECK(std::abs(observed) <= 3.0 * std::sqrt(var) + 1e-9);
}

TEST_CASE("mmd: degenerate bandwidth falls back to 1") {
    Matrix a(3, 1, 0.5), b(3, 1, 0.5);
    bool degenerate = false;
    const double h = mmd_auto_bandwidth(a, b, &degenerate);
    CHECK(degenerate);
    CHECK(h == 1.0);
    CHECK_THROWS_AS(mmd(Matrix(1, 1, 0.0), Matrix(3, 1, 0.0)), Error);
}

TEST_CASE("range queries: identity, bounded sensitivity to one flipped record") {
    const Schema schema = grid_schema();
    Rng rng(5);
    const Matrix real = encoded_sample(10, rng);

    Rng q1(7);
    CHECK(range_query_error(real, real, schema, 200, 3, q1) == 0.0);

    // Flip one record's category: each query can move by at most 1/10.
    Matrix flipped = real;
    for (std::size_t j = 0; j < 3; ++j) flipped(0, 2 + j) = 0.0;
    flipped(0, 2) = 1.0;
    Rng q2(7);
    const double err = range_query_error(real, flipped, schema, 200, 3, q2);
    CHECK(err <= 0.1 + 1e-12);

    CHECK_THROWS_AS(range_query_error(real, real, schema, 10, 4, q2), Error);
}

TEST_CASE("range queries: all-identical data gives zero error for any query") {
    const Schema schema = grid_schema();
    Matrix same(20, 5);
    for (std::size_t r = 0; r < 20; ++r) {
        same(r, 0) = 0.4;
        same(r, 1) = 0.6;
        same(r, 2) = 1.0;
    }
    Rng rng(11);
    CHECK(range_query_error(same, same, schema, 100, 3, rng) == 0.0);
}

TEST_CASE("marginals: identity, disjoint supports, noise monotonicity") {
    const Schema schema = grid_schema();
    Rng rng(13);
    const Matrix real = encoded_sample(400, rng);
    CHECK(marginal_error(real, real, schema) == 0.0);

    // Disjoint supports on every column: each pair's L1 hits the maximum 2.
    Matrix left(50, 5), right(50, 5);
    for (std::size_t r = 0; r < 50; ++r) {
        left(r, 0) = 0.05;
        left(r, 1) = 0.05;
        left(r, 2) = 1.0;
        right(r, 0) = 0.95;
        right(r, 1) = 0.95;
        right(r, 4) = 1.0;
    }
    CHECK(marginal_error(left, right, schema) == doctest::Approx(2.0));

    // Growing coordinate noise never lowers the mean marginal error (trend
    // over 5 seeds).
    double prev = 0.0;
    for (const double amp : {0.0, 0.1, 0.3}) {
        double mean_err = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng nrng(seed + 100);
            Matrix noisy = real;
            for (std::size_t r = 0; r < noisy.rows(); ++r)
                for (std::size_t c = 0; c < 2; ++c) {
                    double v = noisy(r, c) + amp * (nrng.next_double() - 0.5);
                    noisy(r, c) = std::clamp(v, 0.0, 1.0);
                }
            mean_err += marginal_error(real, noisy, schema);
        }
        mean_err /= 5.0;
        CHECK(mean_err >= prev - 1e-12);
        prev = mean_err;
    }
}

TEST_CASE("metrics are record-order invariant") {
    const Schema schema = grid_schema();
    Rng rng(17);
    const Matrix synth = encoded_sample(60, rng);
    Matrix real = encoded_sample(60, rng);
    Matrix shuffled(60, 5);
    std::vector<std::size_t> order(60);
    for (std::size_t i = 0; i < 60; ++i) order[i] = (i * 37) % 60;  // permutation
    for (std::size_t i = 0; i < 60; ++i)
        for (std::size_t c = 0; c < 5; ++c) shuffled(i, c) = real(order[i], c);

    CHECK(marginal_error(real, synth, schema) ==
          doctest::Approx(marginal_error(shuffled, synth, schema)).epsilon(1e-12));
    Rng qa(3), qb(3);
    CHECK(range_query_error(real, synth, schema, 50, 3, qa) ==
          doctest::Approx(range_query_error(shuffled, synth, schema, 50, 3, qb)).epsilon(1e-12));
}

TEST_CASE("two-sample demo: d=1 is easy, null is calibrated") {
    Rng rng(19);
    // d=1 with a unit shift at n=1000: every variant rejects nearly always.
    const TwoSampleResult easy = two_sample_demo({1}, 500, 30, 0.05, 100, rng);
    CHECK(easy.rate_unoptimized[0] >= 0.9);
    CHECK(easy.rate_normal[0] >= 0.9);
    CHECK(easy.rate_optimized[0] >= 0.9);

    // Zero shift: rejection stays near the nominal level (3 sigma of 30
    // trials is wide, ~0.17).
    Rng rng2(23);
    const TwoSampleResult null_case = two_sample_demo({2}, 300, 30, 0.05, 100, rng2, 0.0);
    const double band = 3.0 * std::sqrt(0.05 * 0.95 / 30.0) + 1e-9;
    CHECK(null_case.rate_unoptimized[0] <= 0.05 + band);
    CHECK(null_case.rate_normal[0] <= 0.05 + band);
    CHECK(null_case.rate_optimized[0] <= 0.05 + band);
}
