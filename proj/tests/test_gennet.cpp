#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pearl/error.hpp"
#include "pearl/gennet.hpp"

using namespace pearl;

namespace {

Schema mixed_schema() {
    Schema s;
    s.columns = {
        {"x", ColumnKind::continuous, 0.0, 1.0, {}},
        {"cat", ColumnKind::categorical, 0.0, 1.0, {"p", "q", "r"}},
        {"y", ColumnKind::continuous, 10.0, 30.0, {}},
        {"cls", ColumnKind::categorical, 0.0, 1.0, {"neg", "pos"}},
    };
    s.label_column = "cls";
    return s;
}

GeneratorNet tiny_net(std::size_t latent = 3, std::vector<std::size_t> hidden = {8, 8}) {
    Rng rng(101);
    return init_generator(mixed_schema(), latent, hidden, mixed_schema().label_count(), rng);
}

}  // namespace

TEST_CASE("init: shapes, determinism, rejects empty hidden dims") {
    GeneratorNet net = tiny_net();
    // Head width: 1 (x) + 3 (cat) + 1 (y); label block excluded.
    CHECK(net.head_width() == 5);
    CHECK(net.schema.encoded_width() == 7);
    CHECK(net.input_width() == 3 + 2);
    REQUIRE(net.fcs.size() == 3);
    CHECK(net.fcs[0].W.rows() == 5);
    CHECK(net.fcs[0].W.cols() == 8);
    CHECK(net.fcs[2].W.cols() == 5);
    for (const auto& bn : net.bns) {
        for (double v : bn.gamma.flat()) CHECK(v == 1.0);
        for (double v : bn.running_var.flat()) CHECK(v == 1.0);
    }

    GeneratorNet net2 = tiny_net();
    for (std::size_t l = 0; l < net.fcs.size(); ++l)
        for (std::size_t i = 0; i < net.fcs[l].W.size(); ++i)
            CHECK(net.fcs[l].W.data()[i] == net2.fcs[l].W.data()[i]);

    Rng rng(1);
    CHECK_THROWS_AS(init_generator(mixed_schema(), 3, {}, 2, rng), Error);
    CHECK_THROWS_AS(init_generator(mixed_schema(), 3, std::vector<std::size_t>{8}, 5, rng), Error);
}

TEST_CASE("forward: all-zero weights in eval mode hit the neutral outputs") {
    GeneratorNet net = tiny_net();
    for (auto& fc : net.fcs) {
        fc.W.fill(0.0);
        fc.b.fill(0.0);
    }
    net.train_mode = false;
    LatentBatch batch;
    batch.z = Matrix(2, 3, 0.7);
    batch.labels = {1, 0};
    const Matrix out = forward(net, batch);
    // Continuous heads: tanh(0) mapped to 0.5. Categorical: uniform 1/3.
    CHECK(out(0, 0) == doctest::Approx(0.5));
    CHECK(out(0, 4) == doctest::Approx(0.5));
    for (std::size_t j = 0; j < 3; ++j) CHECK(out(0, 1 + j) == doctest::Approx(1.0 / 3.0));
    // Label block equals the input one-hot.
    CHECK(out(0, 5 + 1) == 1.0);
    CHECK(out(1, 5 + 0) == 1.0);
}

TEST_CASE("forward: eval determinism, softmax normalization, output ranges") {
    GeneratorNet net = tiny_net();
    net.train_mode = false;
    Rng rng(5);
    const LatentBatch batch = sample_latent(6, 3, 2, nullptr, rng);
    const Matrix a = forward(net, batch);
    const Matrix b = forward(net, batch);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == b.data()[i]);

    for (std::size_t r = 0; r < a.rows(); ++r) {
        double ssum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) ssum += a(r, 1 + j);
        CHECK(ssum == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t c = 0; c < a.cols(); ++c) {
            CHECK(a(r, c) >= 0.0);
            CHECK(a(r, c) <= 1.0);
        }
    }

    // Identical (z, label) rows give identical outputs.
    LatentBatch same;
    same.z = Matrix(3, 3, 0.25);
    same.labels = {1, 1, 1};
    const Matrix rows = forward(net, same);
    for (std::size_t c = 0; c < rows.cols(); ++c) {
        CHECK(rows(0, c) == rows(1, c));
        CHECK(rows(1, c) == rows(2, c));
    }
}

TEST_CASE("backward: zero upstream gives zero gradients; invalid-state without forward") {
    GeneratorNet net = tiny_net();
    CHECK_THROWS_AS(backward(net, Matrix(2, 7)), Error);

    Rng rng(9);
    const LatentBatch batch = sample_latent(4, 3, 2, nullptr, rng);
    net.train_mode = true;
    const Matrix out = forward(net, batch);
    const ParamGrads grads = backward(net, Matrix(out.rows(), out.cols(), 0.0));
    for (const Matrix& g : grads.grads)
        for (double v : g.flat()) CHECK(v == 0.0);
}

TEST_CASE("backward: finite-difference agreement on tiny nets") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed + 7);
        GeneratorNet net = tiny_net(3, {6});
        // Perturb parameters away from the symmetric init.
        for (Matrix* p : trainable_params(net))
            for (double& v : p->flat()) v += 0.1 * (rng.next_double() - 0.5);

        const std::size_t B = 4;
        LatentBatch batch = sample_latent(B, 3, 2, nullptr, rng);
        net.train_mode = true;
        const Matrix out = forward(net, batch);
        Matrix upstream(out.rows(), out.cols());
        for (double& v : upstream.flat()) v = rng.next_double() - 0.5;

        const ParamGrads analytic = backward(net, upstream);
        const auto params = trainable_params(net);
        REQUIRE(analytic.grads.size() == params.size());

        // Loss = sum(upstream .* forward(theta)); each probe runs on a fresh
        // copy of the net so running-stat updates do not leak between probes.
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            const auto loss_of = [&](const std::vector<double>& flat) {
                GeneratorNet probe = net;
                std::vector<Matrix*> probe_params = trainable_params(probe);
                std::copy(flat.begin(), flat.end(), probe_params[pi]->data());
                probe.train_mode = true;
                const Matrix o = forward(probe, batch);
                double loss = 0.0;
                for (std::size_t i = 0; i < o.size(); ++i)
                    loss += upstream.data()[i] * o.data()[i];
                return loss;
            };
            const auto numeric = oracles::central_diff(loss_of, oracles::to_vector(*params[pi]), 1e-5);
            CHECK(oracles::max_rel_error(oracles::to_vector(analytic.grads[pi]), numeric) < 1e-4);
        }
    }
}

TEST_CASE("backward: BN mean-path gradient sums to zero over the batch") {
    // With gamma = 1 and the loss acting purely through BN, shifting every
    // batch entry of one feature equally must not change the loss; the
    // per-feature input gradient therefore sums to ~0 across the batch. Probe
    // it through the first linear layer's bias gradient, which is exactly
    // that column sum.
    GeneratorNet net = tiny_net(3, {6});
    Rng rng(3);
    LatentBatch batch = sample_latent(5, 3, 2, nullptr, rng);
    net.train_mode = true;
    const Matrix out = forward(net, batch);
    Matrix upstream(out.rows(), out.cols());
    for (double& v : upstream.flat()) v = rng.next_double() - 0.5;
    const ParamGrads grads = backward(net, upstream);
    // grads[1] is fc0's bias gradient: the batch-summed gradient entering BN.
    for (double v : grads.grads[1].flat()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("BN running stats converge on a fixed input distribution") {
    GeneratorNet net = tiny_net();
    LatentBatch batch;
    batch.z = Matrix(8, 3);
    Rng rng(21);
    for (double& v : batch.z.flat()) v = rng.next_gaussian();
    batch.labels = {0, 1, 0, 1, 0, 1, 0, 1};

    // Repeated train-mode passes on the same batch: the running-stat
    // increments contract by exactly the momentum factor each step, and the
    // eval-mode output drift dies out with them.
    LatentBatch probe;
    probe.z = Matrix(2, 3, 0.4);
    probe.labels = {0, 1};
    std::vector<double> mean_gap;
    double first_drift = -1.0, last_drift = -1.0;
    Matrix prev_out;
    Matrix prev_mean = net.bns[0].running_mean;
    for (int step = 0; step < 90; ++step) {
        net.train_mode = true;
        forward(net, batch);
        // Geometric contraction of the running mean increments.
        double inc = 0.0;
        for (std::size_t i = 0; i < prev_mean.size(); ++i)
            inc = std::max(inc, std::abs(net.bns[0].running_mean.data()[i] - prev_mean.data()[i]));
        mean_gap.push_back(inc);
        prev_mean = net.bns[0].running_mean;

        net.train_mode = false;
        const Matrix out = forward(net, probe);
        if (step > 0) {
            double drift = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i)
                drift = std::max(drift, std::abs(out.data()[i] - prev_out.data()[i]));
            if (first_drift < 0.0) first_drift = drift;
            last_drift = drift;
        }
        prev_out = out;
    }
    // Increment contraction at the exact momentum rate (same batch each step).
    for (std::size_t s = 1; s < mean_gap.size(); ++s)
        CHECK(mean_gap[s] <= 0.9 * mean_gap[s - 1] + 1e-15);
    CHECK(last_drift < 1e-3);
    CHECK(last_drift < first_drift);
}

TEST_CASE("decode: tie-break, affine inverse, argmax scale invariance") {
    const Schema s = mixed_schema();
    // Uniform categorical block decodes to the first category.
    std::vector<double> row = {0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5, 0.5, 0.5};
    const DecodedRecord rec = decode(row, s);
    CHECK(rec[1] == "p");
    CHECK(rec[2] == "20");  // 0.5 over [10, 30]
    CHECK(rec[3] == "neg");

    // Scaling softmax logits by a positive factor cannot change the argmax:
    // probe with two monotone-related blocks.
    std::vector<double> a = {0.5, 0.2, 0.5, 0.3, 0.5, 0.1, 0.9};
    std::vector<double> b = {0.5, 0.02, 0.05, 0.03, 0.5, 0.1, 0.9};
    CHECK(decode(a, s)[1] == decode(b, s)[1]);
}

TEST_CASE("sample_latent: label distribution follows the supplied probabilities") {
    Rng rng(33);
    const std::vector<double> probs = {0.2, 0.8};
    const LatentBatch batch = sample_latent(20000, 2, 2, &probs, rng);
    double frac1 = 0.0;
    for (std::size_t lab : batch.labels) frac1 += lab == 1 ? 1.0 : 0.0;
    frac1 /= static_cast<double>(batch.labels.size());
    // 3 sigma of a Bernoulli(0.8) mean over 20000 draws.
    CHECK(std::abs(frac1 - 0.8) < 3.0 * std::sqrt(0.8 * 0.2 / 20000.0));
}
