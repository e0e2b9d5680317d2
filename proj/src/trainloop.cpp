#include "pearl/trainloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pearl/adam.hpp"
#include "pearl/error.hpp"

namespace pearl {

TrainConfig nonprivate_mode(TrainConfig config) {
    config.nonprivate = true;
    return config;
}

SanitizedArtifacts sanitize_dataset(const EncodedDataset& data, const Schema& schema,
                                    const TrainConfig& config, Rng& rng) {
    schema.validate();
    require(data.n >= 1 && data.features.rows() == data.n, ErrorKind::invalid_parameter,
            "sanitize_dataset: empty dataset");
    require(data.schema_hash == schema.hash(), ErrorKind::invalid_parameter,
            "sanitize_dataset: dataset was encoded with a different schema");
    require(config.k >= 1, ErrorKind::invalid_parameter, "sanitize_dataset: k must be >= 1");

    const bool want_hist = config.label_hist_enabled && schema.label_count() >= 2;

    // Pre-flight happens before any statistic is computed; a bad budget can
    // never cause a partial spend.
    double sigma_cf = 0.0, sigma_aux = 0.0;
    if (!config.nonprivate) {
        const BudgetPlan plan = split_budget(config.budget, want_hist ? 2 : 1);
        sigma_cf = plan.sigma_cf;
        sigma_aux = plan.sigma_aux;
    }

    SanitizedArtifacts art;
    art.schema = schema;
    art.config_echo = config;
    Rng dp_rng = rng.fork("dp-noise");

    // (1) auxiliary releases.
    AuxReleaser releaser(data.features);
    Rng aux_rng = dp_rng.fork("aux-pairwise-mean");
    art.aux.mean_pairwise_distance = releaser.release_mean_distance(sigma_aux, aux_rng, art.ledger);
    art.aux.sigma0 = derive_sigma0(art.aux.mean_pairwise_distance, data.features.cols());
    art.aux.ledger_event_ids.push_back(art.ledger.events().size() - 1);
    if (want_hist) {
        Rng hist_rng = dp_rng.fork("aux-label-hist");
        art.aux.label_probs = releaser.release_label_histogram(
            data.labels, schema.label_count(), sigma_aux, hist_rng, art.ledger);
        art.aux.ledger_event_ids.push_back(art.ledger.events().size() - 1);
    }
    art.sigma0.assign(data.features.cols(), art.aux.sigma0);

    // (2) one-shot frequency draw from the base distribution.
    const SamplingDistribution base =
        SamplingDistribution::isotropic(data.features.cols(), art.aux.sigma0);
    Rng freq_rng = rng.fork("freqs");
    art.freqs = sample_frequencies(base, config.k, freq_rng);

    // (3) embed and sanitize once.
    const CfEmbedding raw = embed(data.features, art.freqs);
    Rng cf_rng = dp_rng.fork("cf");
    art.embedding = sanitize(raw, sigma_cf, cf_rng);
    if (config.nonprivate) {
        art.ledger.charge_nonprivate(cf_sensitivity(config.k, data.n), "cf-release");
    } else {
        art.ledger.charge_gaussian(cf_sensitivity(config.k, data.n), art.embedding.noise_std,
                                   "cf-release");
    }
    return art;
}

namespace {

void clamp_log_std(Matrix& log_std, const std::vector<double>& sigma0, double lo_mult,
                   double hi_mult) {
    for (std::size_t j = 0; j < log_std.cols(); ++j) {
        const double lo = std::log(lo_mult * sigma0[j]);
        const double hi = std::log(hi_mult * sigma0[j]);
        log_std(0, j) = std::clamp(log_std(0, j), lo, hi);
    }
}

}  // namespace

std::pair<GeneratorNet, TrainReport> train_from_artifacts(const SanitizedArtifacts& artifacts,
                                                          const TrainConfig& config, Rng& rng,
                                                          const CheckpointFn& checkpoint) {
    require(artifacts.embedding.sanitized, ErrorKind::invalid_state,
            "train_from_artifacts: embedding has not been sanitized");
    require(artifacts.embedding.freq_hash == artifacts.freqs.hash, ErrorKind::invalid_artifact,
            "train_from_artifacts: embedding/frequency hash mismatch");
    const std::size_t d = artifacts.freqs.dim;
    require(artifacts.sigma0.size() == d, ErrorKind::invalid_artifact,
            "train_from_artifacts: sigma0 dimension mismatch");
    require(artifacts.schema.encoded_width() == d, ErrorKind::invalid_artifact,
            "train_from_artifacts: schema width does not match frequencies");
    require(config.batch >= 1 && config.n_gen >= 1 && config.latent_dim >= 1,
            ErrorKind::invalid_parameter, "train config: counts must be >= 1");
    require(config.lr_g > 0.0 && config.lr_c > 0.0, ErrorKind::invalid_parameter,
            "train config: learning rates must be > 0");
    require(config.clamp_lo > 0.0 && config.clamp_lo < config.clamp_hi,
            ErrorKind::invalid_parameter, "train config: clamp range must satisfy 0 < lo < hi");

    const auto t0 = std::chrono::steady_clock::now();
    const double eps_before = artifacts.ledger.to_eps_delta(config.budget.delta);

    Rng init_rng = rng.fork("init");
    GeneratorNet net = init_generator(artifacts.schema, config.latent_dim, config.hidden_dims,
                                      artifacts.schema.label_count(), init_rng);
    // Separate substreams so toggling the critic does not perturb the
    // generator's batch sequence.
    Rng latent_rng = rng.fork("latent");
    Rng critic_latent_rng = rng.fork("latent-critic");

    std::vector<Matrix*> params = trainable_params(net);
    std::vector<AdamState> opt;
    opt.reserve(params.size());
    for (Matrix* p : params) opt.push_back(AdamState::for_params(*p, config.lr_g));

    SamplingDistribution base;
    base.dim = d;
    base.log_std.resize(d);
    for (std::size_t j = 0; j < d; ++j) base.log_std[j] = std::log(artifacts.sigma0[j]);
    SamplingDistribution critic = base;
    Matrix critic_params(1, d);
    for (std::size_t j = 0; j < d; ++j) critic_params(0, j) = critic.log_std[j];
    AdamState critic_opt = AdamState::for_params(critic_params, config.lr_c);

    const std::vector<double>* label_probs =
        artifacts.aux.label_probs ? &*artifacts.aux.label_probs : nullptr;
    const std::vector<double> unit_weights(artifacts.freqs.k, 1.0);

    TrainReport report;
    report.ledger_epsilon_after_sanitize = eps_before;
    report.weighted_cfd_per_iter.reserve(config.iters);

    const std::size_t every =
        config.checkpoint_every > 0 ? config.checkpoint_every : std::max<std::size_t>(1, config.iters / 20);

    for (std::size_t iter = 0; iter < config.iters; ++iter) {
        std::vector<double> weights = config.critic_enabled
                                          ? importance_weights(critic, base, artifacts.freqs,
                                                               config.normalize_weights)
                                          : unit_weights;
        double last_loss = 0.0;
        for (std::size_t g = 0; g < config.n_gen; ++g) {
            const LatentBatch batch = sample_latent(config.batch, config.latent_dim,
                                                    net.label_count, label_probs, latent_rng);
            net.train_mode = true;
            const Matrix gen = forward(net, batch);
            const LossAndGrad lg =
                weighted_cfd_and_point_grad(artifacts.embedding, gen, artifacts.freqs, weights);
            last_loss = lg.loss.value;
            const ParamGrads grads = backward(net, lg.point_grad);
            for (std::size_t p = 0; p < params.size(); ++p)
                adam_step(opt[p], *params[p], grads.grads[p]);
        }

        if (config.critic_enabled) {
            const LatentBatch batch = sample_latent(config.batch, config.latent_dim,
                                                    net.label_count, label_probs,
                                                    critic_latent_rng);
            net.train_mode = true;
            const Matrix gen = forward(net, batch);
            const CfEmbedding gen_emb = embed(gen, artifacts.freqs);
            const std::vector<double> grad =
                loss_grad_logstd(artifacts.embedding, gen_emb, artifacts.freqs, critic, base,
                                 config.normalize_weights);
            // Ascent: Adam minimizes, so feed the negated gradient.
            Matrix neg(1, d);
            for (std::size_t j = 0; j < d; ++j) neg(0, j) = -grad[j];
            adam_step(critic_opt, critic_params, neg);
            clamp_log_std(critic_params, artifacts.sigma0, config.clamp_lo, config.clamp_hi);
            for (std::size_t j = 0; j < d; ++j) critic.log_std[j] = critic_params(0, j);
            last_loss = weighted_cfd(artifacts.embedding, gen_emb, weights).value;
        }

        report.weighted_cfd_per_iter.push_back(last_loss);

        // Post-processing assertion: training must never move the ledger.
        const double eps_now = artifacts.ledger.to_eps_delta(config.budget.delta);
        require(eps_now == eps_before, ErrorKind::invalid_state,
                "privacy ledger changed during training");

        if (checkpoint && ((iter + 1) % every == 0 || iter + 1 == config.iters))
            checkpoint(iter + 1, net);
    }

    report.final_log_std.assign(critic.log_std.begin(), critic.log_std.end());
    report.ledger_epsilon_after_training = artifacts.ledger.to_eps_delta(config.budget.delta);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(net), std::move(report)};
}

std::pair<GeneratorNet, TrainReport> run(const EncodedDataset& data, const Schema& schema,
                                         const TrainConfig& config, Rng& rng) {
    const SanitizedArtifacts artifacts = sanitize_dataset(data, schema, config, rng);
    // From here on the raw data is out of scope for training.
    Rng train_rng = rng.fork("train");
    return train_from_artifacts(artifacts, config, train_rng);
}

Matrix generate_encoded(GeneratorNet& net, std::size_t count, Rng& rng,
                        const std::vector<double>* label_probs) {
    Matrix out(count, net.schema.encoded_width());
    if (count == 0) return out;
    net.train_mode = false;
    const LatentBatch batch =
        sample_latent(count, net.latent_dim, net.label_count, label_probs, rng);
    const Matrix gen = forward(net, batch);
    return gen;
}

std::vector<DecodedRecord> generate(GeneratorNet& net, std::size_t count, Rng& rng,
                                    const std::vector<double>* label_probs) {
    std::vector<DecodedRecord> records;
    records.reserve(count);
    if (count == 0) return records;
    const Matrix gen = generate_encoded(net, count, rng, label_probs);
    for (std::size_t r = 0; r < count; ++r) records.push_back(decode(gen.row(r), net.schema));
    return records;
}

}  // namespace pearl
