#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pearl/auxinfo.hpp"
#include "pearl/cfembed.hpp"
#include "pearl/dataio.hpp"
#include "pearl/freqdist.hpp"
#include "pearl/gennet.hpp"
#include "pearl/privacy.hpp"

namespace pearl {

struct TrainConfig {
    std::size_t k = 1000;        // frequencies
    std::size_t iters = 8000;    // T
    std::size_t n_gen = 5;       // generator steps per critic step
    std::size_t batch = 1100;
    double lr_g = 0.01;
    double lr_c = 0.01;
    bool normalize_weights = true;
    double clamp_lo = 0.1;       // critic std bounds, as multiples of sigma0
    double clamp_hi = 10.0;
    std::uint64_t seed = 0;
    DpBudget budget;
    bool nonprivate = false;
    bool critic_enabled = true;
    bool label_hist_enabled = false;
    std::size_t latent_dim = 16;
    std::vector<std::size_t> hidden_dims = {256, 256};
    std::size_t checkpoint_every = 0;  // 0 = max(1, iters/20)
};

// Everything the training side is allowed to see. Produced once by the data
// holder; training never touches the raw records again.
struct SanitizedArtifacts {
    FrequencyMatrix freqs;
    std::vector<double> sigma0;  // per encoded dimension (isotropic value)
    CfEmbedding embedding;       // sanitized
    AuxRelease aux;
    RdpLedger ledger;
    Schema schema;
    TrainConfig config_echo;
};

struct TrainReport {
    std::vector<double> weighted_cfd_per_iter;
    std::vector<double> final_log_std;
    double ledger_epsilon_after_sanitize = 0.0;
    double ledger_epsilon_after_training = 0.0;
    double wall_seconds = 0.0;
};

// Steps (1)-(3): auxiliary releases fixing sigma0, the one-shot frequency
// draw, and the sanitized embedding, with the pre-flight budget check before
// any data access.
SanitizedArtifacts sanitize_dataset(const EncodedDataset& data, const Schema& schema,
                                    const TrainConfig& config, Rng& rng);

// Step (4): alternating generator descent / critic ascent against the
// sanitized embedding. Charges nothing; the ledger inside the artifacts is
// asserted unchanged every logged iteration.
using CheckpointFn = std::function<void(std::size_t iter, const GeneratorNet& net)>;
std::pair<GeneratorNet, TrainReport> train_from_artifacts(const SanitizedArtifacts& artifacts,
                                                          const TrainConfig& config, Rng& rng,
                                                          const CheckpointFn& checkpoint = {});

// Full pipeline. The raw data is readable only inside sanitize_dataset.
std::pair<GeneratorNet, TrainReport> run(const EncodedDataset& data, const Schema& schema,
                                         const TrainConfig& config, Rng& rng);

// m generated feature-space rows (eval mode).
Matrix generate_encoded(GeneratorNet& net, std::size_t count, Rng& rng,
                        const std::vector<double>* label_probs);

// m decoded records.
std::vector<DecodedRecord> generate(GeneratorNet& net, std::size_t count, Rng& rng,
                                    const std::vector<double>* label_probs);

// Same pipeline with every noise scale at zero and an infinite-epsilon ledger.
TrainConfig nonprivate_mode(TrainConfig config);

}  // namespace pearl
