#pragma once

#include <filesystem>
#include <string>

#include "pearl/evalsuite.hpp"
#include "pearl/gennet.hpp"
#include "pearl/trainloop.hpp"

namespace pearl {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kArtifactVersion = 1;

// Sanitized-embedding document:
// {version, k, d, n_source, freq_hash, freqs, sigma0, noise_std,
//  epsilon_charged, delta, re, im}
void save_embedding(const SanitizedArtifacts& artifacts, const std::filesystem::path& path);

// Ledger document: {orders, costs, events, converted:{delta, epsilon}}.
// A non-private ledger serializes epsilon as the string "inf".
void save_ledger(const RdpLedger& ledger, double delta, const std::filesystem::path& path);
RdpLedger load_ledger(const std::filesystem::path& path);

// Auxiliary release document:
// {mean_pairwise_distance, sigma0, label_probs?, ledger_event_ids}
void save_aux(const AuxRelease& aux, const std::filesystem::path& path);

// Loads embedding + aux + ledger + schema back into the training-side view.
SanitizedArtifacts load_artifacts(const std::filesystem::path& embedding_path,
                                  const std::filesystem::path& aux_path,
                                  const std::filesystem::path& ledger_path,
                                  const std::filesystem::path& schema_path);

// Model checkpoint: {version, schema_hash, latent_dim, label_count, layers,
// bn_running_stats, train_config_echo}
void save_checkpoint(const GeneratorNet& net, const TrainConfig& config,
                     const std::filesystem::path& path);
GeneratorNet load_checkpoint(const std::filesystem::path& path, const Schema& schema,
                             TrainConfig* config_out = nullptr);

void save_report(const TrainReport& report, const TrainConfig& config, const RdpLedger& ledger,
                 const std::filesystem::path& path);

void save_eval_report(const EvalReport& report, const std::string& config_echo,
                      const std::filesystem::path& path);

void save_two_sample_result(const TwoSampleResult& result, const std::filesystem::path& json_path,
                            const std::filesystem::path& csv_path);

// Formats a converted epsilon, using the "inf" sentinel for non-private runs.
std::string epsilon_string(const RdpLedger& ledger, double delta);

}  // namespace pearl
