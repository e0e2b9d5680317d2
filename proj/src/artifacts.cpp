#include "pearl/artifacts.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pearl/error.hpp"

namespace pearl {

using nlohmann::json;

namespace {

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io_error, "cannot write " + path.string());
    out << j.dump(2) << "\n";
    require(out.good(), ErrorKind::io_error, "write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io_error, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_artifact, path.string() + ": JSON parse error: " + e.what());
    }
    return j;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
    require(j.is_array() && !j.empty() && j[0].is_array(), ErrorKind::invalid_artifact,
            std::string(what) + ": expected a 2-d array");
    Matrix m(j.size(), j[0].size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        require(j[r].size() == m.cols(), ErrorKind::invalid_artifact,
                std::string(what) + ": ragged rows");
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json config_to_json(const TrainConfig& c) {
    json j;
    j["k"] = c.k;
    j["iters"] = c.iters;
    j["n_gen"] = c.n_gen;
    j["batch"] = c.batch;
    j["lr_g"] = c.lr_g;
    j["lr_c"] = c.lr_c;
    j["normalize_weights"] = c.normalize_weights;
    j["clamp_lo"] = c.clamp_lo;
    j["clamp_hi"] = c.clamp_hi;
    j["seed"] = c.seed;
    j["epsilon"] = c.budget.epsilon;
    j["delta"] = c.budget.delta;
    j["split"] = c.budget.split;
    j["nonprivate"] = c.nonprivate;
    j["critic_enabled"] = c.critic_enabled;
    j["label_hist_enabled"] = c.label_hist_enabled;
    j["latent_dim"] = c.latent_dim;
    j["hidden_dims"] = c.hidden_dims;
    j["checkpoint_every"] = c.checkpoint_every;
    return j;
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.k = j.value("k", c.k);
    c.iters = j.value("iters", c.iters);
    c.n_gen = j.value("n_gen", c.n_gen);
    c.batch = j.value("batch", c.batch);
    c.lr_g = j.value("lr_g", c.lr_g);
    c.lr_c = j.value("lr_c", c.lr_c);
    c.normalize_weights = j.value("normalize_weights", c.normalize_weights);
    c.clamp_lo = j.value("clamp_lo", c.clamp_lo);
    c.clamp_hi = j.value("clamp_hi", c.clamp_hi);
    c.seed = j.value("seed", c.seed);
    c.budget.epsilon = j.value("epsilon", c.budget.epsilon);
    c.budget.delta = j.value("delta", c.budget.delta);
    c.budget.split = j.value("split", c.budget.split);
    c.nonprivate = j.value("nonprivate", c.nonprivate);
    c.critic_enabled = j.value("critic_enabled", c.critic_enabled);
    c.label_hist_enabled = j.value("label_hist_enabled", c.label_hist_enabled);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    if (j.contains("hidden_dims")) c.hidden_dims = j["hidden_dims"].get<std::vector<std::size_t>>();
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    return c;
}

}  // namespace

std::string epsilon_string(const RdpLedger& ledger, double delta) {
    if (ledger.unbounded()) return "inf";
    bool warned = false;
    return format_double(ledger.to_eps_delta(delta, &warned));
}

void save_embedding(const SanitizedArtifacts& artifacts, const std::filesystem::path& path) {
    const CfEmbedding& e = artifacts.embedding;
    require(e.sanitized, ErrorKind::invalid_state, "refusing to persist an unsanitized embedding");
    json j;
    j["version"] = kArtifactVersion;
    j["tool_version"] = kToolVersion;
    j["k"] = e.k;
    j["d"] = artifacts.freqs.dim;
    j["n_source"] = e.n_source;
    j["freq_hash"] = artifacts.freqs.hash;
    j["freqs"] = matrix_to_json(artifacts.freqs.freqs);
    j["sigma0"] = artifacts.sigma0;
    j["noise_std"] = e.noise_std;
    j["epsilon_charged"] = epsilon_string(artifacts.ledger, artifacts.config_echo.budget.delta);
    j["delta"] = artifacts.config_echo.budget.delta;
    j["re"] = e.re;
    j["im"] = e.im;
    write_json(j, path);
}

void save_ledger(const RdpLedger& ledger, double delta, const std::filesystem::path& path) {
    json j;
    j["orders"] = ledger.orders();
    j["costs"] = ledger.costs();
    json events = json::array();
    for (const LedgerEvent& e : ledger.events()) {
        json je;
        je["label"] = e.label;
        je["sensitivity"] = e.sensitivity;
        je["noise_std"] = e.noise_std;
        events.push_back(std::move(je));
    }
    j["events"] = std::move(events);
    json conv;
    conv["delta"] = delta;
    if (ledger.unbounded()) {
        conv["epsilon"] = "inf";
    } else {
        conv["epsilon"] = ledger.to_eps_delta(delta);
    }
    j["converted"] = std::move(conv);
    write_json(j, path);
}

RdpLedger load_ledger(const std::filesystem::path& path) {
    const json j = read_json(path);
    try {
        std::vector<double> orders = j.at("orders").get<std::vector<double>>();
        std::vector<double> costs = j.at("costs").get<std::vector<double>>();
        std::vector<LedgerEvent> events;
        for (const json& je : j.at("events")) {
            LedgerEvent e;
            e.label = je.at("label").get<std::string>();
            e.sensitivity = je.at("sensitivity").get<double>();
            e.noise_std = je.at("noise_std").get<double>();
            events.push_back(std::move(e));
        }
        return RdpLedger::from_parts(std::move(orders), std::move(costs), std::move(events));
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_artifact, path.string() + ": malformed ledger: " + e.what());
    }
}

void save_aux(const AuxRelease& aux, const std::filesystem::path& path) {
    json j;
    j["mean_pairwise_distance"] = aux.mean_pairwise_distance;
    j["sigma0"] = aux.sigma0;
    if (aux.label_probs) j["label_probs"] = *aux.label_probs;
    j["ledger_event_ids"] = aux.ledger_event_ids;
    write_json(j, path);
}

SanitizedArtifacts load_artifacts(const std::filesystem::path& embedding_path,
                                  const std::filesystem::path& aux_path,
                                  const std::filesystem::path& ledger_path,
                                  const std::filesystem::path& schema_path) {
    SanitizedArtifacts art;
    art.schema = load_schema(schema_path);

    const json je = read_json(embedding_path);
    try {
        art.freqs = FrequencyMatrix::from_matrix(matrix_from_json(je.at("freqs"), "freqs"));
        require(art.freqs.hash == je.at("freq_hash").get<std::uint64_t>(),
                ErrorKind::invalid_artifact,
                "embedding artifact: stored freq_hash does not match the frequency data");
        CfEmbedding& e = art.embedding;
        e.k = je.at("k").get<std::size_t>();
        e.re = je.at("re").get<std::vector<double>>();
        e.im = je.at("im").get<std::vector<double>>();
        e.n_source = je.at("n_source").get<std::size_t>();
        e.noise_std = je.at("noise_std").get<double>();
        e.sanitized = true;
        e.freq_hash = art.freqs.hash;
        require(e.k == art.freqs.k && e.re.size() == e.k && e.im.size() == e.k,
                ErrorKind::invalid_artifact, "embedding artifact: inconsistent sizes");
        art.sigma0 = je.at("sigma0").get<std::vector<double>>();
        art.config_echo.budget.delta = je.at("delta").get<double>();
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_artifact,
             embedding_path.string() + ": malformed embedding: " + e.what());
    }

    const json ja = read_json(aux_path);
    try {
        art.aux.mean_pairwise_distance = ja.at("mean_pairwise_distance").get<double>();
        art.aux.sigma0 = ja.at("sigma0").get<double>();
        if (ja.contains("label_probs"))
            art.aux.label_probs = ja["label_probs"].get<std::vector<double>>();
        art.aux.ledger_event_ids = ja.at("ledger_event_ids").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_artifact, aux_path.string() + ": malformed aux release: " + e.what());
    }

    art.ledger = load_ledger(ledger_path);
    return art;
}

void save_checkpoint(const GeneratorNet& net, const TrainConfig& config,
                     const std::filesystem::path& path) {
    json j;
    j["version"] = kArtifactVersion;
    j["tool_version"] = kToolVersion;
    j["schema_hash"] = net.schema.hash();
    j["latent_dim"] = net.latent_dim;
    j["label_count"] = net.label_count;
    json layers = json::array();
    for (std::size_t l = 0; l < net.fcs.size(); ++l) {
        json jl;
        jl["type"] = "linear";
        jl["in"] = net.fcs[l].W.rows();
        jl["out"] = net.fcs[l].W.cols();
        jl["W"] = std::vector<double>(net.fcs[l].W.flat().begin(), net.fcs[l].W.flat().end());
        jl["b"] = std::vector<double>(net.fcs[l].b.flat().begin(), net.fcs[l].b.flat().end());
        layers.push_back(std::move(jl));
        if (l < net.bns.size()) {
            const BatchNormLayer& bn = net.bns[l];
            json jb;
            jb["type"] = "batchnorm";
            jb["width"] = bn.gamma.cols();
            jb["gamma"] = std::vector<double>(bn.gamma.flat().begin(), bn.gamma.flat().end());
            jb["beta"] = std::vector<double>(bn.beta.flat().begin(), bn.beta.flat().end());
            layers.push_back(std::move(jb));
        }
    }
    j["layers"] = std::move(layers);
    json stats = json::array();
    for (const BatchNormLayer& bn : net.bns) {
        json js;
        js["mean"] = std::vector<double>(bn.running_mean.flat().begin(),
                                         bn.running_mean.flat().end());
        js["var"] =
            std::vector<double>(bn.running_var.flat().begin(), bn.running_var.flat().end());
        stats.push_back(std::move(js));
    }
    j["bn_running_stats"] = std::move(stats);
    j["train_config_echo"] = config_to_json(config);
    write_json(j, path);
}

GeneratorNet load_checkpoint(const std::filesystem::path& path, const Schema& schema,
                             TrainConfig* config_out) {
    const json j = read_json(path);
    GeneratorNet net;
    try {
        require(j.at("schema_hash").get<std::uint64_t>() == schema.hash(),
                ErrorKind::invalid_artifact,
                "checkpoint schema hash does not match the supplied schema");
        net.schema = schema;
        net.latent_dim = j.at("latent_dim").get<std::size_t>();
        net.label_count = j.at("label_count").get<std::size_t>();
        for (const json& jl : j.at("layers")) {
            const std::string type = jl.at("type").get<std::string>();
            if (type == "linear") {
                LinearLayer fc;
                const auto in = jl.at("in").get<std::size_t>();
                const auto out = jl.at("out").get<std::size_t>();
                const auto w = jl.at("W").get<std::vector<double>>();
                const auto b = jl.at("b").get<std::vector<double>>();
                require(w.size() == in * out && b.size() == out, ErrorKind::invalid_artifact,
                        "checkpoint: linear layer size mismatch");
                fc.W = Matrix(in, out);
                std::copy(w.begin(), w.end(), fc.W.data());
                fc.b = Matrix(1, out);
                std::copy(b.begin(), b.end(), fc.b.data());
                net.fcs.push_back(std::move(fc));
            } else if (type == "batchnorm") {
                BatchNormLayer bn;
                const auto width = jl.at("width").get<std::size_t>();
                const auto gamma = jl.at("gamma").get<std::vector<double>>();
                const auto beta = jl.at("beta").get<std::vector<double>>();
                require(gamma.size() == width && beta.size() == width, ErrorKind::invalid_artifact,
                        "checkpoint: batchnorm size mismatch");
                bn.gamma = Matrix(1, width);
                std::copy(gamma.begin(), gamma.end(), bn.gamma.data());
                bn.beta = Matrix(1, width);
                std::copy(beta.begin(), beta.end(), bn.beta.data());
                bn.running_mean = Matrix(1, width);
                bn.running_var = Matrix(1, width, 1.0);
                net.bns.push_back(std::move(bn));
            } else {
                fail(ErrorKind::invalid_artifact, "checkpoint: unknown layer type '" + type + "'");
            }
        }
        const json& stats = j.at("bn_running_stats");
        require(stats.size() == net.bns.size(), ErrorKind::invalid_artifact,
                "checkpoint: running-stat count mismatch");
        for (std::size_t l = 0; l < net.bns.size(); ++l) {
            const auto mean = stats[l].at("mean").get<std::vector<double>>();
            const auto var = stats[l].at("var").get<std::vector<double>>();
            require(mean.size() == net.bns[l].gamma.cols() && var.size() == mean.size(),
                    ErrorKind::invalid_artifact, "checkpoint: running-stat width mismatch");
            std::copy(mean.begin(), mean.end(), net.bns[l].running_mean.data());
            std::copy(var.begin(), var.end(), net.bns[l].running_var.data());
        }
        if (config_out) *config_out = config_from_json(j.at("train_config_echo"));
    } catch (const json::exception& e) {
        fail(ErrorKind::invalid_artifact, path.string() + ": malformed checkpoint: " + e.what());
    }
    require(net.fcs.size() == net.bns.size() + 1, ErrorKind::invalid_artifact,
            "checkpoint: layer structure must be (fc bn)* fc");
    require(!net.bns.empty(), ErrorKind::invalid_artifact, "checkpoint: no hidden layers");
    require(net.fcs.back().W.cols() == net.head_width(), ErrorKind::invalid_artifact,
            "checkpoint: head width does not match schema");
    require(net.fcs.front().W.rows() == net.input_width(), ErrorKind::invalid_artifact,
            "checkpoint: input width does not match latent/label dims");
    net.train_mode = false;
    return net;
}

void save_report(const TrainReport& report, const TrainConfig& config, const RdpLedger& ledger,
                 const std::filesystem::path& path) {
    json j;
    j["tool_version"] = kToolVersion;
    j["weighted_cfd_per_iter"] = report.weighted_cfd_per_iter;
    j["final_log_std"] = report.final_log_std;
    j["ledger_epsilon_after_sanitize"] = epsilon_string(ledger, config.budget.delta);
    j["ledger_epsilon_after_training"] = epsilon_string(ledger, config.budget.delta);
    json snapshot;
    snapshot["orders"] = ledger.orders();
    snapshot["costs"] = ledger.costs();
    snapshot["event_count"] = ledger.events().size();
    j["ledger_snapshot"] = std::move(snapshot);
    j["wall_seconds"] = report.wall_seconds;
    j["config_echo"] = config_to_json(config);
    write_json(j, path);
}

void save_eval_report(const EvalReport& report, const std::string& config_echo,
                      const std::filesystem::path& path) {
    json j;
    j["tool_version"] = kToolVersion;
    j["mmd"] = report.mmd;
    j["range_query_l1"] = report.range_query_l1;
    j["marginal_l1"] = report.marginal_l1;
    j["query_count"] = report.query_count;
    j["seed"] = report.seed;
    j["config_echo"] = config_echo;
    write_json(j, path);
}

void save_two_sample_result(const TwoSampleResult& result, const std::filesystem::path& json_path,
                            const std::filesystem::path& csv_path) {
    json j;
    j["tool_version"] = kToolVersion;
    j["dims"] = result.dims;
    j["rate_unoptimized"] = result.rate_unoptimized;
    j["rate_normal"] = result.rate_normal;
    j["rate_optimized"] = result.rate_optimized;
    j["trials"] = result.trials;
    j["alpha"] = result.alpha;
    write_json(j, json_path);

    if (!csv_path.empty()) {
        CsvTable table;
        table.header = {"dim", "rate_unoptimized", "rate_normal", "rate_optimized"};
        for (std::size_t i = 0; i < result.dims.size(); ++i) {
            table.rows.push_back({std::to_string(result.dims[i]),
                                  format_double(result.rate_unoptimized[i]),
                                  format_double(result.rate_normal[i]),
                                  format_double(result.rate_optimized[i])});
        }
        write_csv(table, csv_path);
    }
}

}  // namespace pearl
