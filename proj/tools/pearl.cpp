#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pearl/artifacts.hpp"
#include "pearl/dataio.hpp"
#include "pearl/error.hpp"
#include "pearl/evalsuite.hpp"
#include "pearl/trainloop.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pearl;

namespace {

void print_error_json(const char* kind, const std::string& message) {
    json j;
    j["error"]["code"] = kind;
    j["error"]["message"] = message;
    std::cerr << j.dump() << std::endl;
}

// Defaults come from the (optional) config file; command-line flags override.
struct Options {
    TrainConfig train;
    std::string data_csv;
    std::string schema_path;
    std::string label_column;
    std::string out_dir = "pearl-out";
    bool force = false;
};

json load_config_file(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream in(argv[i + 1]);
            require(in.good(), ErrorKind::io_error,
                    std::string("cannot open config file ") + argv[i + 1]);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                fail(ErrorKind::invalid_data, std::string("config JSON parse error: ") + e.what());
            }
            return j;
        }
    }
    return json::object();
}

void apply_config(Options& opt, const json& j) {
    TrainConfig& c = opt.train;
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
    opt.data_csv = j.value("data_csv", opt.data_csv);
    opt.schema_path = j.value("schema", opt.schema_path);
    opt.label_column = j.value("label_column", opt.label_column);
    opt.out_dir = j.value("out_dir", opt.out_dir);
}

void add_common_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", "JSON config file (parsed before flags)");
    cmd->add_option("--epsilon", opt.train.budget.epsilon, "total privacy budget epsilon");
    cmd->add_option("--delta", opt.train.budget.delta, "privacy budget delta");
    cmd->add_option("--split", opt.train.budget.split, "fraction of epsilon for the CF release");
    cmd->add_option("--k", opt.train.k, "number of frequencies");
    cmd->add_option("--iters", opt.train.iters, "training iterations T");
    cmd->add_option("--n-gen", opt.train.n_gen, "generator steps per critic step");
    cmd->add_option("--batch", opt.train.batch, "generator batch size");
    cmd->add_option("--lr-g", opt.train.lr_g, "generator learning rate");
    cmd->add_option("--lr-c", opt.train.lr_c, "critic learning rate");
    cmd->add_option("--seed", opt.train.seed, "random seed");
    cmd->add_flag("--nonprivate", opt.train.nonprivate, "disable all noise (epsilon = inf)");
    cmd->add_option("--critic", "critic ascent: on|off")
        ->check(CLI::IsMember({"on", "off"}))
        ->each([&opt](const std::string& v) { opt.train.critic_enabled = (v == "on"); });
    cmd->add_option("--normalize-weights", "weight self-normalization: on|off")
        ->check(CLI::IsMember({"on", "off"}))
        ->each([&opt](const std::string& v) { opt.train.normalize_weights = (v == "on"); });
    cmd->add_option("--latent", opt.train.latent_dim, "latent dimension");
    cmd->add_option("--hidden", opt.train.hidden_dims, "hidden layer widths");
    cmd->add_option("--out", opt.out_dir, "output directory");
}

void finalize_out_dir(Options& opt) {
    if (const char* env = std::getenv("PEARL_OUT_DIR")) opt.out_dir = env;
    fs::create_directories(opt.out_dir);
}

Schema resolve_schema(const Options& opt, const CsvTable& table) {
    if (!opt.schema_path.empty()) return load_schema(opt.schema_path);
    std::optional<std::string> label;
    if (!opt.label_column.empty()) label = opt.label_column;
    return infer_schema(table, label);
}

int cmd_sanitize(Options& opt) {
    finalize_out_dir(opt);
    const fs::path out(opt.out_dir);
    const fs::path embedding_path = out / "embedding.json";
    require(opt.force || !fs::exists(embedding_path), ErrorKind::invalid_state,
            embedding_path.string() +
                " already exists; the release is one-shot (pass --force to overwrite)");
    require(!opt.data_csv.empty(), ErrorKind::invalid_parameter, "sanitize: --data is required");

    const CsvTable table = read_csv(opt.data_csv);
    Schema schema = resolve_schema(opt, table);
    if (opt.schema_path.empty()) {
        std::cerr << "warning: schema (including continuous ranges) was inferred from the "
                     "private data; treat it as public or supply --schema\n";
    }
    const EncodedDataset data = encode(table, schema);
    if (data.clipped > 0)
        std::cerr << "warning: " << data.clipped << " out-of-range values clipped to [0,1]\n";

    Rng rng(opt.train.seed);
    const SanitizedArtifacts artifacts = sanitize_dataset(data, schema, opt.train, rng);

    save_schema(schema, out / "schema.json");
    save_embedding(artifacts, embedding_path);
    save_aux(artifacts.aux, out / "aux.json");
    save_ledger(artifacts.ledger, opt.train.budget.delta, out / "ledger.json");

    std::cout << "sanitized " << data.n << " records into k=" << artifacts.freqs.k
              << " characteristic-function coordinates\n"
              << "epsilon (converted at delta=" << format_double(opt.train.budget.delta)
              << "): " << epsilon_string(artifacts.ledger, opt.train.budget.delta) << "\n"
              << "artifacts written to " << out.string() << "\n";
    return 0;
}

int cmd_train(Options& opt, const std::string& artifacts_dir) {
    finalize_out_dir(opt);
    const fs::path in(artifacts_dir.empty() ? opt.out_dir : artifacts_dir);
    const fs::path out(opt.out_dir);
    SanitizedArtifacts artifacts = load_artifacts(in / "embedding.json", in / "aux.json",
                                                  in / "ledger.json", in / "schema.json");
    artifacts.config_echo = opt.train;

    Rng rng(opt.train.seed);
    Rng train_rng = rng.fork("train");
    const fs::path checkpoint_path = out / "checkpoint.json";
    const CheckpointFn save_cb = [&](std::size_t, const GeneratorNet& net) {
        save_checkpoint(net, opt.train, checkpoint_path);
    };
    auto [net, report] = train_from_artifacts(artifacts, opt.train, train_rng, save_cb);
    if (opt.train.iters == 0) save_checkpoint(net, opt.train, checkpoint_path);
    save_report(report, opt.train, artifacts.ledger, out / "report.json");

    std::cout << "trained " << opt.train.iters << " iterations";
    if (!report.weighted_cfd_per_iter.empty())
        std::cout << "; final weighted CFD = " << format_double(report.weighted_cfd_per_iter.back());
    std::cout << "\ncheckpoint: " << checkpoint_path.string() << "\n";
    return 0;
}

int cmd_generate(Options& opt, const std::string& checkpoint, const std::string& schema_path,
                 const std::string& aux_path, std::size_t count, const std::string& out_csv) {
    const fs::path ckpt(checkpoint);
    const fs::path schema_file =
        schema_path.empty() ? ckpt.parent_path() / "schema.json" : fs::path(schema_path);
    const Schema schema = load_schema(schema_file);
    GeneratorNet net = load_checkpoint(ckpt, schema);

    std::optional<std::vector<double>> label_probs;
    fs::path aux_file = aux_path.empty() ? ckpt.parent_path() / "aux.json" : fs::path(aux_path);
    if (fs::exists(aux_file)) {
        std::ifstream in(aux_file);
        json j;
        in >> j;
        if (j.contains("label_probs"))
            label_probs = j["label_probs"].get<std::vector<double>>();
    }

    Rng rng(opt.train.seed);
    Rng gen_rng = rng.fork("latent");
    const std::vector<DecodedRecord> records =
        generate(net, count, gen_rng, label_probs ? &*label_probs : nullptr);
    write_synthetic(records, schema, out_csv);

    json meta;
    meta["tool_version"] = kToolVersion;
    meta["count"] = count;
    meta["seed"] = opt.train.seed;
    meta["checkpoint"] = ckpt.string();
    meta["label_probs_source"] = label_probs ? aux_file.string() : "uniform";
    std::ofstream metaout(out_csv + ".meta.json");
    metaout << meta.dump(2) << "\n";

    std::cout << "wrote " << records.size() << " synthetic records to " << out_csv << "\n";
    return 0;
}

int cmd_eval(Options& opt, const std::string& real_csv, const std::string& synth_csv,
             const std::string& out_json, std::size_t queries) {
    require(!opt.schema_path.empty(), ErrorKind::invalid_parameter, "eval: --schema is required");
    const Schema schema = load_schema(opt.schema_path);
    const EncodedDataset real = encode(read_csv(real_csv), schema);
    const EncodedDataset synth = encode(read_csv(synth_csv), schema);

    bool degenerate = false;
    mmd_auto_bandwidth(real.features, synth.features, &degenerate);
    if (degenerate)
        std::cerr << "warning: degenerate zero median pairwise distance; MMD bandwidth fell "
                     "back to 1\n";
    const EvalReport report =
        evaluate(real.features, synth.features, schema, opt.train.seed, queries);
    json echo;
    echo["real"] = real_csv;
    echo["synth"] = synth_csv;
    echo["schema"] = opt.schema_path;
    echo["seed"] = opt.train.seed;
    echo["queries"] = queries;
    save_eval_report(report, echo.dump(), out_json);

    std::cout << "mmd2 = " << format_double(report.mmd)
              << "\nrange_query_l1 = " << format_double(report.range_query_l1)
              << "\nmarginal_l1 = " << format_double(report.marginal_l1) << "\nreport: " << out_json
              << "\n";
    return 0;
}

int cmd_demo(Options& opt, std::vector<std::size_t> dims, std::size_t n, std::size_t trials,
             double alpha, std::size_t permutations, const std::string& out_json,
             const std::string& out_csv) {
    if (dims.empty()) dims = {1, 2, 5, 10, 20};
    Rng rng(opt.train.seed);
    Rng demo_rng = rng.fork("two-sample-demo");
    const TwoSampleResult result = two_sample_demo(dims, n, trials, alpha, permutations, demo_rng);
    save_two_sample_result(result, out_json, out_csv);
    std::cout << "dim  unoptimized  normal  optimized\n";
    for (std::size_t i = 0; i < result.dims.size(); ++i) {
        std::cout << result.dims[i] << "  " << result.rate_unoptimized[i] << "  "
                  << result.rate_normal[i] << "  " << result.rate_optimized[i] << "\n";
    }
    std::cout << "result: " << out_json << "\n";
    return 0;
}

int cmd_accountant(const std::string& ledger_path, double delta) {
    const RdpLedger ledger = load_ledger(ledger_path);
    bool warned = false;
    if (ledger.unbounded()) {
        std::cout << "inf\n";
        return 0;
    }
    const double eps = ledger.to_eps_delta(delta, &warned);
    if (warned) std::cerr << "warning: empty ledger, epsilon is vacuously 0\n";
    std::cout << format_double(eps) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        Options opt;
        apply_config(opt, load_config_file(argc, argv));

        CLI::App app{"PEARL: differentially private data synthesis via sanitized "
                     "characteristic-function embeddings"};
        app.require_subcommand(1);
        app.set_version_flag("--version", kToolVersion);

        auto* sanitize = app.add_subcommand(
            "sanitize", "one-shot DP release: aux statistics + sanitized CF embedding");
        sanitize->add_option("--data", opt.data_csv, "input CSV (sensitive data)");
        sanitize->add_option("--schema", opt.schema_path, "schema JSON (inferred when absent)");
        sanitize->add_option("--label", opt.label_column, "label column name (when inferring)");
        sanitize->add_flag("--force", opt.force, "overwrite existing artifacts");
        sanitize->add_flag("--label-hist", opt.train.label_hist_enabled,
                           "also release a DP label histogram");
        add_common_flags(sanitize, opt);

        std::string artifacts_dir;
        auto* train = app.add_subcommand(
            "train", "train the generator from sanitized artifacts (no data access)");
        train->add_option("--artifacts", artifacts_dir,
                          "directory with embedding/aux/ledger/schema JSON (default: --out)");
        add_common_flags(train, opt);

        std::string checkpoint, gen_schema, aux_path, out_csv = "synthetic.csv";
        std::size_t gen_count = 11000;
        auto* generate = app.add_subcommand("generate", "sample synthetic records");
        generate->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
        generate->add_option("--schema", gen_schema, "schema JSON (default: next to checkpoint)");
        generate->add_option("--aux", aux_path, "aux JSON for DP label probabilities");
        generate->add_option("-m,--count", gen_count, "number of records");
        generate->add_option("--out-csv", out_csv, "output CSV path");
        generate->add_option("--seed", opt.train.seed, "random seed");
        generate->add_option("--config", "JSON config file (parsed before flags)");

        std::string real_csv, synth_csv, eval_out = "eval.json";
        std::size_t queries = 1000;
        auto* eval = app.add_subcommand("eval", "synthetic-vs-real utility metrics");
        eval->add_option("--real", real_csv, "real CSV")->required();
        eval->add_option("--synth", synth_csv, "synthetic CSV")->required();
        eval->add_option("--schema", opt.schema_path, "schema JSON")->required();
        eval->add_option("--out-json", eval_out, "report path");
        eval->add_option("--queries", queries, "number of range queries");
        eval->add_option("--seed", opt.train.seed, "random seed");
        eval->add_option("--config", "JSON config file (parsed before flags)");

        std::vector<std::size_t> dims;
        std::size_t demo_n = 1000, demo_trials = 100, demo_perms = 200;
        double alpha = 0.05;
        std::string demo_json = "two_sample.json", demo_csv;
        auto* demo = app.add_subcommand("demo-two-sample",
                                        "frequency re-weighting test-power demonstration");
        demo->add_option("--dims", dims, "dimensions to test (default: 1 2 5 10 20)");
        demo->add_option("--n", demo_n, "samples per side");
        demo->add_option("--trials", demo_trials, "trials per dimension");
        demo->add_option("--alpha", alpha, "test level");
        demo->add_option("--permutations", demo_perms, "permutations for the null threshold");
        demo->add_option("--out-json", demo_json, "result JSON path");
        demo->add_option("--out-csv", demo_csv, "optional per-dimension rate CSV");
        demo->add_option("--seed", opt.train.seed, "random seed");
        demo->add_option("--config", "JSON config file (parsed before flags)");

        std::string ledger_path;
        double acc_delta = 1e-5;
        auto* accountant = app.add_subcommand("accountant", "convert a ledger to epsilon");
        accountant->add_option("--ledger", ledger_path, "ledger JSON")->required();
        accountant->add_option("--delta", acc_delta, "delta for the conversion");

        CLI11_PARSE(app, argc, argv);

        if (sanitize->parsed()) return cmd_sanitize(opt);
        if (train->parsed()) return cmd_train(opt, artifacts_dir);
        if (generate->parsed())
            return cmd_generate(opt, checkpoint, gen_schema, aux_path, gen_count, out_csv);
        if (eval->parsed()) return cmd_eval(opt, real_csv, synth_csv, eval_out, queries);
        if (demo->parsed())
            return cmd_demo(opt, dims, demo_n, demo_trials, alpha, demo_perms, demo_json, demo_csv);
        if (accountant->parsed()) return cmd_accountant(ledger_path, acc_delta);
        return 0;
    } catch (const Error& e) {
        print_error_json(e.kind_name(), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        print_error_json("error", e.what());
        return 2;
    }
}
