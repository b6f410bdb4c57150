// aebsurro: generate data, train experts, build ensembles, evaluate, bench.
//
// Exit codes: 0 ok, 2 configuration, 3 missing prerequisite,
// 4 data/alignment/io, 5 internal invariant, 1 anything else.
// Failures print one JSON line on stderr: {"error":kind,"exit_code":n,"message":...}

#include "aebsurro/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace aebsurro;
namespace fs = std::filesystem;

namespace {

int report_error(std::string_view kind, int code, const std::string& message) {
    json j;
    j["error"] = kind;
    j["exit_code"] = code;
    j["message"] = message;
    std::cerr << j.dump() << std::endl;
    return code;
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
    try {
        std::size_t used = 0;
        if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::configuration, source + " is not a non-negative integer: '" + text + "'");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surrogate-model benchmark for an emergency-braking scenario simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> seed_flag;
    std::optional<std::string> out_flag;
    std::optional<std::string> dataset_flag;
    std::optional<int> jobs_flag;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON run configuration (defaults when omitted)");
    app.add_option("--seed", seed_flag, "Override the configured seed (takes precedence over AEBSURRO_SEED)");
    app.add_option("--out", out_flag, "Output directory");
    app.add_option("--dataset", dataset_flag, "Dataset file to read instead of <out>/dataset.jsonl");
    app.add_option("--jobs", jobs_flag, "Worker threads for forest fitting")->check(CLI::PositiveNumber);
    app.add_flag("--quiet,-q", quiet, "Suppress progress lines");

    auto* generate = app.add_subcommand("generate", "Simulate the train/validation/test scenarios");
    auto* train = app.add_subcommand("train", "Tune and fit every expert, write models and predictions");
    auto* ensemble = app.add_subcommand("ensemble", "Build Hybrid 1, Hybrid 2 and the aggregated model");
    auto* evaluate = app.add_subcommand("evaluate", "Score everything and write the report");
    auto* bench = app.add_subcommand("bench", "Time one-by-one predictions");
    auto* run_all = app.add_subcommand("run-all", "generate, train, import, ensemble, bench, evaluate");
    auto* import = app.add_subcommand("import-expert", "Validate and store an external expert's predictions");

    std::vector<std::string> bench_models;
    std::optional<std::size_t> bench_n;
    bench->add_option("--model", bench_models, "Model to time (repeatable): expert name, hybrid1, hybrid2, "
                                               "aggregated or simulator");
    bench->add_option("-n,--count", bench_n, "Number of predictions");

    std::string import_name, import_file;
    import->add_option("--name", import_name, "Expert name in the pool")->required();
    import->add_option("--file", import_file, "Prediction file (JSON lines)")->required()->check(CLI::ExistingFile);

    for (auto* sub : {generate, train, ensemble, evaluate, bench, run_all, import}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("configuration", 2, e.what());
    }

    try {
        RunConfig cfg = config_path.empty() ? parse_config("{}", "defaults") : load_config(config_path);
        if (const char* env = std::getenv("AEBSURRO_SEED"); env && *env) cfg.seed = parse_seed(env, "AEBSURRO_SEED");
        if (seed_flag) cfg.seed = parse_seed(*seed_flag, "--seed");
        if (out_flag) cfg.output_dir = *out_flag;
        if (jobs_flag) cfg.jobs = *jobs_flag;

        pipeline::Paths paths{cfg.output_dir, std::nullopt};
        if (dataset_flag) paths.dataset_override = fs::path(*dataset_flag);
        const pipeline::Log log = quiet ? pipeline::quiet() : pipeline::Log([](const std::string& s) {
            std::cout << s << std::endl;
        });

        io::write_file_atomic(paths.out / "config.json", cfg.to_json().dump(1) + "\n");

        auto finish_evaluate = [&](const pipeline::EvaluateResult& r) {
            if (r.violations.empty()) return 0;
            std::string msg = "report consistency check failed:";
            for (const auto& v : r.violations) msg += " [" + v + "]";
            return report_error(to_string(ErrorKind::invariant), exit_code(ErrorKind::invariant), msg);
        };

        if (*generate) pipeline::cmd_generate(cfg, paths, log);
        else if (*train) pipeline::cmd_train(cfg, paths, log);
        else if (*import) pipeline::cmd_import(paths, import_name, import_file, log);
        else if (*ensemble) pipeline::cmd_ensemble(cfg, paths, log);
        else if (*bench) {
            std::optional<std::vector<std::string>> models;
            if (!bench_models.empty()) models = bench_models;
            pipeline::cmd_bench(cfg, paths, models, bench_n, log);
        } else if (*evaluate) return finish_evaluate(pipeline::cmd_evaluate(cfg, paths, log));
        else if (*run_all) return finish_evaluate(pipeline::cmd_run_all(cfg, paths, log));
        return 0;
    } catch (const Error& e) {
        return report_error(to_string(e.kind()), exit_code(e.kind()), e.what());
    } catch (const json::exception& e) {
        return report_error("parse", 4, e.what());
    } catch (const std::exception& e) {
        return report_error("unknown", 1, e.what());
    }
}
