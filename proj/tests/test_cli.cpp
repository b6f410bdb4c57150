#include "aebsurro/dataset.hpp"
#include "aebsurro/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

using namespace aebsurro;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "aebsurro_test_cli";

// A small roster so the whole pipeline runs in seconds.
const char* kSmallConfig = R"({
  "dataset": {"train": 60, "validation": 20, "test": 20},
  "experts": [
    {"name": "knn", "family": "knn", "grid": {"k": [1, 3, 5]}},
    {"name": "krr", "family": "krr", "grid": {"gamma": [0.3], "lambda": [1e-4]}},
    {"name": "pce", "family": "pce", "grid": {"degree": 2}},
    {"name": "4-rf", "family": "rf_per_series", "grid": {"n_trees": 10}}
  ],
  "bench": {"models": ["4-rf", "hybrid2", "aggregated", "simulator"], "n": 50}
})";

struct Run {
    int code = -1;
    std::string err;
    std::string out;
};

Run cli(const std::string& args, const std::string& env = "") {
    fs::create_directories(kRoot);
    const auto err = kRoot / "stderr.txt";
    const auto out = kRoot / "stdout.txt";
    const std::string cmd = env + " '" + std::string(AEBSURRO_CLI_PATH) + "' " + args + " > '" + out.string() +
                            "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = io::read_file(err);
    r.out = io::read_file(out);
    return r;
}

fs::path small_config() {
    const auto p = kRoot / "small.json";
    io::write_file_atomic(p, kSmallConfig);
    return p;
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

}  // namespace

TEST(Cli, EvaluateBeforeTrainIsMissingPrerequisite) {
    const auto out = kRoot / "prereq";
    fs::remove_all(out);
    auto r = cli("evaluate --out " + out.string());
    EXPECT_EQ(r.code, 3) << r.err;
    const auto j = json::parse(r.err);
    EXPECT_EQ(j["error"], "missing_prerequisite");
    EXPECT_EQ(j["exit_code"], 3);

    ASSERT_EQ(cli("generate --config " + small_config().string() + " --out " + out.string()).code, 0);
    r = cli("evaluate --config " + small_config().string() + " --out " + out.string());
    EXPECT_EQ(r.code, 3);
    r = cli("ensemble --config " + small_config().string() + " --out " + out.string());
    EXPECT_EQ(r.code, 3);
    r = cli("bench --config " + small_config().string() + " --out " + out.string());
    EXPECT_EQ(r.code, 3);
}

TEST(Cli, ConfigErrorsExitTwoWithOneJsonLine) {
    const auto bad = kRoot / "bad.json";
    io::write_file_atomic(bad, R"({"sed": 3})");
    auto r = cli("generate --config " + bad.string() + " --out " + (kRoot / "bad").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
    EXPECT_EQ(json::parse(r.err)["error"], "configuration");

    EXPECT_EQ(cli("generate --config /nonexistent.json").code, 2);
    EXPECT_EQ(cli("generate --seed abc --out " + (kRoot / "bad").string()).code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST(Cli, RunAllIsDeterministicAndComplete) {
    const auto cfg = small_config();
    const auto a = kRoot / "run_a", b = kRoot / "run_b";
    fs::remove_all(a);
    fs::remove_all(b);
    auto ra = cli("run-all --config " + cfg.string() + " --out " + a.string());
    ASSERT_EQ(ra.code, 0) << ra.err;
    auto rb = cli("run-all --config " + cfg.string() + " --out " + b.string() + " --jobs 2");
    ASSERT_EQ(rb.code, 0) << rb.err;

    std::vector<fs::path> deterministic = {"dataset.jsonl", "config.json", "ensemble/state.json",
                                           "ensemble/hybrid1.jsonl", "ensemble/aggregated.jsonl",
                                           "ensemble/hybrid2_selection.csv", "ensemble/aggregated_weights.csv",
                                           "models/knn.tuning.json"};
    for (const auto* n : {"knn", "krr", "pce", "4-rf"}) deterministic.push_back(fs::path("predictions") / (std::string(n) + ".jsonl"));
    for (const auto& e : fs::directory_iterator(a / "report")) {
        const auto name = e.path().filename().string();
        if (name.find("timing") == std::string::npos && name.find("throughput") == std::string::npos)
            deterministic.push_back(fs::path("report") / name);
    }
    for (const auto& p : deterministic) {
        SCOPED_TRACE(p.string());
        ASSERT_TRUE(fs::exists(a / p));
        // config.json records the output directory, which differs by design
        if (p == "config.json") continue;
        EXPECT_EQ(slurp(a / p), slurp(b / p));
    }
    for (const auto* n : {"expert_rmse.csv", "expert_timing.csv", "expert_channels_validation.csv",
                          "comparison_validation.csv", "comparison_test.csv", "timing_all.csv", "throughput.csv",
                          "per_timestep_validation.csv", "hybrid1_selection.csv",
                          "hybrid2_selection.csv", "aggregated_weights.csv", "summary.json"})
        EXPECT_TRUE(fs::exists(a / "report" / n)) << n;

    const auto thr = json::parse(slurp(a / "bench" / "throughput.json"));
    const auto thr_b = json::parse(slurp(b / "bench" / "throughput.json"));
    ASSERT_EQ(thr.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(thr[i]["checksum"], thr_b[i]["checksum"]);

    // stage reruns are idempotent
    ASSERT_EQ(cli("ensemble --config " + cfg.string() + " --out " + a.string()).code, 0);
    EXPECT_EQ(slurp(a / "ensemble/state.json"), slurp(b / "ensemble/state.json"));
}

TEST(Cli, SeedOverrides) {
    const auto cfg = small_config();
    const auto a = kRoot / "seed_a", b = kRoot / "seed_b", c = kRoot / "seed_c";
    ASSERT_EQ(cli("generate --config " + cfg.string() + " --out " + a.string(), "AEBSURRO_SEED=5").code, 0);
    ASSERT_EQ(cli("generate --config " + cfg.string() + " --out " + b.string() + " --seed 5").code, 0);
    ASSERT_EQ(cli("generate --config " + cfg.string() + " --out " + c.string()).code, 0);
    EXPECT_EQ(slurp(a / "dataset.jsonl"), slurp(b / "dataset.jsonl"));
    EXPECT_NE(slurp(a / "dataset.jsonl"), slurp(c / "dataset.jsonl"));
    EXPECT_EQ(cli("generate --out " + a.string(), "AEBSURRO_SEED=x1").code, 2);
}

TEST(Cli, ImportedExpertJoinsThePool) {
    const auto out = kRoot / "import";
    fs::remove_all(out);
    const auto cfg = small_config();
    ASSERT_EQ(cli("generate --config " + cfg.string() + " --out " + out.string()).code, 0);
    ASSERT_EQ(cli("train --config " + cfg.string() + " --out " + out.string()).code, 0);

    // an "external" expert: the kNN predictions shifted slightly, renamed
    const auto d = load(out / "dataset.jsonl");
    auto cube = import_external_predictions(out / "predictions" / "knn.jsonl", d);
    cube.expert_name = "cnn";
    cube.values.array() += 0.001;
    cube.timing = Timing{12.0, 0.5};
    export_predictions(cube, kRoot / "cnn.jsonl");
    auto r = cli("import-expert --name cnn --file " + (kRoot / "cnn.jsonl").string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;

    // misaligned: drop one scenario
    auto partial = cube.select(d.ids(Split::train));
    export_predictions(partial, kRoot / "partial.jsonl");
    r = cli("import-expert --name bad --file " + (kRoot / "partial.jsonl").string() + " --out " + out.string());
    EXPECT_EQ(r.code, 4);
    EXPECT_EQ(json::parse(r.err)["error"], "alignment");

    auto j = json::parse(kSmallConfig);
    j["imports"] = json::array({{{"name", "cnn"}, {"path", (kRoot / "cnn.jsonl").string()}}});
    j["bench"]["models"] = {"4-rf"};
    io::write_file_atomic(kRoot / "with_cnn.json", j.dump());
    r = cli("ensemble --config " + (kRoot / "with_cnn.json").string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto state = json::parse(slurp(out / "ensemble" / "state.json"));
    EXPECT_EQ(state["pool"].size(), 5u);
    r = cli("evaluate --config " + (kRoot / "with_cnn.json").string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto timing = json::parse(slurp(out / "report" / "timings.json"));
    EXPECT_EQ(timing["models"]["cnn"]["fit_seconds"], 12.0);
    // the report on the old pool is stale once the pool changes
    r = cli("evaluate --config " + cfg.string() + " --out " + out.string());
    EXPECT_EQ(r.code, 3);
}
