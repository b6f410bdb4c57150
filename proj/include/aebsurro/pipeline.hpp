#pragma once

// The end-to-end workflow behind the command-line tool. Every stage reads
// its inputs from, and writes its outputs under, one output directory:
//
//   dataset.jsonl
//   models/<expert>.model, models/<expert>.tuning.json
//   predictions/<expert>.jsonl, predictions/<expert>.timing.json
//   ensemble/state.json, ensemble/<model>.jsonl, ensemble/timings.json,
//   ensemble/*.csv
//   bench/throughput.json
//   report/...
//
// Wall-clock measurements only ever appear in *.timing.json, timings.json,
// throughput.json, the timing tables, and model artifacts.

#include "aebsurro/config.hpp"
#include "aebsurro/dataset.hpp"
#include "aebsurro/ensemble.hpp"
#include "aebsurro/experts/registry.hpp"
#include "aebsurro/io.hpp"
#include "aebsurro/report.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace aebsurro::pipeline {

namespace fs = std::filesystem;

struct Paths {
    fs::path out;
    std::optional<fs::path> dataset_override;

    fs::path dataset() const { return dataset_override ? *dataset_override : out / "dataset.jsonl"; }
    fs::path model(const std::string& n) const { return out / "models" / (n + ".model"); }
    fs::path tuning(const std::string& n) const { return out / "models" / (n + ".tuning.json"); }
    fs::path predictions(const std::string& n) const { return out / "predictions" / (n + ".jsonl"); }
    fs::path prediction_timing(const std::string& n) const { return out / "predictions" / (n + ".timing.json"); }
    fs::path ensemble_dir() const { return out / "ensemble"; }
    fs::path ensemble_state() const { return ensemble_dir() / "state.json"; }
    fs::path ensemble_cube(const std::string& n) const { return ensemble_dir() / (n + ".jsonl"); }
    fs::path ensemble_timings() const { return ensemble_dir() / "timings.json"; }
    fs::path throughput() const { return out / "bench" / "throughput.json"; }
    fs::path report_dir() const { return out / "report"; }
};

using Log = std::function<void(const std::string&)>;

inline Log quiet() {
    return [](const std::string&) {};
}

namespace detail {

inline void require_file(const fs::path& p, const std::string& stage) {
    if (!fs::exists(p)) fail(ErrorKind::missing_prerequisite, stage + " needs " + p.string());
}

inline Dataset load_dataset(const Paths& paths, const std::string& stage) {
    require_file(paths.dataset(), stage);
    return load(paths.dataset());
}

inline json timing_json(const Timing& t) {
    return {{"fit_seconds", t.fit_seconds}, {"predict_seconds_per_100", t.predict_seconds_per_100}};
}

inline std::optional<Timing> read_timing(const fs::path& p) {
    if (!fs::exists(p)) return std::nullopt;
    const auto j = json::parse(io::read_file(p));
    return Timing{j.at("fit_seconds").get<double>(), j.at("predict_seconds_per_100").get<double>()};
}

inline PredictionCube load_cube(const fs::path& p, const Dataset& d, const std::string& name,
                                const std::string& stage) {
    require_file(p, stage);
    auto cube = import_external_predictions(p, d);
    cube.expert_name = name;
    return cube;
}

inline json map_json(const SelectionMap& m) {
    return {{"pool", m.pool()}, {"cells", m.cells()}, {"calibration", to_string(m.calibration())}};
}

}  // namespace detail

// ---- generate

inline Dataset cmd_generate(const RunConfig& cfg, const Paths& paths, const Log& log = quiet()) {
    auto d = generate(cfg.priors, cfg.sim, cfg.counts, cfg.seed);
    const auto path = paths.out / "dataset.jsonl";
    save(d, path);
    log("wrote " + path.string() + " (" + std::to_string(d.size()) + " scenarios, T=" + std::to_string(d.steps()) + ")");
    return d;
}

// ---- train

inline void cmd_train(const RunConfig& cfg, const Paths& paths, const Log& log = quiet()) {
    const auto d = detail::load_dataset(paths, "train");
    const auto ctx = cfg.expert_context();
    for (const auto& spec : cfg.experts) {
        auto result = tune(spec.family, spec.name, spec.hyper_grid(), d, ctx);
        const auto& best = *result.best;
        save_model(best, paths.model(spec.name));

        json tj;
        tj["expert"] = spec.name;
        tj["family"] = spec.family;
        tj["chosen"] = result.best_index;
        json table = json::array();
        for (const auto& row : result.table) table.push_back({{"point", describe(row.point)}, {"validation_rmse", row.score}});
        tj["grid"] = table;
        io::write_file_atomic(paths.tuning(spec.name), tj.dump(1) + "\n");

        auto cube = best.predict_cube(d);
        cube.timing.reset();
        export_predictions(cube, paths.predictions(spec.name));
        io::write_file_atomic(paths.prediction_timing(spec.name), detail::timing_json(best.timing()).dump(1) + "\n");
        log("trained " + spec.name + " [" + describe(best.hyperparameters()) + "] validation rmse " +
            io::format_general(result.table[result.best_index].score, 6));
    }
}

// ---- import

// Validates an external prediction file against the dataset (every id of
// every split) and stores it as predictions/<name>.jsonl.
inline PredictionCube cmd_import(const Paths& paths, const std::string& name, const fs::path& file,
                                 const Log& log = quiet()) {
    const auto d = detail::load_dataset(paths, "import-expert");
    detail::require_file(file, "import-expert");
    auto cube = import_external_predictions(file, d);
    cube.expert_name = name;
    const auto timing = cube.timing;
    cube.timing.reset();
    export_predictions(cube, paths.predictions(name));
    if (timing) io::write_file_atomic(paths.prediction_timing(name), detail::timing_json(*timing).dump(1) + "\n");
    else fs::remove(paths.prediction_timing(name));
    log("imported " + name + " from " + file.string());
    return cube;
}

inline void cmd_import_configured(const RunConfig& cfg, const Paths& paths, const Log& log = quiet()) {
    for (const auto& im : cfg.imports) cmd_import(paths, im.name, im.path, log);
}

// ---- ensemble

struct EnsembleState {
    EnsembleSet set;
    std::vector<TimingRow> timings;  // only for ensembles whose members all report timings
};

namespace detail {

inline SelectionMap parse_map(const json& j) {
    const auto split = parse_split(j.at("calibration").get<std::string>());
    if (!split) fail(ErrorKind::schema, "ensemble state: unknown calibration split");
    return SelectionMap(j.at("pool").get<std::vector<std::string>>(), j.at("cells").size() / kChannelCount,
                        j.at("cells").get<std::vector<std::size_t>>(), *split);
}

inline std::vector<PredictionCube> load_pool(const RunConfig& cfg, const Paths& paths, const Dataset& d,
                                             const std::string& stage) {
    std::vector<PredictionCube> cubes;
    for (const auto& n : cfg.pool_names()) cubes.push_back(load_cube(paths.predictions(n), d, n, stage));
    return cubes;
}

}  // namespace detail

inline EnsembleState cmd_ensemble(const RunConfig& cfg, const Paths& paths, const Log& log = quiet()) {
    const auto d = detail::load_dataset(paths, "ensemble");
    const auto cubes = detail::load_pool(cfg, paths, d, "ensemble");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    EnsembleState st;
    st.set = calibrate_ensembles(cubes, d, cfg.ensemble.eta_grid, Split::validation);
    const double calibration_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    const auto& s = st.set;
    json state;
    state["calibration"] = "validation";
    state["pool"] = s.losses.experts();
    state["hybrid1"] = detail::map_json(s.hybrid1);
    state["hybrid2"] = detail::map_json(s.hybrid2);
    std::vector<double> w;
    for (std::size_t j = 0; j < s.eta.weights.experts().size(); ++j)
        for (std::size_t cell = 0; cell < s.eta.weights.cells(); ++cell) w.push_back(s.eta.weights.at_cell(j, cell));
    state["aggregated"] = {{"eta", s.eta.weights.eta()}, {"experts", s.eta.weights.experts()}, {"weights", w}};
    json table = json::array();
    for (const auto& e : s.eta.table) table.push_back({{"eta", e.eta}, {"validation_rmse", e.validation_rmse}});
    state["eta_table"] = table;
    io::write_file_atomic(paths.ensemble_state(), state.dump() + "\n");

    for (const auto& c : s.cubes) export_predictions(c, paths.ensemble_cube(c.expert_name));
    io::write_file_atomic(paths.ensemble_dir() / "hybrid1_selection.csv", selection_csv(s.hybrid1, d.dt()));
    io::write_file_atomic(paths.ensemble_dir() / "hybrid2_selection.csv", selection_csv(s.hybrid2, d.dt()));
    io::write_file_atomic(paths.ensemble_dir() / "aggregated_weights.csv", weights_csv(s.eta.weights, d.dt()));

    // An ensemble costs the fits of its members plus calibration, and the
    // predictions of its members plus the per-cell combination.
    std::vector<std::optional<Timing>> member(cubes.size());
    for (std::size_t j = 0; j < cubes.size(); ++j) member[j] = detail::read_timing(paths.prediction_timing(cubes[j].expert_name));
    auto combine_seconds = [&](const std::function<void(const std::vector<const RowMatrix*>&)>& f, std::size_t k) {
        std::vector<RowMatrix> rows;
        for (std::size_t j = 0; j < k; ++j) rows.push_back(cubes[j].values.topRows(std::min<Eigen::Index>(100, cubes[j].values.rows())));
        std::vector<const RowMatrix*> ptr;
        for (const auto& r : rows) ptr.push_back(&r);
        const auto a = clock::now();
        f(ptr);
        return std::chrono::duration<double>(clock::now() - a).count();
    };
    auto members_timing = [&](const std::vector<std::string>& names, double extra_predict) -> std::optional<Timing> {
        Timing t{calibration_seconds, extra_predict};
        for (const auto& n : names) {
            const auto j = s.losses.index_of(n);
            if (!member[j]) return std::nullopt;
            t.fit_seconds += member[j]->fit_seconds;
            t.predict_seconds_per_100 += member[j]->predict_seconds_per_100;
        }
        return t;
    };
    std::vector<std::pair<std::string, std::optional<Timing>>> ens_timing = {
        {"hybrid1", members_timing(s.hybrid1.pool(), combine_seconds([&](const auto& p) { combine_selected(s.hybrid1, p); }, cubes.size()))},
        {"hybrid2", members_timing(s.hybrid2.pool(), combine_seconds([&](const auto& p) { combine_selected(s.hybrid2, p); }, s.hybrid2.pool().size()))},
        {"aggregated", members_timing(s.eta.weights.experts(), combine_seconds([&](const auto& p) { combine_weighted(s.eta.weights, p); }, cubes.size()))},
    };
    json tj = json::object();
    for (const auto& [n, t] : ens_timing)
        if (t) {
            tj[n] = detail::timing_json(*t);
            st.timings.push_back({n, true, *t});
        }
    io::write_file_atomic(paths.ensemble_timings(), tj.dump(1) + "\n");

    std::string counts;
    const auto c1 = s.hybrid1.counts();
    for (std::size_t j = 0; j < c1.size(); ++j) counts += " " + s.hybrid1.pool()[j] + "=" + std::to_string(c1[j]);
    log("hybrid1 cell counts:" + counts);
    std::string p2;
    for (const auto& n : s.hybrid2.pool()) p2 += " " + n;
    log("hybrid2 pool:" + p2);
    log("aggregated eta " + io::format_general(s.eta.weights.eta(), 6));
    return st;
}

// Reloads what cmd_ensemble wrote.
inline EnsembleState load_ensemble(const RunConfig& cfg, const Paths& paths, const Dataset& d,
                                   const std::string& stage) {
    detail::require_file(paths.ensemble_state(), stage);
    const auto j = json::parse(io::read_file(paths.ensemble_state()));
    EnsembleState st;
    st.set.hybrid1 = detail::parse_map(j.at("hybrid1"));
    st.set.hybrid2 = detail::parse_map(j.at("hybrid2"));
    const auto& a = j.at("aggregated");
    st.set.eta.weights = WeightField(a.at("experts").get<std::vector<std::string>>(), d.steps(),
                                     a.at("eta").get<double>(), Split::validation,
                                     a.at("weights").get<std::vector<double>>());
    for (const auto& e : j.at("eta_table"))
        st.set.eta.table.push_back({e.at("eta").get<double>(), e.at("validation_rmse").get<double>()});
    if (j.at("pool").get<std::vector<std::string>>() != cfg.pool_names())
        fail(ErrorKind::missing_prerequisite, stage + ": ensemble state was built for a different pool; rerun ensemble");
    for (const auto& n : ensemble_names())
        st.set.cubes.push_back(detail::load_cube(paths.ensemble_cube(n), d, n, stage));
    if (fs::exists(paths.ensemble_timings())) {
        const auto tj = json::parse(io::read_file(paths.ensemble_timings()));
        for (const auto& [n, t] : tj.items())
            st.timings.push_back({n, true, {t.at("fit_seconds").get<double>(), t.at("predict_seconds_per_100").get<double>()}});
    }
    return st;
}

// ---- bench

namespace detail {

using Predictor = std::function<Eigen::RowVectorXd(const ParameterVector&)>;

struct LoadedModels {
    std::vector<std::unique_ptr<Expert>> owned;
    const Expert& get(const Paths& paths, const RunConfig& cfg, const std::string& name) {
        for (const auto& e : owned)
            if (e->name() == name) return *e;
        bool internal = false;
        for (const auto& e : cfg.experts) internal = internal || e.name == name;
        if (!internal)
            fail(ErrorKind::configuration, "bench: '" + name + "' is an imported expert and cannot be evaluated here");
        require_file(paths.model(name), "bench");
        owned.push_back(load_model(paths.model(name)));
        return *owned.back();
    }
};

}  // namespace detail

inline std::vector<ThroughputResult> cmd_bench(const RunConfig& cfg, const Paths& paths,
                                               std::optional<std::vector<std::string>> models = std::nullopt,
                                               std::optional<std::size_t> n = std::nullopt, const Log& log = quiet()) {
    const auto d = detail::load_dataset(paths, "bench");
    const auto names = models ? *models : cfg.bench.models;
    const std::size_t count = n ? *n : cfg.bench.n;
    detail::LoadedModels cache;
    std::optional<EnsembleState> ens;
    std::vector<ThroughputResult> out;

    for (const auto& name : names) {
        detail::Predictor f;
        if (name == "simulator") {
            f = [&](const ParameterVector& p) { return Eigen::RowVectorXd(normalize(simulate(p, cfg.sim), d.norm())); };
        } else if (name == "hybrid1" || name == "hybrid2" || name == "aggregated") {
            if (!ens) ens = load_ensemble(cfg, paths, d, "bench");
            const std::vector<std::string> members = name == "hybrid1"   ? ens->set.hybrid1.pool()
                                                     : name == "hybrid2" ? ens->set.hybrid2.pool()
                                                                         : ens->set.eta.weights.experts();
            std::vector<const Expert*> experts;
            for (const auto& m : members) experts.push_back(&cache.get(paths, cfg, m));
            const EnsembleSet* s = &ens->set;
            f = [experts, name, s](const ParameterVector& p) {
                std::vector<RowMatrix> rows;
                for (const auto* e : experts) rows.push_back(e->predict_one(p));
                std::vector<const RowMatrix*> ptr;
                for (const auto& r : rows) ptr.push_back(&r);
                const RowMatrix y = name == "hybrid1"   ? combine_selected(s->hybrid1, ptr)
                                    : name == "hybrid2" ? combine_selected(s->hybrid2, ptr)
                                                        : combine_weighted(s->eta.weights, ptr);
                return Eigen::RowVectorXd(y.row(0));
            };
        } else {
            const Expert* e = &cache.get(paths, cfg, name);
            f = [e](const ParameterVector& p) { return e->predict_one(p); };
        }
        out.push_back(throughput_bench(name, f, count, cfg.priors, cfg.seed + 1));
        log("bench " + name + ": " + std::to_string(count) + " predictions in " +
            io::format_general(out.back().seconds, 4) + " s");
    }

    json j = json::array();
    for (const auto& r : out)
        j.push_back({{"model", r.model}, {"n", r.n}, {"seconds", r.seconds}, {"per_second", r.per_second},
                     {"checksum", r.checksum}});
    io::write_file_atomic(paths.throughput(), j.dump(1) + "\n");
    return out;
}

// ---- evaluate

struct EvaluateResult {
    BenchmarkReport report;
    std::vector<std::string> violations;
};

inline EvaluateResult cmd_evaluate(const RunConfig& cfg, const Paths& paths, const Log& log = quiet()) {
    const auto d = detail::load_dataset(paths, "evaluate");
    std::vector<PredictionCube> experts;
    for (const auto& n : cfg.candidate_names())
        experts.push_back(detail::load_cube(paths.predictions(n), d, n, "evaluate"));
    const auto ens = load_ensemble(cfg, paths, d, "evaluate");

    EvaluateResult res;
    auto& r = res.report;
    r = assemble_report(d, experts, &ens.set);
    for (const auto& n : cfg.candidate_names())
        if (auto t = detail::read_timing(paths.prediction_timing(n))) r.timings.push_back({n, false, *t});
    for (const auto& t : ens.timings) r.timings.push_back(t);
    for (const auto& spec : cfg.experts) {
        if (!fs::exists(paths.tuning(spec.name))) continue;
        const auto tj = json::parse(io::read_file(paths.tuning(spec.name)));
        const auto chosen = tj.at("chosen").get<std::size_t>();
        const auto& grid = tj.at("grid");
        for (std::size_t i = 0; i < grid.size(); ++i)
            r.tuning.push_back({spec.name, grid[i].at("point").get<std::string>(),
                                grid[i].at("validation_rmse").get<double>(), i == chosen});
    }
    if (fs::exists(paths.throughput()))
        for (const auto& t : json::parse(io::read_file(paths.throughput())))
            r.throughput.push_back({t.at("model").get<std::string>(), t.at("n").get<std::size_t>(),
                                    t.at("seconds").get<double>(), t.at("per_second").get<double>(),
                                    t.at("checksum").get<double>()});

    emit_report(r, paths.report_dir());
    res.violations = check_report(r);
    for (const auto& m : r.test.models)
        log(std::string(m.ensemble ? "ensemble " : "expert   ") + m.name + ": test rmse x1e2 = " +
            io::format_general(m.rmse.mean * 100.0, 5) + ", validation = " +
            io::format_general(r.validation.find(m.name).rmse.mean * 100.0, 5));
    if (auto deg = r.aggregated_degradation())
        log("aggregated test - validation rmse x1e2 = " + io::format_general(*deg * 100.0, 4));
    log("wrote report to " + paths.report_dir().string());
    return res;
}

// ---- run-all

inline EvaluateResult cmd_run_all(const RunConfig& cfg, const Paths& paths, const Log& log = quiet()) {
    cmd_generate(cfg, paths, log);
    Paths p = paths;
    p.dataset_override.reset();
    cmd_train(cfg, p, log);
    cmd_import_configured(cfg, p, log);
    cmd_ensemble(cfg, p, log);
    cmd_bench(cfg, p, std::nullopt, std::nullopt, log);
    return cmd_evaluate(cfg, p, log);
}

}  // namespace aebsurro::pipeline
