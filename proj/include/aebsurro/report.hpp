#pragma once

// Benchmark report: RMSE tables per split, per-timestep curves, timing
// tables, ensemble selection/weight exports, throughput, and the internal
// consistency checks that gate a successful run.
//
// RMSE values are in normalized units; the CSV tables present them x100
// (columns suffixed _x1e2). Timings live in separate files so that every
// other artifact is reproducible byte for byte.

#include "aebsurro/dataset.hpp"
#include "aebsurro/ensemble.hpp"
#include "aebsurro/io.hpp"
#include "aebsurro/metrics.hpp"
#include "aebsurro/sim.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace aebsurro {

struct ModelScores {
    std::string name;
    bool ensemble = false;
    ChannelRmse rmse;
    RowMatrix per_timestep;  // 4 x T
};

struct SplitScores {
    Split split = Split::validation;
    std::vector<ModelScores> models;  // experts first, then ensembles

    const ModelScores& find(const std::string& name) const {
        for (const auto& m : models)
            if (m.name == name) return m;
        fail(ErrorKind::alignment, "no scores for model '" + name + "' on " + std::string(to_string(split)));
    }
};

struct TimingRow {
    std::string name;
    bool ensemble = false;
    Timing timing;
};

struct ThroughputResult {
    std::string model;
    std::size_t n = 0;
    double seconds = 0.0;
    double per_second = 0.0;
    double checksum = 0.0;  // sum of every predicted value; identical for identical inputs
};

struct TuningRow {
    std::string expert;
    std::string point;  // "k=5" style
    double validation_rmse = 0.0;
    bool chosen = false;
};

struct BenchmarkReport {
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<std::string> experts;
    std::vector<std::string> ensembles;
    SplitScores validation;
    SplitScores test;
    std::optional<SelectionMap> hybrid1;
    std::optional<SelectionMap> hybrid2;
    std::optional<WeightField> weights;
    std::vector<EtaScore> eta_table;
    std::vector<TuningRow> tuning;
    std::vector<TimingRow> timings;
    std::vector<ThroughputResult> throughput;

    // Aggregated model: test mean RMSE minus validation mean RMSE.
    std::optional<double> aggregated_degradation() const {
        for (const auto& m : validation.models)
            if (m.name == "aggregated") return test.find("aggregated").rmse.mean - m.rmse.mean;
        return std::nullopt;
    }
};

inline ModelScores score(const PredictionCube& cube, const Dataset& d, Split split, bool ensemble) {
    check_cube(cube, d);
    const auto sel = cube.select(d.ids(split));
    const RowMatrix truth = d.targets(split);
    return {cube.expert_name, ensemble, rmse_per_channel(sel.values, truth), rmse_per_timestep(sel.values, truth)};
}

inline SplitScores score_split(const std::vector<PredictionCube>& experts, const std::vector<PredictionCube>& ensembles,
                               const Dataset& d, Split split) {
    SplitScores s{split, {}};
    for (const auto& c : experts) s.models.push_back(score(c, d, split, false));
    for (const auto& c : ensembles) s.models.push_back(score(c, d, split, true));
    return s;
}

// Scores and ensemble artifacts; timings, tuning and throughput are filled
// in by the caller.
inline BenchmarkReport assemble_report(const Dataset& d, const std::vector<PredictionCube>& experts,
                                       const EnsembleSet* ens) {
    BenchmarkReport r;
    r.dt = d.dt();
    r.steps = d.steps();
    for (const auto& c : experts) r.experts.push_back(c.expert_name);
    std::vector<PredictionCube> ens_cubes;
    if (ens) {
        ens_cubes = ens->cubes;
        for (const auto& c : ens_cubes) r.ensembles.push_back(c.expert_name);
        r.hybrid1 = ens->hybrid1;
        r.hybrid2 = ens->hybrid2;
        r.weights = ens->eta.weights;
        r.eta_table = ens->eta.table;
    }
    r.validation = score_split(experts, ens_cubes, d, Split::validation);
    r.test = score_split(experts, ens_cubes, d, Split::test);
    return r;
}

// Predicts n parameter vectors drawn from the priors, one call per vector.
inline ThroughputResult throughput_bench(const std::string& model,
                                         const std::function<Eigen::RowVectorXd(const ParameterVector&)>& predict,
                                         std::size_t n, const ParameterPriors& priors, std::uint64_t seed) {
    ThroughputResult r{model, n, 0.0, 0.0, 0.0};
    if (n == 0) return r;
    const auto params = sample_parameters(priors, n, seed);
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    double sum = 0.0;
    for (const auto& p : params) sum += predict(p).sum();
    r.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    r.per_second = r.seconds > 0.0 ? static_cast<double>(n) / r.seconds : 0.0;
    r.checksum = sum;
    return r;
}

// ---- consistency checks

inline std::vector<std::string> check_report(const BenchmarkReport& r) {
    std::vector<std::string> bad;
    auto finite = [](double x) { return std::isfinite(x); };
    for (const auto* s : {&r.validation, &r.test}) {
        const std::string split(to_string(s->split));
        for (const auto& m : s->models) {
            const auto& c = m.rmse.channel;
            if (!(finite(c[0]) && finite(c[1]) && finite(c[2]) && finite(c[3]) && finite(m.rmse.mean)) ||
                !m.per_timestep.allFinite())
                bad.push_back(split + ": " + m.name + " has a non-finite RMSE");
            if (std::abs(m.rmse.mean - (c[0] + c[1] + c[2] + c[3]) / 4.0) > 1e-12)
                bad.push_back(split + ": " + m.name + " mean is not the average of its channels");
            for (std::size_t ch = 0; ch < kChannelCount; ++ch) {
                const double rms = std::sqrt(m.per_timestep.row(static_cast<Eigen::Index>(ch)).squaredNorm() /
                                             static_cast<double>(m.per_timestep.cols()));
                if (std::abs(rms - c[ch]) > 1e-10)
                    bad.push_back(split + ": " + m.name + " per-timestep curve does not integrate to channel " +
                                  std::string(kChannelNames[ch]));
            }
        }
    }
    if (r.hybrid1) {
        const auto& cal = r.hybrid1->calibration() == Split::test ? r.test : r.validation;
        const auto& h1 = cal.find("hybrid1");
        for (const auto& e : r.hybrid1->pool()) {
            const auto& m = cal.find(e);
            for (std::size_t ch = 0; ch < kChannelCount; ++ch)
                if (m.rmse.channel[ch] + 1e-12 < h1.rmse.channel[ch])
                    bad.push_back("hybrid1 is worse than " + e + " on channel " + std::string(kChannelNames[ch]));
            for (Eigen::Index k = 0; k < m.per_timestep.size(); ++k)
                if (m.per_timestep.data()[k] + 1e-12 < h1.per_timestep.data()[k]) {
                    bad.push_back("hybrid1 is not the per-timestep minimum against " + e);
                    break;
                }
        }
        if (r.hybrid2) {
            const auto& h2 = cal.find("hybrid2");
            for (Eigen::Index k = 0; k < h2.per_timestep.size(); ++k) {
                double pool_min = std::numeric_limits<double>::infinity();
                for (const auto& e : r.hybrid2->pool()) pool_min = std::min(pool_min, cal.find(e).per_timestep.data()[k]);
                if (h2.per_timestep.data()[k] + 1e-12 < h1.per_timestep.data()[k] ||
                    h2.per_timestep.data()[k] > pool_min + 1e-12) {
                    bad.push_back("hybrid2 leaves the [hybrid1, pool minimum] band");
                    break;
                }
            }
        }
    }
    if (r.weights && r.weights->simplex_error() > 1e-12) bad.push_back("EWA weights do not sum to one");
    return bad;
}

// ---- emission

namespace detail {

inline std::string x100(double v) { return io::format_double(v * 100.0); }

inline std::string channel_table(const SplitScores& s) {
    std::string out = "model,kind";
    for (auto ch : kChannelNames) out += "," + std::string(ch) + "_x1e2";
    out += ",mean_x1e2\n";
    for (const auto& m : s.models) {
        out += m.name + (m.ensemble ? ",ensemble" : ",expert");
        for (double v : m.rmse.channel) out += "," + x100(v);
        out += "," + x100(m.rmse.mean) + "\n";
    }
    return out;
}

// T rows; columns: time, then channel:expert for every expert.
inline std::string per_timestep_table(const BenchmarkReport& r, const SplitScores& s) {
    std::string out = "time";
    for (auto ch : kChannelNames)
        for (const auto& e : r.experts) out += "," + std::string(ch) + ":" + e;
    out += '\n';
    std::vector<const ModelScores*> rows;
    for (const auto& e : r.experts) rows.push_back(&s.find(e));
    for (std::size_t t = 0; t < r.steps; ++t) {
        out += io::format_general(static_cast<double>(t) * r.dt, 12);
        for (std::size_t ch = 0; ch < kChannelCount; ++ch)
            for (const auto* m : rows)
                out += "," + io::format_double(m->per_timestep(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(t)));
        out += '\n';
    }
    return out;
}

inline json scores_json(const SplitScores& s) {
    json out = json::object();
    for (const auto& m : s.models) {
        json e;
        e["kind"] = m.ensemble ? "ensemble" : "expert";
        e["mean"] = m.rmse.mean;
        json ch = json::object();
        for (std::size_t c = 0; c < kChannelCount; ++c) ch[std::string(kChannelNames[c])] = m.rmse.channel[c];
        e["channels"] = ch;
        json pt = json::object();
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            std::vector<double> row(m.per_timestep.cols());
            for (Eigen::Index t = 0; t < m.per_timestep.cols(); ++t)
                row[static_cast<std::size_t>(t)] = m.per_timestep(static_cast<Eigen::Index>(c), t);
            pt[std::string(kChannelNames[c])] = row;
        }
        e["per_timestep"] = pt;
        out[m.name] = e;
    }
    return out;
}

inline json selection_json(const SelectionMap& m) {
    json out;
    out["pool"] = m.pool();
    out["counts"] = m.counts();
    out["calibration"] = to_string(m.calibration());
    return out;
}

}  // namespace detail

inline std::string summary_json(const BenchmarkReport& r) {
    json j;
    j["units"] = "normalized RMSE (tables present values x1e-2)";
    j["dt"] = r.dt;
    j["T"] = r.steps;
    j["experts"] = r.experts;
    j["ensembles"] = r.ensembles;
    j["validation"] = detail::scores_json(r.validation);
    j["test"] = detail::scores_json(r.test);
    if (r.hybrid1) j["hybrid1"] = detail::selection_json(*r.hybrid1);
    if (r.hybrid2) j["hybrid2"] = detail::selection_json(*r.hybrid2);
    if (r.weights) {
        j["aggregated"]["eta"] = r.weights->eta();
        json table = json::array();
        for (const auto& e : r.eta_table) table.push_back({{"eta", e.eta}, {"validation_rmse", e.validation_rmse}});
        j["aggregated"]["eta_table"] = table;
    }
    if (auto deg = r.aggregated_degradation()) j["aggregated"]["test_minus_validation_rmse"] = *deg;
    json tuning = json::array();
    for (const auto& t : r.tuning)
        tuning.push_back({{"expert", t.expert}, {"point", t.point}, {"validation_rmse", t.validation_rmse},
                          {"chosen", t.chosen}});
    j["tuning"] = tuning;
    json thr = json::array();
    for (const auto& t : r.throughput) thr.push_back({{"model", t.model}, {"n", t.n}, {"checksum", t.checksum}});
    j["throughput"] = thr;
    j["consistency_violations"] = check_report(r);
    return j.dump(1) + "\n";
}

// Everything that depends on the wall clock.
inline std::string timings_json(const BenchmarkReport& r) {
    json j;
    json models = json::object();
    for (const auto& t : r.timings)
        models[t.name] = {{"kind", t.ensemble ? "ensemble" : "expert"},
                          {"fit_seconds", t.timing.fit_seconds},
                          {"predict_seconds_per_100", t.timing.predict_seconds_per_100}};
    j["models"] = models;
    json thr = json::array();
    for (const auto& t : r.throughput)
        thr.push_back({{"model", t.model}, {"n", t.n}, {"seconds", t.seconds}, {"per_second", t.per_second}});
    j["throughput"] = thr;
    return j.dump(1) + "\n";
}

// File name -> content. Deterministic files first; timing files are listed
// by timing_files().
inline std::vector<std::pair<std::string, std::string>> report_files(const BenchmarkReport& r) {
    std::vector<std::pair<std::string, std::string>> f;

    std::string per_expert = "model,validation_mean_x1e2,test_mean_x1e2\n";
    for (const auto& e : r.experts)
        per_expert += e + "," + detail::x100(r.validation.find(e).rmse.mean) + "," + detail::x100(r.test.find(e).rmse.mean) + "\n";
    f.emplace_back("expert_rmse.csv", per_expert);

    SplitScores experts_only{Split::validation, {}};
    for (const auto& e : r.experts) experts_only.models.push_back(r.validation.find(e));
    f.emplace_back("expert_channels_validation.csv", detail::channel_table(experts_only));
    f.emplace_back("comparison_validation.csv", detail::channel_table(r.validation));
    f.emplace_back("comparison_test.csv", detail::channel_table(r.test));

    std::string tune = "expert,point,validation_rmse_x1e2,chosen\n";
    for (const auto& t : r.tuning)
        tune += t.expert + ",\"" + t.point + "\"," + detail::x100(t.validation_rmse) + "," + (t.chosen ? "1" : "0") + "\n";
    f.emplace_back("tuning.csv", tune);

    f.emplace_back("per_timestep_validation.csv", detail::per_timestep_table(r, r.validation));
    f.emplace_back("per_timestep_test.csv", detail::per_timestep_table(r, r.test));
    if (r.hybrid1) f.emplace_back("hybrid1_selection.csv", selection_csv(*r.hybrid1, r.dt));
    if (r.hybrid2) f.emplace_back("hybrid2_selection.csv", selection_csv(*r.hybrid2, r.dt));
    if (r.weights) f.emplace_back("aggregated_weights.csv", weights_csv(*r.weights, r.dt));
    f.emplace_back("summary.json", summary_json(r));
    return f;
}

inline std::vector<std::pair<std::string, std::string>> timing_files(const BenchmarkReport& r) {
    std::vector<std::pair<std::string, std::string>> f;
    std::string per_expert = "model,fit_seconds,predict_seconds_per_100\n";
    std::string all = "model,kind,fit_seconds,predict_seconds_per_100\n";
    for (const auto& t : r.timings) {
        const auto vals = io::format_double(t.timing.fit_seconds) + "," + io::format_double(t.timing.predict_seconds_per_100);
        if (!t.ensemble) per_expert += t.name + "," + vals + "\n";
        all += t.name + (t.ensemble ? ",ensemble," : ",expert,") + vals + "\n";
    }
    f.emplace_back("expert_timing.csv", per_expert);
    f.emplace_back("timing_all.csv", all);
    if (!r.throughput.empty()) {
        std::string thr_csv = "model,n,seconds,predictions_per_second\n";
        for (const auto& t : r.throughput)
            thr_csv += t.model + "," + std::to_string(t.n) + "," + io::format_double(t.seconds) + "," +
                  io::format_double(t.per_second) + "\n";
        f.emplace_back("throughput.csv", thr_csv);
    }
    f.emplace_back("timings.json", timings_json(r));
    return f;
}

inline void emit_report(const BenchmarkReport& r, const std::filesystem::path& dir) {
    for (const auto& [name, content] : report_files(r)) io::write_file_atomic(dir / name, content);
    for (const auto& [name, content] : timing_files(r)) io::write_file_atomic(dir / name, content);
}

}  // namespace aebsurro
