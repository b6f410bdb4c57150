#pragma once

// Construction of experts by family name, model artifacts, and grid tuning
// on the validation split.

#include "aebsurro/experts/expert.hpp"
#include "aebsurro/experts/forest.hpp"
#include "aebsurro/experts/knn.hpp"
#include "aebsurro/experts/krr.hpp"
#include "aebsurro/experts/pca_rf.hpp"
#include "aebsurro/experts/pce.hpp"
#include "aebsurro/metrics.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace aebsurro {

inline const std::vector<std::string>& expert_families() {
    static const std::vector<std::string> f = {"knn", "krr", "pce", "rf_global", "rf_per_series", "pca_rf"};
    return f;
}

struct ExpertContext {
    std::vector<Interval> pce_domain = PceExpert::default_domain();
    std::uint64_t seed = 0;
    int jobs = 1;
};

inline std::unique_ptr<Expert> make_expert(const std::string& family, const std::string& name, const Hyperparams& hp,
                                           const ExpertContext& ctx = {}) {
    using detail::as_int;
    using detail::require_param;
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : hp) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) fail(ErrorKind::configuration, "expert '" + name + "': unknown hyperparameter '" + k + "'");
        }
    };
    const char* forest_keys[] = {"n_trees", "mtry", "min_leaf", "max_depth", "bootstrap", "seed"};
    ForestParams base;
    base.seed = ctx.seed;
    base.jobs = ctx.jobs;

    if (family == "knn") {
        allow({"k"});
        return std::make_unique<KnnExpert>(as_int(require_param(hp, "k", 5), "k"), name);
    }
    if (family == "krr") {
        allow({"gamma", "lambda"});
        return std::make_unique<KrrExpert>(require_param(hp, "gamma", 0.3), require_param(hp, "lambda", 1e-4), name);
    }
    if (family == "pce") {
        allow({"degree"});
        return std::make_unique<PceExpert>(as_int(require_param(hp, "degree", 3), "degree"), ctx.pce_domain, name);
    }
    if (family == "rf_global" || family == "rf_per_series") {
        for (const auto& [k, v] : hp)
            if (std::find(std::begin(forest_keys), std::end(forest_keys), k) == std::end(forest_keys))
                fail(ErrorKind::configuration, "expert '" + name + "': unknown hyperparameter '" + k + "'");
        const auto p = ForestParams::from_hyperparams(hp, base);
        if (family == "rf_global") return std::make_unique<RfGlobalExpert>(p, name);
        return std::make_unique<RfPerSeriesExpert>(p, name);
    }
    if (family == "pca_rf") {
        for (const auto& [k, v] : hp)
            if (k != "variance_kept" &&
                std::find(std::begin(forest_keys), std::end(forest_keys), k) == std::end(forest_keys))
                fail(ErrorKind::configuration, "expert '" + name + "': unknown hyperparameter '" + k + "'");
        Hyperparams forest_hp = hp;
        forest_hp.erase("variance_kept");
        return std::make_unique<PcaRfExpert>(require_param(hp, "variance_kept", 0.99),
                                             ForestParams::from_hyperparams(forest_hp, base), name);
    }
    fail(ErrorKind::configuration, "unknown expert family '" + family + "'");
}

inline std::string serialize_model(const Expert& e) {
    io::BinaryWriter w;
    e.save(w);
    return w.bytes();
}

inline std::unique_ptr<Expert> deserialize_model(std::string bytes) {
    io::BinaryReader r(std::move(bytes));
    if (r.get_string() != kModelMagic) fail(ErrorKind::parse, "not a model artifact");
    const auto version = r.get<std::uint32_t>();
    if (version != kModelVersion)
        fail(ErrorKind::parse, "unsupported model artifact version " + std::to_string(version));
    const auto family = r.get_string();
    auto e = make_expert(family, "", {});
    e->load_body(r);
    if (!r.at_end()) fail(ErrorKind::parse, "trailing bytes in model artifact");
    return e;
}

inline void save_model(const Expert& e, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize_model(e));
}

inline std::unique_ptr<Expert> load_model(const std::filesystem::path& path) {
    return deserialize_model(io::read_file(path));
}

// Ordered hyperparameter axes; the last axis varies fastest.
struct HyperGrid {
    std::vector<std::pair<std::string, std::vector<double>>> axes;

    void validate() const {
        for (const auto& [k, v] : axes)
            if (v.empty()) fail(ErrorKind::configuration, "hyperparameter grid for '" + k + "' is empty");
    }

    std::vector<Hyperparams> points() const {
        validate();
        std::vector<Hyperparams> out{Hyperparams{}};
        for (const auto& [key, values] : axes) {
            std::vector<Hyperparams> next;
            for (const auto& p : out)
                for (double v : values) {
                    auto q = p;
                    q[key] = v;
                    next.push_back(std::move(q));
                }
            out = std::move(next);
        }
        return out;
    }
};

struct GridScore {
    Hyperparams point;
    double score = 0.0;
};

struct TuneResult {
    std::unique_ptr<Expert> best;
    std::size_t best_index = 0;
    std::vector<GridScore> table;
};

// Index of the smallest value; ties go to the earliest entry.
inline std::size_t argmin_first(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::out_of_range, "argmin of an empty sequence");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

// Fits every grid point on the training split and keeps the one with the
// lowest mean validation RMSE.
inline TuneResult tune(const std::string& family, const std::string& name, const HyperGrid& grid, const Dataset& d,
                       const ExpertContext& ctx = {}) {
    const auto points = grid.points();
    const Eigen::MatrixXd Xtr = d.params(Split::train);
    const RowMatrix Ytr = d.targets(Split::train);
    const Eigen::MatrixXd Xva = d.params(Split::validation);
    const RowMatrix Yva = d.targets(Split::validation);

    TuneResult result;
    std::vector<double> scores;
    for (const auto& p : points) {
        auto e = make_expert(family, name, p, ctx);
        e->fit(Xtr, Ytr);
        const double s = rmse_mean(e->predict(Xva), Yva);
        scores.push_back(s);
        result.table.push_back({p, s});
        if (scores.size() == 1 || s < scores[result.best_index]) {
            result.best_index = scores.size() - 1;
            result.best = std::move(e);
        }
    }
    return result;
}

}  // namespace aebsurro
