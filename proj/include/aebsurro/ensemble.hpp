#pragma once

// Per-timestep ensembles over a pool of experts.
//
// Hybrid 1 picks, at every (channel, timestep), the expert with the lowest
// calibration RMSE. Hybrid 2 does the same within the three experts Hybrid 1
// uses most. The aggregated model mixes all experts with exponentially
// weighted averages:
//
//   w_j(n,t) = exp(-eta * L_j(n,t)^2 * S) / sum_k exp(-eta * L_k(n,t)^2 * S)
//
// where L is the per-cell RMSE and S the number of calibration scenarios, so
// the exponent is the summed squared error of expert j at that cell.

#include "aebsurro/dataset.hpp"
#include "aebsurro/errors.hpp"
#include "aebsurro/io.hpp"
#include "aebsurro/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

namespace aebsurro {

// losses(j, n, t) for experts in pool order.
class LossArray {
public:
    LossArray() = default;
    LossArray(std::vector<std::string> experts, std::size_t steps, std::size_t scenarios, std::vector<double> data)
        : experts_(std::move(experts)), steps_(steps), scenarios_(scenarios), data_(std::move(data)) {
        if (data_.size() != experts_.size() * kChannelCount * steps_)
            fail(ErrorKind::dimension, "loss array size does not match experts x channels x steps");
        for (double v : data_)
            if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::validation, "loss array holds a negative or non-finite value");
    }

    const std::vector<std::string>& experts() const { return experts_; }
    std::size_t size() const { return experts_.size(); }
    std::size_t steps() const { return steps_; }
    std::size_t cells() const { return kChannelCount * steps_; }
    // S: scenarios behind each loss value.
    std::size_t scenarios() const { return scenarios_; }

    double operator()(std::size_t j, std::size_t c, std::size_t t) const { return data_[j * cells() + c * steps_ + t]; }
    double at_cell(std::size_t j, std::size_t cell) const { return data_[j * cells() + cell]; }

    // Mean over channels of the channel RMSE recovered from the cell losses.
    double mean_rmse(std::size_t j) const {
        double acc = 0.0;
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            double ms = 0.0;
            for (std::size_t t = 0; t < steps_; ++t) ms += (*this)(j, c, t) * (*this)(j, c, t);
            acc += std::sqrt(ms / static_cast<double>(steps_));
        }
        return acc / static_cast<double>(kChannelCount);
    }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t j = 0; j < experts_.size(); ++j)
            if (experts_[j] == name) return j;
        fail(ErrorKind::alignment, "expert '" + name + "' is not in the loss array");
    }

private:
    std::vector<std::string> experts_;
    std::size_t steps_ = 0;
    std::size_t scenarios_ = 0;
    std::vector<double> data_;
};

namespace detail {

inline void check_unique_names(const std::vector<const PredictionCube*>& cubes) {
    for (std::size_t a = 0; a < cubes.size(); ++a)
        for (std::size_t b = a + 1; b < cubes.size(); ++b)
            if (cubes[a]->expert_name == cubes[b]->expert_name)
                fail(ErrorKind::configuration, "expert name '" + cubes[a]->expert_name + "' appears twice in the pool");
}

inline std::vector<const PredictionCube*> pointers(const std::vector<PredictionCube>& cubes) {
    std::vector<const PredictionCube*> out;
    for (const auto& c : cubes) out.push_back(&c);
    return out;
}

}  // namespace detail

// Cubes are restricted to `ids` (in that order) before scoring against truth.
inline LossArray per_timestep_loss(const std::vector<PredictionCube>& cubes, const std::vector<std::string>& ids,
                                   const RowMatrix& truth) {
    if (cubes.empty()) fail(ErrorKind::configuration, "no experts to score");
    detail::check_unique_names(detail::pointers(cubes));
    if (static_cast<Eigen::Index>(ids.size()) != truth.rows())
        fail(ErrorKind::alignment, "truth rows do not match the requested ids");
    const std::size_t T = static_cast<std::size_t>(truth.cols()) / kChannelCount;
    std::vector<std::string> names;
    std::vector<double> data;
    data.reserve(cubes.size() * kChannelCount * T);
    for (const auto& cube : cubes) {
        if (cube.steps != T)
            fail(ErrorKind::dimension, "expert '" + cube.expert_name + "' has T=" + std::to_string(cube.steps) +
                                           ", expected " + std::to_string(T));
        const RowMatrix L = rmse_per_timestep(cube.select(ids).values, truth);
        for (std::size_t c = 0; c < kChannelCount; ++c)
            for (std::size_t t = 0; t < T; ++t)
                data.push_back(L(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)));
        names.push_back(cube.expert_name);
    }
    return LossArray(std::move(names), T, ids.size(), std::move(data));
}

inline LossArray per_timestep_loss(const std::vector<PredictionCube>& cubes, const Dataset& d, Split split) {
    for (const auto& c : cubes) check_cube(c, d);
    return per_timestep_loss(cubes, d.ids(split), d.targets(split));
}

// Chosen expert per (channel, timestep), as an index into pool().
class SelectionMap {
public:
    SelectionMap() = default;
    SelectionMap(std::vector<std::string> pool, std::size_t steps, std::vector<std::size_t> cells, Split calibration)
        : pool_(std::move(pool)), steps_(steps), cells_(std::move(cells)), calibration_(calibration) {
        if (cells_.size() != kChannelCount * steps_) fail(ErrorKind::dimension, "selection map has the wrong size");
        for (auto c : cells_)
            if (c >= pool_.size()) fail(ErrorKind::invariant, "selection map names an expert outside its pool");
    }

    const std::vector<std::string>& pool() const { return pool_; }
    std::size_t steps() const { return steps_; }
    Split calibration() const { return calibration_; }
    std::size_t index(std::size_t c, std::size_t t) const { return cells_[c * steps_ + t]; }
    const std::string& expert(std::size_t c, std::size_t t) const { return pool_[index(c, t)]; }
    const std::vector<std::size_t>& cells() const { return cells_; }

    // Cells won by each pool member.
    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> n(pool_.size(), 0);
        for (auto c : cells_) ++n[c];
        return n;
    }

    bool operator==(const SelectionMap&) const = default;

private:
    std::vector<std::string> pool_;
    std::size_t steps_ = 0;
    std::vector<std::size_t> cells_;
    Split calibration_ = Split::validation;
};

namespace detail {

// Argmin over `members` (indices into the loss array) at each cell; the
// returned cells index into `members`. Earlier members win ties.
inline std::vector<std::size_t> restricted_argmin(const LossArray& L, const std::vector<std::size_t>& members) {
    std::vector<std::size_t> cells(L.cells());
    for (std::size_t cell = 0; cell < L.cells(); ++cell) {
        std::size_t best = 0;
        for (std::size_t m = 1; m < members.size(); ++m)
            if (L.at_cell(members[m], cell) < L.at_cell(members[best], cell)) best = m;
        cells[cell] = best;
    }
    return cells;
}

}  // namespace detail

inline SelectionMap build_hybrid1(const LossArray& L, Split calibration = Split::validation) {
    if (L.size() < 2) fail(ErrorKind::configuration, "hybrid 1 needs at least 2 experts");
    std::vector<std::size_t> all(L.size());
    std::iota(all.begin(), all.end(), 0);
    return SelectionMap(L.experts(), L.steps(), detail::restricted_argmin(L, all), calibration);
}

// The three most used experts of hybrid1 (ties toward lower mean RMSE, then
// pool order), listed in pool order.
inline std::vector<std::size_t> hybrid2_pool(const LossArray& L, const SelectionMap& hybrid1) {
    if (L.size() < 3) fail(ErrorKind::configuration, "hybrid 2 needs at least 3 experts");
    if (hybrid1.pool() != L.experts()) fail(ErrorKind::alignment, "hybrid 1 map and loss array pools differ");
    const auto counts = hybrid1.counts();
    std::vector<double> mean(L.size());
    for (std::size_t j = 0; j < L.size(); ++j) mean[j] = L.mean_rmse(j);
    std::vector<std::size_t> order(L.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (counts[a] != counts[b]) return counts[a] > counts[b];
        return mean[a] < mean[b];
    });
    order.resize(3);
    std::sort(order.begin(), order.end());
    return order;
}

inline SelectionMap build_hybrid2(const LossArray& L, const SelectionMap& hybrid1) {
    const auto members = hybrid2_pool(L, hybrid1);
    std::vector<std::string> names;
    for (auto m : members) names.push_back(L.experts()[m]);
    return SelectionMap(std::move(names), L.steps(), detail::restricted_argmin(L, members), hybrid1.calibration());
}

// weight(j, n, t); sums to one over j at every cell.
class WeightField {
public:
    WeightField() = default;
    WeightField(std::vector<std::string> experts, std::size_t steps, double eta, Split calibration,
                std::vector<double> data)
        : experts_(std::move(experts)), steps_(steps), eta_(eta), calibration_(calibration), data_(std::move(data)) {
        if (data_.size() != experts_.size() * kChannelCount * steps_)
            fail(ErrorKind::dimension, "weight field has the wrong size");
    }

    const std::vector<std::string>& experts() const { return experts_; }
    std::size_t steps() const { return steps_; }
    std::size_t cells() const { return kChannelCount * steps_; }
    double eta() const { return eta_; }
    Split calibration() const { return calibration_; }
    double operator()(std::size_t j, std::size_t c, std::size_t t) const { return data_[j * cells() + c * steps_ + t]; }
    double at_cell(std::size_t j, std::size_t cell) const { return data_[j * cells() + cell]; }

    // Largest deviation of a cell's weight sum from one; throws on a
    // negative or non-finite weight.
    double simplex_error() const {
        double worst = 0.0;
        for (std::size_t cell = 0; cell < cells(); ++cell) {
            double s = 0.0;
            for (std::size_t j = 0; j < experts_.size(); ++j) {
                const double w = at_cell(j, cell);
                if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::invariant, "weight outside [0, inf)");
                s += w;
            }
            worst = std::max(worst, std::abs(s - 1.0));
        }
        return worst;
    }

    // Heaviest expert per cell (earlier expert on ties), as a selection map.
    SelectionMap argmax() const {
        std::vector<std::size_t> cells_out(cells());
        for (std::size_t cell = 0; cell < cells(); ++cell) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < experts_.size(); ++j)
                if (at_cell(j, cell) > at_cell(best, cell)) best = j;
            cells_out[cell] = best;
        }
        return SelectionMap(experts_, steps_, std::move(cells_out), calibration_);
    }

    bool operator==(const WeightField&) const = default;

private:
    std::vector<std::string> experts_;
    std::size_t steps_ = 0;
    double eta_ = 0.0;
    Split calibration_ = Split::validation;
    std::vector<double> data_;
};

inline WeightField compute_ewa_weights(const LossArray& L, double eta, Split calibration = Split::validation) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) fail(ErrorKind::out_of_range, "eta must be finite and >= 0");
    if (L.size() == 0) fail(ErrorKind::configuration, "no experts to weight");
    const std::size_t J = L.size();
    const double S = static_cast<double>(L.scenarios());
    std::vector<double> data(J * L.cells());
    std::vector<double> a(J);
    for (std::size_t cell = 0; cell < L.cells(); ++cell) {
        if (eta == 0.0) {
            for (std::size_t j = 0; j < J; ++j) data[j * L.cells() + cell] = 1.0 / static_cast<double>(J);
            continue;
        }
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < J; ++j) {
            const double l = L.at_cell(j, cell);
            a[j] = -eta * l * l * S;
            top = std::max(top, a[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < J; ++j) z += (a[j] = std::exp(a[j] - top));
        for (std::size_t j = 0; j < J; ++j) data[j * L.cells() + cell] = a[j] / z;
    }
    return WeightField(L.experts(), L.steps(), eta, calibration, std::move(data));
}

namespace detail {

// Finds each named expert among the cubes and restricts them to common ids
// (those of the first referenced cube, in its order).
inline std::vector<PredictionCube> gather(const std::vector<std::string>& names,
                                          const std::vector<PredictionCube>& cubes) {
    std::unordered_map<std::string, const PredictionCube*> by_name;
    for (const auto& c : cubes) by_name.emplace(c.expert_name, &c);
    std::vector<PredictionCube> out;
    for (const auto& n : names) {
        auto it = by_name.find(n);
        if (it == by_name.end()) fail(ErrorKind::alignment, "no predictions for expert '" + n + "'");
        out.push_back(out.empty() ? *it->second : it->second->select(out.front().ids));
        if (out.back().steps != out.front().steps) fail(ErrorKind::dimension, "experts disagree on T");
    }
    return out;
}

}  // namespace detail

// Per-cell copy of the selected expert's column. `preds` follows map.pool().
inline RowMatrix combine_selected(const SelectionMap& map, const std::vector<const RowMatrix*>& preds) {
    if (preds.size() != map.pool().size()) fail(ErrorKind::alignment, "prediction count differs from map pool");
    const auto rows = preds.front()->rows();
    RowMatrix out(rows, static_cast<Eigen::Index>(kChannelCount * map.steps()));
    for (std::size_t cell = 0; cell < map.cells().size(); ++cell)
        out.col(static_cast<Eigen::Index>(cell)) = preds[map.cells()[cell]]->col(static_cast<Eigen::Index>(cell));
    return out;
}

inline RowMatrix combine_weighted(const WeightField& w, const std::vector<const RowMatrix*>& preds) {
    if (preds.size() != w.experts().size()) fail(ErrorKind::alignment, "prediction count differs from weight pool");
    const auto rows = preds.front()->rows();
    RowMatrix out = RowMatrix::Zero(rows, static_cast<Eigen::Index>(w.cells()));
    for (std::size_t j = 0; j < preds.size(); ++j)
        for (std::size_t cell = 0; cell < w.cells(); ++cell)
            out.col(static_cast<Eigen::Index>(cell)) += w.at_cell(j, cell) * preds[j]->col(static_cast<Eigen::Index>(cell));
    return out;
}

inline PredictionCube predict_hybrid(const SelectionMap& map, const std::vector<PredictionCube>& cubes,
                                     std::string name) {
    const auto pool = detail::gather(map.pool(), cubes);
    if (pool.front().steps != map.steps()) fail(ErrorKind::dimension, "selection map and predictions disagree on T");
    std::vector<const RowMatrix*> preds;
    for (const auto& c : pool) preds.push_back(&c.values);
    return PredictionCube{std::move(name), pool.front().ids, map.steps(), combine_selected(map, preds), std::nullopt};
}

inline PredictionCube predict_aggregated(const WeightField& w, const std::vector<PredictionCube>& cubes,
                                         std::string name) {
    const auto pool = detail::gather(w.experts(), cubes);
    if (pool.front().steps != w.steps()) fail(ErrorKind::dimension, "weight field and predictions disagree on T");
    std::vector<const RowMatrix*> preds;
    for (const auto& c : pool) preds.push_back(&c.values);
    return PredictionCube{std::move(name), pool.front().ids, w.steps(), combine_weighted(w, preds), std::nullopt};
}

struct EtaScore {
    double eta = 0.0;
    double validation_rmse = 0.0;
};

struct EtaChoice {
    WeightField weights;
    std::vector<EtaScore> table;
};

// Picks eta from `grid` by mean RMSE of the aggregated model on the
// calibration split; earlier grid entries win ties.
inline EtaChoice select_eta(const LossArray& L, const std::vector<PredictionCube>& cubes,
                            const std::vector<std::string>& ids, const RowMatrix& truth,
                            const std::vector<double>& grid, Split calibration = Split::validation) {
    if (grid.empty()) fail(ErrorKind::configuration, "eta grid is empty");
    std::vector<PredictionCube> restricted;
    for (const auto& c : detail::gather(L.experts(), cubes)) restricted.push_back(c.select(ids));
    EtaChoice out;
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto w = compute_ewa_weights(L, grid[i], calibration);
        const double s = rmse_mean(predict_aggregated(w, restricted, "aggregated").values, truth);
        out.table.push_back({grid[i], s});
        if (i == 0 || s < out.table[best].validation_rmse) {
            best = i;
            out.weights = std::move(w);
        }
    }
    return out;
}

inline EtaChoice select_eta(const LossArray& L, const std::vector<PredictionCube>& cubes, const Dataset& d,
                            Split calibration, const std::vector<double>& grid) {
    return select_eta(L, cubes, d.ids(calibration), d.targets(calibration), grid, calibration);
}

// The three ensembles calibrated on one split, with predictions for every
// id the expert cubes share.
struct EnsembleSet {
    LossArray losses;
    SelectionMap hybrid1;
    SelectionMap hybrid2;
    EtaChoice eta;
    std::vector<PredictionCube> cubes;  // hybrid1, hybrid2, aggregated
};

inline const std::array<std::string, 3>& ensemble_names() {
    static const std::array<std::string, 3> n = {"hybrid1", "hybrid2", "aggregated"};
    return n;
}

inline EnsembleSet calibrate_ensembles(const std::vector<PredictionCube>& cubes, const Dataset& d,
                                       const std::vector<double>& eta_grid, Split calibration = Split::validation) {
    EnsembleSet out;
    out.losses = per_timestep_loss(cubes, d, calibration);
    out.hybrid1 = build_hybrid1(out.losses, calibration);
    out.hybrid2 = build_hybrid2(out.losses, out.hybrid1);
    out.eta = select_eta(out.losses, cubes, d, calibration, eta_grid);
    out.cubes.push_back(predict_hybrid(out.hybrid1, cubes, ensemble_names()[0]));
    out.cubes.push_back(predict_hybrid(out.hybrid2, cubes, ensemble_names()[1]));
    out.cubes.push_back(predict_aggregated(out.eta.weights, cubes, ensemble_names()[2]));
    return out;
}

// ---- CSV exports: one row per timestep.

inline std::string selection_csv(const SelectionMap& map, double dt) {
    std::string out = "time";
    for (auto ch : kChannelNames) out += "," + std::string(ch);
    out += '\n';
    for (std::size_t t = 0; t < map.steps(); ++t) {
        out += io::format_general(static_cast<double>(t) * dt, 12);
        for (std::size_t c = 0; c < kChannelCount; ++c) out += "," + map.expert(c, t);
        out += '\n';
    }
    return out;
}

inline std::string weights_csv(const WeightField& w, double dt) {
    std::string out = "time";
    for (auto ch : kChannelNames)
        for (const auto& e : w.experts()) out += "," + std::string(ch) + ":" + e;
    out += '\n';
    for (std::size_t t = 0; t < w.steps(); ++t) {
        out += io::format_general(static_cast<double>(t) * dt, 12);
        for (std::size_t c = 0; c < kChannelCount; ++c)
            for (std::size_t j = 0; j < w.experts().size(); ++j) out += "," + io::format_double(w(j, c, t));
        out += '\n';
    }
    return out;
}

}  // namespace aebsurro
