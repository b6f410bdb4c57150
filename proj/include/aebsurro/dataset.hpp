#pragma once

// Datasets of (parameters, simulated series) pairs, min-max normalization
// from training statistics, JSON-lines persistence, and prediction cubes
// (per-expert normalized predictions, internal or imported).

#include "aebsurro/errors.hpp"
#include "aebsurro/io.hpp"
#include "aebsurro/sim.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace aebsurro {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using json = nlohmann::json;

enum class Split { train, validation, test };

inline constexpr std::array<Split, 3> kAllSplits = {Split::train, Split::validation, Split::test};

constexpr std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
    for (auto sp : kAllSplits)
        if (to_string(sp) == s) return sp;
    return std::nullopt;
}

struct SplitCounts {
    std::size_t train = 1000;
    std::size_t validation = 100;
    std::size_t test = 100;

    std::size_t total() const { return train + validation + test; }
};

struct Timing {
    double fit_seconds = 0.0;
    double predict_seconds_per_100 = 0.0;
};

// Per-channel (min, max) over the training split, in channel units.
struct NormStats {
    std::array<std::array<double, 2>, kChannelCount> range{};

    double lo(std::size_t c) const { return range[c][0]; }
    double hi(std::size_t c) const { return range[c][1]; }

    void validate() const {
        for (std::size_t c = 0; c < kChannelCount; ++c)
            if (!std::isfinite(lo(c)) || !std::isfinite(hi(c)) || !(hi(c) > lo(c)))
                fail(ErrorKind::normalization,
                     "degenerate range for channel " + std::string(kChannelNames[c]));
    }

    bool operator==(const NormStats&) const = default;
};

// Flattened channel-major layout: index = channel * T + t.
inline Eigen::RowVectorXd normalize(const ScenarioSeries& s, const NormStats& norm) {
    norm.validate();
    const std::size_t T = s.steps();
    Eigen::RowVectorXd out(static_cast<Eigen::Index>(kChannelCount * T));
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (s.channels[c].size() != T) fail(ErrorKind::dimension, "ragged scenario series");
        const double lo = norm.lo(c), span = norm.hi(c) - norm.lo(c);
        for (std::size_t t = 0; t < T; ++t)
            out(static_cast<Eigen::Index>(c * T + t)) = (s.channels[c][t] - lo) / span;
    }
    return out;
}

inline ScenarioSeries denormalize(const Eigen::Ref<const Eigen::RowVectorXd>& row,
                                  const NormStats& norm) {
    norm.validate();
    if (row.size() % static_cast<Eigen::Index>(kChannelCount) != 0)
        fail(ErrorKind::dimension, "normalized row length is not a multiple of the channel count");
    const auto T = static_cast<std::size_t>(row.size()) / kChannelCount;
    ScenarioSeries s;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        s.channels[c].resize(T);
        const double lo = norm.lo(c), span = norm.hi(c) - norm.lo(c);
        for (std::size_t t = 0; t < T; ++t)
            s.channels[c][t] = row(static_cast<Eigen::Index>(c * T + t)) * span + lo;
    }
    return s;
}

struct Scenario {
    std::string id;
    ParameterVector params;
    ScenarioSeries series;
    Split split = Split::train;

    bool operator==(const Scenario&) const = default;
};

class Dataset {
public:
    Dataset(double dt, std::vector<Scenario> scenarios, NormStats norm)
        : dt_(dt), scenarios_(std::move(scenarios)), norm_(norm) {
        if (scenarios_.empty()) fail(ErrorKind::schema, "dataset has no scenarios");
        steps_ = scenarios_.front().series.steps();
        for (std::size_t i = 0; i < scenarios_.size(); ++i) {
            const auto& s = scenarios_[i];
            for (const auto& ch : s.series.channels)
                if (ch.size() != steps_)
                    fail(ErrorKind::schema, "scenario '" + s.id + "' has mismatched series length");
            if (!index_.emplace(s.id, i).second)
                fail(ErrorKind::schema, "duplicate scenario id '" + s.id + "'");
        }
        norm_.validate();
    }

    // Builds a dataset whose normalization comes from its training split.
    static Dataset from_scenarios(double dt, std::vector<Scenario> scenarios) {
        const auto norm = train_norm(scenarios);
        return Dataset(dt, std::move(scenarios), norm);
    }

    static NormStats train_norm(const std::vector<Scenario>& scenarios) {
        NormStats norm;
        for (auto& r : norm.range) r = {std::numeric_limits<double>::infinity(),
                                        -std::numeric_limits<double>::infinity()};
        bool any = false;
        for (const auto& s : scenarios) {
            if (s.split != Split::train) continue;
            any = true;
            for (std::size_t c = 0; c < kChannelCount; ++c)
                for (double v : s.series.channels[c]) {
                    norm.range[c][0] = std::min(norm.range[c][0], v);
                    norm.range[c][1] = std::max(norm.range[c][1], v);
                }
        }
        if (!any) fail(ErrorKind::normalization, "no training scenarios to normalize from");
        norm.validate();
        return norm;
    }

    double dt() const { return dt_; }
    std::size_t steps() const { return steps_; }
    std::size_t width() const { return kChannelCount * steps_; }
    std::size_t size() const { return scenarios_.size(); }
    const NormStats& norm() const { return norm_; }
    const std::vector<Scenario>& scenarios() const { return scenarios_; }

    std::optional<std::size_t> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<std::size_t> indices(Split split) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < scenarios_.size(); ++i)
            if (scenarios_[i].split == split) out.push_back(i);
        return out;
    }

    std::size_t count(Split split) const { return indices(split).size(); }

    std::vector<std::string> ids(Split split) const {
        std::vector<std::string> out;
        for (auto i : indices(split)) out.push_back(scenarios_[i].id);
        return out;
    }

    std::vector<std::string> all_ids() const {
        std::vector<std::string> out;
        for (const auto& s : scenarios_) out.push_back(s.id);
        return out;
    }

    Eigen::MatrixXd params(Split split) const { return params_at(indices(split)); }

    Eigen::MatrixXd params_at(const std::vector<std::size_t>& rows) const {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kParamCount));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto a = scenarios_[rows[r]].params.to_array();
            for (std::size_t j = 0; j < kParamCount; ++j)
                X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = a[j];
        }
        return X;
    }

    // Normalized targets, one flattened row per scenario.
    RowMatrix targets(Split split) const { return targets_at(indices(split)); }

    RowMatrix targets_at(const std::vector<std::size_t>& rows) const {
        RowMatrix Y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            Y.row(static_cast<Eigen::Index>(r)) = normalize(scenarios_[rows[r]].series, norm_);
        return Y;
    }

    bool operator==(const Dataset& o) const {
        return dt_ == o.dt_ && steps_ == o.steps_ && scenarios_ == o.scenarios_ && norm_ == o.norm_;
    }

private:
    double dt_;
    std::size_t steps_ = 0;
    std::vector<Scenario> scenarios_;
    NormStats norm_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline Dataset generate(const ParameterPriors& priors, const SimConfig& cfg, const SplitCounts& counts,
                        std::uint64_t seed) {
    if (counts.train == 0 || counts.validation == 0 || counts.test == 0)
        fail(ErrorKind::configuration, "split counts must all be positive");
    cfg.validate();
    const auto params = sample_parameters(priors, counts.total(), seed);
    const int width = std::max(4, static_cast<int>(std::to_string(counts.total() - 1).size()));

    std::vector<Scenario> scenarios;
    scenarios.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::string num = std::to_string(i);
        Scenario s;
        s.id = "s" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
        s.params = params[i];
        s.series = simulate(params[i], cfg);
        s.split = i < counts.train                       ? Split::train
                  : i < counts.train + counts.validation ? Split::validation
                                                         : Split::test;
        scenarios.push_back(std::move(s));
    }
    return Dataset::from_scenarios(cfg.dt, std::move(scenarios));
}

// ---------------------------------------------------------------------------
// JSON-lines persistence

namespace detail {

inline json parse_line(const std::string& line, const std::string& where, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, where + ":" + std::to_string(lineno) + ": " + e.what());
    }
}

inline std::vector<std::pair<std::size_t, std::string>> split_lines(const std::string& text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.emplace_back(n, std::move(line));
    }
    return out;
}

inline double finite_number(const json& v, const std::string& what) {
    if (!v.is_number()) fail(ErrorKind::validation, what + " is not a finite number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ErrorKind::validation, what + " is not a finite number");
    return d;
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        fail(ErrorKind::schema, where + ": missing key '" + key + "'");
    return obj.at(key);
}

inline std::size_t channel_index(std::string_view name) {
    for (std::size_t c = 0; c < kChannelCount; ++c)
        if (kChannelNames[c] == name) return c;
    fail(ErrorKind::schema, "unknown channel '" + std::string(name) + "'");
}

}  // namespace detail

inline std::string serialize(const Dataset& d) {
    json header;
    header["dt"] = d.dt();
    header["T"] = d.steps();
    json norm = json::object();
    for (std::size_t c = 0; c < kChannelCount; ++c)
        norm[std::string(kChannelNames[c])] = {d.norm().lo(c), d.norm().hi(c)};
    header["norm"] = norm;
    json splits = json::object();
    for (const auto& s : d.scenarios()) splits[s.id] = to_string(s.split);
    header["splits"] = splits;

    std::string out = header.dump();
    out += '\n';
    for (const auto& s : d.scenarios()) {
        json line;
        line["id"] = s.id;
        const auto a = s.params.to_array();
        line["params"] = std::vector<double>(a.begin(), a.end());
        line["collision"] = s.series.collision;
        json series = json::object();
        for (std::size_t c = 0; c < kChannelCount; ++c)
            series[std::string(kChannelNames[c])] = s.series.channels[c];
        line["series"] = series;
        out += line.dump();
        out += '\n';
    }
    return out;
}

inline void save(const Dataset& d, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize(d));
}

inline Dataset parse_dataset(const std::string& text, const std::string& where = "<dataset>") {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) fail(ErrorKind::parse, where + ":1: empty dataset file");

    const auto& [hline, htext] = lines.front();
    const json header = detail::parse_line(htext, where, hline);
    const std::string hwhere = where + ":" + std::to_string(hline);
    const double dt = detail::finite_number(detail::require(header, "dt", hwhere), "dt");
    const auto& Tj = detail::require(header, "T", hwhere);
    if (!Tj.is_number_unsigned() || Tj.get<std::size_t>() == 0)
        fail(ErrorKind::schema, hwhere + ": T must be a positive integer");
    const auto T = Tj.get<std::size_t>();

    NormStats norm;
    const auto& nj = detail::require(header, "norm", hwhere);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto& r = detail::require(nj, std::string(kChannelNames[c]).c_str(), hwhere + " norm");
        if (!r.is_array() || r.size() != 2) fail(ErrorKind::schema, hwhere + ": norm entries are [min,max]");
        norm.range[c] = {detail::finite_number(r[0], "norm"), detail::finite_number(r[1], "norm")};
    }
    const auto& sj = detail::require(header, "splits", hwhere);
    if (!sj.is_object()) fail(ErrorKind::schema, hwhere + ": splits must be an object");

    std::vector<Scenario> scenarios;
    std::set<std::string> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& [lineno, text_line] = lines[li];
        const std::string lw = where + ":" + std::to_string(lineno);
        const json row = detail::parse_line(text_line, where, lineno);
        const auto& idj = detail::require(row, "id", lw);
        if (!idj.is_string()) fail(ErrorKind::schema, lw + ": id must be a string");
        Scenario s;
        s.id = idj.get<std::string>();
        const std::string sw = lw + " (scenario '" + s.id + "')";

        const auto& pj = detail::require(row, "params", sw);
        if (!pj.is_array() || pj.size() != kParamCount)
            fail(ErrorKind::schema, sw + ": params must hold 7 numbers");
        std::array<double, kParamCount> pa{};
        for (std::size_t i = 0; i < kParamCount; ++i) pa[i] = detail::finite_number(pj[i], sw + " params");
        s.params = ParameterVector::from_array(pa);

        const auto& cj = detail::require(row, "collision", sw);
        if (!cj.is_boolean()) fail(ErrorKind::schema, sw + ": collision must be a boolean");
        s.series.collision = cj.get<bool>();

        const auto& ser = detail::require(row, "series", sw);
        if (!ser.is_object() || ser.size() != kChannelCount)
            fail(ErrorKind::schema, sw + ": series must have exactly 4 channels");
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto& ch = detail::require(ser, std::string(kChannelNames[c]).c_str(), sw);
            if (!ch.is_array() || ch.size() != T)
                fail(ErrorKind::schema, sw + ": channel " + std::string(kChannelNames[c]) +
                                            " must have T=" + std::to_string(T) + " values");
            auto& dst = s.series.channels[c];
            dst.reserve(T);
            for (const auto& v : ch) dst.push_back(detail::finite_number(v, sw + " series"));
        }

        if (!sj.contains(s.id)) fail(ErrorKind::schema, sw + ": id missing from header splits");
        const auto split = parse_split(sj.at(s.id).get<std::string>());
        if (!split) fail(ErrorKind::schema, sw + ": unknown split label");
        s.split = *split;
        if (!seen.insert(s.id).second) fail(ErrorKind::schema, sw + ": duplicate id");
        scenarios.push_back(std::move(s));
    }
    if (sj.size() != scenarios.size())
        fail(ErrorKind::schema, where + ": header splits list ids with no scenario line");
    return Dataset(dt, std::move(scenarios), norm);
}

inline Dataset load(const std::filesystem::path& path) {
    return parse_dataset(io::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Prediction cubes

struct PredictionCube {
    std::string expert_name;
    std::vector<std::string> ids;
    std::size_t steps = 0;
    RowMatrix values;  // ids.size() x (4 * steps), normalized units
    std::optional<Timing> timing;

    double at(std::size_t scenario, std::size_t channel, std::size_t t) const {
        return values(static_cast<Eigen::Index>(scenario), static_cast<Eigen::Index>(channel * steps + t));
    }

    // Rows for `wanted`, in that order.
    PredictionCube select(const std::vector<std::string>& wanted) const {
        std::unordered_map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
        std::vector<std::string> missing;
        PredictionCube out{expert_name, wanted, steps,
                           RowMatrix(static_cast<Eigen::Index>(wanted.size()), values.cols()), timing};
        for (std::size_t r = 0; r < wanted.size(); ++r) {
            auto it = pos.find(wanted[r]);
            if (it == pos.end()) {
                missing.push_back(wanted[r]);
                continue;
            }
            out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(it->second));
        }
        if (!missing.empty()) {
            std::string msg = "predictions of '" + expert_name + "' lack ids:";
            for (const auto& m : missing) msg += " " + m;
            fail(ErrorKind::alignment, msg);
        }
        return out;
    }

    bool operator==(const PredictionCube& o) const {
        return expert_name == o.expert_name && ids == o.ids && steps == o.steps && values == o.values;
    }
};

inline std::string serialize(const PredictionCube& cube) {
    json header;
    header["expert_name"] = cube.expert_name;
    header["T"] = cube.steps;
    header["channels"] = std::vector<std::string>(kChannelNames.begin(), kChannelNames.end());
    if (cube.timing) {
        header["fit_seconds"] = cube.timing->fit_seconds;
        header["predict_seconds_per_100"] = cube.timing->predict_seconds_per_100;
    }
    std::string out = header.dump();
    out += '\n';
    std::vector<double> buf(cube.steps);
    for (std::size_t r = 0; r < cube.ids.size(); ++r) {
        json line;
        line["id"] = cube.ids[r];
        json series = json::object();
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            for (std::size_t t = 0; t < cube.steps; ++t) buf[t] = cube.at(r, c, t);
            series[std::string(kChannelNames[c])] = buf;
        }
        line["series"] = series;
        out += line.dump();
        out += '\n';
    }
    return out;
}

inline void export_predictions(const PredictionCube& cube, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize(cube));
}

// Parses a prediction file and aligns it to the dataset ids of `splits`
// (all splits by default). Missing or extra ids are alignment errors.
inline PredictionCube parse_predictions(const std::string& text, const Dataset& dataset,
                                        std::vector<Split> splits = {kAllSplits.begin(), kAllSplits.end()},
                                        const std::string& where = "<predictions>") {
    const auto lines = detail::split_lines(text);
    if (lines.empty()) fail(ErrorKind::parse, where + ":1: empty prediction file");
    const auto& [hline, htext] = lines.front();
    const json header = detail::parse_line(htext, where, hline);
    const std::string hwhere = where + ":" + std::to_string(hline);

    const auto& nj = detail::require(header, "expert_name", hwhere);
    if (!nj.is_string() || nj.get<std::string>().empty())
        fail(ErrorKind::schema, hwhere + ": expert_name must be a non-empty string");
    const auto& Tj = detail::require(header, "T", hwhere);
    if (!Tj.is_number_unsigned()) fail(ErrorKind::schema, hwhere + ": T must be a positive integer");
    const auto T = Tj.get<std::size_t>();
    if (T != dataset.steps())
        fail(ErrorKind::dimension, hwhere + ": prediction T=" + std::to_string(T) +
                                       " but dataset T=" + std::to_string(dataset.steps()));
    const auto& chj = detail::require(header, "channels", hwhere);
    if (!chj.is_array() || chj.size() != kChannelCount)
        fail(ErrorKind::dimension, hwhere + ": expected 4 channels");
    std::set<std::size_t> chans;
    for (const auto& c : chj) {
        if (!c.is_string()) fail(ErrorKind::schema, hwhere + ": channel names must be strings");
        chans.insert(detail::channel_index(c.get<std::string>()));
    }
    if (chans.size() != kChannelCount) fail(ErrorKind::schema, hwhere + ": duplicate channel names");

    std::vector<std::string> wanted;
    std::set<std::string> wanted_set;
    for (const auto& s : dataset.scenarios())
        if (std::find(splits.begin(), splits.end(), s.split) != splits.end()) {
            wanted.push_back(s.id);
            wanted_set.insert(s.id);
        }

    PredictionCube raw{nj.get<std::string>(), {}, T, RowMatrix(0, 0), std::nullopt};
    if (header.contains("fit_seconds") || header.contains("predict_seconds_per_100")) {
        Timing tm;
        if (header.contains("fit_seconds"))
            tm.fit_seconds = detail::finite_number(header["fit_seconds"], "fit_seconds");
        if (header.contains("predict_seconds_per_100"))
            tm.predict_seconds_per_100 =
                detail::finite_number(header["predict_seconds_per_100"], "predict_seconds_per_100");
        raw.timing = tm;
    }

    std::vector<std::string> extra;
    std::set<std::string> seen;
    std::vector<std::vector<double>> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto& [lineno, text_line] = lines[li];
        const std::string lw = where + ":" + std::to_string(lineno);
        const json row = detail::parse_line(text_line, where, lineno);
        const auto& idj = detail::require(row, "id", lw);
        if (!idj.is_string()) fail(ErrorKind::schema, lw + ": id must be a string");
        const auto id = idj.get<std::string>();
        if (!seen.insert(id).second) fail(ErrorKind::alignment, lw + ": duplicate id '" + id + "'");
        if (!wanted_set.count(id)) {
            extra.push_back(id);
            continue;
        }
        const auto& ser = detail::require(row, "series", lw);
        if (!ser.is_object() || ser.size() != kChannelCount)
            fail(ErrorKind::dimension, lw + ": series for '" + id + "' must have 4 channels");
        std::vector<double> flat(kChannelCount * T);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            const auto& ch = detail::require(ser, std::string(kChannelNames[c]).c_str(), lw);
            if (!ch.is_array() || ch.size() != T)
                fail(ErrorKind::dimension, lw + ": channel " + std::string(kChannelNames[c]) + " of '" + id +
                                               "' has " + std::to_string(ch.is_array() ? ch.size() : 0) +
                                               " values, expected " + std::to_string(T));
            for (std::size_t t = 0; t < T; ++t)
                flat[c * T + t] = detail::finite_number(ch[t], lw + " prediction for '" + id + "'");
        }
        raw.ids.push_back(id);
        rows.push_back(std::move(flat));
    }

    std::vector<std::string> missing;
    for (const auto& id : wanted)
        if (!seen.count(id)) missing.push_back(id);
    if (!missing.empty() || !extra.empty()) {
        std::string msg = where + ": prediction ids do not match the dataset;";
        if (!missing.empty()) {
            msg += " missing:";
            for (const auto& m : missing) msg += " " + m;
        }
        if (!extra.empty()) {
            msg += " extra:";
            for (const auto& e : extra) msg += " " + e;
        }
        fail(ErrorKind::alignment, msg);
    }

    raw.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kChannelCount * T));
    for (std::size_t r = 0; r < rows.size(); ++r)
        raw.values.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), static_cast<Eigen::Index>(rows[r].size()));
    return raw.select(wanted);
}

inline PredictionCube import_external_predictions(const std::filesystem::path& path, const Dataset& dataset,
                                                  std::vector<Split> splits = {kAllSplits.begin(),
                                                                               kAllSplits.end()}) {
    return parse_predictions(io::read_file(path), dataset, std::move(splits), path.string());
}

// Ties a cube to the dataset: same T, ids known, values finite.
inline void check_cube(const PredictionCube& cube, const Dataset& dataset) {
    if (cube.steps != dataset.steps() || static_cast<std::size_t>(cube.values.cols()) != dataset.width())
        fail(ErrorKind::dimension, "cube '" + cube.expert_name + "' has the wrong series length");
    if (static_cast<std::size_t>(cube.values.rows()) != cube.ids.size())
        fail(ErrorKind::dimension, "cube '" + cube.expert_name + "' row count disagrees with its ids");
    for (const auto& id : cube.ids)
        if (!dataset.find(id)) fail(ErrorKind::alignment, "cube '" + cube.expert_name + "' has unknown id " + id);
    if (!cube.values.allFinite())
        fail(ErrorKind::validation, "cube '" + cube.expert_name + "' has non-finite values");
}

}  // namespace aebsurro
