#pragma once

// Run configuration: one JSON document, checked against kConfigSchema
// (also published as docs/config.schema.json) before it is read. Absent
// keys take the defaults below; unknown keys are rejected by the schema.

#include "aebsurro/dataset.hpp"
#include "aebsurro/errors.hpp"
#include "aebsurro/experts/registry.hpp"
#include "aebsurro/io.hpp"
#include "aebsurro/sim.hpp"

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace aebsurro {

inline constexpr const char* kConfigSchema = R"json({
  "$schema": "http://json-schema.org/draft-04/schema#",
  "title": "aebsurro run configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "seed": {"type": "integer", "minimum": 0},
    "output_dir": {"type": "string", "minLength": 1},
    "jobs": {"type": "integer", "minimum": 1},
    "simulator": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "dt": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "horizon": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "target_brake_onset": {"type": "number", "minimum": 0},
        "aeb_ttc_threshold": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "base_ego_decel": {"type": "number", "maximum": 0, "exclusiveMaximum": true},
        "jerk_limit": {"type": "number", "minimum": 0, "exclusiveMinimum": true},
        "brake_bias": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number", "minimum": 0}}
      }
    },
    "priors": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "ego_speed0": {"$ref": "#/definitions/interval"},
        "target_speed0": {"$ref": "#/definitions/interval"},
        "target_brake_force": {"$ref": "#/definitions/interval"},
        "initial_gap": {"$ref": "#/definitions/interval"},
        "front_brake_eff": {"$ref": "#/definitions/interval"},
        "rear_brake_eff": {"$ref": "#/definitions/interval"},
        "aeb_latency": {"$ref": "#/definitions/interval"}
      }
    },
    "dataset": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "train": {"type": "integer", "minimum": 2},
        "validation": {"type": "integer", "minimum": 1},
        "test": {"type": "integer", "minimum": 1}
      }
    },
    "experts": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name", "family"],
        "properties": {
          "name": {"type": "string", "minLength": 1},
          "family": {"enum": ["knn", "krr", "pce", "rf_global", "rf_per_series", "pca_rf"]},
          "grid": {
            "type": "object",
            "additionalProperties": {
              "oneOf": [
                {"type": "number"},
                {"type": "array", "minItems": 1, "items": {"type": "number"}}
              ]
            }
          }
        }
      }
    },
    "ensemble": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "eta_grid": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "pool": {"type": "array", "items": {"type": "string", "minLength": 1}}
      }
    },
    "bench": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "models": {"type": "array", "items": {"type": "string", "minLength": 1}},
        "n": {"type": "integer", "minimum": 0}
      }
    },
    "imports": {
      "type": "array",
      "items": {
        "type": "object",
        "additionalProperties": false,
        "required": ["name", "path"],
        "properties": {
          "name": {"type": "string", "minLength": 1},
          "path": {"type": "string", "minLength": 1}
        }
      }
    }
  },
  "definitions": {
    "interval": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}}
  }
}
)json";

struct ExpertSpec {
    std::string name;
    std::string family;
    std::vector<std::pair<std::string, std::vector<double>>> grid;

    HyperGrid hyper_grid() const { return HyperGrid{grid}; }
};

struct ImportSpec {
    std::string name;
    std::string path;
};

struct EnsembleConfig {
    std::vector<double> eta_grid = {0.1, 1.0, 10.0, 100.0};
    std::vector<std::string> pool;  // empty: every expert and import
};

struct BenchConfig {
    std::vector<std::string> models = {"4-rf", "hybrid2", "simulator"};
    std::size_t n = 50000;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    int jobs = 1;
    ParameterPriors priors = ParameterPriors::defaults();
    SimConfig sim;
    SplitCounts counts;
    std::vector<ExpertSpec> experts = default_experts();
    EnsembleConfig ensemble;
    BenchConfig bench;
    std::vector<ImportSpec> imports;

    static std::vector<ExpertSpec> default_experts() {
        const std::vector<std::pair<std::string, std::vector<double>>> forest = {
            {"n_trees", {200}}, {"mtry", {2}}, {"min_leaf", {2}}};
        auto pca_forest = forest;
        pca_forest.insert(pca_forest.begin(), {"variance_kept", {0.99}});
        return {
            {"knn", "knn", {{"k", {1, 3, 5, 7, 10}}}},
            {"krr", "krr", {{"gamma", {0.03, 0.1, 0.3, 1, 3}}, {"lambda", {1e-6, 1e-4, 1e-2}}}},
            {"pce", "pce", {{"degree", {2, 3, 4}}}},
            {"1-rf", "rf_global", forest},
            {"4-rf", "rf_per_series", forest},
            {"pca-rf", "pca_rf", pca_forest},
        };
    }

    // Names of every ensemble candidate in pool order: roster, then imports.
    std::vector<std::string> candidate_names() const {
        std::vector<std::string> n;
        for (const auto& e : experts) n.push_back(e.name);
        for (const auto& i : imports) n.push_back(i.name);
        return n;
    }

    std::vector<std::string> pool_names() const { return ensemble.pool.empty() ? candidate_names() : ensemble.pool; }

    ExpertContext expert_context() const {
        ExpertContext ctx;
        std::vector<Interval> dom(priors.intervals.begin(), priors.intervals.end());
        ctx.pce_domain = dom;
        ctx.seed = seed;
        ctx.jobs = jobs;
        return ctx;
    }

    // Semantic checks the schema cannot express.
    void validate() const {
        priors.validate();
        sim.validate();
        std::set<std::string> names;
        for (const auto& e : candidate_names())
            if (!names.insert(e).second) fail(ErrorKind::configuration, "duplicate expert name '" + e + "'");
        for (const auto& n : {"hybrid1", "hybrid2", "aggregated", "simulator"})
            if (names.count(n)) fail(ErrorKind::configuration, "expert name '" + std::string(n) + "' is reserved");
        const auto ctx = expert_context();
        for (const auto& e : experts)
            for (const auto& point : e.hyper_grid().points()) make_expert(e.family, e.name, point, ctx);
        for (const auto& p : pool_names())
            if (!names.count(p)) fail(ErrorKind::configuration, "ensemble pool names unknown expert '" + p + "'");
        for (double eta : ensemble.eta_grid)
            if (!(eta >= 0.0) || !std::isfinite(eta)) fail(ErrorKind::configuration, "eta values must be >= 0");
        if (ensemble.eta_grid.empty()) fail(ErrorKind::configuration, "ensemble.eta_grid is empty");
        for (const auto& m : bench.models)
            if (m != "simulator" && m != "hybrid1" && m != "hybrid2" && m != "aggregated") {
                bool internal = false;
                for (const auto& e : experts) internal = internal || e.name == m;
                if (!internal)
                    fail(ErrorKind::configuration, "bench model '" + m + "' is not an internal expert or ensemble");
            }
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["seed"] = seed;
        j["output_dir"] = output_dir;
        j["jobs"] = jobs;
        j["simulator"] = {{"dt", sim.dt},
                          {"horizon", sim.horizon},
                          {"target_brake_onset", sim.target_brake_onset},
                          {"aeb_ttc_threshold", sim.aeb_ttc_threshold},
                          {"base_ego_decel", sim.base_ego_decel},
                          {"jerk_limit", sim.jerk_limit},
                          {"brake_bias", sim.brake_bias}};
        nlohmann::ordered_json pri = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < kParamCount; ++i)
            pri[std::string(kParamNames[i])] = {priors.intervals[i].lo, priors.intervals[i].hi};
        j["priors"] = pri;
        j["dataset"] = {{"train", counts.train}, {"validation", counts.validation}, {"test", counts.test}};
        nlohmann::ordered_json ex = nlohmann::ordered_json::array();
        for (const auto& e : experts) {
            nlohmann::ordered_json grid = nlohmann::ordered_json::object();
            for (const auto& [k, v] : e.grid) grid[k] = v;
            ex.push_back({{"name", e.name}, {"family", e.family}, {"grid", grid}});
        }
        j["experts"] = ex;
        j["ensemble"] = {{"eta_grid", ensemble.eta_grid}, {"pool", ensemble.pool}};
        j["bench"] = {{"models", bench.models}, {"n", bench.n}};
        nlohmann::ordered_json im = nlohmann::ordered_json::array();
        for (const auto& i : imports) im.push_back({{"name", i.name}, {"path", i.path}});
        j["imports"] = im;
        return j;
    }
};

namespace detail {

inline void check_schema(const std::string& text, const std::string& where) {
    rapidjson::Document schema_doc;
    schema_doc.Parse(kConfigSchema);
    if (schema_doc.HasParseError()) fail(ErrorKind::invariant, "embedded config schema does not parse");
    const rapidjson::SchemaDocument schema(schema_doc);

    rapidjson::Document doc;
    doc.Parse(text.c_str(), text.size());
    if (doc.HasParseError())
        fail(ErrorKind::configuration, where + ": invalid JSON at offset " + std::to_string(doc.GetErrorOffset()) +
                                           ": " + rapidjson::GetParseError_En(doc.GetParseError()));
    rapidjson::SchemaValidator validator(schema);
    if (!doc.Accept(validator)) {
        rapidjson::StringBuffer at, rule;
        validator.GetInvalidDocumentPointer().StringifyUriFragment(at);
        validator.GetInvalidSchemaPointer().StringifyUriFragment(rule);
        fail(ErrorKind::configuration, where + ": schema violation at '" + std::string(at.GetString()) +
                                           "' (keyword '" + validator.GetInvalidSchemaKeyword() + "', rule " +
                                           rule.GetString() + ")");
    }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::string& where = "config") {
    detail::check_schema(text, where);
    const auto j = nlohmann::ordered_json::parse(text);
    RunConfig c;
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (j.contains("simulator")) {
        const auto& s = j["simulator"];
        auto num = [&](const char* k, double& dst) {
            if (s.contains(k)) dst = s[k].get<double>();
        };
        num("dt", c.sim.dt);
        num("horizon", c.sim.horizon);
        num("target_brake_onset", c.sim.target_brake_onset);
        num("aeb_ttc_threshold", c.sim.aeb_ttc_threshold);
        num("base_ego_decel", c.sim.base_ego_decel);
        num("jerk_limit", c.sim.jerk_limit);
        if (s.contains("brake_bias")) c.sim.brake_bias = s["brake_bias"].get<std::array<double, 2>>();
    }
    if (j.contains("priors"))
        for (std::size_t i = 0; i < kParamCount; ++i) {
            const std::string k(kParamNames[i]);
            if (!j["priors"].contains(k)) continue;
            const auto v = j["priors"][k].get<std::array<double, 2>>();
            auto& iv = c.priors.intervals[i];
            iv.lo = v[0];
            iv.hi = v[1];
            if (iv.nominal && !iv.contains(*iv.nominal)) iv.nominal.reset();
        }
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        if (d.contains("train")) c.counts.train = d["train"].get<std::size_t>();
        if (d.contains("validation")) c.counts.validation = d["validation"].get<std::size_t>();
        if (d.contains("test")) c.counts.test = d["test"].get<std::size_t>();
    }
    if (j.contains("experts")) {
        c.experts.clear();
        for (const auto& e : j["experts"]) {
            ExpertSpec spec{e["name"].get<std::string>(), e["family"].get<std::string>(), {}};
            if (e.contains("grid"))
                for (const auto& [k, v] : e["grid"].items())
                    spec.grid.emplace_back(k, v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()});
            c.experts.push_back(std::move(spec));
        }
    }
    if (j.contains("ensemble")) {
        const auto& e = j["ensemble"];
        if (e.contains("eta_grid")) c.ensemble.eta_grid = e["eta_grid"].get<std::vector<double>>();
        if (e.contains("pool")) c.ensemble.pool = e["pool"].get<std::vector<std::string>>();
    }
    if (j.contains("bench")) {
        const auto& b = j["bench"];
        if (b.contains("models")) c.bench.models = b["models"].get<std::vector<std::string>>();
        if (b.contains("n")) c.bench.n = b["n"].get<std::size_t>();
    }
    if (j.contains("experts") && !(j.contains("bench") && j["bench"].contains("models"))) {
        // default bench models that the custom roster does not define are dropped
        auto& m = c.bench.models;
        m.erase(std::remove_if(m.begin(), m.end(),
                               [&](const std::string& name) {
                                   if (name == "simulator" || name == "hybrid1" || name == "hybrid2" ||
                                       name == "aggregated")
                                       return false;
                                   return std::none_of(c.experts.begin(), c.experts.end(),
                                                       [&](const ExpertSpec& e) { return e.name == name; });
                               }),
                m.end());
    }
    if (j.contains("imports"))
        for (const auto& i : j["imports"])
            c.imports.push_back({i["name"].get<std::string>(), i["path"].get<std::string>()});
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error&) {
        fail(ErrorKind::configuration, "cannot read config file " + path.string());
    }
    return parse_config(text, path.string());
}

}  // namespace aebsurro
