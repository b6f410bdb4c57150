#pragma once

/*
 Common surrogate contract. An expert is fitted on (parameters, normalized
 flattened series) pairs and predicts whole flattened series, four channels
 of T samples each, laid out channel-major.

 fit() records wall-clock fit time and the time to predict a batch of 100
 series, so predict() itself stays const and safe to share across threads.
*/

#include "aebsurro/dataset.hpp"
#include "aebsurro/errors.hpp"
#include "aebsurro/io.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <string>

namespace aebsurro {

using Hyperparams = std::map<std::string, double>;

inline std::string describe(const Hyperparams& hp) {
    std::string out;
    for (const auto& [k, v] : hp) {
        if (!out.empty()) out += ' ';
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s=%g", k.c_str(), v);
        out += buf;
    }
    return out;
}

inline constexpr std::string_view kModelMagic = "AEBSURRO-MODEL";
inline constexpr std::uint32_t kModelVersion = 1;

class Expert {
public:
    explicit Expert(std::string name) : name_(std::move(name)) {}
    virtual ~Expert() = default;
    Expert(const Expert&) = delete;
    Expert& operator=(const Expert&) = delete;

    const std::string& name() const { return name_; }
    virtual std::string family() const = 0;
    virtual Hyperparams hyperparameters() const = 0;

    bool fitted() const { return fitted_; }
    std::size_t steps() const { return steps_; }
    std::size_t input_dim() const { return input_dim_; }
    const Timing& timing() const { return timing_; }

    void fit(const Eigen::MatrixXd& X, const RowMatrix& Y) {
        if (X.rows() == 0 || X.rows() != Y.rows())
            fail(ErrorKind::dimension, name_ + ": fit needs matching non-empty X and Y");
        if (Y.cols() == 0 || Y.cols() % static_cast<Eigen::Index>(kChannelCount) != 0)
            fail(ErrorKind::dimension, name_ + ": targets must hold 4 channels of equal length");
        if (!X.allFinite() || !Y.allFinite()) fail(ErrorKind::validation, name_ + ": non-finite training data");
        steps_ = static_cast<std::size_t>(Y.cols()) / kChannelCount;
        input_dim_ = static_cast<std::size_t>(X.cols());

        using clock = std::chrono::steady_clock;
        const auto t0 = clock::now();
        do_fit(X, Y);
        const auto t1 = clock::now();
        fitted_ = true;

        Eigen::MatrixXd batch(100, X.cols());
        for (Eigen::Index i = 0; i < 100; ++i) batch.row(i) = X.row(i % X.rows());
        const auto t2 = clock::now();
        (void)do_predict(batch);
        const auto t3 = clock::now();
        timing_.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
        timing_.predict_seconds_per_100 = std::chrono::duration<double>(t3 - t2).count();
    }

    void fit(const Dataset& d) { fit(d.params(Split::train), d.targets(Split::train)); }

    RowMatrix predict(const Eigen::MatrixXd& X) const {
        if (!fitted_) fail(ErrorKind::not_fitted, name_ + ": predict called before fit");
        if (static_cast<std::size_t>(X.cols()) != input_dim_)
            fail(ErrorKind::dimension, name_ + ": expected " + std::to_string(input_dim_) + " input columns");
        RowMatrix out = do_predict(X);
        if (out.rows() != X.rows() || static_cast<std::size_t>(out.cols()) != kChannelCount * steps_)
            fail(ErrorKind::invariant, name_ + ": prediction has the wrong shape");
        return out;
    }

    Eigen::RowVectorXd predict_one(const ParameterVector& p) const {
        const auto a = p.to_array();
        Eigen::MatrixXd x(1, static_cast<Eigen::Index>(kParamCount));
        for (std::size_t j = 0; j < kParamCount; ++j) x(0, static_cast<Eigen::Index>(j)) = a[j];
        return predict(x).row(0);
    }

    // Predictions for every scenario of the dataset, as a cube.
    PredictionCube predict_cube(const Dataset& d) const {
        std::vector<std::size_t> all(d.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return {name_, d.all_ids(), d.steps(), predict(d.params_at(all)), timing_};
    }

    void save(io::BinaryWriter& w) const {
        if (!fitted_) fail(ErrorKind::not_fitted, name_ + ": cannot save an unfitted model");
        w.put_string(kModelMagic);
        w.put<std::uint32_t>(kModelVersion);
        w.put_string(family());
        w.put_string(name_);
        w.put<std::uint64_t>(steps_);
        w.put<std::uint64_t>(input_dim_);
        w.put<double>(timing_.fit_seconds);
        w.put<double>(timing_.predict_seconds_per_100);
        do_save(w);
    }

    // Restores state written by save() after the header fields up to the
    // family tag have been consumed.
    void load_body(io::BinaryReader& r) {
        name_ = r.get_string();
        steps_ = r.get<std::uint64_t>();
        input_dim_ = r.get<std::uint64_t>();
        timing_.fit_seconds = r.get<double>();
        timing_.predict_seconds_per_100 = r.get<double>();
        do_load(r);
        fitted_ = true;
    }

protected:
    virtual void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) = 0;
    virtual RowMatrix do_predict(const Eigen::MatrixXd& X) const = 0;
    virtual void do_save(io::BinaryWriter& w) const = 0;
    virtual void do_load(io::BinaryReader& r) = 0;

private:
    std::string name_;
    std::size_t steps_ = 0;
    std::size_t input_dim_ = 0;
    bool fitted_ = false;
    Timing timing_;
};

// Per-column standardization with training mean and population std.
struct FeatureScaler {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    void fit(const Eigen::MatrixXd& X) {
        mean = X.colwise().mean();
        scale = ((X.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
        for (Eigen::Index j = 0; j < scale.size(); ++j)
            if (!(scale(j) > 0.0)) scale(j) = 1.0;
    }

    Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const {
        return ((X.rowwise() - mean).array().rowwise() / scale.array()).matrix();
    }

    void save(io::BinaryWriter& w) const {
        w.put_doubles(mean.data(), static_cast<std::size_t>(mean.size()));
        w.put_doubles(scale.data(), static_cast<std::size_t>(scale.size()));
    }

    void load(io::BinaryReader& r) {
        auto m = r.get_doubles();
        auto s = r.get_doubles();
        mean = Eigen::Map<Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
        scale = Eigen::Map<Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    }
};

namespace detail {

inline void put_matrix(io::BinaryWriter& w, const Eigen::MatrixXd& m) {
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    w.put_doubles(m.data(), static_cast<std::size_t>(m.size()));
}

inline Eigen::MatrixXd get_matrix(io::BinaryReader& r) {
    const auto rows = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    const auto cols = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    auto v = r.get_doubles();
    if (static_cast<Eigen::Index>(v.size()) != rows * cols) fail(ErrorKind::parse, "corrupt matrix in artifact");
    return Eigen::Map<Eigen::MatrixXd>(v.data(), rows, cols);
}

inline void put_row_matrix(io::BinaryWriter& w, const RowMatrix& m) {
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    w.put_doubles(m.data(), static_cast<std::size_t>(m.size()));
}

inline RowMatrix get_row_matrix(io::BinaryReader& r) {
    const auto rows = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    const auto cols = static_cast<Eigen::Index>(r.get<std::uint64_t>());
    auto v = r.get_doubles();
    if (static_cast<Eigen::Index>(v.size()) != rows * cols) fail(ErrorKind::parse, "corrupt matrix in artifact");
    return Eigen::Map<RowMatrix>(v.data(), rows, cols);
}

inline double require_param(const Hyperparams& hp, const std::string& key, double fallback) {
    auto it = hp.find(key);
    return it == hp.end() ? fallback : it->second;
}

inline int as_int(double v, const std::string& what) {
    if (!std::isfinite(v) || v != std::floor(v)) fail(ErrorKind::out_of_range, what + " must be an integer");
    return static_cast<int>(v);
}

}  // namespace detail

}  // namespace aebsurro
