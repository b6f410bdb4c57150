#pragma once

// Root mean squared error at three granularities: per channel, per
// (channel, timestep), and the mean of the four channel values.

#include "aebsurro/dataset.hpp"
#include "aebsurro/errors.hpp"

#include <array>
#include <cmath>
#include <span>

namespace aebsurro {

inline double rmse(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) fail(ErrorKind::dimension, "rmse: length mismatch");
    if (u.empty()) fail(ErrorKind::dimension, "rmse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(u.size()));
}

struct ChannelRmse {
    std::array<double, kChannelCount> channel{};
    double mean = 0.0;
};

namespace detail {

inline std::size_t check_pair(const RowMatrix& pred, const RowMatrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        fail(ErrorKind::alignment, "prediction and truth shapes differ");
    if (pred.rows() == 0) fail(ErrorKind::dimension, "no scenarios to score");
    if (pred.cols() % static_cast<Eigen::Index>(kChannelCount) != 0)
        fail(ErrorKind::dimension, "row width is not a multiple of the channel count");
    return static_cast<std::size_t>(pred.cols()) / kChannelCount;
}

}  // namespace detail

inline ChannelRmse rmse_per_channel(const RowMatrix& pred, const RowMatrix& truth) {
    const std::size_t T = detail::check_pair(pred, truth);
    ChannelRmse out;
    const double n = static_cast<double>(pred.rows()) * static_cast<double>(T);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto cols = Eigen::seqN(static_cast<Eigen::Index>(c * T), static_cast<Eigen::Index>(T));
        out.channel[c] = std::sqrt((pred(Eigen::all, cols) - truth(Eigen::all, cols)).squaredNorm() / n);
    }
    out.mean = (out.channel[0] + out.channel[1] + out.channel[2] + out.channel[3]) / 4.0;
    return out;
}

// (4 x T): RMSE across scenarios at each (channel, timestep).
inline RowMatrix rmse_per_timestep(const RowMatrix& pred, const RowMatrix& truth) {
    const std::size_t T = detail::check_pair(pred, truth);
    const Eigen::RowVectorXd ms = (pred - truth).array().square().colwise().mean();
    RowMatrix out(static_cast<Eigen::Index>(kChannelCount), static_cast<Eigen::Index>(T));
    for (std::size_t c = 0; c < kChannelCount; ++c)
        for (std::size_t t = 0; t < T; ++t)
            out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) =
                std::sqrt(ms(static_cast<Eigen::Index>(c * T + t)));
    return out;
}

inline double rmse_mean(const RowMatrix& pred, const RowMatrix& truth) {
    return rmse_per_channel(pred, truth).mean;
}

// Cube against a dataset split; the cube may hold more ids than the split.
inline ChannelRmse rmse_per_channel(const PredictionCube& cube, const Dataset& d, Split split) {
    check_cube(cube, d);
    return rmse_per_channel(cube.select(d.ids(split)).values, d.targets(split));
}

inline RowMatrix rmse_per_timestep(const PredictionCube& cube, const Dataset& d, Split split) {
    check_cube(cube, d);
    return rmse_per_timestep(cube.select(d.ids(split)).values, d.targets(split));
}

inline double rmse_mean(const PredictionCube& cube, const Dataset& d, Split split) {
    return rmse_per_channel(cube, d, split).mean;
}

}  // namespace aebsurro
