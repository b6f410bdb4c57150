#include "aebsurro/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace aebsurro;

namespace {

RowMatrix random_rows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
    return m;
}

}  // namespace

TEST(Rmse, WorkedValues) {
    const std::vector<double> u = {0.0, 0.0}, v = {3.0, 4.0};
    EXPECT_EQ(rmse(u, u), 0.0);
    EXPECT_NEAR(rmse(u, v), 3.535534, 5e-7);
    EXPECT_DOUBLE_EQ(rmse(u, v), std::sqrt(12.5));
}

TEST(Rmse, MetricProperties) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> u(17), v(17), u2(17), v2(17);
        for (int i = 0; i < 17; ++i) {
            u[i] = d(rng);
            v[i] = d(rng);
            u2[i] = 2.0 * u[i];
            v2[i] = 2.0 * v[i];
        }
        EXPECT_GT(rmse(u, v), 0.0);
        EXPECT_EQ(rmse(u, v), rmse(v, u));
        EXPECT_EQ(rmse(u2, v2), 2.0 * rmse(u, v));  // scaling by 2 is exact in binary
    }
}

TEST(Rmse, LengthMismatchAndEmpty) {
    const std::vector<double> a = {1, 2}, b = {1}, e;
    EXPECT_THROW(rmse(a, b), Error);
    EXPECT_THROW(rmse(e, e), Error);
    try {
        rmse(a, b);
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::dimension);
    }
}

TEST(Granularities, PerfectAndConstantOffset) {
    const RowMatrix truth = random_rows(5, 4 * 9, 2);
    const auto zero = rmse_per_channel(truth, truth);
    for (double c : zero.channel) EXPECT_EQ(c, 0.0);
    EXPECT_EQ(zero.mean, 0.0);
    EXPECT_EQ(rmse_per_timestep(truth, truth).cwiseAbs().maxCoeff(), 0.0);

    RowMatrix off = truth;
    off.middleCols(2 * 9, 9).array() += 0.25;  // target_speed channel
    const auto r = rmse_per_channel(off, truth);
    EXPECT_NEAR(r.channel[2], 0.25, 1e-15);
    EXPECT_EQ(r.channel[0], 0.0);
    EXPECT_EQ(r.channel[1], 0.0);
    EXPECT_EQ(r.channel[3], 0.0);
    EXPECT_NEAR(r.mean, 0.25 / 4.0, 1e-15);
}

TEST(Granularities, MatchNaiveLoops) {
    const std::size_t S = 3, T = 11;
    const RowMatrix truth = random_rows(S, 4 * T, 3);
    const RowMatrix pred = truth + 0.1 * random_rows(S, 4 * T, 4);
    const auto pc = rmse_per_channel(pred, truth);
    const auto pt = rmse_per_timestep(pred, truth);
    double mean = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        double acc = 0.0;
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t t = 0; t < T; ++t) {
                const double d = pred(s, c * T + t) - truth(s, c * T + t);
                acc += d * d;
            }
        const double ch = std::sqrt(acc / (S * T));
        EXPECT_NEAR(pc.channel[c], ch, 1e-12);
        mean += ch / 4.0;
        for (std::size_t t = 0; t < T; ++t) {
            double a = 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                const double d = pred(s, c * T + t) - truth(s, c * T + t);
                a += d * d;
            }
            EXPECT_NEAR(pt(c, t), std::sqrt(a / S), 1e-12);
        }
        // per-timestep curve integrates back to the channel value
        EXPECT_NEAR(std::sqrt(pt.row(c).squaredNorm() / T), pc.channel[c], 1e-10);
    }
    EXPECT_NEAR(pc.mean, mean, 1e-12);
    EXPECT_NEAR(rmse_mean(pred, truth), (pc.channel[0] + pc.channel[1] + pc.channel[2] + pc.channel[3]) / 4.0, 1e-12);
}

TEST(Granularities, CubeAgainstSplit) {
    const auto d = generate(ParameterPriors::defaults(), SimConfig{}, {20, 6, 6}, 5);
    std::vector<std::size_t> all(d.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    PredictionCube cube{"exact", d.all_ids(), d.steps(), d.targets_at(all), std::nullopt};
    EXPECT_EQ(rmse_mean(cube, d, Split::test), 0.0);
    cube.values.array() += 0.5;
    const auto r = rmse_per_channel(cube, d, Split::validation);
    for (double c : r.channel) EXPECT_NEAR(c, 0.5, 1e-12);
    const auto short_cube = cube.select(d.ids(Split::train));
    EXPECT_THROW(rmse_mean(short_cube, d, Split::test), Error);
}
