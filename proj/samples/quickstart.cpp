// Library walk-through: simulate a small benchmark, fit two experts, build
// the per-timestep ensembles and compare test RMSE.

#include "aebsurro/ensemble.hpp"
#include "aebsurro/experts/forest.hpp"
#include "aebsurro/experts/knn.hpp"
#include "aebsurro/experts/pce.hpp"
#include "aebsurro/metrics.hpp"

#include <cstdio>

using namespace aebsurro;

int main() {
    const auto data = generate(ParameterPriors::defaults(), SimConfig{}, {300, 60, 60}, 1);
    std::printf("%zu scenarios, %zu steps per channel\n", data.size(), data.steps());

    ForestParams fp;
    fp.n_trees = 50;
    KnnExpert knn(5);
    PceExpert pce(3);
    RfPerSeriesExpert rf(fp);
    std::vector<PredictionCube> cubes;
    for (Expert* e : std::initializer_list<Expert*>{&knn, &pce, &rf}) {
        e->fit(data);
        cubes.push_back(e->predict_cube(data));
    }

    const auto ens = calibrate_ensembles(cubes, data, {0.1, 1, 10, 100});
    cubes.insert(cubes.end(), ens.cubes.begin(), ens.cubes.end());
    for (const auto& c : cubes) {
        const auto r = rmse_per_channel(c, data, Split::test);
        std::printf("%-11s test rmse x1e-2: %.3f  (speed %.3f accel %.3f target %.3f gap %.3f)\n",
                    c.expert_name.c_str(), 100 * r.mean, 100 * r.channel[0], 100 * r.channel[1],
                    100 * r.channel[2], 100 * r.channel[3]);
    }
    std::printf("aggregated eta = %g\n", ens.eta.weights.eta());

    // Single-scenario prediction, back in physical units.
    ParameterVector p{50.0, 49.0, -6.0, 40.0, 1.0, 1.0, 0.2};
    const auto series = denormalize(rf.predict_one(p), data.norm());
    std::printf("4-rf predicted final gap: %.2f m, simulator: %.2f m\n", series[gap].back(),
                simulate(p, SimConfig{})[gap].back());
}
