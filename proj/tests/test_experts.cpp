#include "aebsurro/experts/registry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace aebsurro;

namespace {

const Dataset& small_data() {
    static const Dataset d = generate(ParameterPriors::defaults(), SimConfig{}, {120, 30, 30}, 17);
    return d;
}

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no aebsurro::Error thrown";
    return ErrorKind::invariant;
}

Eigen::MatrixXd random_inputs(int n, int p, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = u(rng);
    return X;
}

// Gaussian elimination with partial pivoting, column by column.
Eigen::MatrixXd dense_solve(Eigen::MatrixXd A, Eigen::MatrixXd B) {
    const auto n = A.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(A(r, c)) > std::abs(A(piv, c))) piv = r;
        A.row(c).swap(A.row(piv));
        B.row(c).swap(B.row(piv));
        for (Eigen::Index r = c + 1; r < n; ++r) {
            const double f = A(r, c) / A(c, c);
            A.row(r) -= f * A.row(c);
            B.row(r) -= f * B.row(c);
        }
    }
    Eigen::MatrixXd Xs(n, B.cols());
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        Eigen::RowVectorXd acc = B.row(r);
        for (Eigen::Index k = r + 1; k < n; ++k) acc -= A(r, k) * Xs.row(k);
        Xs.row(r) = acc / A(r, r);
    }
    return Xs;
}

double sse(const RowMatrix& Y, const std::vector<int>& rows) {
    if (rows.empty()) return 0.0;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(Y.cols());
    for (int r : rows) mean += Y.row(r);
    mean /= static_cast<double>(rows.size());
    double s = 0.0;
    for (int r : rows) s += (Y.row(r) - mean).squaredNorm();
    return s;
}

std::vector<std::unique_ptr<Expert>> all_small_experts() {
    ForestParams fp;
    fp.n_trees = 10;
    fp.seed = 3;
    std::vector<std::unique_ptr<Expert>> v;
    v.push_back(std::make_unique<KnnExpert>(3));
    v.push_back(std::make_unique<KrrExpert>(0.3, 1e-4));
    v.push_back(std::make_unique<PceExpert>(2));
    v.push_back(std::make_unique<RfGlobalExpert>(fp));
    v.push_back(std::make_unique<RfPerSeriesExpert>(fp));
    v.push_back(std::make_unique<PcaRfExpert>(0.99, fp));
    return v;
}

}  // namespace

// ---------------------------------------------------------------- k-NN

TEST(Knn, K1MemorizesTrainingPoints) {
    const auto& d = small_data();
    KnnExpert knn(1);
    knn.fit(d);
    const RowMatrix pred = knn.predict(d.params(Split::train));
    EXPECT_TRUE(pred == d.targets(Split::train));
}

TEST(Knn, KEqualsNIsTrainMean) {
    const auto& d = small_data();
    KnnExpert knn(static_cast<int>(d.count(Split::train)));
    knn.fit(d);
    const Eigen::RowVectorXd mean = d.targets(Split::train).colwise().mean();
    const RowMatrix pred = knn.predict(d.params(Split::test));
    for (Eigen::Index r = 0; r < pred.rows(); ++r) EXPECT_LT((pred.row(r) - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Knn, TwoNearestOfThreeMatchesBruteForce) {
    Eigen::MatrixXd X(3, 2);
    X << 0.0, 0.0, 1.0, 0.0, 0.0, 3.0;
    RowMatrix Y(3, 4);
    Y << 1, 2, 3, 4, 10, 20, 30, 40, -1, -2, -3, -4;
    KnnExpert knn(2);
    knn.fit(X, Y);
    Eigen::MatrixXd q(1, 2);
    q << 0.9, 0.4;

    // oracle: standardize with the training mean/population std, enumerate all distances
    const Eigen::RowVectorXd mu = X.colwise().mean();
    const Eigen::RowVectorXd sd = ((X.rowwise() - mu).array().square().colwise().mean()).sqrt();
    std::vector<std::pair<double, int>> dist;
    for (int i = 0; i < 3; ++i) {
        const Eigen::RowVectorXd a = (X.row(i) - mu).cwiseQuotient(sd);
        const Eigen::RowVectorXd b = (q.row(0) - mu).cwiseQuotient(sd);
        dist.push_back({(a - b).norm(), i});
    }
    std::sort(dist.begin(), dist.end());
    const Eigen::RowVectorXd expect = (Y.row(dist[0].second) + Y.row(dist[1].second)) / 2.0;
    EXPECT_LT((knn.predict(q).row(0) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Knn, Errors) {
    const auto& d = small_data();
    KnnExpert bad(0);
    EXPECT_EQ(kind_of([&] { bad.fit(d); }), ErrorKind::out_of_range);
    KnnExpert big(1000);
    EXPECT_EQ(kind_of([&] { big.fit(d); }), ErrorKind::out_of_range);
    KnnExpert unfitted(1);
    EXPECT_EQ(kind_of([&] { unfitted.predict(d.params(Split::test)); }), ErrorKind::not_fitted);
}

// ---------------------------------------------------------------- KRR

TEST(Krr, KernelValues) {
    Eigen::RowVectorXd x(3), y(3);
    x << 0.2, -1.0, 4.0;
    EXPECT_EQ(laplacian_kernel(x, x, 2.5), 1.0);
    y = x;
    y(0) += std::log(2.0) / 2.0;
    y(2) -= std::log(2.0) / 2.0;
    EXPECT_NEAR(laplacian_kernel(x, y, 1.0), 0.5, 1e-15);
}

TEST(Krr, InterpolatesAtTinyLambdaLikeDenseOracle) {
    const Eigen::MatrixXd X = random_inputs(50, 7, 8);
    RowMatrix Y(50, 8);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 8; ++j) Y(i, j) = std::sin(X(i, j % 7) * (j + 1)) + X.row(i).sum() * 0.1;
    KrrExpert krr(0.3, 1e-10);
    krr.fit(X, Y);
    const RowMatrix pred = krr.predict(X);
    EXPECT_LT((pred - Y).cwiseAbs().maxCoeff(), 1e-6);

    // independent route: rebuild the standardized inputs and kernel, solve by elimination
    const Eigen::RowVectorXd mu = X.colwise().mean();
    const Eigen::RowVectorXd sd = ((X.rowwise() - mu).array().square().colwise().mean()).sqrt();
    Eigen::MatrixXd Z = X;
    for (int i = 0; i < 50; ++i) Z.row(i) = (X.row(i) - mu).cwiseQuotient(sd);
    Eigen::MatrixXd K(50, 50);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            double l1 = 0.0;
            for (int c = 0; c < 7; ++c) l1 += std::abs(Z(i, c) - Z(j, c));
            K(i, j) = std::exp(-0.3 * l1);
        }
    Eigen::MatrixXd Kreg = K;
    Kreg.diagonal().array() += 1e-10 * 50;
    const Eigen::MatrixXd alpha = dense_solve(Kreg, Y);
    const Eigen::MatrixXd oracle_pred = K * alpha;
    EXPECT_LT((oracle_pred - Eigen::MatrixXd(pred)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((alpha - krr.dual_coefficients()).cwiseAbs().maxCoeff() /
                  std::max(1.0, alpha.cwiseAbs().maxCoeff()),
              1e-6);
}

TEST(Krr, DuplicateInputsWithZeroLambdaIsConditioningError) {
    Eigen::MatrixXd X = random_inputs(10, 3, 2);
    X.row(7) = X.row(2);
    RowMatrix Y = RowMatrix::Random(10, 4);
    KrrExpert krr(1.0, 0.0);
    EXPECT_EQ(kind_of([&] { krr.fit(X, Y); }), ErrorKind::conditioning);
    KrrExpert ok(1.0, 1e-3);
    EXPECT_NO_THROW(ok.fit(X, Y));
}

TEST(Krr, RejectsBadHyperparameters) {
    const auto& d = small_data();
    KrrExpert g(0.0, 1e-3);
    EXPECT_EQ(kind_of([&] { g.fit(d); }), ErrorKind::out_of_range);
    KrrExpert l(1.0, -1.0);
    EXPECT_EQ(kind_of([&] { l.fit(d); }), ErrorKind::out_of_range);
}

// ---------------------------------------------------------------- PCE

TEST(Pce, LegendreIdentities) {
    EXPECT_EQ(legendre(2, 1.0), 1.0);
    for (int n = 0; n <= 6; ++n) EXPECT_NEAR(legendre(n, 1.0), 1.0, 1e-15);
    for (double x : {-0.7, 0.1, 0.55}) {
        EXPECT_NEAR(legendre(2, x), (3 * x * x - 1) / 2, 1e-15);
        EXPECT_NEAR(legendre(3, x), (5 * x * x * x - 3 * x) / 2, 1e-15);
    }
    EXPECT_EQ(total_degree_indices(7, 3).size(), 120u);  // C(10, 3)
    EXPECT_EQ(total_degree_indices(2, 2).size(), 6u);
}

TEST(Pce, ConstantTarget) {
    std::vector<Interval> dom(3, Interval{-1.0, 1.0, std::nullopt});
    PceExpert pce(3, dom);
    const Eigen::MatrixXd X = random_inputs(60, 3, 4);
    RowMatrix Y = RowMatrix::Constant(60, 4, 0.37);
    pce.fit(X, Y);
    const auto& C = pce.coefficients();
    for (Eigen::Index o = 0; o < C.cols(); ++o) {
        EXPECT_NEAR(C(0, o), 0.37, 1e-12);
        for (Eigen::Index b = 1; b < C.rows(); ++b) EXPECT_LT(std::abs(C(b, o)), 1e-10);
    }
}

TEST(Pce, RecoversPlantedQuadratic) {
    const auto priors = ParameterPriors::defaults();
    std::vector<Interval> dom(priors.intervals.begin(), priors.intervals.end());
    auto mapped = [&](const Eigen::MatrixXd& X, int r, int j) {
        return 2.0 * (X(r, j) - dom[j].lo) / (dom[j].hi - dom[j].lo) - 1.0;
    };
    auto target = [&](const Eigen::MatrixXd& X, int r, int out) {
        const double a = mapped(X, r, 0), b = mapped(X, r, 3), c = mapped(X, r, 6), e = mapped(X, r, 4);
        return 0.5 + out * 0.1 + 1.5 * a * b - 0.75 * c * c + 0.2 * e - 0.3 * a + 0.05 * b * b * (out + 1);
    };
    auto make = [&](int n, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        Eigen::MatrixXd X(n, 7);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 7; ++j) X(i, j) = std::uniform_real_distribution<double>(dom[j].lo, dom[j].hi)(rng);
        RowMatrix Y(n, 4);
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < 4; ++o) Y(i, o) = target(X, i, o);
        return std::pair{X, Y};
    };
    const auto [Xtr, Ytr] = make(300, 1);
    const auto [Xte, Yte] = make(100, 2);
    PceExpert pce(3, dom);
    pce.fit(Xtr, Ytr);
    EXPECT_LT((pce.predict(Xtr) - Ytr).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((pce.predict(Xte) - Yte).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pce, UnderdeterminedIsRankError) {
    const Eigen::MatrixXd X = random_inputs(50, 7, 5);
    PceExpert pce(3, std::vector<Interval>(7, Interval{-1, 1, std::nullopt}));
    EXPECT_EQ(kind_of([&] { pce.fit(X, RowMatrix::Zero(50, 4)); }), ErrorKind::rank);
}

// ---------------------------------------------------------------- forests

TEST(Forest, SingleTreeMemorizes) {
    const auto& d = small_data();
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.min_leaf = 1;
    RfGlobalExpert rf(p);
    rf.fit(d);
    EXPECT_TRUE(rf.predict(d.params(Split::train)) == d.targets(Split::train));
}

TEST(Forest, SeededDeterminismAndThreadIndependence) {
    const auto& d = small_data();
    ForestParams p;
    p.n_trees = 12;
    p.seed = 99;
    RfPerSeriesExpert a(p), b(p);
    a.fit(d);
    b.fit(d);
    EXPECT_TRUE(a.predict(d.params(Split::test)) == b.predict(d.params(Split::test)));
    p.jobs = 3;
    RfPerSeriesExpert c(p);
    c.fit(d);
    EXPECT_TRUE(a.predict(d.params(Split::test)) == c.predict(d.params(Split::test)));
    for (std::size_t i = 0; i < kChannelCount; ++i)
        for (std::size_t t = 0; t < a.forests()[i].trees().size(); ++t)
            EXPECT_TRUE(a.forests()[i].trees()[t] == c.forests()[i].trees()[t]);
}

TEST(Forest, StumpMatchesExhaustiveEnumeration) {
    const Eigen::MatrixXd X = random_inputs(20, 3, 21);
    RowMatrix Y(20, 5);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nz(0.0, 0.1);
    for (int i = 0; i < 20; ++i)
        for (int o = 0; o < 5; ++o) Y(i, o) = (X(i, 1) > 0.1 ? 1.0 : 0.0) * (o + 1) + 0.3 * X(i, 2) + nz(rng);

    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.min_leaf = 1;
    p.max_depth = 1;
    p.mtry = 3;
    RandomForest forest(p);
    forest.fit(X, Y);
    const auto& root = forest.trees()[0].nodes()[0];

    // oracle: every feature, every midpoint, reduction computed from scratch
    std::vector<int> all(20);
    std::iota(all.begin(), all.end(), 0);
    const double parent = sse(Y, all);
    double best = -1.0;
    int best_f = -1;
    double best_thr = 0.0;
    for (int f = 0; f < 3; ++f) {
        std::vector<double> xs(X.col(f).data(), X.col(f).data() + 20);
        std::sort(xs.begin(), xs.end());
        for (int i = 0; i + 1 < 20; ++i) {
            const double thr = 0.5 * (xs[i] + xs[i + 1]);
            std::vector<int> l, r;
            for (int k = 0; k < 20; ++k) (X(k, f) <= thr ? l : r).push_back(k);
            const double red = parent - sse(Y, l) - sse(Y, r);
            if (red > best + 1e-12) {
                best = red;
                best_f = f;
                best_thr = thr;
            }
        }
    }
    EXPECT_EQ(root.feature, best_f);
    EXPECT_DOUBLE_EQ(root.threshold, best_thr);
}

TEST(Forest, OutOfBoxQueriesStayFinite) {
    const auto& d = small_data();
    ForestParams p;
    p.n_trees = 5;
    RfGlobalExpert rf(p);
    rf.fit(d);
    Eigen::MatrixXd q(2, 7);
    q << 100, -100, -50, 1000, 9, -9, 30, -1e6, 1e6, 0, 0, 0, 0, 0;
    EXPECT_TRUE(rf.predict(q).allFinite());
}

// ---------------------------------------------------------------- PCA

TEST(Pca, FullRankRoundTripAndOrdering) {
    const auto& d = small_data();
    const RowMatrix Y = d.targets(Split::train);
    Pca pca;
    pca.fit(Y, 1.0);
    const RowMatrix back = pca.inverse_transform(pca.transform(Y));
    EXPECT_LT((back - Y).cwiseAbs().maxCoeff(), 1e-8);
    const auto& v = pca.variances();
    for (Eigen::Index i = 1; i < v.size(); ++i) EXPECT_LE(v(i), v(i - 1));

    Pca reduced;
    reduced.fit(Y, 0.99);
    EXPECT_LT(reduced.kept(), pca.kept());
    EXPECT_GE(reduced.variances().head(static_cast<Eigen::Index>(reduced.kept())).sum() / reduced.variances().sum(),
              0.99);
}

TEST(Pca, DominantDirectionOfLine) {
    const double angle = 0.6;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::normal_distribution<double> nz(0.0, 1e-4);
    RowMatrix Y(200, 2);
    for (int i = 0; i < 200; ++i) {
        const double s = u(rng);
        Y(i, 0) = 1.0 + s * std::cos(angle) + nz(rng);
        Y(i, 1) = -2.0 + s * std::sin(angle) + nz(rng);
    }
    Pca pca;
    pca.fit(Y, 0.5);
    ASSERT_EQ(pca.kept(), 1u);
    const Eigen::Vector2d c = pca.components().col(0);
    const double err = std::acos(std::min(1.0, std::abs(c.dot(Eigen::Vector2d(std::cos(angle), std::sin(angle))))));
    EXPECT_LT(err, 1e-3);
}

TEST(Pca, Errors) {
    Pca pca;
    EXPECT_EQ(kind_of([&] { pca.fit(RowMatrix::Constant(10, 4, 0.3), 0.9); }), ErrorKind::pca);
    EXPECT_EQ(kind_of([&] { pca.fit(RowMatrix::Random(10, 4), 0.0); }), ErrorKind::out_of_range);
    EXPECT_EQ(kind_of([&] { pca.fit(RowMatrix::Random(10, 4), 1.5); }), ErrorKind::out_of_range);
}

// ---------------------------------------------------------------- contract

TEST(Contract, ShapesFinitenessTimingAndArtifacts) {
    const auto& d = small_data();
    const auto dir = std::filesystem::temp_directory_path() / "aebsurro_test_experts";
    std::filesystem::create_directories(dir);
    const auto queries = d.params(Split::test);
    for (auto& e : all_small_experts()) {
        SCOPED_TRACE(e->name());
        EXPECT_FALSE(e->fitted());
        e->fit(d);
        EXPECT_GE(e->timing().fit_seconds, 0.0);
        EXPECT_GT(e->timing().predict_seconds_per_100, 0.0);
        const RowMatrix pred = e->predict(queries);
        EXPECT_EQ(pred.rows(), queries.rows());
        EXPECT_EQ(static_cast<std::size_t>(pred.cols()), 4 * d.steps());
        EXPECT_TRUE(pred.allFinite());

        const auto path = dir / (e->family() + ".bin");
        save_model(*e, path);
        const auto back = load_model(path);
        EXPECT_EQ(back->family(), e->family());
        EXPECT_EQ(back->name(), e->name());
        EXPECT_EQ(back->hyperparameters(), e->hyperparameters());
        EXPECT_TRUE(back->predict(queries) == pred);
        EXPECT_EQ(serialize_model(*back), serialize_model(*e));
    }
}

TEST(Contract, CorruptArtifactIsParseError) {
    EXPECT_EQ(kind_of([] { deserialize_model("garbage"); }), ErrorKind::parse);
    KnnExpert knn(2);
    knn.fit(small_data());
    auto bytes = serialize_model(knn);
    bytes.resize(bytes.size() / 2);
    EXPECT_EQ(kind_of([&] { deserialize_model(bytes); }), ErrorKind::parse);
}

TEST(Contract, RfPerSeriesPredictionsSurviveExportImport) {
    const auto& d = small_data();
    ForestParams p;
    p.n_trees = 8;
    RfPerSeriesExpert rf(p);
    rf.fit(d);
    const auto cube = rf.predict_cube(d);
    const auto path = std::filesystem::temp_directory_path() / "aebsurro_test_experts" / "4rf.jsonl";
    export_predictions(cube, path);
    const auto back = import_external_predictions(path, d);
    EXPECT_TRUE(back == cube);
}

// ---------------------------------------------------------------- tuning

TEST(Tune, ArgminTieBreak) {
    const std::vector<double> two = {0.05, 0.03};
    EXPECT_EQ(argmin_first(two), 1u);
    const std::vector<double> tie = {0.04, 0.02, 0.02};
    EXPECT_EQ(argmin_first(tie), 1u);
}

TEST(Tune, SingletonGrid) {
    HyperGrid g{{{"k", {4}}}};
    const auto r = tune("knn", "knn", g, small_data());
    EXPECT_EQ(r.best_index, 0u);
    EXPECT_EQ(r.best->hyperparameters().at("k"), 4.0);
    EXPECT_EQ(r.table.size(), 1u);
}

TEST(Tune, KnnGridMatchesExhaustiveRerun) {
    const auto& d = small_data();
    HyperGrid g{{{"k", {1, 3, 5, 7, 10}}}};
    const auto r = tune("knn", "knn", g, d);
    ASSERT_EQ(r.table.size(), 5u);

    std::vector<double> scores;
    for (int k : {1, 3, 5, 7, 10}) {
        KnnExpert e(k);
        e.fit(d);
        const auto pc = rmse_per_channel(e.predict(d.params(Split::validation)), d.targets(Split::validation));
        scores.push_back(pc.mean);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] < scores[best]) best = i;
    EXPECT_EQ(r.best_index, best);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.table[i].score, scores[i]);
}

TEST(Tune, GridEnumerationOrderAndValidation) {
    HyperGrid g{{{"gamma", {0.1, 1}}, {"lambda", {1e-3, 1e-2, 1e-1}}}};
    const auto pts = g.points();
    ASSERT_EQ(pts.size(), 6u);
    EXPECT_EQ(pts[1].at("gamma"), 0.1);
    EXPECT_EQ(pts[1].at("lambda"), 1e-2);
    EXPECT_EQ(pts[3].at("gamma"), 1.0);
    HyperGrid empty{{{"k", {}}}};
    EXPECT_EQ(kind_of([&] { empty.points(); }), ErrorKind::configuration);
    EXPECT_EQ(kind_of([] { make_expert("knn", "x", {{"q", 1}}); }), ErrorKind::configuration);
    EXPECT_EQ(kind_of([] { make_expert("cnn", "x", {}); }), ErrorKind::configuration);
}
