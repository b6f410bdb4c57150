#pragma once

/*
 Multi-output CART regression trees and random forests.

 Split criterion: summed per-output variance reduction, i.e. the drop in
 total squared error sum_d [SSE_d(parent) - SSE_d(left) - SSE_d(right)].
 For a node with sample set S and left part L this is maximized by
 maximizing |sum_L y|^2 / |L| + |sum_R y|^2 / |R|, which is what the sweep
 evaluates. Thresholds are midpoints between consecutive distinct values and
 samples with x <= threshold go left.

 Leaves keep (training row, weight) pairs instead of mean vectors; the
 forest holds one copy of the training targets and averages over them at
 prediction time. A leaf whose targets are all identical keeps a single
 row with weight 1, so memorized points are reproduced exactly.

 Each tree draws from its own generator seeded from (forest seed, tree
 index), so results do not depend on how many threads grow the forest.
*/

#include "aebsurro/experts/expert.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace aebsurro {

struct ForestParams {
    int n_trees = 200;
    int mtry = 2;
    int min_leaf = 2;
    int max_depth = 0;  // 0: unlimited
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const {
        if (n_trees < 1) fail(ErrorKind::out_of_range, "forest: n_trees must be >= 1");
        if (mtry < 1) fail(ErrorKind::out_of_range, "forest: mtry must be >= 1");
        if (min_leaf < 1) fail(ErrorKind::out_of_range, "forest: min_leaf must be >= 1");
        if (max_depth < 0) fail(ErrorKind::out_of_range, "forest: max_depth must be >= 0");
    }

    Hyperparams to_hyperparams() const {
        return {{"n_trees", n_trees},   {"mtry", mtry},           {"min_leaf", min_leaf},
                {"max_depth", max_depth}, {"bootstrap", bootstrap ? 1.0 : 0.0},
                {"seed", static_cast<double>(seed)}};
    }

    static ForestParams from_hyperparams(const Hyperparams& hp, ForestParams base) {
        using detail::as_int;
        using detail::require_param;
        base.n_trees = as_int(require_param(hp, "n_trees", base.n_trees), "n_trees");
        base.mtry = as_int(require_param(hp, "mtry", base.mtry), "mtry");
        base.min_leaf = as_int(require_param(hp, "min_leaf", base.min_leaf), "min_leaf");
        base.max_depth = as_int(require_param(hp, "max_depth", base.max_depth), "max_depth");
        base.bootstrap = require_param(hp, "bootstrap", base.bootstrap ? 1.0 : 0.0) != 0.0;
        base.seed = static_cast<std::uint64_t>(require_param(hp, "seed", static_cast<double>(base.seed)));
        return base;
    }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RegressionTree {
public:
    struct Node {
        std::int32_t feature = -1;  // -1: leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t leaf_begin = 0;
        std::uint32_t leaf_count = 0;
    };

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = -std::numeric_limits<double>::infinity();
    };

    // `samples` are training row indices, repeated for bootstrap multiplicity.
    static RegressionTree grow(const Eigen::MatrixXd& X, const RowMatrix& Y, std::vector<std::uint32_t> samples,
                               const ForestParams& params, std::mt19937_64& rng) {
        RegressionTree tree;
        struct Task {
            std::int32_t node;
            std::size_t begin, end;
            int depth;
        };
        std::vector<Task> stack;
        tree.nodes_.emplace_back();
        stack.push_back({0, 0, samples.size(), 0});
        std::vector<int> features(static_cast<std::size_t>(X.cols()));

        while (!stack.empty()) {
            const Task task = stack.back();
            stack.pop_back();
            std::span<std::uint32_t> range(samples.data() + task.begin, task.end - task.begin);

            const bool depth_capped = params.max_depth > 0 && task.depth >= params.max_depth;
            const bool too_small = range.size() < 2 * static_cast<std::size_t>(params.min_leaf);
            if (depth_capped || too_small || is_pure(Y, range)) {
                tree.make_leaf(task.node, Y, range);
                continue;
            }

            std::iota(features.begin(), features.end(), 0);
            std::shuffle(features.begin(), features.end(), rng);
            Split best;
            int evaluated = 0;
            for (int f : features) {
                if (evaluated >= params.mtry && best.feature >= 0) break;
                const auto s = best_split_on(X, Y, range, f, params.min_leaf);
                ++evaluated;
                if (s.feature >= 0 && s.score > best.score) best = s;
            }
            if (best.feature < 0) {
                tree.make_leaf(task.node, Y, range);
                continue;
            }

            auto mid = std::stable_partition(range.begin(), range.end(), [&](std::uint32_t i) {
                return X(static_cast<Eigen::Index>(i), best.feature) <= best.threshold;
            });
            const auto n_left = static_cast<std::size_t>(mid - range.begin());

            const auto left = static_cast<std::int32_t>(tree.nodes_.size());
            tree.nodes_.emplace_back();
            tree.nodes_.emplace_back();
            auto& node = tree.nodes_[static_cast<std::size_t>(task.node)];
            node.feature = best.feature;
            node.threshold = best.threshold;
            node.left = left;
            node.right = left + 1;
            stack.push_back({left + 1, task.begin + n_left, task.end, task.depth + 1});
            stack.push_back({left, task.begin, task.begin + n_left, task.depth + 1});
        }
        return tree;
    }

    // Best threshold on one feature; feature == -1 when no split satisfies min_leaf.
    static Split best_split_on(const Eigen::MatrixXd& X, const RowMatrix& Y, std::span<const std::uint32_t> range,
                               int feature, int min_leaf) {
        const std::size_t n = range.size();
        std::vector<std::pair<double, std::uint32_t>> order(n);
        for (std::size_t i = 0; i < n; ++i)
            order[i] = {X(static_cast<Eigen::Index>(range[i]), feature), range[i]};
        std::sort(order.begin(), order.end());

        Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(Y.cols());
        for (const auto& [x, i] : order) total += Y.row(static_cast<Eigen::Index>(i));
        Eigen::RowVectorXd left = Eigen::RowVectorXd::Zero(Y.cols());

        Split best;
        const auto ml = static_cast<std::size_t>(min_leaf);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left += Y.row(static_cast<Eigen::Index>(order[i].second));
            const std::size_t nl = i + 1, nr = n - nl;
            if (order[i].first == order[i + 1].first || nl < ml || nr < ml) continue;
            const double score = left.squaredNorm() / static_cast<double>(nl) +
                                 (total - left).squaredNorm() / static_cast<double>(nr);
            if (score > best.score) {
                best.score = score;
                best.feature = feature;
                double thr = 0.5 * (order[i].first + order[i + 1].first);
                if (!(thr < order[i + 1].first)) thr = order[i].first;
                best.threshold = thr;
            }
        }
        return best;
    }

    template <typename Row>
    const Node& leaf_for(const Row& x) const {
        std::size_t i = 0;
        while (nodes_[i].feature >= 0) {
            const auto& n = nodes_[i];
            i = static_cast<std::size_t>(x(n.feature) <= n.threshold ? n.left : n.right);
        }
        return nodes_[i];
    }

    // out += scale * (leaf mean of training rows)
    template <typename Row>
    void accumulate(const Row& x, const RowMatrix& Y, double scale, Eigen::Ref<Eigen::RowVectorXd> out) const {
        const auto& leaf = leaf_for(x);
        for (std::uint32_t e = leaf.leaf_begin; e < leaf.leaf_begin + leaf.leaf_count; ++e)
            out += (scale * leaf_weight_[e]) * Y.row(static_cast<Eigen::Index>(leaf_row_[e]));
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t leaf_count() const {
        return static_cast<std::size_t>(
            std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
    }

    void save(io::BinaryWriter& w) const {
        w.put<std::uint64_t>(nodes_.size());
        for (const auto& n : nodes_) {
            w.put<std::int32_t>(n.feature);
            w.put<double>(n.threshold);
            w.put<std::int32_t>(n.left);
            w.put<std::int32_t>(n.right);
            w.put<std::uint32_t>(n.leaf_begin);
            w.put<std::uint32_t>(n.leaf_count);
        }
        w.put_vector(leaf_row_);
        w.put_vector(leaf_weight_);
    }

    void load(io::BinaryReader& r) {
        nodes_.resize(r.get<std::uint64_t>());
        for (auto& n : nodes_) {
            n.feature = r.get<std::int32_t>();
            n.threshold = r.get<double>();
            n.left = r.get<std::int32_t>();
            n.right = r.get<std::int32_t>();
            n.leaf_begin = r.get<std::uint32_t>();
            n.leaf_count = r.get<std::uint32_t>();
        }
        leaf_row_ = r.get_vector<std::uint32_t>();
        leaf_weight_ = r.get_vector<double>();
    }

    bool operator==(const RegressionTree& o) const {
        if (nodes_.size() != o.nodes_.size()) return false;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto &a = nodes_[i], &b = o.nodes_[i];
            if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left || a.right != b.right ||
                a.leaf_begin != b.leaf_begin || a.leaf_count != b.leaf_count)
                return false;
        }
        return leaf_row_ == o.leaf_row_ && leaf_weight_ == o.leaf_weight_;
    }

private:
    static bool is_pure(const RowMatrix& Y, std::span<const std::uint32_t> range) {
        const auto first = Y.row(static_cast<Eigen::Index>(range[0]));
        for (std::size_t i = 1; i < range.size(); ++i)
            if (Y.row(static_cast<Eigen::Index>(range[i])) != first) return false;
        return true;
    }

    void make_leaf(std::int32_t node_id, const RowMatrix& Y, std::span<const std::uint32_t> range) {
        auto& node = nodes_[static_cast<std::size_t>(node_id)];
        node.feature = -1;
        node.leaf_begin = static_cast<std::uint32_t>(leaf_row_.size());
        if (is_pure(Y, range)) {
            leaf_row_.push_back(range[0]);
            leaf_weight_.push_back(1.0);
            node.leaf_count = 1;
            return;
        }
        std::vector<std::uint32_t> rows(range.begin(), range.end());
        std::sort(rows.begin(), rows.end());
        const double n = static_cast<double>(rows.size());
        std::uint32_t count = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0 && rows[i] == rows[i - 1]) continue;
            const auto hi = std::upper_bound(rows.begin() + static_cast<std::ptrdiff_t>(i), rows.end(), rows[i]);
            leaf_row_.push_back(rows[i]);
            leaf_weight_.push_back(static_cast<double>(hi - (rows.begin() + static_cast<std::ptrdiff_t>(i))) / n);
            ++count;
        }
        node.leaf_count = count;
    }

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> leaf_row_;
    std::vector<double> leaf_weight_;
};

class RandomForest {
public:
    RandomForest() = default;
    explicit RandomForest(ForestParams params) : params_(params) {}

    const ForestParams& params() const { return params_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    std::size_t outputs() const { return targets_ ? static_cast<std::size_t>(targets_->cols()) : 0; }

    void fit(const Eigen::MatrixXd& X, const RowMatrix& Y) {
        params_.validate();
        if (X.rows() == 0 || X.rows() != Y.rows()) fail(ErrorKind::dimension, "forest: X and Y rows differ");
        targets_ = std::make_shared<const RowMatrix>(Y);
        trees_.assign(static_cast<std::size_t>(params_.n_trees), RegressionTree{});
        const auto n = static_cast<std::uint32_t>(X.rows());

        auto grow_one = [&](std::size_t t) {
            std::mt19937_64 rng(splitmix64(params_.seed ^ splitmix64(t + 1)));
            std::vector<std::uint32_t> samples(n);
            if (params_.bootstrap) {
                std::uniform_int_distribution<std::uint32_t> pick(0, n - 1);
                for (auto& s : samples) s = pick(rng);
            } else {
                std::iota(samples.begin(), samples.end(), 0u);
            }
            trees_[t] = RegressionTree::grow(X, *targets_, std::move(samples), params_, rng);
        };

        const auto jobs = static_cast<std::size_t>(std::max(1, params_.jobs));
        if (jobs == 1) {
            for (std::size_t t = 0; t < trees_.size(); ++t) grow_one(t);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < std::min(jobs, trees_.size()); ++w)
            workers.emplace_back([&] {
                for (std::size_t t; (t = next.fetch_add(1)) < trees_.size();) grow_one(t);
            });
    }

    RowMatrix predict(const Eigen::MatrixXd& X) const {
        RowMatrix out = RowMatrix::Zero(X.rows(), targets_->cols());
        const double scale = 1.0 / static_cast<double>(trees_.size());
        Eigen::RowVectorXd acc(targets_->cols());
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            acc.setZero();
            const Eigen::RowVectorXd x = X.row(r);
            for (const auto& tree : trees_) tree.accumulate(x, *targets_, 1.0, acc);
            out.row(r) = acc * scale;
        }
        return out;
    }

    void save(io::BinaryWriter& w) const {
        w.put<std::int32_t>(params_.n_trees);
        w.put<std::int32_t>(params_.mtry);
        w.put<std::int32_t>(params_.min_leaf);
        w.put<std::int32_t>(params_.max_depth);
        w.put<std::uint8_t>(params_.bootstrap ? 1 : 0);
        w.put<std::uint64_t>(params_.seed);
        detail::put_row_matrix(w, *targets_);
        w.put<std::uint64_t>(trees_.size());
        for (const auto& t : trees_) t.save(w);
    }

    void load(io::BinaryReader& r) {
        params_.n_trees = r.get<std::int32_t>();
        params_.mtry = r.get<std::int32_t>();
        params_.min_leaf = r.get<std::int32_t>();
        params_.max_depth = r.get<std::int32_t>();
        params_.bootstrap = r.get<std::uint8_t>() != 0;
        params_.seed = r.get<std::uint64_t>();
        targets_ = std::make_shared<const RowMatrix>(detail::get_row_matrix(r));
        trees_.resize(r.get<std::uint64_t>());
        for (auto& t : trees_) t.load(r);
    }

private:
    ForestParams params_;
    std::shared_ptr<const RowMatrix> targets_;
    std::vector<RegressionTree> trees_;
};

// 1-RF: a single multi-output forest over all 4*T targets.
class RfGlobalExpert final : public Expert {
public:
    explicit RfGlobalExpert(ForestParams params = {}, std::string name = "1-rf")
        : Expert(std::move(name)), forest_(params) {}

    std::string family() const override { return "rf_global"; }
    Hyperparams hyperparameters() const override { return forest_.params().to_hyperparams(); }
    const RandomForest& forest() const { return forest_; }

protected:
    void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) override { forest_.fit(X, Y); }
    RowMatrix do_predict(const Eigen::MatrixXd& X) const override { return forest_.predict(X); }
    void do_save(io::BinaryWriter& w) const override { forest_.save(w); }
    void do_load(io::BinaryReader& r) override { forest_.load(r); }

private:
    RandomForest forest_;
};

// 4-RF: one forest per channel, each over that channel's T targets.
class RfPerSeriesExpert final : public Expert {
public:
    explicit RfPerSeriesExpert(ForestParams params = {}, std::string name = "4-rf")
        : Expert(std::move(name)), params_(params) {}

    std::string family() const override { return "rf_per_series"; }
    Hyperparams hyperparameters() const override { return params_.to_hyperparams(); }
    const std::vector<RandomForest>& forests() const { return forests_; }

protected:
    void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) override {
        const auto T = Y.cols() / static_cast<Eigen::Index>(kChannelCount);
        forests_.clear();
        for (std::size_t c = 0; c < kChannelCount; ++c) {
            ForestParams p = params_;
            p.seed = splitmix64(params_.seed + c);
            RandomForest f(p);
            f.fit(X, Y.middleCols(static_cast<Eigen::Index>(c) * T, T));
            forests_.push_back(std::move(f));
        }
    }

    RowMatrix do_predict(const Eigen::MatrixXd& X) const override {
        const auto T = static_cast<Eigen::Index>(steps());
        RowMatrix out(X.rows(), T * static_cast<Eigen::Index>(kChannelCount));
        for (std::size_t c = 0; c < kChannelCount; ++c)
            out.middleCols(static_cast<Eigen::Index>(c) * T, T) = forests_[c].predict(X);
        return out;
    }

    void do_save(io::BinaryWriter& w) const override {
        w.put<std::int32_t>(params_.n_trees);
        w.put<std::int32_t>(params_.mtry);
        w.put<std::int32_t>(params_.min_leaf);
        w.put<std::int32_t>(params_.max_depth);
        w.put<std::uint8_t>(params_.bootstrap ? 1 : 0);
        w.put<std::uint64_t>(params_.seed);
        for (const auto& f : forests_) f.save(w);
    }

    void do_load(io::BinaryReader& r) override {
        params_.n_trees = r.get<std::int32_t>();
        params_.mtry = r.get<std::int32_t>();
        params_.min_leaf = r.get<std::int32_t>();
        params_.max_depth = r.get<std::int32_t>();
        params_.bootstrap = r.get<std::uint8_t>() != 0;
        params_.seed = r.get<std::uint64_t>();
        forests_.assign(kChannelCount, RandomForest{});
        for (auto& f : forests_) f.load(r);
    }

private:
    ForestParams params_;
    std::vector<RandomForest> forests_;
};

}  // namespace aebsurro
