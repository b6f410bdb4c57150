#pragma once

#include "aebsurro/experts/expert.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

namespace aebsurro {

// k-nearest-neighbour regressor: unweighted mean of the k closest training
// series, Euclidean distance on standardized parameters. Equal distances
// resolve towards the lower training index.
class KnnExpert final : public Expert {
public:
    explicit KnnExpert(int k = 5, std::string name = "knn") : Expert(std::move(name)), k_(k) {}

    std::string family() const override { return "knn"; }
    Hyperparams hyperparameters() const override { return {{"k", k_}}; }
    int k() const { return k_; }

    std::vector<std::size_t> neighbours(const Eigen::RowVectorXd& query_std) const {
        const auto n = static_cast<std::size_t>(train_x_.rows());
        std::vector<std::pair<double, std::size_t>> d(n);
        for (std::size_t i = 0; i < n; ++i)
            d[i] = {(train_x_.row(static_cast<Eigen::Index>(i)) - query_std).squaredNorm(), i};
        const auto kk = static_cast<std::size_t>(k_);
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
        std::vector<std::size_t> out(kk);
        for (std::size_t i = 0; i < kk; ++i) out[i] = d[i].second;
        return out;
    }

protected:
    void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) override {
        if (k_ < 1 || k_ > X.rows())
            fail(ErrorKind::out_of_range, "knn: k=" + std::to_string(k_) + " outside [1, " +
                                              std::to_string(X.rows()) + "]");
        scaler_.fit(X);
        train_x_ = scaler_.transform(X);
        train_y_ = Y;
    }

    RowMatrix do_predict(const Eigen::MatrixXd& X) const override {
        const Eigen::MatrixXd q = scaler_.transform(X);
        RowMatrix out(X.rows(), train_y_.cols());
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(train_y_.cols());
            for (auto i : neighbours(q.row(r))) acc += train_y_.row(static_cast<Eigen::Index>(i));
            out.row(r) = acc / static_cast<double>(k_);
        }
        return out;
    }

    void do_save(io::BinaryWriter& w) const override {
        w.put<std::int32_t>(k_);
        scaler_.save(w);
        detail::put_matrix(w, train_x_);
        detail::put_row_matrix(w, train_y_);
    }

    void do_load(io::BinaryReader& r) override {
        k_ = r.get<std::int32_t>();
        scaler_.load(r);
        train_x_ = detail::get_matrix(r);
        train_y_ = detail::get_row_matrix(r);
    }

private:
    int k_;
    FeatureScaler scaler_;
    Eigen::MatrixXd train_x_;
    RowMatrix train_y_;
};

}  // namespace aebsurro
