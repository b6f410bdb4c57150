#pragma once

// Classical PCA of a (samples x features) matrix via thin SVD of the
// centered data. Components come out in order of non-increasing variance.

#include "aebsurro/dataset.hpp"
#include "aebsurro/errors.hpp"
#include "aebsurro/experts/expert.hpp"

#include <Eigen/SVD>

namespace aebsurro {

class Pca {
public:
    // Keeps the smallest number of components whose cumulative variance
    // ratio reaches variance_kept; variance_kept == 1 keeps the full
    // numerical rank.
    void fit(const RowMatrix& Y, double variance_kept) {
        if (!(variance_kept > 0.0 && variance_kept <= 1.0))
            fail(ErrorKind::out_of_range, "pca: variance_kept must lie in (0, 1]");
        if (Y.rows() < 2) fail(ErrorKind::pca, "pca: needs at least two samples");
        mean_ = Y.colwise().mean();
        const Eigen::MatrixXd centered = (Y.rowwise() - mean_).eval();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
        const Eigen::VectorXd s = svd.singularValues();
        if (s.size() == 0 || !(s(0) > 0.0)) fail(ErrorKind::pca, "pca: output matrix has zero variance");

        variances_ = s.array().square() / static_cast<double>(Y.rows() - 1);
        const double total = variances_.sum();
        Eigen::Index keep = 0;
        if (variance_kept >= 1.0) {
            while (keep < s.size() && s(keep) > s(0) * 1e-13) ++keep;
        } else {
            double cum = 0.0;
            while (keep < s.size()) {
                cum += variances_(keep++);
                if (cum / total >= variance_kept) break;
            }
        }
        components_ = svd.matrixV().leftCols(keep);
    }

    std::size_t kept() const { return static_cast<std::size_t>(components_.cols()); }
    // All component variances (kept or not), non-increasing.
    const Eigen::VectorXd& variances() const { return variances_; }
    // features x kept, orthonormal columns
    const Eigen::MatrixXd& components() const { return components_; }
    const Eigen::RowVectorXd& mean() const { return mean_; }

    RowMatrix transform(const RowMatrix& Y) const { return RowMatrix((Y.rowwise() - mean_) * components_); }

    RowMatrix inverse_transform(const RowMatrix& scores) const {
        return RowMatrix((scores * components_.transpose()).rowwise() + mean_);
    }

    void save(io::BinaryWriter& w) const {
        w.put_doubles(mean_.data(), static_cast<std::size_t>(mean_.size()));
        w.put_doubles(variances_.data(), static_cast<std::size_t>(variances_.size()));
        detail::put_matrix(w, components_);
    }

    void load(io::BinaryReader& r) {
        auto m = r.get_doubles();
        auto v = r.get_doubles();
        mean_ = Eigen::Map<Eigen::RowVectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
        variances_ = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        components_ = detail::get_matrix(r);
    }

private:
    Eigen::RowVectorXd mean_;
    Eigen::VectorXd variances_;
    Eigen::MatrixXd components_;
};

}  // namespace aebsurro
