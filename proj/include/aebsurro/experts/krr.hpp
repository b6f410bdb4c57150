#pragma once

#include "aebsurro/experts/expert.hpp"

#include <cmath>
#include <set>
#include <vector>

namespace aebsurro {

// Laplacian kernel k(x, x') = exp(-gamma * |x - x'|_1).
inline double laplacian_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                               const Eigen::Ref<const Eigen::RowVectorXd>& b, double gamma) {
    return std::exp(-gamma * (a - b).cwiseAbs().sum());
}

inline Eigen::MatrixXd laplacian_gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double gamma) {
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j) K(i, j) = laplacian_kernel(A.row(i), B.row(j), gamma);
    return K;
}

/*
 Kernel ridge regression on standardized parameters.

 Dual coefficients solve (K + lambda * n * I) A = Y by Cholesky; a
 prediction is the kernel row against the training inputs times A.
 lambda = 0 is accepted for distinct inputs; duplicates then make K
 singular and the fit reports a conditioning error.
*/
class KrrExpert final : public Expert {
public:
    KrrExpert(double gamma = 0.3, double lambda = 1e-4, std::string name = "krr")
        : Expert(std::move(name)), gamma_(gamma), lambda_(lambda) {}

    std::string family() const override { return "krr"; }
    Hyperparams hyperparameters() const override { return {{"gamma", gamma_}, {"lambda", lambda_}}; }

    const Eigen::MatrixXd& dual_coefficients() const { return alpha_; }

protected:
    void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) override {
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) fail(ErrorKind::out_of_range, "krr: gamma must be > 0");
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) fail(ErrorKind::out_of_range, "krr: lambda must be >= 0");
        scaler_.fit(X);
        train_x_ = scaler_.transform(X);
        const auto n = train_x_.rows();

        if (lambda_ == 0.0) {
            std::set<std::vector<double>> seen;
            for (Eigen::Index i = 0; i < n; ++i) {
                std::vector<double> row(static_cast<std::size_t>(X.cols()));
                for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
                if (!seen.insert(std::move(row)).second)
                    fail(ErrorKind::conditioning,
                         "krr: duplicate training inputs make the kernel singular; use lambda > 0");
            }
        }

        Eigen::MatrixXd K = laplacian_gram(train_x_, train_x_, gamma_);
        K.diagonal().array() += lambda_ * static_cast<double>(n);
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15))
            fail(ErrorKind::conditioning, "krr: kernel system is numerically singular; increase lambda");
        alpha_ = llt.solve(Eigen::MatrixXd(Y));
        if (!alpha_.allFinite()) fail(ErrorKind::conditioning, "krr: solve produced non-finite coefficients");
    }

    RowMatrix do_predict(const Eigen::MatrixXd& X) const override {
        const Eigen::MatrixXd K = laplacian_gram(scaler_.transform(X), train_x_, gamma_);
        return RowMatrix(K * alpha_);
    }

    void do_save(io::BinaryWriter& w) const override {
        w.put<double>(gamma_);
        w.put<double>(lambda_);
        scaler_.save(w);
        detail::put_matrix(w, train_x_);
        detail::put_matrix(w, alpha_);
    }

    void do_load(io::BinaryReader& r) override {
        gamma_ = r.get<double>();
        lambda_ = r.get<double>();
        scaler_.load(r);
        train_x_ = detail::get_matrix(r);
        alpha_ = detail::get_matrix(r);
    }

private:
    double gamma_;
    double lambda_;
    FeatureScaler scaler_;
    Eigen::MatrixXd train_x_;
    Eigen::MatrixXd alpha_;
};

}  // namespace aebsurro
