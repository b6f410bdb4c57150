#pragma once

#include "aebsurro/experts/forest.hpp"
#include "aebsurro/experts/pca.hpp"

namespace aebsurro {

// PCA-RF: PCA of the flattened training outputs, a multi-output forest on
// the retained component scores, reconstruction through the inverse map.
class PcaRfExpert final : public Expert {
public:
    PcaRfExpert(double variance_kept = 0.99, ForestParams params = {}, std::string name = "pca-rf")
        : Expert(std::move(name)), variance_kept_(variance_kept), forest_(params) {}

    std::string family() const override { return "pca_rf"; }
    Hyperparams hyperparameters() const override {
        auto hp = forest_.params().to_hyperparams();
        hp["variance_kept"] = variance_kept_;
        return hp;
    }

    const Pca& pca() const { return pca_; }

protected:
    void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) override {
        pca_.fit(Y, variance_kept_);
        forest_.fit(X, pca_.transform(Y));
    }

    RowMatrix do_predict(const Eigen::MatrixXd& X) const override {
        return pca_.inverse_transform(forest_.predict(X));
    }

    void do_save(io::BinaryWriter& w) const override {
        w.put<double>(variance_kept_);
        pca_.save(w);
        forest_.save(w);
    }

    void do_load(io::BinaryReader& r) override {
        variance_kept_ = r.get<double>();
        pca_.load(r);
        forest_.load(r);
    }

private:
    double variance_kept_;
    Pca pca_;
    RandomForest forest_;
};

}  // namespace aebsurro
