#pragma once

/*
 Polynomial chaos expansion with a total-degree Legendre basis.

 Each input is mapped affinely from its prior interval onto [-1, 1] (the
 Legendre weight matches a uniform input), the design matrix is built from
 products of univariate Legendre polynomials, and coefficients for every
 output column come from one column-pivoted Householder QR least-squares
 solve.
*/

#include "aebsurro/experts/expert.hpp"
#include "aebsurro/sim.hpp"

#include <vector>

namespace aebsurro {

// P_0..P_degree at x via the three-term recurrence.
inline std::vector<double> legendre_values(double x, int degree) {
    std::vector<double> p(static_cast<std::size_t>(degree) + 1);
    p[0] = 1.0;
    if (degree >= 1) p[1] = x;
    for (int n = 1; n < degree; ++n)
        p[static_cast<std::size_t>(n) + 1] =
            ((2.0 * n + 1.0) * x * p[static_cast<std::size_t>(n)] - n * p[static_cast<std::size_t>(n) - 1]) / (n + 1.0);
    return p;
}

inline double legendre(int n, double x) { return legendre_values(x, n)[static_cast<std::size_t>(n)]; }

// Multi-indices with total degree <= degree, graded then lexicographic.
inline std::vector<std::vector<int>> total_degree_indices(std::size_t dims, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dims, 0);
    for (int total = 0; total <= degree; ++total) {
        // enumerate compositions of `total` into `dims` parts, first index largest first
        auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
            if (pos + 1 == dims) {
                cur[pos] = remaining;
                out.push_back(cur);
                return;
            }
            for (int v = remaining; v >= 0; --v) {
                cur[pos] = v;
                self(self, pos + 1, remaining - v);
            }
        };
        if (dims == 0) {
            if (total == 0) out.emplace_back();
        } else {
            rec(rec, 0, total);
        }
    }
    return out;
}

class PceExpert final : public Expert {
public:
    PceExpert(int degree, std::vector<Interval> domain, std::string name = "pce")
        : Expert(std::move(name)), degree_(degree), domain_(std::move(domain)) {}

    PceExpert(int degree = 3, std::string name = "pce")
        : PceExpert(degree, default_domain(), std::move(name)) {}

    static std::vector<Interval> default_domain() {
        const auto p = ParameterPriors::defaults();
        return {p.intervals.begin(), p.intervals.end()};
    }

    std::string family() const override { return "pce"; }
    Hyperparams hyperparameters() const override { return {{"degree", degree_}}; }

    std::size_t basis_size() const { return indices_.size(); }
    const std::vector<std::vector<int>>& basis() const { return indices_; }
    // basis_size x outputs
    const Eigen::MatrixXd& coefficients() const { return coef_; }

    Eigen::MatrixXd design(const Eigen::MatrixXd& X) const {
        const auto dims = static_cast<std::size_t>(X.cols());
        Eigen::MatrixXd Phi(X.rows(), static_cast<Eigen::Index>(indices_.size()));
        std::vector<std::vector<double>> uni(dims);
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            for (std::size_t j = 0; j < dims; ++j) {
                const auto& iv = domain_[j];
                const double z = 2.0 * (X(r, static_cast<Eigen::Index>(j)) - iv.lo) / (iv.hi - iv.lo) - 1.0;
                uni[j] = legendre_values(z, degree_);
            }
            for (std::size_t b = 0; b < indices_.size(); ++b) {
                double v = 1.0;
                for (std::size_t j = 0; j < dims; ++j) v *= uni[j][static_cast<std::size_t>(indices_[b][j])];
                Phi(r, static_cast<Eigen::Index>(b)) = v;
            }
        }
        return Phi;
    }

protected:
    void do_fit(const Eigen::MatrixXd& X, const RowMatrix& Y) override {
        if (degree_ < 0) fail(ErrorKind::out_of_range, "pce: degree must be >= 0");
        if (domain_.size() != static_cast<std::size_t>(X.cols()))
            fail(ErrorKind::dimension, "pce: domain has " + std::to_string(domain_.size()) +
                                           " intervals for " + std::to_string(X.cols()) + " inputs");
        for (const auto& iv : domain_)
            if (!(iv.lo < iv.hi)) fail(ErrorKind::configuration, "pce: degenerate input interval");
        indices_ = total_degree_indices(domain_.size(), degree_);
        if (static_cast<std::size_t>(X.rows()) < indices_.size())
            fail(ErrorKind::rank, "pce: basis size " + std::to_string(indices_.size()) + " exceeds sample count " +
                                      std::to_string(X.rows()));
        const Eigen::MatrixXd Phi = design(X);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
        if (static_cast<std::size_t>(qr.rank()) < indices_.size())
            fail(ErrorKind::rank, "pce: design matrix rank " + std::to_string(qr.rank()) + " below basis size " +
                                      std::to_string(indices_.size()) + " with " + std::to_string(X.rows()) +
                                      " samples");
        coef_ = qr.solve(Eigen::MatrixXd(Y));
    }

    RowMatrix do_predict(const Eigen::MatrixXd& X) const override { return RowMatrix(design(X) * coef_); }

    void do_save(io::BinaryWriter& w) const override {
        w.put<std::int32_t>(degree_);
        w.put<std::uint64_t>(domain_.size());
        for (const auto& iv : domain_) {
            w.put<double>(iv.lo);
            w.put<double>(iv.hi);
        }
        detail::put_matrix(w, coef_);
    }

    void do_load(io::BinaryReader& r) override {
        degree_ = r.get<std::int32_t>();
        domain_.resize(r.get<std::uint64_t>());
        for (auto& iv : domain_) {
            iv.lo = r.get<double>();
            iv.hi = r.get<double>();
        }
        coef_ = detail::get_matrix(r);
        indices_ = total_degree_indices(domain_.size(), degree_);
    }

private:
    int degree_;
    std::vector<Interval> domain_;
    std::vector<std::vector<int>> indices_;
    Eigen::MatrixXd coef_;
};

}  // namespace aebsurro
