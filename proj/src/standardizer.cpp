#include "orbf/standardizer.hpp"

#include "orbf/error.hpp"

#include <cmath>

namespace orbf {

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    const auto d = X.cols();
    s.mean = Eigen::VectorXd::Zero(d);
    s.scale = Eigen::VectorXd::Ones(d);
    if (X.rows() == 0) return s;
    s.mean = X.colwise().mean().transpose();
    if (X.rows() > 1) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double var = (X.col(j).array() - s.mean(j)).square().sum() /
                               static_cast<double>(X.rows() - 1);
            const double sd = std::sqrt(var);
            if (sd > 0.0 && std::isfinite(sd)) s.scale(j) = sd;
        }
    }
    return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) throw ShapeError("standardizer: dimension mismatch");
    return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw ShapeError("standardizer: dimension mismatch");
    Eigen::MatrixXd out = X.rowwise() - mean.transpose();
    return out.array().rowwise() / scale.transpose().array();
}

} // namespace orbf
