#pragma once

#include <Eigen/Dense>

namespace orbf {

/// Column-wise affine map fitted once on training rows and frozen afterwards.
/// Columns with zero spread keep scale 1.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X);

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
    Eigen::Index dim() const { return mean.size(); }
};

} // namespace orbf
