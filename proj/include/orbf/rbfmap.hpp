#pragma once

#include "orbf/prototypes.hpp"

#include <Eigen/Dense>

namespace orbf {

/// [1, phi_1(x), ..., phi_k(x)]. Element 0 is the bias and is exactly 1; the
/// remaining entries lie in [0, 1] (they underflow to 0 far from every unit).
using RbfFeatureVector = Eigen::VectorXd;

/// Gaussian unit exp(-q/2) with q the Mahalanobis distance of x from p.
/// The quadratic form is a forward substitution with the cached Cholesky
/// factor followed by a sum of squares in index order.
double rbf_activation(const Eigen::VectorXd& x, const Prototype& p);

RbfFeatureVector feature_vector(const Eigen::VectorXd& x, const PrototypeSet& set);

} // namespace orbf
