#include "orbf/rbfmap.hpp"

#include "orbf/error.hpp"

#include <cmath>

namespace orbf {

double rbf_activation(const Eigen::VectorXd& x, const Prototype& p) {
    if (!x.allFinite()) throw DataError("rbf_activation: non-finite input");
    return std::exp(-0.5 * p.mahalanobis_sq(x));
}

RbfFeatureVector feature_vector(const Eigen::VectorXd& x, const PrototypeSet& set) {
    RbfFeatureVector phi(static_cast<Eigen::Index>(set.k()) + 1);
    phi(0) = 1.0;
    for (std::size_t j = 0; j < set.k(); ++j)
        phi(static_cast<Eigen::Index>(j) + 1) = rbf_activation(x, set.prototypes[j]);
    return phi;
}

} // namespace orbf
