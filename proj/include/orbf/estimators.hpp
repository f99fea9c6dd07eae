#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace orbf {

/// Exponentially weighted recursive least squares.
///
/// After n updates theta minimises
///   sum_i tau^(n-i) (y_i - theta^T phi_i)^2 + delta tau^n |theta|^2,
/// and inv_gram is the inverse of the matching weighted, regularised Gram
/// matrix. tau = 1 reduces to ordinary recursive ridge regression.
class EwrlsState {
public:
    EwrlsState() = default;

    /// theta = 0, inv_gram = I / delta. Throws ConfigError unless dim >= 1,
    /// delta > 0 and tau in (0.8, 1].
    EwrlsState(std::size_t dim, double delta, double tau);

    /// theta^T phi.
    double predict(const Eigen::VectorXd& phi) const;

    /// Returns the prior prediction theta^T phi, then folds (phi, y) into the
    /// estimate. Non-finite input throws DataError and leaves the state as is.
    double step(const Eigen::VectorXd& phi, double y);

    std::size_t dim() const { return static_cast<std::size_t>(theta_.size()); }
    double tau() const { return tau_; }
    double delta() const { return delta_; }
    std::size_t n_updates() const { return n_updates_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::MatrixXd& inv_gram() const { return inv_gram_; }

    /// Rebuilds a state from checkpointed parts.
    static EwrlsState restore(Eigen::VectorXd theta, Eigen::MatrixXd inv_gram, double tau,
                              double delta, std::size_t n_updates);

private:
    Eigen::VectorXd theta_;
    Eigen::MatrixXd inv_gram_;
    double tau_ = 1.0;
    double delta_ = 1.0;
    std::size_t n_updates_ = 0;
};

inline EwrlsState ewrls_init(std::size_t dim, double delta, double tau) {
    return EwrlsState(dim, delta, tau);
}

/// Solves (X^T X + lambda D) theta = X^T y where D is the identity except for a
/// zero at `unpenalized` (typically the intercept column). Throws SolverError
/// when the system is singular.
Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          std::optional<std::size_t> unpenalized = std::nullopt);

} // namespace orbf
