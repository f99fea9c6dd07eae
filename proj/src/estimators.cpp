#include "orbf/estimators.hpp"

#include "orbf/error.hpp"
#include "orbf/log.hpp"

#include <cmath>
#include <string>

namespace orbf {

namespace {

constexpr double kMinTau = 0.8;

void check_params(std::size_t dim, double delta, double tau) {
    if (dim < 1) throw ConfigError("ewrls dimension must be >= 1");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("ewrls delta must be > 0");
    if (!(tau > kMinTau && tau <= 1.0))
        throw ConfigError("ewrls tau must lie in (0.8, 1], got " + std::to_string(tau));
}

} // namespace

EwrlsState::EwrlsState(std::size_t dim, double delta, double tau) : tau_(tau), delta_(delta) {
    check_params(dim, delta, tau);
    const auto d = static_cast<Eigen::Index>(dim);
    theta_ = Eigen::VectorXd::Zero(d);
    inv_gram_ = Eigen::MatrixXd::Identity(d, d) / delta;
}

EwrlsState EwrlsState::restore(Eigen::VectorXd theta, Eigen::MatrixXd inv_gram, double tau,
                               double delta, std::size_t n_updates) {
    check_params(static_cast<std::size_t>(theta.size()), delta, tau);
    if (inv_gram.rows() != theta.size() || inv_gram.cols() != theta.size())
        throw ShapeError("ewrls checkpoint: inverse Gram shape does not match theta");
    EwrlsState s;
    s.theta_ = std::move(theta);
    s.inv_gram_ = std::move(inv_gram);
    s.tau_ = tau;
    s.delta_ = delta;
    s.n_updates_ = n_updates;
    return s;
}

double EwrlsState::predict(const Eigen::VectorXd& phi) const {
    if (phi.size() != theta_.size()) {
        throw ShapeError("ewrls: feature length " + std::to_string(phi.size()) +
                         " does not match state dimension " + std::to_string(theta_.size()));
    }
    return theta_.dot(phi);
}

double EwrlsState::step(const Eigen::VectorXd& phi, double y) {
    const double prior = predict(phi);
    if (!phi.allFinite() || !std::isfinite(y)) throw DataError("ewrls update rejected: non-finite input");

    const Eigen::VectorXd Pphi = inv_gram_ * phi;
    const double denom = tau_ + phi.dot(Pphi);
    const Eigen::VectorXd gain = Pphi / denom;
    theta_ += gain * (y - prior);
    inv_gram_ = (inv_gram_ - gain * Pphi.transpose()) / tau_;
    inv_gram_ = (0.5 * (inv_gram_ + inv_gram_.transpose())).eval();

    Eigen::LLT<Eigen::MatrixXd> llt(inv_gram_);
    if (llt.info() != Eigen::Success) {
        const double eps = 1e-10 * std::max(1.0, inv_gram_.diagonal().cwiseAbs().maxCoeff());
        log::warn("ewrls inverse Gram lost definiteness after " + std::to_string(n_updates_ + 1) +
                  " updates; reconditioning");
        inv_gram_.diagonal().array() += eps;
    }
    ++n_updates_;
    return prior;
}

Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          std::optional<std::size_t> unpenalized) {
    if (X.rows() < 1) throw SizingError("ridge_fit needs at least one row");
    if (X.rows() != y.size()) throw ShapeError("ridge_fit: X and y are not row-aligned");
    if (!(lambda >= 0.0)) throw ConfigError("ridge lambda must be >= 0");
    if (unpenalized && *unpenalized >= static_cast<std::size_t>(X.cols()))
        throw ShapeError("ridge_fit: unpenalized column out of range");

    Eigen::MatrixXd A = X.transpose() * X;
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        if (unpenalized && static_cast<std::size_t>(j) == *unpenalized) continue;
        A(j, j) += lambda;
    }
    const Eigen::VectorXd b = X.transpose() * y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < A.cols()) {
        throw SolverError("ridge system is singular (rank " + std::to_string(qr.rank()) + " of " +
                          std::to_string(A.cols()) + "); use lambda > 0");
    }
    return qr.solve(b);
}

} // namespace orbf
