#pragma once

// Test helpers and independent oracles. Nothing here calls into the library
// code it is used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace testing {

inline Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, Eigen::Index n) {
    return gaussian_matrix(rng, n, 1).col(0);
}

/// Random SPD matrix A A^T + d I.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d) {
    Eigen::MatrixXd a = gaussian_matrix(rng, d, d);
    return a * a.transpose() + static_cast<double>(d) * Eigen::MatrixXd::Identity(d, d) * 0.5;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

/// Exponentially weighted regularised normal equations:
/// (delta tau^n I + sum tau^(n-i) phi_i phi_i^T) theta = sum tau^(n-i) phi_i y_i.
inline Eigen::VectorXd weighted_ridge_oracle(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, double tau,
                                             double delta) {
    const auto n = Phi.rows();
    const auto d = Phi.cols();
    Eigen::MatrixXd A = delta * std::pow(tau, static_cast<double>(n)) * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = std::pow(tau, static_cast<double>(n - 1 - i));
        A += w * Phi.row(i).transpose() * Phi.row(i);
        b += w * Phi.row(i).transpose() * y(i);
    }
    return A.fullPivLu().solve(b);
}

/// R^2 of y on [1, X] by explicit normal equations.
inline double r2_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const auto n = X.rows();
    Eigen::MatrixXd D(n, X.cols() + 1);
    D.col(0).setOnes();
    D.rightCols(X.cols()) = X;
    Eigen::VectorXd beta = (D.transpose() * D).fullPivLu().solve(D.transpose() * y);
    const Eigen::VectorXd r = y - D * beta;
    const double ybar = y.mean();
    const double tss = (y.array() - ybar).square().sum();
    return 1.0 - r.squaredNorm() / tss;
}

inline std::vector<double> vif_oracle(const Eigen::MatrixXd& X) {
    std::vector<double> out;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        Eigen::MatrixXd others(X.rows(), X.cols() - 1);
        for (Eigen::Index c = 0, k = 0; c < X.cols(); ++c)
            if (c != j) others.col(k++) = X.col(c);
        out.push_back(1.0 / (1.0 - r2_oracle(others, X.col(j))));
    }
    return out;
}

/// exp(-0.5 (x-mu)^T Sigma^{-1} (x-mu)) with an explicit inverse.
inline double rbf_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
    const Eigen::VectorXd d = x - mu;
    const Eigen::MatrixXd inv = sigma.inverse();
    return std::exp(-0.5 * d.dot(inv * d));
}

inline double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_var(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace testing
