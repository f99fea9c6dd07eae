#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace orbf {

/// Covariance regularisation: Sigma = (1 - lambda) S + lambda diag(S) + floor I.
struct ShrinkageConfig {
    double lambda = 0.1;
    double floor = 1e-6;
};

/// One hidden unit. `scatter` is the raw covariance estimate that streaming
/// updates act on; `covariance`, `cholesky` and `precision` are derived from it
/// by refresh() and are what the kernel reads.
struct Prototype {
    Eigen::VectorXd mean;
    Eigen::MatrixXd scatter;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd cholesky;  // lower factor of covariance
    Eigen::MatrixXd precision;
    double weight = 0.0;       // decayed sample count

    std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

    /// Re-derive covariance, its factor and precision from scatter.
    void refresh(const ShrinkageConfig& shrinkage);

    /// Re-derive cholesky and precision from covariance, adding diagonal
    /// jitter (starting at jitter_start) until the factorisation succeeds.
    void refactor(double jitter_start);

    /// (x - mean)^T covariance^{-1} (x - mean) via a triangular solve on the cached factor.
    double mahalanobis_sq(const Eigen::VectorXd& x) const;
};

struct PrototypeSet {
    std::vector<Prototype> prototypes;
    double decay = 0.99;
    ShrinkageConfig shrinkage;

    std::size_t k() const { return prototypes.size(); }
    std::size_t dim() const { return prototypes.empty() ? 0 : prototypes.front().dim(); }
};

struct KMeansResult {
    Eigen::MatrixXd centers;                // k x d
    std::vector<std::size_t> assignments;   // per row of X
    std::vector<double> inertia_history;    // after every assignment step
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm on Euclidean distance with k-means++ seeding. Stops on
/// max_iter, unchanged assignments, or relative inertia change below tol.
/// An emptied cluster is re-seeded at the row farthest from its own centroid.
KMeansResult kmeans_fit(const Eigen::MatrixXd& X, std::size_t k, std::uint64_t seed,
                        int max_iter = 300, double tol = 1e-8);

/// Per-cluster shrunk covariances. Clusters with fewer than d + 1 members use
/// the global diagonal covariance of X.
PrototypeSet estimate_covariances(const Eigen::MatrixXd& centers, const Eigen::MatrixXd& X,
                                  std::span<const std::size_t> assignments,
                                  const ShrinkageConfig& shrinkage = {}, double decay = 0.99);

/// Index of the prototype with the smallest Mahalanobis distance (ties: lowest index).
std::size_t nearest_prototype(const PrototypeSet& set, const Eigen::VectorXd& x);

/// Decayed sequential-means update of one unit.
void update_prototype(Prototype& p, const Eigen::VectorXd& x, double decay,
                      const ShrinkageConfig& shrinkage);

/// Moves the nearest prototype towards x. Throws DataError (set unchanged) on
/// non-finite input. Returns the index that was updated.
std::size_t online_update(PrototypeSet& set, const Eigen::VectorXd& x);

/// max(2, round(sqrt(n_train / 2)))
std::size_t default_hidden_units(std::size_t n_train);

} // namespace orbf
