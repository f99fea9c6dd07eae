#include "orbf/prototypes.hpp"

#include "orbf/error.hpp"
#include "orbf/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace orbf {

void Prototype::refresh(const ShrinkageConfig& shrinkage) {
    Eigen::MatrixXd diag = scatter.diagonal().asDiagonal();
    covariance = (1.0 - shrinkage.lambda) * scatter + shrinkage.lambda * diag;
    covariance = (0.5 * (covariance + covariance.transpose())).eval();
    covariance.diagonal().array() += shrinkage.floor;
    refactor(shrinkage.floor);
}

void Prototype::refactor(double jitter_start) {
    const auto d = mean.size();
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    double jitter = jitter_start > 0.0 ? jitter_start : 1e-12;
    while (llt.info() != Eigen::Success) {
        log::warn("prototype covariance lost definiteness; adding jitter " + std::to_string(jitter));
        covariance.diagonal().array() += jitter;
        llt.compute(covariance);
        jitter *= 10.0;
    }
    cholesky = llt.matrixL();
    precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
    precision = (0.5 * (precision + precision.transpose())).eval();
}

double Prototype::mahalanobis_sq(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) {
        throw ShapeError("input has dimension " + std::to_string(x.size()) +
                         ", prototype has " + std::to_string(mean.size()));
    }
    Eigen::VectorXd z = cholesky.triangularView<Eigen::Lower>().solve(x - mean);
    return z.squaredNorm();
}

namespace {

double sq_dist(const Eigen::MatrixXd& X, Eigen::Index r, const Eigen::MatrixXd& C, Eigen::Index c) {
    return (X.row(r) - C.row(c)).squaredNorm();
}

// Assigns each row to its nearest center; returns the inertia.
double assign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& C, std::vector<std::size_t>& a) {
    double inertia = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index arg = 0;
        for (Eigen::Index c = 0; c < C.rows(); ++c) {
            const double d = sq_dist(X, r, C, c);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        a[static_cast<std::size_t>(r)] = static_cast<std::size_t>(arg);
        inertia += best;
    }
    return inertia;
}

Eigen::MatrixXd plus_plus_seed(const Eigen::MatrixXd& X, std::size_t k, std::mt19937_64& rng) {
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd C(static_cast<Eigen::Index>(k), X.cols());
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto first = static_cast<Eigen::Index>(unif(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    C.row(0) = X.row(first);

    Eigen::VectorXd d2(n);
    for (Eigen::Index r = 0; r < n; ++r) d2(r) = sq_dist(X, r, C, 0);

    for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(k); ++c) {
        const double total = d2.sum();
        if (!(total > 0.0)) {
            throw SizingError("k-means: fewer distinct rows than k = " + std::to_string(k));
        }
        const double target = unif(rng) * total;
        double acc = 0.0;
        Eigen::Index pick = -1;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (d2(r) <= 0.0) continue;
            acc += d2(r);
            pick = r;
            if (acc > target) break;
        }
        C.row(c) = X.row(pick);
        for (Eigen::Index r = 0; r < n; ++r) d2(r) = std::min(d2(r), sq_dist(X, r, C, c));
    }
    return C;
}

} // namespace

KMeansResult kmeans_fit(const Eigen::MatrixXd& X, std::size_t k, std::uint64_t seed,
                        int max_iter, double tol) {
    if (k < 1) throw SizingError("k-means needs k >= 1");
    if (static_cast<std::size_t>(X.rows()) < k) {
        throw SizingError("k-means needs at least k = " + std::to_string(k) + " rows, got " +
                          std::to_string(X.rows()));
    }
    if (!X.allFinite()) throw DataError("k-means input contains non-finite values");
    if (max_iter < 1) throw ConfigError("k-means max_iter must be >= 1");

    std::mt19937_64 rng(seed);
    KMeansResult res;
    res.centers = plus_plus_seed(X, k, rng);
    res.assignments.assign(static_cast<std::size_t>(X.rows()), 0);
    res.inertia_history.push_back(assign(X, res.centers, res.assignments));

    const auto kk = static_cast<Eigen::Index>(k);
    std::vector<std::size_t> previous;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, X.cols());
        std::vector<std::size_t> counts(k, 0);
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            const auto a = res.assignments[static_cast<std::size_t>(r)];
            sums.row(static_cast<Eigen::Index>(a)) += X.row(r);
            ++counts[a];
        }
        std::vector<Eigen::Index> empty;
        for (Eigen::Index c = 0; c < kk; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                empty.push_back(c);
            } else {
                res.centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        if (!empty.empty()) {
            std::vector<bool> taken(static_cast<std::size_t>(X.rows()), false);
            for (auto c : empty) {
                double far = -1.0;
                Eigen::Index arg = 0;
                for (Eigen::Index r = 0; r < X.rows(); ++r) {
                    if (taken[static_cast<std::size_t>(r)]) continue;
                    const auto own = static_cast<Eigen::Index>(res.assignments[static_cast<std::size_t>(r)]);
                    const double d = sq_dist(X, r, res.centers, own);
                    if (d > far) {
                        far = d;
                        arg = r;
                    }
                }
                taken[static_cast<std::size_t>(arg)] = true;
                res.centers.row(c) = X.row(arg);
            }
        }

        previous = res.assignments;
        const double inertia = assign(X, res.centers, res.assignments);
        const double last = res.inertia_history.back();
        res.inertia_history.push_back(inertia);
        res.iterations = it + 1;
        if (previous == res.assignments || inertia == 0.0 || (last - inertia) <= tol * last) {
            res.converged = true;
            break;
        }
    }
    return res;
}

PrototypeSet estimate_covariances(const Eigen::MatrixXd& centers, const Eigen::MatrixXd& X,
                                  std::span<const std::size_t> assignments,
                                  const ShrinkageConfig& shrinkage, double decay) {
    if (static_cast<std::size_t>(X.rows()) != assignments.size())
        throw ShapeError("assignments do not match the rows of X");
    if (centers.cols() != X.cols()) throw ShapeError("centers and X differ in dimension");
    if (!(shrinkage.lambda >= 0.0 && shrinkage.lambda <= 1.0))
        throw ConfigError("shrinkage lambda must lie in [0, 1]");
    if (!(shrinkage.floor > 0.0)) throw ConfigError("covariance floor must be > 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("prototype decay must lie in (0, 1]");

    const auto d = X.cols();
    const auto n = X.rows();
    Eigen::VectorXd global_var = Eigen::VectorXd::Zero(d);
    if (n > 1) {
        Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
        global_var = Xc.colwise().squaredNorm() / static_cast<double>(n - 1);
    }

    PrototypeSet set;
    set.decay = decay;
    set.shrinkage = shrinkage;
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
        std::vector<Eigen::Index> members;
        for (Eigen::Index r = 0; r < n; ++r)
            if (assignments[static_cast<std::size_t>(r)] == static_cast<std::size_t>(j)) members.push_back(r);

        Prototype p;
        p.mean = centers.row(j).transpose();
        p.weight = static_cast<double>(members.size());
        if (static_cast<Eigen::Index>(members.size()) >= d + 1) {
            Eigen::MatrixXd M(static_cast<Eigen::Index>(members.size()), d);
            for (std::size_t i = 0; i < members.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = X.row(members[i]);
            Eigen::MatrixXd Mc = M.rowwise() - M.colwise().mean();
            p.scatter = (Mc.transpose() * Mc) / static_cast<double>(M.rows() - 1);
        } else {
            p.scatter = global_var.asDiagonal();
        }
        p.refresh(shrinkage);
        set.prototypes.push_back(std::move(p));
    }
    return set;
}

std::size_t nearest_prototype(const PrototypeSet& set, const Eigen::VectorXd& x) {
    if (set.k() == 0) throw SizingError("prototype set is empty");
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < set.k(); ++j) {
        const double q = set.prototypes[j].mahalanobis_sq(x);
        if (q < best) {
            best = q;
            arg = j;
        }
    }
    return arg;
}

void update_prototype(Prototype& p, const Eigen::VectorXd& x, double decay,
                      const ShrinkageConfig& shrinkage) {
    if (x.size() != p.mean.size()) throw ShapeError("update row has the wrong dimension");
    if (!x.allFinite()) throw DataError("prototype update rejected: non-finite input");
    p.weight = decay * p.weight + 1.0;
    p.mean += (x - p.mean) / p.weight;
    const Eigen::VectorXd dev = x - p.mean;
    p.scatter += (dev * dev.transpose() - p.scatter) / p.weight;
    p.scatter = (0.5 * (p.scatter + p.scatter.transpose())).eval();
    p.refresh(shrinkage);
}

std::size_t online_update(PrototypeSet& set, const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw DataError("prototype update rejected: non-finite input");
    const std::size_t j = nearest_prototype(set, x);
    update_prototype(set.prototypes[j], x, set.decay, set.shrinkage);
    return j;
}

std::size_t default_hidden_units(std::size_t n_train) {
    const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_train) / 2.0)));
    return std::max<std::size_t>(2, k);
}

} // namespace orbf
