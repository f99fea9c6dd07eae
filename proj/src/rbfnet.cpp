#include "orbf/rbfnet.hpp"

#include "orbf/error.hpp"

#include <cmath>
#include <string>

namespace orbf {

std::vector<Eigen::Index> complete_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        std::span<const std::size_t> columns) {
    if (X.rows() != y.size()) throw ShapeError("X and y are not row-aligned");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        if (!std::isfinite(y(r))) continue;
        bool ok = true;
        for (auto c : columns) {
            if (!std::isfinite(X(r, static_cast<Eigen::Index>(c)))) {
                ok = false;
                break;
            }
        }
        if (ok) rows.push_back(r);
    }
    return rows;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& X, std::span<const Eigen::Index> rows,
                       std::span<const std::size_t> columns) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < columns.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                X(rows[i], static_cast<Eigen::Index>(columns[j]));
    return out;
}

RbfNetModel RbfNetModel::fit_initial(const RbfNetConfig& config, FeatureSelection selection,
                                     const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     std::size_t horizon, std::string target_id) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    for (auto c : selection.features)
        if (c >= static_cast<std::size_t>(X.cols())) throw ShapeError("selected feature out of range");

    RbfNetModel m;
    m.config_ = config;
    m.horizon_ = horizon;
    m.target_id_ = std::move(target_id);
    m.selection_ = std::move(selection);
    if (m.selection_.target_id.empty()) m.selection_.target_id = m.target_id_;

    const auto rows = complete_rows(X, y, m.selection_.features);
    const Eigen::MatrixXd raw = gather(X, rows, m.selection_.features);
    m.standardizer_ = Standardizer::fit(raw);
    const Eigen::MatrixXd Z = m.standardizer_.apply(raw);
    const std::size_t d = m.selection_.size();

    std::size_t k = 0;
    if (d > 0) {
        k = config.hidden_units > 0 ? config.hidden_units : default_hidden_units(rows.size());
        if (rows.size() < k + d + 2) {
            throw SizingError("rbfnet needs at least k + d + 2 = " + std::to_string(k + d + 2) +
                              " complete training rows, got " + std::to_string(rows.size()));
        }
        auto km = kmeans_fit(Z, k, config.seed, config.kmeans_max_iter, config.kmeans_tol);
        m.prototypes_ = estimate_covariances(km.centers, Z, km.assignments, config.shrinkage,
                                             config.prototype_decay);
    } else {
        m.prototypes_.decay = config.prototype_decay;
        m.prototypes_.shrinkage = config.shrinkage;
    }

    m.head_ = EwrlsState(k + 1, config.delta, config.tau);
    m.fit_priors_.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::VectorXd x = Z.row(static_cast<Eigen::Index>(i)).transpose();
        m.fit_priors_.push_back(m.head_.step(feature_vector(x, m.prototypes_), y(rows[i])));
    }
    return m;
}

RbfNetModel RbfNetModel::fit_initial(const RbfNetConfig& config, const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y, std::size_t horizon,
                                     std::string target_id) {
    std::vector<std::size_t> all(static_cast<std::size_t>(X.cols()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto rows = complete_rows(X, y, all);
    auto sel = select_features(gather(X, rows, all), y(rows), config.selection);
    sel.target_id = target_id;
    return fit_initial(config, std::move(sel), X, y, horizon, std::move(target_id));
}

Eigen::VectorXd RbfNetModel::select_row(const Eigen::VectorXd& candidates) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(selection_.size()));
    for (std::size_t j = 0; j < selection_.size(); ++j) {
        const auto c = selection_.features[j];
        if (c >= static_cast<std::size_t>(candidates.size()))
            throw ShapeError("candidate row is shorter than the selected feature index");
        x(static_cast<Eigen::Index>(j)) = candidates(static_cast<Eigen::Index>(c));
    }
    return x;
}

RbfFeatureVector RbfNetModel::features(const Eigen::VectorXd& candidates) const {
    const Eigen::VectorXd x = standardizer_.apply(select_row(candidates));
    if (!x.allFinite()) throw DataError("rbfnet: selected inputs contain missing values");
    return feature_vector(x, prototypes_);
}

double RbfNetModel::peek(const Eigen::VectorXd& candidates) const {
    return head_.predict(features(candidates));
}

Eigen::VectorXd RbfNetModel::peek_rows(const Eigen::MatrixXd& candidates) const {
    Eigen::VectorXd out(candidates.rows());
    for (Eigen::Index r = 0; r < candidates.rows(); ++r) out(r) = peek(candidates.row(r).transpose());
    return out;
}

ForecastRecord RbfNetModel::predict(std::int64_t t, const Eigen::VectorXd& candidates) {
    if (pending_.size() >= horizon_) {
        throw ProtocolError("rbfnet: " + std::to_string(pending_.size()) +
                            " predictions already pending for horizon " + std::to_string(horizon_));
    }
    if (t <= last_t_) throw ProtocolError("rbfnet: prediction times must increase");
    PendingPrediction p;
    p.t = t;
    p.x = standardizer_.apply(select_row(candidates));
    if (!p.x.allFinite()) throw DataError("rbfnet: selected inputs contain missing values");
    p.phi = feature_vector(p.x, prototypes_);
    p.y_hat = head_.predict(p.phi);
    last_t_ = t;
    pending_.push_back(p);
    return ForecastRecord{target_id_, std::string(kModelId), horizon_, t, p.y_hat, std::nullopt};
}

ForecastRecord RbfNetModel::resolve(std::int64_t t, double y_realized) {
    if (pending_.empty() || pending_.front().t != t) {
        throw ProtocolError("rbfnet: label for t = " + std::to_string(t) +
                            " does not match the oldest pending prediction");
    }
    if (!std::isfinite(y_realized)) throw DataError("rbfnet: non-finite label");
    const PendingPrediction& p = pending_.front();
    if (config_.online) {
        if (config_.update_prototypes && prototypes_.k() > 0) online_update(prototypes_, p.x);
        head_.step(p.phi, y_realized);
    }
    ForecastRecord rec{target_id_, std::string(kModelId), horizon_, t, p.y_hat, y_realized};
    pending_.pop_front();
    return rec;
}

void RbfNetModel::discard(std::int64_t t) {
    if (pending_.empty() || pending_.front().t != t)
        throw ProtocolError("rbfnet: discard for t = " + std::to_string(t) + " is not pending");
    pending_.pop_front();
}

std::vector<PendingPrediction> RbfNetModel::drain() {
    std::vector<PendingPrediction> out(pending_.begin(), pending_.end());
    pending_.clear();
    return out;
}

RbfNetModel RbfNetModel::from_parts(Parts parts) {
    if (parts.head.dim() != parts.prototypes.k() + 1)
        throw ShapeError("checkpoint: head dimension must equal k + 1");
    if (static_cast<std::size_t>(parts.standardizer.dim()) != parts.selection.size())
        throw ShapeError("checkpoint: standardizer does not match the selection");
    if (parts.pending.size() > parts.horizon)
        throw ProtocolError("checkpoint: more pending predictions than the horizon allows");
    RbfNetModel m;
    m.config_ = parts.config;
    m.target_id_ = std::move(parts.target_id);
    m.horizon_ = parts.horizon;
    m.selection_ = std::move(parts.selection);
    m.standardizer_ = std::move(parts.standardizer);
    m.prototypes_ = std::move(parts.prototypes);
    m.head_ = std::move(parts.head);
    m.pending_ = std::move(parts.pending);
    m.last_t_ = parts.last_t;
    return m;
}

} // namespace orbf
