#pragma once

#include "orbf/estimators.hpp"
#include "orbf/featsel.hpp"
#include "orbf/prototypes.hpp"
#include "orbf/rbfmap.hpp"
#include "orbf/records.hpp"
#include "orbf/standardizer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace orbf {

struct RbfNetConfig {
    std::size_t hidden_units = 0;  // 0 picks default_hidden_units(n_train)
    std::uint64_t seed = 0;
    int kmeans_max_iter = 300;
    double kmeans_tol = 1e-8;
    ShrinkageConfig shrinkage;
    double prototype_decay = 0.99;
    double tau = 0.99;
    double delta = 1.0;
    bool online = true;             // keep fitting the head after the train split
    bool update_prototypes = true;  // move prototypes when labels resolve
    SelectionConfig selection;
};

/// A prediction waiting for its label. phi is cached so the supervised pair
/// matches what was predicted even if prototypes move in the meantime.
struct PendingPrediction {
    std::int64_t t = 0;
    Eigen::VectorXd x;    // standardized selected features
    Eigen::VectorXd phi;  // features fed to the head
    double y_hat = 0.0;
};

/// Online RBF network for one (target, horizon) pair: selected inputs are
/// standardized, mapped through Gaussian units, and regressed with EWRLS.
class RbfNetModel {
public:
    static constexpr std::string_view kModelId = "rbfnet";

    /// Fits prototypes on the training rows, then streams them once through
    /// the head. X holds every candidate input; `selection` picks columns.
    /// Rows with a missing response or selected input are skipped.
    static RbfNetModel fit_initial(const RbfNetConfig& config, FeatureSelection selection,
                                   const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   std::size_t horizon, std::string target_id = "");

    /// Same, selecting features on (X, y) first.
    static RbfNetModel fit_initial(const RbfNetConfig& config, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y, std::size_t horizon,
                                   std::string target_id = "");

    /// Prediction at time t from the full candidate row. At most `horizon`
    /// predictions may be pending; times must increase.
    ForecastRecord predict(std::int64_t t, const Eigen::VectorXd& candidates);

    /// Delivers y_{t+h} for the oldest pending prediction, which must be t.
    /// Online models update prototypes and head; frozen ones only resolve.
    ForecastRecord resolve(std::int64_t t, double y_realized);

    /// Drops the oldest pending prediction (its label is missing).
    void discard(std::int64_t t);

    /// Unresolved predictions at end of stream.
    std::vector<PendingPrediction> drain();

    /// Prediction without touching the queue, for diagnostics.
    double peek(const Eigen::VectorXd& candidates) const;
    RbfFeatureVector features(const Eigen::VectorXd& candidates) const;
    /// peek() for every row of a candidate matrix.
    Eigen::VectorXd peek_rows(const Eigen::MatrixXd& candidates) const;

    const std::string& target_id() const { return target_id_; }
    std::size_t horizon() const { return horizon_; }
    const RbfNetConfig& config() const { return config_; }
    const FeatureSelection& selection() const { return selection_; }
    const Standardizer& standardizer() const { return standardizer_; }
    const PrototypeSet& prototypes() const { return prototypes_; }
    const EwrlsState& head() const { return head_; }
    const std::deque<PendingPrediction>& pending() const { return pending_; }
    std::int64_t last_t() const { return last_t_; }
    /// Prior predictions made while streaming the training rows.
    const std::vector<double>& fit_prior_predictions() const { return fit_priors_; }

    void set_online(bool online) { config_.online = online; }
    void set_update_prototypes(bool on) { config_.update_prototypes = on; }

    struct Parts {
        RbfNetConfig config;
        std::string target_id;
        std::size_t horizon = 1;
        FeatureSelection selection;
        Standardizer standardizer;
        PrototypeSet prototypes;
        EwrlsState head;
        std::deque<PendingPrediction> pending;
        std::int64_t last_t = -1;
    };
    static RbfNetModel from_parts(Parts parts);

private:
    RbfNetModel() = default;
    Eigen::VectorXd select_row(const Eigen::VectorXd& candidates) const;

    RbfNetConfig config_;
    std::string target_id_;
    std::size_t horizon_ = 1;
    FeatureSelection selection_;
    Standardizer standardizer_;
    PrototypeSet prototypes_;
    EwrlsState head_;
    std::deque<PendingPrediction> pending_;
    std::int64_t last_t_ = -1;
    std::vector<double> fit_priors_;
};

/// Picks the listed columns of X, keeping rows where those columns and y are
/// all finite. Returns the kept row indices.
std::vector<Eigen::Index> complete_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        std::span<const std::size_t> columns);

Eigen::MatrixXd gather(const Eigen::MatrixXd& X, std::span<const Eigen::Index> rows,
                       std::span<const std::size_t> columns);

} // namespace orbf
