#pragma once

#include "orbf/config.hpp"
#include "orbf/data.hpp"
#include "orbf/estimators.hpp"
#include "orbf/evaluation.hpp"
#include "orbf/featsel.hpp"
#include "orbf/rbfnet.hpp"
#include "orbf/records.hpp"
#include "orbf/standardizer.hpp"

#include <Eigen/Dense>

#include <deque>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace orbf {

/// Random-walk forecast of y_{t+h} from the target's history up to t:
/// the last value, or zero under RwMode::Zero. Throws ProtocolError on an
/// empty history.
double random_walk_forecast(std::span<const double> history, std::size_t horizon,
                            RwMode mode = RwMode::LastValue);

/// What a model sees at time t: every candidate input and the target's own
/// current return.
struct Observation {
    const Eigen::VectorXd& candidates;
    double target_now;
};

/// Delayed-label forecaster: predict at t, resolve with y_{t+h} later.
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::string_view model_id() const = 0;
    virtual ForecastRecord predict(std::int64_t t, const Observation& obs) = 0;
    virtual ForecastRecord resolve(std::int64_t t, double y_realized) = 0;
    virtual void discard(std::int64_t t) = 0;
    virtual std::size_t pending() const = 0;
};

/// Linear head on [1, standardized selected inputs]. The EWRLS kind keeps
/// updating after the training split; the ridge kind is frozen.
class LinearForecaster final : public Forecaster {
public:
    enum class Kind { Ewrls, Ridge };

    struct Params {
        double tau = 0.99;
        double delta = 1.0;
        double lambda = 1.0;
    };

    /// X holds every candidate input for the training rows, y the matching
    /// responses y_{t+h}; incomplete rows are skipped.
    static std::unique_ptr<LinearForecaster> fit(Kind kind, const FeatureSelection& selection,
                                                 const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                 std::size_t horizon, std::string target_id,
                                                 const Params& params);

    std::string_view model_id() const override { return kind_ == Kind::Ewrls ? "ewrls" : "ridge"; }
    ForecastRecord predict(std::int64_t t, const Observation& obs) override;
    ForecastRecord resolve(std::int64_t t, double y_realized) override;
    void discard(std::int64_t t) override;
    std::size_t pending() const override { return pending_.size(); }

    const Eigen::VectorXd& weights() const;
    Eigen::VectorXd design_row(const Eigen::VectorXd& candidates) const;

private:
    struct Pending {
        std::int64_t t;
        Eigen::VectorXd phi;
        double y_hat;
    };

    LinearForecaster() = default;

    Kind kind_ = Kind::Ewrls;
    std::string target_id_;
    std::size_t horizon_ = 1;
    std::vector<std::size_t> features_;
    Standardizer standardizer_;
    EwrlsState ewrls_;
    Eigen::VectorXd ridge_weights_;
    std::deque<Pending> pending_;
    std::int64_t last_t_ = -1;
};

class RandomWalkForecaster final : public Forecaster {
public:
    RandomWalkForecaster(std::string target_id, std::size_t horizon, RwMode mode);

    std::string_view model_id() const override { return "rw"; }
    ForecastRecord predict(std::int64_t t, const Observation& obs) override;
    ForecastRecord resolve(std::int64_t t, double y_realized) override;
    void discard(std::int64_t t) override;
    std::size_t pending() const override { return pending_.size(); }

private:
    std::string target_id_;
    std::size_t horizon_;
    RwMode mode_;
    std::deque<std::pair<std::int64_t, double>> pending_;
    std::int64_t last_t_ = -1;
};

struct CellFailure {
    std::string target;
    std::string model;
    std::size_t horizon;
    std::string message;
};

struct ExperimentResult {
    EvaluationReport report;
    std::vector<ForecastRecord> records;  // ordered by target, model, horizon, t
    std::vector<FeatureSelection> selections;
    std::vector<CellFailure> failures;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

/// Loads or generates prices per the config and converts them to returns.
ReturnSeries load_returns(const ExperimentConfig& config);

/// Feature selection on training rows (h = 1 response), then for every
/// target, model and horizon: fit on the training split and run a
/// predict-then-resolve pass over the test split. The random walk is always
/// run as the normalising baseline.
ExperimentResult run_experiment(const ExperimentConfig& config, const ReturnSeries& returns);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// The rbfnet for one (target, horizon) cell exactly as run_experiment fits
/// it on the training split, before any test row is seen.
RbfNetModel fit_rbfnet(const ExperimentConfig& config, const ReturnSeries& returns,
                       std::string_view target, std::size_t horizon);

/// Forecast log CSV: target,model,horizon,t,y_hat,y_realized.
void write_forecast_log(std::ostream& out, std::span<const ForecastRecord> records);
std::vector<ForecastRecord> read_forecast_log(std::istream& in, std::string_view source = "<log>");

/// Report files, forecasts.csv, selections.tsv and effective_config.cfg.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& out_dir);

/// rw, ridge, ewrls, rbfnet first, any other names after, alphabetically.
std::vector<std::string> canonical_model_order(std::vector<std::string> names);

} // namespace orbf
