#include "orbf/pipeline.hpp"

#include "orbf/error.hpp"
#include "orbf/log.hpp"
#include "orbf/rbfnet.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

namespace orbf {

double random_walk_forecast(std::span<const double> history, std::size_t horizon, RwMode mode) {
    if (history.empty()) throw ProtocolError("random walk forecast needs at least one observation");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    return mode == RwMode::LastValue ? history.back() : 0.0;
}

// ---------------------------------------------------------------------------
// LinearForecaster

std::unique_ptr<LinearForecaster> LinearForecaster::fit(Kind kind, const FeatureSelection& selection,
                                                        const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                                        std::size_t horizon, std::string target_id,
                                                        const Params& params) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    std::unique_ptr<LinearForecaster> f(new LinearForecaster());
    f->kind_ = kind;
    f->target_id_ = std::move(target_id);
    f->horizon_ = horizon;
    f->features_ = selection.features;

    const auto rows = complete_rows(X, y, f->features_);
    if (rows.empty()) throw SizingError("no complete training rows for " + f->target_id_);
    const Eigen::MatrixXd raw = gather(X, rows, f->features_);
    f->standardizer_ = Standardizer::fit(raw);
    const Eigen::MatrixXd Z = f->standardizer_.apply(raw);
    Eigen::MatrixXd Phi(Z.rows(), Z.cols() + 1);
    Phi.col(0).setOnes();
    Phi.rightCols(Z.cols()) = Z;
    const Eigen::VectorXd yy = y(rows);

    if (kind == Kind::Ewrls) {
        f->ewrls_ = EwrlsState(static_cast<std::size_t>(Phi.cols()), params.delta, params.tau);
        for (Eigen::Index r = 0; r < Phi.rows(); ++r) f->ewrls_.step(Phi.row(r).transpose(), yy(r));
    } else {
        f->ridge_weights_ = ridge_fit(Phi, yy, params.lambda, std::size_t{0});
    }
    return f;
}

const Eigen::VectorXd& LinearForecaster::weights() const {
    return kind_ == Kind::Ewrls ? ewrls_.theta() : ridge_weights_;
}

Eigen::VectorXd LinearForecaster::design_row(const Eigen::VectorXd& candidates) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(features_.size()));
    for (std::size_t j = 0; j < features_.size(); ++j) {
        if (features_[j] >= static_cast<std::size_t>(candidates.size()))
            throw ShapeError("candidate row is shorter than the selected feature index");
        x(static_cast<Eigen::Index>(j)) = candidates(static_cast<Eigen::Index>(features_[j]));
    }
    Eigen::VectorXd phi(x.size() + 1);
    phi(0) = 1.0;
    phi.tail(x.size()) = standardizer_.apply(x);
    if (!phi.allFinite()) throw DataError(std::string(model_id()) + ": inputs contain missing values");
    return phi;
}

ForecastRecord LinearForecaster::predict(std::int64_t t, const Observation& obs) {
    if (pending_.size() >= horizon_)
        throw ProtocolError(std::string(model_id()) + ": pending queue is full");
    if (t <= last_t_) throw ProtocolError(std::string(model_id()) + ": prediction times must increase");
    Pending p{t, design_row(obs.candidates), 0.0};
    p.y_hat = kind_ == Kind::Ewrls ? ewrls_.predict(p.phi) : ridge_weights_.dot(p.phi);
    last_t_ = t;
    pending_.push_back(p);
    return {target_id_, std::string(model_id()), horizon_, t, p.y_hat, std::nullopt};
}

ForecastRecord LinearForecaster::resolve(std::int64_t t, double y_realized) {
    if (pending_.empty() || pending_.front().t != t)
        throw ProtocolError(std::string(model_id()) + ": label for t = " + std::to_string(t) +
                            " does not match the oldest pending prediction");
    const auto& p = pending_.front();
    if (kind_ == Kind::Ewrls) ewrls_.step(p.phi, y_realized);
    ForecastRecord rec{target_id_, std::string(model_id()), horizon_, t, p.y_hat, y_realized};
    pending_.pop_front();
    return rec;
}

void LinearForecaster::discard(std::int64_t t) {
    if (pending_.empty() || pending_.front().t != t)
        throw ProtocolError(std::string(model_id()) + ": discard for a time that is not pending");
    pending_.pop_front();
}

// ---------------------------------------------------------------------------
// RandomWalkForecaster

RandomWalkForecaster::RandomWalkForecaster(std::string target_id, std::size_t horizon, RwMode mode)
    : target_id_(std::move(target_id)), horizon_(horizon), mode_(mode) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
}

ForecastRecord RandomWalkForecaster::predict(std::int64_t t, const Observation& obs) {
    if (pending_.size() >= horizon_) throw ProtocolError("rw: pending queue is full");
    if (t <= last_t_) throw ProtocolError("rw: prediction times must increase");
    const double y_hat = random_walk_forecast(std::span<const double>(&obs.target_now, 1), horizon_, mode_);
    last_t_ = t;
    pending_.emplace_back(t, y_hat);
    return {target_id_, "rw", horizon_, t, y_hat, std::nullopt};
}

ForecastRecord RandomWalkForecaster::resolve(std::int64_t t, double y_realized) {
    if (pending_.empty() || pending_.front().first != t)
        throw ProtocolError("rw: label does not match the oldest pending prediction");
    ForecastRecord rec{target_id_, "rw", horizon_, t, pending_.front().second, y_realized};
    pending_.pop_front();
    return rec;
}

void RandomWalkForecaster::discard(std::int64_t t) {
    if (pending_.empty() || pending_.front().first != t)
        throw ProtocolError("rw: discard for a time that is not pending");
    pending_.pop_front();
}

namespace {

class RbfNetForecaster final : public Forecaster {
public:
    explicit RbfNetForecaster(RbfNetModel m) : model_(std::move(m)) {}
    std::string_view model_id() const override { return RbfNetModel::kModelId; }
    ForecastRecord predict(std::int64_t t, const Observation& obs) override {
        return model_.predict(t, obs.candidates);
    }
    ForecastRecord resolve(std::int64_t t, double y) override { return model_.resolve(t, y); }
    void discard(std::int64_t t) override { model_.discard(t); }
    std::size_t pending() const override { return model_.pending().size(); }

private:
    RbfNetModel model_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finaliser
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct TargetContext {
    std::size_t index = 0;  // column in the return matrix
    std::string name;
    Eigen::MatrixXd candidates;  // T x D
    std::optional<FeatureSelection> selection;
    std::string selection_error;
};

struct Cell {
    std::size_t target;  // index into contexts
    std::string model;
    std::size_t horizon;
};

struct CellOutput {
    std::vector<ForecastRecord> records;
    std::optional<CellFailure> failure;
};

TargetContext make_context(const ExperimentConfig& config, const ReturnSeries& returns, std::size_t i,
                           std::size_t n_train) {
    const auto& R = returns.values;
    TargetContext ctx;
    ctx.index = i;
    ctx.name = returns.instruments[i];
    std::vector<Eigen::Index> cols;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < returns.cols(); ++j) {
        if (j == i && !config.own_lag) continue;
        cols.push_back(static_cast<Eigen::Index>(j));
        names.push_back(returns.instruments[j]);
    }
    ctx.candidates = R(Eigen::all, cols);

    const auto n_sel = static_cast<Eigen::Index>(n_train - 1);
    const Eigen::MatrixXd Xs = ctx.candidates.topRows(n_sel);
    const Eigen::VectorXd ys = R.col(static_cast<Eigen::Index>(i)).segment(1, n_sel);
    std::vector<std::size_t> all(cols.size());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    try {
        const auto rows = complete_rows(Xs, ys, all);
        FeatureSelection sel = select_features(gather(Xs, rows, all), ys(rows), config.selection);
        sel.target_id = ctx.name;
        for (auto f : sel.features) sel.feature_names.push_back(names[f]);
        ctx.selection = std::move(sel);
    } catch (const Error& e) {
        ctx.selection_error = "feature selection failed for " + ctx.name + ": " + e.what();
        log::warn(ctx.selection_error);
    }
    return ctx;
}

CellOutput run_cell(const ExperimentConfig& cfg, const ReturnSeries& returns, std::size_t n_train,
                    const TargetContext& ctx, const Cell& cell) {
    CellOutput out;
    const auto& R = returns.values;
    const auto T = static_cast<std::int64_t>(R.rows());
    const auto h = cell.horizon;
    const auto ti = static_cast<Eigen::Index>(ctx.index);

    const FeatureSelection none;
    if (!ctx.selection && cell.model != "rw") throw SelectionError(ctx.selection_error);
    const FeatureSelection& sel = ctx.selection ? *ctx.selection : none;
    if (n_train <= h) throw SizingError("training split shorter than the horizon");

    const auto n_pairs = static_cast<Eigen::Index>(n_train - h);
    const Eigen::MatrixXd X = ctx.candidates.topRows(n_pairs);
    const Eigen::VectorXd y = R.col(ti).segment(static_cast<Eigen::Index>(h), n_pairs);

    std::unique_ptr<Forecaster> f;
    if (cell.model == "rw") {
        f = std::make_unique<RandomWalkForecaster>(ctx.name, h, cfg.rw_mode);
    } else if (cell.model == "ridge" || cell.model == "ewrls") {
        LinearForecaster::Params p{cfg.ewrls_tau, cfg.ewrls_delta, cfg.ridge_lambda};
        auto kind = cell.model == "ridge" ? LinearForecaster::Kind::Ridge : LinearForecaster::Kind::Ewrls;
        f = LinearForecaster::fit(kind, sel, X, y, h, ctx.name, p);
    } else if (cell.model == "rbfnet") {
        RbfNetConfig rc = cfg.rbfnet;
        rc.seed = mix_seed(cfg.seed, ctx.index);
        f = std::make_unique<RbfNetForecaster>(RbfNetModel::fit_initial(rc, sel, X, y, h, ctx.name));
    } else {
        throw ConfigError("unknown model '" + cell.model + "'");
    }

    std::deque<std::int64_t> predicted;
    Eigen::VectorXd row(ctx.candidates.cols());
    for (std::int64_t t = static_cast<std::int64_t>(n_train); t < T; ++t) {
        const std::int64_t s = t - static_cast<std::int64_t>(h);
        if (!predicted.empty() && predicted.front() == s) {
            const double label = R(t, ti);
            if (std::isfinite(label)) {
                out.records.push_back(f->resolve(s, label));
            } else {
                f->discard(s);
            }
            predicted.pop_front();
        }
        const double now = R(t, ti);
        bool usable = std::isfinite(now);
        row = ctx.candidates.row(t).transpose();
        for (auto c : sel.features) usable = usable && std::isfinite(row(static_cast<Eigen::Index>(c)));
        if (!usable) continue;
        f->predict(t, Observation{row, now});
        predicted.push_back(t);
    }
    return out;
}

} // namespace

RbfNetModel fit_rbfnet(const ExperimentConfig& config, const ReturnSeries& returns,
                       std::string_view target, std::size_t horizon) {
    config.validate();
    const auto idx = returns.instrument_index(std::string(target));
    if (idx < 0) throw ConfigError("unknown instrument '" + std::string(target) + "'");
    auto [train, test] = split(returns, config.split);
    const std::size_t n_train = train.rows();
    if (n_train <= horizon) throw SizingError("training split shorter than the horizon");
    auto ctx = make_context(config, returns, static_cast<std::size_t>(idx), n_train);
    if (!ctx.selection) throw SelectionError(ctx.selection_error);

    const auto n_pairs = static_cast<Eigen::Index>(n_train - horizon);
    const Eigen::MatrixXd X = ctx.candidates.topRows(n_pairs);
    const Eigen::VectorXd y = returns.values.col(idx).segment(static_cast<Eigen::Index>(horizon), n_pairs);
    RbfNetConfig rc = config.rbfnet;
    rc.seed = mix_seed(config.seed, ctx.index);
    return RbfNetModel::fit_initial(rc, *ctx.selection, X, y, horizon, ctx.name);
}

std::vector<std::string> canonical_model_order(std::vector<std::string> names) {
    const auto& known = known_models();
    auto rank = [&](const std::string& n) {
        auto it = std::find(known.begin(), known.end(), n);
        return static_cast<std::size_t>(std::distance(known.begin(), it));
    };
    std::sort(names.begin(), names.end(), [&](const auto& a, const auto& b) {
        const auto ra = rank(a), rb = rank(b);
        return ra != rb ? ra < rb : a < b;
    });
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

ReturnSeries load_returns(const ExperimentConfig& config) {
    PricePanel panel;
    switch (config.source) {
    case DataSource::Csv: panel = load_csv(config.data_path); break;
    case DataSource::JumpDiffusion: panel = synthesize_jump_diffusion(config.synth.jump_diffusion()); break;
    case DataSource::Ar1: panel = synthesize_ar1_panel(config.synth.ar1()); break;
    case DataSource::RegimeFlip: panel = synthesize_regime_flip(config.synth.regime_flip()); break;
    }
    return compute_returns(panel, config.returns);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    return run_experiment(config, load_returns(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ReturnSeries& returns) {
    config.validate();
    const std::size_t T = returns.rows();
    auto [train, test] = split(returns, config.split);
    const std::size_t n_train = train.rows();

    std::vector<std::size_t> target_cols;
    if (config.targets.empty()) {
        for (std::size_t i = 0; i < returns.cols(); ++i) target_cols.push_back(i);
    } else {
        for (const auto& name : config.targets) {
            auto idx = returns.instrument_index(name);
            if (idx < 0) throw ConfigError("data.targets: unknown instrument '" + name + "'");
            target_cols.push_back(static_cast<std::size_t>(idx));
        }
    }

    ExperimentResult result;
    result.train_rows = n_train;
    result.test_rows = T - n_train;

    // Per-target candidate matrices and feature selection on the training rows.
    std::vector<TargetContext> contexts;
    for (auto i : target_cols) {
        auto ctx = make_context(config, returns, i, n_train);
        if (ctx.selection) {
            result.selections.push_back(*ctx.selection);
        } else {
            // The random walk does not depend on inputs.
            FeatureSelection empty;
            empty.target_id = ctx.name;
            result.selections.push_back(empty);
        }
        contexts.push_back(std::move(ctx));
    }

    std::vector<std::string> run_models = config.models;
    run_models.push_back("rw");
    run_models = canonical_model_order(run_models);

    std::vector<Cell> cells;
    for (std::size_t c = 0; c < contexts.size(); ++c)
        for (const auto& m : run_models)
            for (auto h : config.horizons) cells.push_back({c, m, h});

    std::vector<CellOutput> outputs(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            const auto& cell = cells[k];
            const auto& ctx = contexts[cell.target];
            try {
                outputs[k] = run_cell(config, returns, n_train, ctx, cell);
            } catch (const std::exception& e) {
                outputs[k].records.clear();
                outputs[k].failure = CellFailure{ctx.name, cell.model, cell.horizon, e.what()};
                log::warn("cell " + ctx.name + "/" + cell.model + "/h=" + std::to_string(cell.horizon) +
                          " aborted: " + e.what());
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(config.threads,
                                                                static_cast<unsigned>(cells.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    for (auto& o : outputs) {
        std::move(o.records.begin(), o.records.end(), std::back_inserter(result.records));
        if (o.failure) result.failures.push_back(std::move(*o.failure));
    }
    result.report = evaluate(result.records, canonical_model_order(config.models), "rw");
    return result;
}

// ---------------------------------------------------------------------------
// Forecast log

namespace {

void put_double(std::ostream& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, p - buf);
}

} // namespace

void write_forecast_log(std::ostream& out, std::span<const ForecastRecord> records) {
    out << "target,model,horizon,t,y_hat,y_realized\n";
    for (const auto& r : records) {
        out << r.target_id << ',' << r.model_id << ',' << r.horizon << ',' << r.t << ',';
        put_double(out, r.y_hat);
        out << ',';
        if (r.y_realized) put_double(out, *r.y_realized);
        out << '\n';
    }
}

std::vector<ForecastRecord> read_forecast_log(std::istream& in, std::string_view source) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw InputFormatError(std::string(source) + ": empty forecast log");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "target,model,horizon,t,y_hat,y_realized")
        throw InputFormatError(std::string(source) + ":1: unexpected forecast log header");

    std::vector<ForecastRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view s = line;
        for (std::size_t start = 0;;) {
            auto pos = s.find(',', start);
            f.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        const auto where = std::string(source) + ":" + std::to_string(lineno);
        if (f.size() != 6) throw InputFormatError(where + ": expected 6 fields");
        ForecastRecord r;
        r.target_id = std::string(f[0]);
        r.model_id = std::string(f[1]);
        auto num = [&](std::string_view v, auto& dst, const char* col) {
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), dst);
            if (ec != std::errc() || p != v.data() + v.size())
                throw InputFormatError(where + ", column '" + col + "': cannot parse '" + std::string(v) + "'");
        };
        num(f[2], r.horizon, "horizon");
        num(f[3], r.t, "t");
        num(f[4], r.y_hat, "y_hat");
        if (!f[5].empty()) {
            double v = 0.0;
            num(f[5], v, "y_realized");
            r.y_realized = v;
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& out_dir) {
    emit_report(result.report, out_dir);
    auto open = [&](const char* name) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) throw IoError("cannot write '" + (out_dir / name).string() + "'");
        return out;
    };
    {
        auto out = open("forecasts.csv");
        write_forecast_log(out, result.records);
    }
    {
        auto out = open("selections.tsv");
        write_selection_table(out, result.selections);
    }
    {
        auto out = open("effective_config.cfg");
        write_config(out, config);
    }
    {
        auto out = open("failures.csv");
        out << "target,model,horizon,message\n";
        for (const auto& f : result.failures) {
            std::string msg = f.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << f.target << ',' << f.model << ',' << f.horizon << ',' << msg << '\n';
        }
    }
}

} // namespace orbf
