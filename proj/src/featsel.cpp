#include "orbf/featsel.hpp"

#include "orbf/error.hpp"
#include "orbf/log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace orbf {

namespace {

// Relative residual norm below which a column counts as explained by others.
constexpr double kCollinearTol = 1e-10;
constexpr double kPerfectFit = 1e-12;

Eigen::MatrixXd centered_columns(const Eigen::MatrixXd& X, std::span<const std::size_t> cols) {
    Eigen::MatrixXd Z(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto c = static_cast<Eigen::Index>(cols[j]);
        Z.col(static_cast<Eigen::Index>(j)) = X.col(c).array() - X.col(c).mean();
    }
    return Z;
}

// Sum of squared residuals of centered v regressed on centered Z.
double residual_ss(const Eigen::MatrixXd& Z, const Eigen::VectorXd& v) {
    if (Z.cols() == 0) return v.squaredNorm();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    Eigen::VectorXd beta = qr.solve(v);
    return (v - Z * beta).squaredNorm();
}

// True if the centered columns of Z are linearly independent.
bool full_rank(const Eigen::MatrixXd& Z) {
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        const double ss = Z.col(j).squaredNorm();
        if (!(ss > 0.0)) return false;
        Eigen::MatrixXd others(Z.rows(), Z.cols() - 1);
        for (Eigen::Index i = 0, k = 0; i < Z.cols(); ++i)
            if (i != j) others.col(k++) = Z.col(i);
        if (residual_ss(others, Z.col(j)) <= kCollinearTol * ss) return false;
    }
    return true;
}

} // namespace

std::optional<double> ols_r2(const Eigen::MatrixXd& X, std::span<const std::size_t> columns,
                             const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw ShapeError("ols_r2: X and y are not row-aligned");
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double sst = yc.squaredNorm();
    if (!(sst > 0.0)) throw SelectionError("target has zero variance; R^2 undefined");
    Eigen::MatrixXd Z = centered_columns(X, columns);
    if (!full_rank(Z)) return std::nullopt;
    const double r2 = 1.0 - residual_ss(Z, yc) / sst;
    return std::clamp(r2, 0.0, 1.0);
}

std::vector<double> vif(const Eigen::MatrixXd& X) {
    const auto d = static_cast<std::size_t>(X.cols());
    if (d == 0) return {};
    if (d == 1) return {1.0};
    if (X.rows() <= X.cols()) throw SizingError("vif needs more rows than features");
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
        const Eigen::VectorXd v = X.col(static_cast<Eigen::Index>(j)).array() -
                                  X.col(static_cast<Eigen::Index>(j)).mean();
        const double ss = v.squaredNorm();
        if (!(ss > 0.0)) {
            out[j] = kInfiniteVif;
            continue;
        }
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < d; ++i)
            if (i != j) others.push_back(i);
        const double r2 = 1.0 - residual_ss(centered_columns(X, others), v) / ss;
        out[j] = (r2 >= 1.0 - kCollinearTol) ? kInfiniteVif : 1.0 / (1.0 - r2);
    }
    return out;
}

namespace {

FeatureSelection greedy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::size_t max_features, double min_r2_gain,
                        std::optional<double> vif_threshold) {
    if (X.rows() != y.size()) throw ShapeError("feature selection: X and y are not row-aligned");
    if (static_cast<std::size_t>(X.rows()) <= max_features + 1) {
        throw SizingError("feature selection needs more than max_features + 1 rows");
    }
    {
        const double sst = (y.array() - y.mean()).matrix().squaredNorm();
        if (!(sst > 0.0)) throw SelectionError("target has zero variance; nothing to select");
    }

    FeatureSelection sel;
    const auto d = static_cast<std::size_t>(X.cols());
    std::vector<bool> used(d, false);
    double current = 0.0;
    std::vector<std::size_t> trial;

    while (sel.features.size() < max_features && current < 1.0 - kPerfectFit) {
        std::optional<std::size_t> best;
        double best_r2 = -1.0;
        for (std::size_t c = 0; c < d; ++c) {
            if (used[c]) continue;
            trial = sel.features;
            trial.push_back(c);
            auto r2 = ols_r2(X, trial, y);
            if (!r2) continue;
            if (vif_threshold) {
                Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(trial.size()));
                for (std::size_t j = 0; j < trial.size(); ++j)
                    sub.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(trial[j]));
                auto v = vif(sub);
                if (std::any_of(v.begin(), v.end(), [&](double x) { return !(x <= *vif_threshold); }))
                    continue;
            }
            if (*r2 > best_r2) {
                best_r2 = *r2;
                best = c;
            }
        }
        if (!best || best_r2 - current < min_r2_gain) break;
        used[*best] = true;
        sel.features.push_back(*best);
        sel.r2_path.push_back(std::max(best_r2, current));
        current = sel.r2_path.back();
    }
    return sel;
}

} // namespace

FeatureSelection forward_stepwise(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  std::size_t max_features, double min_r2_gain) {
    return greedy(X, y, max_features, min_r2_gain, std::nullopt);
}

FeatureSelection select_features(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const SelectionConfig& config) {
    if (!(config.vif_threshold >= 1.0)) throw ConfigError("vif_threshold must be >= 1");
    auto sel = greedy(X, y, config.max_features, config.min_r2_gain, config.vif_threshold);
    if (sel.empty()) {
        log::warn("feature selection admitted no features; model degrades to bias-only");
        return sel;
    }
    Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(sel.size()));
    for (std::size_t j = 0; j < sel.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(sel.features[j]));
    sel.vifs = vif(sub);
    return sel;
}

namespace {

void put(std::ostream& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    out.write(buf, p - buf);
}

template <class T, class F>
void joined(std::ostream& out, const std::vector<T>& xs, F&& f) {
    if (xs.empty()) {
        out << '-';
        return;
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ';';
        f(xs[i]);
    }
}

} // namespace

void write_selection_table(std::ostream& out, std::span<const FeatureSelection> selections) {
    out << "target\tfeatures\tr2_path\tvifs\n";
    for (const auto& s : selections) {
        out << s.target_id << '\t';
        if (s.feature_names.size() == s.features.size() && !s.features.empty()) {
            joined(out, s.feature_names, [&](const std::string& n) { out << n; });
        } else {
            joined(out, s.features, [&](std::size_t i) { out << i; });
        }
        out << '\t';
        joined(out, s.r2_path, [&](double v) { put(out, v); });
        out << '\t';
        joined(out, s.vifs, [&](double v) { put(out, v); });
        out << '\n';
    }
}

} // namespace orbf
