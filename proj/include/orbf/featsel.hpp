#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace orbf {

/// Per-target subset of candidate inputs, fixed once chosen on training data.
struct FeatureSelection {
    std::string target_id;
    std::vector<std::size_t> features;       // candidate column indices, selection order
    std::vector<std::string> feature_names;  // parallel to features, may be empty
    std::vector<double> r2_path;             // in-sample R^2 after each inclusion
    std::vector<double> vifs;                // final VIF per retained feature

    bool empty() const { return features.empty(); }
    std::size_t size() const { return features.size(); }
};

struct SelectionConfig {
    std::size_t max_features = 5;
    double min_r2_gain = 0.005;
    double vif_threshold = 5.0;
};

/// Sentinel for a perfectly collinear feature.
inline constexpr double kInfiniteVif = std::numeric_limits<double>::infinity();

/// In-sample R^2 of an OLS fit (with intercept) of y on the listed columns of X.
/// Returns nullopt if the columns are collinear with each other or the intercept.
/// Throws SelectionError if y has zero variance.
std::optional<double> ols_r2(const Eigen::MatrixXd& X, std::span<const std::size_t> columns,
                             const Eigen::VectorXd& y);

/// Variance inflation factors 1/(1 - R^2_j). A single feature has VIF 1.
std::vector<double> vif(const Eigen::MatrixXd& X);

/// Greedy inclusion maximising R^2; ties go to the lowest column index.
/// Candidates collinear with the chosen set are skipped. The returned vifs
/// field is left empty.
FeatureSelection forward_stepwise(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  std::size_t max_features, double min_r2_gain);

/// Forward stepwise where a candidate is admitted only if every VIF of the
/// enlarged set stays within vif_threshold.
FeatureSelection select_features(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const SelectionConfig& config = {});

/// Audit table: target, ordered features, R^2 path, VIFs; one line per target.
void write_selection_table(std::ostream& out, std::span<const FeatureSelection> selections);

} // namespace orbf
