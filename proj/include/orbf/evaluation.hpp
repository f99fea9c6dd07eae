#pragma once

#include "orbf/records.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orbf {

/// Three-valued sign: 1, 0 or -1.
int sign(double x);

/// Mean squared error over resolved records; nullopt when none are resolved.
std::optional<double> mse(std::span<const ForecastRecord> records);

/// model_mse / rw_mse; nullopt when the baseline error is zero or undefined.
std::optional<double> nmse(std::optional<double> model_mse, std::optional<double> rw_mse);

/// Fraction of resolved records with sign(y_realized) == sign(y_hat).
std::optional<double> accuracy(std::span<const ForecastRecord> records);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    /// Degrees of freedom of the reference distribution; infinity means normal.
    double df = std::numeric_limits<double>::infinity();

    bool significant(double alpha = 0.05) const { return p_value < alpha; }
};

/// Wald statistic (mean - null) / (sd / sqrt(n)) against the standard normal,
/// two-sided. nullopt for fewer than two samples or zero variance.
std::optional<TestResult> wald_test(std::span<const double> samples, double null_value);
inline std::optional<TestResult> wald_test_vs_one(std::span<const double> samples) {
    return wald_test(samples, 1.0);
}
std::optional<TestResult> wald_test_from_moments(double mean, double sd, std::size_t n,
                                                 double null_value = 1.0);

enum class TTestVariant { Welch, Pooled };

/// Two-sample t test for equal means, two-sided. Welch uses the
/// Welch-Satterthwaite degrees of freedom.
std::optional<TestResult> two_sample_t_test(std::span<const double> a, std::span<const double> b,
                                            TTestVariant variant = TTestVariant::Welch);
/// Same test from sample means, sample variances and sizes.
std::optional<TestResult> two_sample_t_test_from_moments(double mean_a, double var_a, std::size_t n_a,
                                                         double mean_b, double var_b, std::size_t n_b,
                                                         TTestVariant variant = TTestVariant::Welch);

struct CellMetrics {
    std::string model;
    std::string target;
    std::size_t horizon = 0;
    std::size_t count = 0;
    std::optional<double> mse;
    std::optional<double> nmse;
    std::optional<double> accuracy;
};

struct SummaryStats {
    std::size_t targets = 0;
    std::size_t count = 0;
    double mean = 0.0, std = 0.0, min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0, se = 0.0;
};

/// count, mean, sample std, min, linear-interpolated quartiles, max, se.
std::optional<SummaryStats> summarize(std::span<const double> samples, std::size_t targets);

struct ModelSummary {
    std::string model;
    std::optional<SummaryStats> nmse;
    std::optional<TestResult> wald;  // nmse vs 1
    std::optional<SummaryStats> accuracy;
};

struct PairwiseTest {
    std::string model_a;
    std::string model_b;
    std::optional<TestResult> result;  // on the nmse samples
};

struct HorizonPoint {
    std::string model;
    std::size_t horizon = 0;
    std::optional<double> mean_nmse;
};

struct EvaluationReport {
    std::vector<CellMetrics> cells;  // ordered by model, target, horizon
    std::vector<ModelSummary> models;
    std::vector<PairwiseTest> pairwise;
    std::vector<HorizonPoint> curve;

    bool empty() const { return cells.empty(); }
};

/// Aggregates a record log. Each model's nmse divides by the baseline's mse
/// over the same time indices. `models` fixes which models are reported and
/// in what order; empty reports every model present, sorted by name.
EvaluationReport evaluate(std::span<const ForecastRecord> records,
                          std::span<const std::string> models = {},
                          std::string_view baseline = "rw");

/// Writes cells.csv, summary_nmse.csv, summary_accuracy.csv,
/// nmse_by_horizon.csv and pairwise_tests.csv into out_dir.
void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir);

/// Six significant digits, "NA" for undefined values.
std::string format_metric(std::optional<double> v);

} // namespace orbf
