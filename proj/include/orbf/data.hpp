#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace orbf {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Returns false on failure.
bool parse_iso_date(std::string_view text, Date& out);
std::string format_iso_date(Date d);

/// Marker for a missing observation in panels and return series.
double missing_value();
inline bool is_missing(double v) { return v != v; }

/// Daily price levels, one column per instrument. Missing cells hold NaN.
struct PricePanel {
    std::vector<Date> timestamps;
    std::vector<std::string> instruments;
    Eigen::MatrixXd prices;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t cols() const { return instruments.size(); }
    bool missing(std::size_t r, std::size_t c) const { return is_missing(prices(r, c)); }
};

/// Per-period returns; row t is the return from price row t to t+1 and carries
/// the later timestamp.
struct ReturnSeries {
    std::vector<Date> timestamps;
    std::vector<std::string> instruments;
    Eigen::MatrixXd values;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t cols() const { return instruments.size(); }
    std::ptrdiff_t instrument_index(std::string_view name) const;
};

struct PanelViolation {
    std::size_t row;  // 0-based data row
    std::size_t col;  // 0-based instrument column, or npos for row-level issues
    std::string message;
};

/// Every invariant violation in the panel, in row-major order.
std::vector<PanelViolation> validate_panel(const PricePanel& panel);

/// Throws ValidationError describing the first violation, if any.
void check_panel(const PricePanel& panel);

struct CsvSchema {
    std::string date_column = "date";
    /// Instruments to keep, in this order. Empty keeps every column as found.
    std::vector<std::string> instruments;
    char delimiter = ',';
};

/// Parses CSV text into a panel without checking the panel invariants, so
/// callers can report every violation. Format problems throw InputFormatError.
PricePanel read_csv(std::istream& in, const CsvSchema& schema = {},
                    std::string_view source = "<stream>");

/// read_csv + check_panel.
PricePanel load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

void write_csv(std::ostream& out, const PricePanel& panel);
void save_csv(const std::filesystem::path& path, const PricePanel& panel);

enum class ReturnKind { Log, Simple };

ReturnKind parse_return_kind(std::string_view text);
std::string_view to_string(ReturnKind kind);

ReturnSeries compute_returns(const PricePanel& panel, ReturnKind kind = ReturnKind::Log);

enum class SplitRounding { Floor, Ceil };

struct SplitSpec {
    double train_fraction = 0.5;
    SplitRounding rounding = SplitRounding::Floor;

    /// Number of training rows for a series of n rows.
    std::size_t boundary_index(std::size_t n) const;
};

/// Chronological train/test partition. Throws ConfigError for a fraction
/// outside (0, 1) or one that leaves either side empty.
std::pair<ReturnSeries, ReturnSeries> split(const ReturnSeries& series, const SplitSpec& spec);

/// Log-price increments are N(drift, vol^2) plus, with probability
/// jump_intensity, an independent N(0, jump_scale^2) jump.
struct JumpDiffusionSpec {
    std::size_t n = 1297;
    std::size_t instruments = 1;
    std::uint64_t seed = 0;
    double drift = 0.0;
    double vol = 0.01;
    double jump_intensity = 0.0;
    double jump_scale = 0.05;
    double initial_price = 100.0;
};

PricePanel synthesize_jump_diffusion(const JumpDiffusionSpec& spec);

/// Independent AR(1) log-return processes r_t = c r_{t-1} + e_t, one per instrument.
struct Ar1PanelSpec {
    std::size_t n = 1300;
    std::size_t instruments = 10;
    std::uint64_t seed = 0;
    double coefficient = 0.6;
    double vol = 0.01;
    double initial_price = 100.0;
};

PricePanel synthesize_ar1_panel(const Ar1PanelSpec& spec);

/// Two instruments: "driver" has i.i.d. returns and "target" follows
/// r_t = b_t * driver_{t-1} + e_t, where b_t switches from coefficient_before
/// to coefficient_after at return row flip_row.
struct RegimeFlipSpec {
    std::size_t n = 1300;
    std::uint64_t seed = 0;
    std::size_t flip_row = 974;
    double coefficient_before = 1.0;
    double coefficient_after = -1.0;
    double driver_vol = 0.01;
    double noise_vol = 0.002;
    double initial_price = 100.0;
};

PricePanel synthesize_regime_flip(const RegimeFlipSpec& spec);

/// Consecutive calendar days starting 2000-01-03.
std::vector<Date> synthetic_calendar(std::size_t n);

} // namespace orbf
