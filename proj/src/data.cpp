#include "orbf/data.hpp"

#include "orbf/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace orbf {

namespace chr = std::chrono;

bool parse_iso_date(std::string_view text, Date& out) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](std::size_t pos, std::size_t len, auto& dst) {
        auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, dst);
        return ec == std::errc() && p == text.data() + pos + len;
    };
    if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return false;
    chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
    if (!ymd.ok()) return false;
    out = chr::sys_days{ymd};
    return true;
}

std::string format_iso_date(Date d) {
    chr::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

std::ptrdiff_t ReturnSeries::instrument_index(std::string_view name) const {
    auto it = std::find(instruments.begin(), instruments.end(), name);
    return it == instruments.end() ? -1 : std::distance(instruments.begin(), it);
}

std::vector<PanelViolation> validate_panel(const PricePanel& panel) {
    std::vector<PanelViolation> out;
    constexpr auto npos = static_cast<std::size_t>(-1);
    if (static_cast<std::size_t>(panel.prices.rows()) != panel.rows() ||
        static_cast<std::size_t>(panel.prices.cols()) != panel.cols()) {
        out.push_back({npos, npos, "price matrix shape does not match index/instrument list"});
        return out;
    }
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        if (r > 0) {
            if (panel.timestamps[r] == panel.timestamps[r - 1]) {
                out.push_back({r, npos, "duplicate timestamp " + format_iso_date(panel.timestamps[r])});
            } else if (panel.timestamps[r] < panel.timestamps[r - 1]) {
                out.push_back({r, npos,
                               "timestamp " + format_iso_date(panel.timestamps[r]) +
                                   " precedes previous row " +
                                   format_iso_date(panel.timestamps[r - 1])});
            }
        }
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            const double p = panel.prices(r, c);
            if (is_missing(p)) continue;
            if (!std::isfinite(p)) {
                out.push_back({r, c, "non-finite price for " + panel.instruments[c]});
            } else if (p <= 0.0) {
                std::ostringstream os;
                os << "non-positive price " << p << " for " << panel.instruments[c];
                out.push_back({r, c, os.str()});
            }
        }
    }
    return out;
}

void check_panel(const PricePanel& panel) {
    auto v = validate_panel(panel);
    if (v.empty()) return;
    const auto& first = v.front();
    std::ostringstream os;
    os << "invalid price panel at row " << first.row + 1 << ": " << first.message;
    if (v.size() > 1) os << " (" << v.size() - 1 << " further violations)";
    throw ValidationError(os.str());
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_line(std::string_view line, char delim) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

} // namespace

PricePanel read_csv(std::istream& in, const CsvSchema& schema, std::string_view source) {
    std::string line;
    std::size_t lineno = 0;
    auto where = [&](std::size_t ln) {
        return std::string(source) + ":" + std::to_string(ln);
    };

    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, header_line)) {
        ++lineno;
        if (!trim(header_line).empty()) break;
    }
    if (trim(header_line).empty()) throw InputFormatError(std::string(source) + ": empty file");
    header = split_line(header_line, schema.delimiter);
    if (header.front() != schema.date_column) {
        throw InputFormatError(where(lineno) + ": first column must be '" + schema.date_column +
                               "', found '" + std::string(header.front()) + "'");
    }

    std::vector<std::string> all_names;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].empty())
            throw InputFormatError(where(lineno) + ": empty instrument name in column " +
                                   std::to_string(c + 1));
        all_names.emplace_back(header[c]);
    }

    // Map from output column to file column.
    std::vector<std::size_t> pick;
    PricePanel panel;
    if (schema.instruments.empty()) {
        for (std::size_t c = 0; c < all_names.size(); ++c) pick.push_back(c + 1);
        panel.instruments = all_names;
    } else {
        for (const auto& name : schema.instruments) {
            auto it = std::find(all_names.begin(), all_names.end(), name);
            if (it == all_names.end())
                throw InputFormatError(std::string(source) + ": instrument '" + name +
                                       "' not found in header");
            pick.push_back(static_cast<std::size_t>(std::distance(all_names.begin(), it)) + 1);
            panel.instruments.push_back(name);
        }
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_line(line, schema.delimiter);
        if (cells.size() != header.size()) {
            throw InputFormatError(where(lineno) + ": expected " + std::to_string(header.size()) +
                                   " cells, found " + std::to_string(cells.size()));
        }
        Date d;
        if (!parse_iso_date(cells[0], d)) {
            throw InputFormatError(where(lineno) + ", column '" + schema.date_column +
                                   "': cannot parse date '" + std::string(cells[0]) + "'");
        }
        panel.timestamps.push_back(d);
        std::vector<double> row(pick.size());
        for (std::size_t j = 0; j < pick.size(); ++j) {
            auto cell = cells[pick[j]];
            if (cell.empty()) {
                row[j] = missing_value();
                continue;
            }
            double v = 0.0;
            auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || p != cell.data() + cell.size() || std::isnan(v)) {
                throw InputFormatError(where(lineno) + ", column '" + panel.instruments[j] +
                                       "': cannot parse number '" + std::string(cell) + "'");
            }
            row[j] = v;
        }
        rows.push_back(std::move(row));
    }

    panel.prices.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(pick.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < pick.size(); ++c)
            panel.prices(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return panel;
}

PricePanel load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    auto panel = read_csv(in, schema, path.string());
    check_panel(panel);
    return panel;
}

namespace {

void write_number(std::ostream& out, double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, p - buf);
}

} // namespace

void write_csv(std::ostream& out, const PricePanel& panel) {
    out << "date";
    for (const auto& name : panel.instruments) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        out << format_iso_date(panel.timestamps[r]);
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            out << ',';
            if (!panel.missing(r, c)) write_number(out, panel.prices(r, c));
        }
        out << '\n';
    }
}

void save_csv(const std::filesystem::path& path, const PricePanel& panel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_csv(out, panel);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ReturnKind parse_return_kind(std::string_view text) {
    if (text == "log") return ReturnKind::Log;
    if (text == "simple") return ReturnKind::Simple;
    throw ConfigError("unknown return kind '" + std::string(text) + "' (expected log|simple)");
}

std::string_view to_string(ReturnKind kind) {
    return kind == ReturnKind::Log ? "log" : "simple";
}

ReturnSeries compute_returns(const PricePanel& panel, ReturnKind kind) {
    if (panel.rows() < 2) throw SizingError("compute_returns needs at least 2 price rows");
    const auto n = static_cast<Eigen::Index>(panel.rows());
    const auto m = static_cast<Eigen::Index>(panel.cols());
    ReturnSeries out;
    out.instruments = panel.instruments;
    out.timestamps.assign(panel.timestamps.begin() + 1, panel.timestamps.end());
    out.values.resize(n - 1, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index r = 1; r < n; ++r) {
            const double prev = panel.prices(r - 1, c);
            const double cur = panel.prices(r, c);
            if (kind == ReturnKind::Log) {
                for (double p : {prev, cur}) {
                    if (!is_missing(p) && p <= 0.0) {
                        throw DomainError("log return of non-positive price " +
                                          std::to_string(p) + " for " +
                                          panel.instruments[static_cast<std::size_t>(c)]);
                    }
                }
            }
            if (is_missing(prev) || is_missing(cur)) {
                out.values(r - 1, c) = missing_value();
            } else if (kind == ReturnKind::Log) {
                out.values(r - 1, c) = std::log(cur / prev);
            } else {
                out.values(r - 1, c) = cur / prev - 1.0;
            }
        }
    }
    return out;
}

std::size_t SplitSpec::boundary_index(std::size_t n) const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split.train_fraction must lie in (0, 1), got " +
                          std::to_string(train_fraction));
    }
    const double raw = train_fraction * static_cast<double>(n);
    const double b = rounding == SplitRounding::Floor ? std::floor(raw) : std::ceil(raw);
    return static_cast<std::size_t>(b);
}

std::pair<ReturnSeries, ReturnSeries> split(const ReturnSeries& series, const SplitSpec& spec) {
    const std::size_t n = series.rows();
    const std::size_t b = spec.boundary_index(n);
    if (n < 4) throw SizingError("split needs at least 4 rows, got " + std::to_string(n));
    if (b == 0 || b >= n) {
        throw ConfigError("train fraction " + std::to_string(spec.train_fraction) +
                          " leaves an empty segment for " + std::to_string(n) + " rows");
    }
    auto slice = [&](std::size_t from, std::size_t to) {
        ReturnSeries s;
        s.instruments = series.instruments;
        s.timestamps.assign(series.timestamps.begin() + static_cast<std::ptrdiff_t>(from),
                            series.timestamps.begin() + static_cast<std::ptrdiff_t>(to));
        s.values = series.values.middleRows(static_cast<Eigen::Index>(from),
                                            static_cast<Eigen::Index>(to - from));
        return s;
    };
    return {slice(0, b), slice(b, n)};
}

std::vector<Date> synthetic_calendar(std::size_t n) {
    std::vector<Date> out;
    out.reserve(n);
    const Date start = chr::sys_days{chr::year{2000} / chr::January / chr::day{3}};
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + chr::days{static_cast<int>(i)});
    return out;
}

namespace {

std::string instrument_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%02zu", i);
    return buf;
}

// Prices from a matrix of log returns, one fewer row than the panel.
PricePanel prices_from_log_returns(const Eigen::MatrixXd& r, double p0,
                                   std::vector<std::string> names) {
    PricePanel panel;
    panel.timestamps = synthetic_calendar(static_cast<std::size_t>(r.rows()) + 1);
    panel.instruments = std::move(names);
    panel.prices.resize(r.rows() + 1, r.cols());
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
        double logp = std::log(p0);
        panel.prices(0, c) = p0;
        for (Eigen::Index t = 0; t < r.rows(); ++t) {
            logp += r(t, c);
            panel.prices(t + 1, c) = std::exp(logp);
        }
    }
    return panel;
}

} // namespace

PricePanel synthesize_jump_diffusion(const JumpDiffusionSpec& spec) {
    if (spec.n < 2) throw ConfigError("synthetic series needs n >= 2");
    if (spec.instruments < 1) throw ConfigError("synthetic series needs at least one instrument");
    if (!(spec.vol > 0.0)) throw ConfigError("synthetic vol must be > 0");
    if (!(spec.jump_intensity >= 0.0 && spec.jump_intensity <= 1.0))
        throw ConfigError("jump_intensity must lie in [0, 1]");
    if (spec.jump_scale < 0.0) throw ConfigError("jump_scale must be >= 0");
    if (!(spec.initial_price > 0.0)) throw ConfigError("initial_price must be > 0");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> diffusion(spec.drift, spec.vol);
    std::normal_distribution<double> jump(0.0, spec.jump_scale > 0.0 ? spec.jump_scale : 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const auto steps = static_cast<Eigen::Index>(spec.n - 1);
    const auto m = static_cast<Eigen::Index>(spec.instruments);
    Eigen::MatrixXd r(steps, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        for (Eigen::Index t = 0; t < steps; ++t) {
            double inc = diffusion(rng);
            // The uniform draw happens every step so the stream layout does not
            // depend on the intensity.
            const bool jumped = unif(rng) < spec.jump_intensity;
            const double j = jump(rng);
            if (jumped && spec.jump_scale > 0.0) inc += j;
            r(t, c) = inc;
        }
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.instruments; ++i) names.push_back(instrument_name(i));
    return prices_from_log_returns(r, spec.initial_price, std::move(names));
}

PricePanel synthesize_ar1_panel(const Ar1PanelSpec& spec) {
    if (spec.n < 3) throw ConfigError("AR(1) panel needs n >= 3");
    if (spec.instruments < 1) throw ConfigError("AR(1) panel needs at least one instrument");
    if (!(std::abs(spec.coefficient) < 1.0)) throw ConfigError("AR(1) coefficient must satisfy |c| < 1");
    if (!(spec.vol > 0.0)) throw ConfigError("AR(1) vol must be > 0");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.vol);
    const auto steps = static_cast<Eigen::Index>(spec.n - 1);
    const auto m = static_cast<Eigen::Index>(spec.instruments);
    Eigen::MatrixXd r(steps, m);
    const double stationary_sd = 1.0 / std::sqrt(1.0 - spec.coefficient * spec.coefficient);
    for (Eigen::Index c = 0; c < m; ++c) {
        r(0, c) = noise(rng) * stationary_sd;
        for (Eigen::Index t = 1; t < steps; ++t) r(t, c) = spec.coefficient * r(t - 1, c) + noise(rng);
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.instruments; ++i) names.push_back(instrument_name(i));
    return prices_from_log_returns(r, spec.initial_price, std::move(names));
}

PricePanel synthesize_regime_flip(const RegimeFlipSpec& spec) {
    if (spec.n < 3) throw ConfigError("regime-flip panel needs n >= 3");
    if (spec.flip_row >= spec.n - 1) throw ConfigError("flip_row must index a return row");
    if (!(spec.driver_vol > 0.0) || spec.noise_vol < 0.0)
        throw ConfigError("regime-flip volatilities must be positive");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> drv(0.0, spec.driver_vol);
    std::normal_distribution<double> eps(0.0, spec.noise_vol > 0.0 ? spec.noise_vol : 1.0);
    const auto steps = static_cast<Eigen::Index>(spec.n - 1);
    Eigen::MatrixXd r(steps, 2);
    for (Eigen::Index t = 0; t < steps; ++t) {
        r(t, 0) = drv(rng);
        const double e = spec.noise_vol > 0.0 ? eps(rng) : 0.0;
        if (t == 0) {
            r(t, 1) = e;
            continue;
        }
        const double b = static_cast<std::size_t>(t) < spec.flip_row ? spec.coefficient_before
                                                                     : spec.coefficient_after;
        r(t, 1) = b * r(t - 1, 0) + e;
    }
    return prices_from_log_returns(r, spec.initial_price, {"driver", "target"});
}

} // namespace orbf
