#include "orbf/evaluation.hpp"

#include "orbf/error.hpp"
#include "orbf/log.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

namespace orbf {

int sign(double x) { return (x > 0.0) - (x < 0.0); }

std::optional<double> mse(std::span<const ForecastRecord> records) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (!r.resolved()) continue;
        const double e = *r.y_realized - r.y_hat;
        acc += e * e;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return acc / static_cast<double>(n);
}

std::optional<double> nmse(std::optional<double> model_mse, std::optional<double> rw_mse) {
    if (!model_mse || !rw_mse || !(*rw_mse > 0.0)) return std::nullopt;
    return *model_mse / *rw_mse;
}

std::optional<double> accuracy(std::span<const ForecastRecord> records) {
    std::size_t hits = 0, n = 0;
    for (const auto& r : records) {
        if (!r.resolved()) continue;
        hits += sign(*r.y_realized) == sign(r.y_hat);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double t_two_sided(double t, double df) {
    if (!std::isfinite(df)) return normal_two_sided(t);
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::pair<double, double> mean_var(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return {m, ss / static_cast<double>(xs.size() - 1)};
}

} // namespace

std::optional<TestResult> wald_test_from_moments(double mean, double sd, std::size_t n,
                                                 double null_value) {
    if (n < 2 || !(sd > 0.0) || !std::isfinite(sd)) return std::nullopt;
    const double se = sd / std::sqrt(static_cast<double>(n));
    TestResult r;
    r.statistic = (mean - null_value) / se;
    r.p_value = normal_two_sided(r.statistic);
    return r;
}

std::optional<TestResult> wald_test(std::span<const double> samples, double null_value) {
    if (samples.size() < 2) return std::nullopt;
    auto [m, v] = mean_var(samples);
    return wald_test_from_moments(m, std::sqrt(v), samples.size(), null_value);
}

std::optional<TestResult> two_sample_t_test_from_moments(double mean_a, double var_a, std::size_t n_a,
                                                         double mean_b, double var_b, std::size_t n_b,
                                                         TTestVariant variant) {
    if (n_a < 2 || n_b < 2) return std::nullopt;
    if (!std::isfinite(var_a) || !std::isfinite(var_b) || var_a < 0.0 || var_b < 0.0) return std::nullopt;
    const double na = static_cast<double>(n_a), nb = static_cast<double>(n_b);
    TestResult r;
    double se2 = 0.0;
    if (variant == TTestVariant::Welch) {
        const double qa = var_a / na, qb = var_b / nb;
        se2 = qa + qb;
        if (!(se2 > 0.0)) return std::nullopt;
        r.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    } else {
        const double pooled = ((na - 1.0) * var_a + (nb - 1.0) * var_b) / (na + nb - 2.0);
        se2 = pooled * (1.0 / na + 1.0 / nb);
        if (!(se2 > 0.0)) return std::nullopt;
        r.df = na + nb - 2.0;
    }
    r.statistic = (mean_a - mean_b) / std::sqrt(se2);
    r.p_value = t_two_sided(r.statistic, r.df);
    return r;
}

std::optional<TestResult> two_sample_t_test(std::span<const double> a, std::span<const double> b,
                                            TTestVariant variant) {
    if (a.size() < 2 || b.size() < 2) return std::nullopt;
    auto [ma, va] = mean_var(a);
    auto [mb, vb] = mean_var(b);
    return two_sample_t_test_from_moments(ma, va, a.size(), mb, vb, b.size(), variant);
}

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + (s[hi] - s[lo]) * frac;
}

} // namespace

std::optional<SummaryStats> summarize(std::span<const double> samples, std::size_t targets) {
    if (samples.empty()) return std::nullopt;
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    SummaryStats st;
    st.targets = targets;
    st.count = s.size();
    double m = 0.0;
    for (double x : s) m += x;
    st.mean = m / static_cast<double>(s.size());
    if (s.size() > 1) {
        double ss = 0.0;
        for (double x : s) ss += (x - st.mean) * (x - st.mean);
        st.std = std::sqrt(ss / static_cast<double>(s.size() - 1));
    }
    st.min = s.front();
    st.max = s.back();
    st.q25 = quantile_sorted(s, 0.25);
    st.q50 = quantile_sorted(s, 0.50);
    st.q75 = quantile_sorted(s, 0.75);
    st.se = st.std / std::sqrt(static_cast<double>(s.size()));
    return st;
}

EvaluationReport evaluate(std::span<const ForecastRecord> records,
                          std::span<const std::string> models, std::string_view baseline) {
    using Key = std::tuple<std::string, std::string, std::size_t>;  // model, target, horizon
    std::map<Key, std::vector<const ForecastRecord*>> groups;
    // Baseline squared errors by (target, horizon, t).
    std::map<std::tuple<std::string, std::size_t>, std::unordered_map<std::int64_t, double>> base;

    for (const auto& r : records) {
        if (!r.resolved()) continue;
        groups[{r.model_id, r.target_id, r.horizon}].push_back(&r);
        if (r.model_id == baseline) {
            const double e = *r.y_realized - r.y_hat;
            base[{r.target_id, r.horizon}][r.t] = e * e;
        }
    }

    std::vector<std::string> order;
    if (models.empty()) {
        std::set<std::string> names;
        for (const auto& [k, _] : groups) names.insert(std::get<0>(k));
        order.assign(names.begin(), names.end());
    } else {
        order.assign(models.begin(), models.end());
    }

    EvaluationReport rep;
    for (const auto& model : order) {
        std::vector<double> nmse_samples, acc_samples;
        std::set<std::string> targets;
        std::map<std::size_t, std::pair<double, std::size_t>> by_h;

        for (auto it = groups.lower_bound({model, "", 0});
             it != groups.end() && std::get<0>(it->first) == model; ++it) {
            const auto& [_, target, h] = it->first;
            // Records sorted by t so summation order does not depend on input order.
            std::vector<ForecastRecord> recs;
            recs.reserve(it->second.size());
            for (const auto* p : it->second) recs.push_back(*p);
            std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

            CellMetrics cell;
            cell.model = model;
            cell.target = target;
            cell.horizon = h;
            cell.count = recs.size();
            cell.mse = mse(recs);
            cell.accuracy = accuracy(recs);

            auto bit = base.find({target, h});
            if (bit != base.end()) {
                double acc = 0.0;
                bool complete = true;
                for (const auto& r : recs) {
                    auto e = bit->second.find(r.t);
                    if (e == bit->second.end()) {
                        complete = false;
                        break;
                    }
                    acc += e->second;
                }
                if (complete && !recs.empty()) {
                    cell.nmse = nmse(cell.mse, acc / static_cast<double>(recs.size()));
                } else {
                    log::warn("baseline records do not cover " + model + "/" + target + "/h=" +
                              std::to_string(h) + "; nmse undefined");
                }
            }
            if (cell.nmse) {
                nmse_samples.push_back(*cell.nmse);
                auto& slot = by_h[h];
                slot.first += *cell.nmse;
                slot.second += 1;
            } else {
                by_h.try_emplace(h, 0.0, 0);
            }
            if (cell.accuracy) acc_samples.push_back(*cell.accuracy);
            targets.insert(target);
            rep.cells.push_back(std::move(cell));
        }

        ModelSummary ms;
        ms.model = model;
        ms.nmse = summarize(nmse_samples, targets.size());
        ms.wald = wald_test_vs_one(nmse_samples);
        ms.accuracy = summarize(acc_samples, targets.size());
        rep.models.push_back(std::move(ms));

        for (const auto& [h, sum] : by_h) {
            HorizonPoint p{model, h, std::nullopt};
            if (sum.second > 0) p.mean_nmse = sum.first / static_cast<double>(sum.second);
            rep.curve.push_back(p);
        }
    }

    // Pairwise tests over nmse samples.
    std::map<std::string, std::vector<double>> samples;
    for (const auto& c : rep.cells)
        if (c.nmse) samples[c.model].push_back(*c.nmse);
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            PairwiseTest pt{order[i], order[j], std::nullopt};
            pt.result = two_sample_t_test(samples[order[i]], samples[order[j]]);
            rep.pairwise.push_back(std::move(pt));
        }
    }
    return rep;
}

std::string format_metric(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    return out;
}

} // namespace

void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
    if (report.empty()) log::warn("empty evaluation report; writing headers only");

    {
        auto out = open_out(out_dir / "cells.csv");
        out << "model,target,horizon,count,mse,nmse,accuracy\n";
        for (const auto& c : report.cells) {
            out << c.model << ',' << c.target << ',' << c.horizon << ',' << c.count << ','
                << format_metric(c.mse) << ',' << format_metric(c.nmse) << ','
                << format_metric(c.accuracy) << '\n';
        }
    }

    auto table = [&](const std::filesystem::path& path, bool with_tests,
                     auto pick) {
        auto out = open_out(path);
        out << "stat";
        for (const auto& m : report.models) out << ',' << m.model;
        out << '\n';
        using Getter = std::optional<double> (*)(const SummaryStats&);
        const std::vector<std::pair<const char*, Getter>> rows = {
            {"targets", [](const SummaryStats& s) -> std::optional<double> { return double(s.targets); }},
            {"count", [](const SummaryStats& s) -> std::optional<double> { return double(s.count); }},
            {"mean", [](const SummaryStats& s) -> std::optional<double> { return s.mean; }},
            {"std", [](const SummaryStats& s) -> std::optional<double> { return s.std; }},
            {"min", [](const SummaryStats& s) -> std::optional<double> { return s.min; }},
            {"25%", [](const SummaryStats& s) -> std::optional<double> { return s.q25; }},
            {"50%", [](const SummaryStats& s) -> std::optional<double> { return s.q50; }},
            {"75%", [](const SummaryStats& s) -> std::optional<double> { return s.q75; }},
            {"max", [](const SummaryStats& s) -> std::optional<double> { return s.max; }},
        };
        if (report.models.empty()) return;
        for (const auto& [label, get] : rows) {
            out << label;
            for (const auto& m : report.models) {
                const auto& st = pick(m);
                out << ',' << (st ? format_metric(get(*st)) : std::string("NA"));
            }
            out << '\n';
        }
        if (!with_tests) return;
        out << "se";
        for (const auto& m : report.models)
            out << ',' << (m.nmse ? format_metric(m.nmse->se) : std::string("NA"));
        out << "\nt-value";
        for (const auto& m : report.models)
            out << ',' << (m.wald ? format_metric(m.wald->statistic) : std::string("NA"));
        out << "\np-value";
        for (const auto& m : report.models)
            out << ',' << (m.wald ? format_metric(m.wald->p_value) : std::string("NA"));
        out << '\n';
    };
    table(out_dir / "summary_nmse.csv", true,
          [](const ModelSummary& m) -> const std::optional<SummaryStats>& { return m.nmse; });
    table(out_dir / "summary_accuracy.csv", false,
          [](const ModelSummary& m) -> const std::optional<SummaryStats>& { return m.accuracy; });

    {
        auto out = open_out(out_dir / "nmse_by_horizon.csv");
        out << "model,horizon,mean_nmse\n";
        for (const auto& p : report.curve)
            out << p.model << ',' << p.horizon << ',' << format_metric(p.mean_nmse) << '\n';
    }
    {
        auto out = open_out(out_dir / "pairwise_tests.csv");
        out << "model_a,model_b,statistic,df,p_value\n";
        for (const auto& p : report.pairwise) {
            out << p.model_a << ',' << p.model_b << ',';
            if (p.result) {
                out << format_metric(p.result->statistic) << ',' << format_metric(p.result->df) << ','
                    << format_metric(p.result->p_value) << '\n';
            } else {
                out << "NA,NA,NA\n";
            }
        }
    }
}

} // namespace orbf
