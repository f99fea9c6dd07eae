// orbf command-line front end: run, synth, validate, report, checkpoint.

#include "orbf/checkpoint.hpp"
#include "orbf/config.hpp"
#include "orbf/data.hpp"
#include "orbf/error.hpp"
#include "orbf/evaluation.hpp"
#include "orbf/log.hpp"
#include "orbf/pipeline.hpp"
#include "orbf/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using orbf::ExperimentConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string rw_mode;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("-c,--config", f.config_path, "experiment config file")->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", f.overrides, "override a config key, key=value (repeatable)");
    cmd->add_option("--seed", f.seed, "seed for the experiment and the synthetic generator");
    cmd->add_option("--threads", f.threads, "worker thread cap");
    cmd->add_option("--rw-mode", f.rw_mode, "random-walk baseline: last_value | zero");
}

ExperimentConfig build_config(const CommonFlags& f) {
    ExperimentConfig cfg = f.config_path.empty() ? ExperimentConfig{} : orbf::load_config(f.config_path);
    for (const auto& o : f.overrides) orbf::apply_override(cfg, o);
    if (f.seed) {
        cfg.seed = *f.seed;
        cfg.synth.seed = *f.seed;
    }
    if (f.threads) cfg.threads = *f.threads;
    if (!f.rw_mode.empty()) cfg.rw_mode = orbf::parse_rw_mode(f.rw_mode);
    cfg.validate();
    return cfg;
}

std::string config_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    orbf::write_config(os, cfg);
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string utc_now() {
    auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    auto day = std::chrono::floor<std::chrono::days>(now);
    std::chrono::hh_mm_ss hms(now - day);
    std::ostringstream os;
    os << orbf::format_iso_date(day) << 'T' << std::setfill('0') << std::setw(2) << hms.hours().count() << ':'
       << std::setw(2) << hms.minutes().count() << ':' << std::setw(2) << hms.seconds().count() << 'Z';
    return os.str();
}

nlohmann::ordered_json versions() {
    nlohmann::ordered_json v;
    v["orbf"] = orbf::kVersion;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    v["boost"] = std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                 std::to_string(BOOST_VERSION % 100);
    v["compiler"] = __VERSION__;
    return v;
}

// run ------------------------------------------------------------------------

int cmd_run(const CommonFlags& flags, const std::string& out_flag) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = build_config(flags);
    if (!out_flag.empty()) cfg.output_dir = out_flag;

    const std::string echo = config_text(cfg);
    orbf::log::info("effective config:\n" + echo);

    const auto t_load = std::chrono::steady_clock::now();
    const auto returns = orbf::load_returns(cfg);
    const double load_s = seconds_since(t_load);

    const auto t_run = std::chrono::steady_clock::now();
    const auto result = orbf::run_experiment(cfg, returns);
    const double run_s = seconds_since(t_run);

    fs::create_directories(cfg.output_dir);
    orbf::write_outputs(result, cfg, cfg.output_dir);

    nlohmann::ordered_json m;
    m["command"] = "run";
    m["created_utc"] = utc_now();
    m["seed"] = cfg.seed;
    m["synth_seed"] = cfg.synth.seed;
    m["source"] = std::string(orbf::to_string(cfg.source));
    if (cfg.source == orbf::DataSource::Csv) m["data_path"] = cfg.data_path.string();
    m["config_file"] = "effective_config.cfg";
    m["versions"] = versions();
    m["rows"] = {{"train", result.train_rows}, {"test", result.test_rows}};
    m["records"] = result.records.size();
    m["failed_cells"] = result.failures.size();
    m["timings_s"] = {{"load", load_s}, {"experiment", run_s}, {"total", seconds_since(t0)}};
    std::ofstream(cfg.output_dir / "manifest.json") << m.dump(2) << '\n';

    std::ofstream run_log(cfg.output_dir / "run.log");
    run_log << "# orbf " << orbf::kVersion << " run\n# effective config\n" << echo;

    for (const auto& f : result.failures)
        std::cerr << "failed cell " << f.target << '/' << f.model << "/h=" << f.horizon << ": " << f.message << '\n';

    std::cout << "wrote " << cfg.output_dir.string() << " (" << result.records.size() << " records, "
              << result.failures.size() << " failed cells)\n";
    for (const auto& s : result.report.models)
        std::cout << "  " << s.model << " mean nmse " << orbf::format_metric(s.nmse ? std::optional(s.nmse->mean) : std::nullopt)
                  << '\n';
    return result.failures.empty() ? kExitOk : kExitRuntime;
}

// synth ----------------------------------------------------------------------

int cmd_synth(const CommonFlags& flags, const std::string& kind, std::optional<std::size_t> n,
              std::optional<std::size_t> instruments, std::optional<double> jump_intensity, const std::string& out) {
    ExperimentConfig cfg = build_config(flags);
    auto& s = cfg.synth;
    if (n) s.n = *n;
    if (instruments) s.instruments = *instruments;
    if (jump_intensity) s.jump_intensity = *jump_intensity;

    std::string k = kind;
    if (k.empty()) k = cfg.source == orbf::DataSource::Csv ? "jump_diffusion" : std::string(orbf::to_string(cfg.source));

    orbf::PricePanel panel;
    if (k == "jump_diffusion")
        panel = orbf::synthesize_jump_diffusion(s.jump_diffusion());
    else if (k == "ar1")
        panel = orbf::synthesize_ar1_panel(s.ar1());
    else if (k == "regime_flip")
        panel = orbf::synthesize_regime_flip(s.regime_flip());
    else
        throw orbf::ConfigError("synth: unknown kind '" + k + "' (jump_diffusion | ar1 | regime_flip)");

    if (out.empty() || out == "-") {
        orbf::write_csv(std::cout, panel);
    } else {
        orbf::save_csv(out, panel);
        orbf::log::info("wrote " + std::to_string(panel.rows()) + " rows to " + out);
    }
    return kExitOk;
}

// validate -------------------------------------------------------------------

int cmd_validate(const std::string& path, const std::string& date_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw orbf::IoError("cannot open '" + path + "'");
    orbf::CsvSchema schema;
    schema.date_column = date_column;
    const auto panel = orbf::read_csv(in, schema, path);
    const auto violations = orbf::validate_panel(panel);
    if (violations.empty()) {
        std::cout << "ok\n";
        return kExitOk;
    }
    for (const auto& v : violations) {
        // +2: one for the header line, one for 1-based numbering.
        std::cout << path << ":" << v.row + 2;
        if (v.row < panel.timestamps.size()) std::cout << " (" << orbf::format_iso_date(panel.timestamps[v.row]) << ")";
        if (v.col < panel.instruments.size()) std::cout << " [" << panel.instruments[v.col] << "]";
        std::cout << ": " << v.message << '\n';
    }
    std::cout << violations.size() << " violation(s)\n";
    return kExitData;
}

int cmd_list_keys() {
    std::ostringstream defaults;
    orbf::write_config(defaults, orbf::ExperimentConfig{});
    std::map<std::string, std::string> value;
    std::istringstream in(defaults.str());
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find(" = ");
        value[line.substr(0, eq)] = line.substr(eq + 3);
    }
    for (const auto& [key, doc] : orbf::config_schema())
        std::cout << key << " = " << value[key] << "\t# " << doc << '\n';
    return kExitOk;
}

// report ---------------------------------------------------------------------

int cmd_report(const std::string& forecasts, const std::string& out, std::vector<std::string> models,
               const std::string& baseline) {
    std::ifstream in(forecasts, std::ios::binary);
    if (!in) throw orbf::IoError("cannot open '" + forecasts + "'");
    const auto records = orbf::read_forecast_log(in, forecasts);
    if (models.empty())
        for (const auto& r : records) models.push_back(r.model_id);
    models = orbf::canonical_model_order(models);
    const auto report = orbf::evaluate(records, models, baseline);
    fs::create_directories(out);
    orbf::emit_report(report, out);
    std::cout << "wrote report for " << records.size() << " records to " << out << '\n';
    return kExitOk;
}

// checkpoint -----------------------------------------------------------------

int cmd_checkpoint_save(const CommonFlags& flags, const std::string& target, std::size_t horizon,
                        const std::string& out) {
    ExperimentConfig cfg = build_config(flags);
    const auto returns = orbf::load_returns(cfg);
    std::string name = target;
    if (name.empty()) {
        if (!cfg.targets.empty())
            name = cfg.targets.front();
        else
            name = returns.instruments.front();
    }
    const auto model = orbf::fit_rbfnet(cfg, returns, name, horizon);
    orbf::save_checkpoint(fs::path(out), model);
    std::cout << "saved rbfnet " << name << " h=" << horizon << " to " << out << '\n';
    return kExitOk;
}

int cmd_checkpoint_show(const std::string& path) {
    const auto m = orbf::load_checkpoint(fs::path(path));
    const auto& sel = m.selection();
    std::cout << "model       rbfnet\n"
              << "target      " << m.target_id() << '\n'
              << "horizon     " << m.horizon() << '\n'
              << "features   ";
    for (const auto& f : sel.feature_names) std::cout << ' ' << f;
    if (sel.feature_names.empty()) std::cout << " (none)";
    std::cout << '\n'
              << "prototypes  " << m.prototypes().k() << " x dim " << m.prototypes().dim() << '\n'
              << "head        dim " << m.head().dim() << ", tau " << m.head().tau() << ", updates "
              << m.head().n_updates() << '\n'
              << "pending     " << m.pending().size() << '\n';
    std::cout << "theta      ";
    for (Eigen::Index i = 0; i < m.head().theta().size(); ++i) std::cout << ' ' << m.head().theta()(i);
    std::cout << '\n';
    return kExitOk;
}

int exit_code_for(const orbf::Error& e) {
    switch (e.category()) {
    case orbf::ErrorCategory::Config: return kExitConfig;
    case orbf::ErrorCategory::Data: return kExitData;
    case orbf::ErrorCategory::Runtime: return kExitRuntime;
    }
    return kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online RBF network forecasting experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", orbf::kVersion);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "log progress to stderr");
    app.add_flag("-q,--quiet", quiet, "only log errors");

    CommonFlags run_flags;
    std::string run_out;
    auto* run = app.add_subcommand("run", "run an experiment and write its report");
    add_common(run, run_flags);
    run->add_option("-o,--out", run_out, "output directory (overrides output.dir)");
    bool list_keys = false;
    run->add_flag("--list-keys", list_keys, "print every config key with its default and exit");

    CommonFlags synth_flags;
    std::string synth_kind, synth_out;
    std::optional<std::size_t> synth_n, synth_instruments;
    std::optional<double> synth_jumps;
    auto* synth = app.add_subcommand("synth", "write a synthetic price panel as CSV");
    add_common(synth, synth_flags);
    synth->add_option("--kind", synth_kind, "jump_diffusion | ar1 | regime_flip (default: data.source)");
    synth->add_option("-n,--rows", synth_n, "number of rows");
    synth->add_option("--instruments", synth_instruments, "number of instruments");
    synth->add_option("--jump-intensity", synth_jumps, "per-step jump probability");
    synth->add_option("-o,--out", synth_out, "output CSV ('-' for stdout)");

    std::string validate_path, validate_date = "date";
    auto* validate = app.add_subcommand("validate", "check a price CSV");
    validate->add_option("path", validate_path, "CSV file")->required();
    validate->add_option("--date-column", validate_date, "name of the date column");

    std::string report_in, report_out = "report", report_baseline = "rw";
    std::vector<std::string> report_models;
    auto* report = app.add_subcommand("report", "rebuild report files from a forecast log");
    report->add_option("forecasts", report_in, "forecasts.csv from a run")->required();
    report->add_option("-o,--out", report_out, "output directory");
    report->add_option("--models", report_models, "models to report")->delimiter(',');
    report->add_option("--baseline", report_baseline, "normalising model");

    auto* checkpoint = app.add_subcommand("checkpoint", "save or inspect rbfnet checkpoints");
    checkpoint->require_subcommand(1);
    CommonFlags ck_flags;
    std::string ck_target, ck_out;
    std::size_t ck_horizon = 1;
    auto* ck_save = checkpoint->add_subcommand("save", "fit one rbfnet cell on the training split and save it");
    add_common(ck_save, ck_flags);
    ck_save->add_option("--target", ck_target, "target instrument (default: first)");
    ck_save->add_option("--horizon", ck_horizon, "forecast horizon")->check(CLI::PositiveNumber);
    ck_save->add_option("-o,--out", ck_out, "checkpoint file")->required();
    std::string ck_show_path;
    auto* ck_show = checkpoint->add_subcommand("show", "print a checkpoint summary");
    ck_show->add_option("path", ck_show_path, "checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    orbf::log::set_level(quiet ? orbf::log::Level::Error : verbose ? orbf::log::Level::Info : orbf::log::Level::Warn);

    try {
        if (*run && list_keys) return cmd_list_keys();
        if (*run) return cmd_run(run_flags, run_out);
        if (*synth) return cmd_synth(synth_flags, synth_kind, synth_n, synth_instruments, synth_jumps, synth_out);
        if (*validate) return cmd_validate(validate_path, validate_date);
        if (*report) return cmd_report(report_in, report_out, report_models, report_baseline);
        if (*ck_save) return cmd_checkpoint_save(ck_flags, ck_target, ck_horizon, ck_out);
        if (*ck_show) return cmd_checkpoint_show(ck_show_path);
    } catch (const orbf::Error& e) {
        std::cerr << "orbf: error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "orbf: error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
