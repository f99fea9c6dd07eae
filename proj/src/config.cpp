#include "orbf/config.hpp"

#include "orbf/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace orbf {

std::string_view to_string(DataSource s) {
    switch (s) {
    case DataSource::Csv: return "csv";
    case DataSource::JumpDiffusion: return "jump_diffusion";
    case DataSource::Ar1: return "ar1";
    case DataSource::RegimeFlip: return "regime_flip";
    }
    return "?";
}

std::string_view to_string(RwMode m) { return m == RwMode::LastValue ? "last_value" : "zero"; }

RwMode parse_rw_mode(std::string_view text) {
    if (text == "last_value") return RwMode::LastValue;
    if (text == "zero") return RwMode::Zero;
    throw ConfigError("rw_mode must be last_value or zero, got '" + std::string(text) + "'");
}

JumpDiffusionSpec SyntheticSpec::jump_diffusion() const {
    return {n, instruments, seed, drift, vol, jump_intensity, jump_scale, initial_price};
}

Ar1PanelSpec SyntheticSpec::ar1() const {
    return {n, instruments, seed, ar_coefficient, vol, initial_price};
}

RegimeFlipSpec SyntheticSpec::regime_flip() const {
    return {n, seed, flip_row, coefficient_before, coefficient_after, vol, noise_vol, initial_price};
}

std::vector<std::size_t> ExperimentConfig::default_horizons() {
    std::vector<std::size_t> h(30);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = i + 1;
    return h;
}

void ExperimentConfig::validate() const {
    if (source == DataSource::Csv && data_path.empty())
        throw ConfigError("data.path: required when data.source = csv");
    if (horizons.empty()) throw ConfigError("horizons: must not be empty");
    for (auto h : horizons)
        if (h < 1) throw ConfigError("horizons: every horizon must be >= 1");
    if (models.empty()) throw ConfigError("models: must not be empty");
    for (const auto& m : models) {
        const auto& k = known_models();
        if (std::find(k.begin(), k.end(), m) == k.end())
            throw ConfigError("models: unknown model '" + m + "' (expected rw, ridge, ewrls, rbfnet)");
    }
    split.boundary_index(4);  // range-checks the fraction
    if (!(ewrls_tau > 0.8 && ewrls_tau <= 1.0)) throw ConfigError("ewrls.tau: must lie in (0.8, 1]");
    if (!(ewrls_delta > 0.0)) throw ConfigError("ewrls.delta: must be > 0");
    if (!(rbfnet.tau > 0.8 && rbfnet.tau <= 1.0)) throw ConfigError("rbfnet.tau: must lie in (0.8, 1]");
    if (!(rbfnet.delta > 0.0)) throw ConfigError("rbfnet.delta: must be > 0");
    if (!(rbfnet.prototype_decay > 0.0 && rbfnet.prototype_decay <= 1.0))
        throw ConfigError("rbfnet.prototype_decay: must lie in (0, 1]");
    if (!(rbfnet.shrinkage.lambda >= 0.0 && rbfnet.shrinkage.lambda <= 1.0))
        throw ConfigError("rbfnet.shrinkage: must lie in [0, 1]");
    if (!(rbfnet.shrinkage.floor > 0.0)) throw ConfigError("rbfnet.cov_floor: must be > 0");
    if (rbfnet.kmeans_max_iter < 1) throw ConfigError("rbfnet.kmeans_max_iter: must be >= 1");
    if (!(ridge_lambda >= 0.0)) throw ConfigError("ridge.lambda: must be >= 0");
    if (!(selection.vif_threshold >= 1.0)) throw ConfigError("featsel.vif_threshold: must be >= 1");
    if (threads < 1) throw ConfigError("threads: must be >= 1");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    v = trim(v);
    if (v.empty()) return out;
    std::size_t start = 0;
    while (true) {
        auto pos = v.find(',', start);
        auto item = trim(v.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (item.empty()) throw ConfigError("empty item in list '" + std::string(v) + "'");
        out.emplace_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_integer(std::string_view v) {
    v = trim(v);
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

double parse_double(std::string_view v) {
    v = trim(v);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("expected a number, got '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> parse_horizons(std::string_view v) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) {
        auto dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(parse_integer<std::size_t>(item));
        } else {
            auto lo = parse_integer<std::size_t>(std::string_view(item).substr(0, dash));
            auto hi = parse_integer<std::size_t>(std::string_view(item).substr(dash + 1));
            if (hi < lo) throw ConfigError("horizon range '" + item + "' is reversed");
            for (auto h = lo; h <= hi; ++h) out.push_back(h);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string fmt(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

template <class T>
std::string fmt_int(T v) { return std::to_string(v); }

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string join(const std::vector<std::string>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
    return out;
}

std::string fmt_horizons(const std::vector<std::size_t>& hs) {
    // Collapse consecutive runs into ranges.
    std::string out;
    for (std::size_t i = 0; i < hs.size();) {
        std::size_t j = i;
        while (j + 1 < hs.size() && hs[j + 1] == hs[j] + 1) ++j;
        if (!out.empty()) out += ',';
        out += std::to_string(hs[i]);
        if (j > i) out += "-" + std::to_string(hs[j]);
        i = j + 1;
    }
    return out;
}

struct Field {
    const char* key;
    const char* doc;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define ORBF_DOUBLE(KEY, DOC, MEMBER)                                                       \
    Field { KEY, DOC, [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_double(v); }, \
            [](const ExperimentConfig& c) { return fmt(c.MEMBER); } }
#define ORBF_SIZE(KEY, DOC, MEMBER)                                                         \
    Field { KEY, DOC,                                                                       \
            [](ExperimentConfig& c, std::string_view v) {                                   \
                c.MEMBER = parse_integer<std::decay_t<decltype(c.MEMBER)>>(v);              \
            },                                                                              \
            [](const ExperimentConfig& c) { return fmt_int(c.MEMBER); } }
#define ORBF_BOOL(KEY, DOC, MEMBER)                                                         \
    Field { KEY, DOC, [](ExperimentConfig& c, std::string_view v) { c.MEMBER = parse_bool(v); }, \
            [](const ExperimentConfig& c) { return fmt_bool(c.MEMBER); } }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        Field{"data.source", "csv | jump_diffusion | ar1 | regime_flip",
              [](ExperimentConfig& c, std::string_view v) {
                  v = trim(v);
                  if (v == "csv") c.source = DataSource::Csv;
                  else if (v == "jump_diffusion") c.source = DataSource::JumpDiffusion;
                  else if (v == "ar1") c.source = DataSource::Ar1;
                  else if (v == "regime_flip") c.source = DataSource::RegimeFlip;
                  else throw ConfigError("unknown data source '" + std::string(v) + "'");
              },
              [](const ExperimentConfig& c) { return std::string(to_string(c.source)); }},
        Field{"data.path", "price CSV (header date,<instrument>...)",
              [](ExperimentConfig& c, std::string_view v) { c.data_path = std::string(trim(v)); },
              [](const ExperimentConfig& c) { return c.data_path.string(); }},
        Field{"data.targets", "comma-separated target instruments; empty means all",
              [](ExperimentConfig& c, std::string_view v) { c.targets = split_list(v); },
              [](const ExperimentConfig& c) { return join(c.targets); }},
        ORBF_SIZE("synth.n", "synthetic price rows", synth.n),
        ORBF_SIZE("synth.instruments", "synthetic instruments (jump_diffusion, ar1)", synth.instruments),
        ORBF_SIZE("synth.seed", "generator seed", synth.seed),
        ORBF_DOUBLE("synth.drift", "per-period log drift (jump_diffusion)", synth.drift),
        ORBF_DOUBLE("synth.vol", "per-period volatility (innovations / driver)", synth.vol),
        ORBF_DOUBLE("synth.jump_intensity", "jump probability per step (jump_diffusion)", synth.jump_intensity),
        ORBF_DOUBLE("synth.jump_scale", "jump standard deviation (jump_diffusion)", synth.jump_scale),
        ORBF_DOUBLE("synth.initial_price", "first price level", synth.initial_price),
        ORBF_DOUBLE("synth.ar_coefficient", "AR(1) coefficient (ar1)", synth.ar_coefficient),
        ORBF_SIZE("synth.flip_row", "return row where the coefficient switches (regime_flip)", synth.flip_row),
        ORBF_DOUBLE("synth.coefficient_before", "coefficient before the switch (regime_flip)", synth.coefficient_before),
        ORBF_DOUBLE("synth.coefficient_after", "coefficient after the switch (regime_flip)", synth.coefficient_after),
        ORBF_DOUBLE("synth.noise_vol", "target noise volatility (regime_flip)", synth.noise_vol),
        Field{"returns.kind", "log | simple",
              [](ExperimentConfig& c, std::string_view v) { c.returns = parse_return_kind(trim(v)); },
              [](const ExperimentConfig& c) { return std::string(to_string(c.returns)); }},
        ORBF_DOUBLE("split.train_fraction", "training share of return rows, in (0, 1)", split.train_fraction),
        Field{"split.rounding", "floor | ceil for the train boundary",
              [](ExperimentConfig& c, std::string_view v) {
                  v = trim(v);
                  if (v == "floor") c.split.rounding = SplitRounding::Floor;
                  else if (v == "ceil") c.split.rounding = SplitRounding::Ceil;
                  else throw ConfigError("split.rounding must be floor or ceil");
              },
              [](const ExperimentConfig& c) {
                  return std::string(c.split.rounding == SplitRounding::Floor ? "floor" : "ceil");
              }},
        Field{"horizons", "forecast horizons, e.g. 1-30 or 1,2,5",
              [](ExperimentConfig& c, std::string_view v) { c.horizons = parse_horizons(v); },
              [](const ExperimentConfig& c) { return fmt_horizons(c.horizons); }},
        Field{"models", "subset of rw,ridge,ewrls,rbfnet",
              [](ExperimentConfig& c, std::string_view v) { c.models = split_list(v); },
              [](const ExperimentConfig& c) { return join(c.models); }},
        Field{"rw_mode", "random-walk baseline: last_value | zero",
              [](ExperimentConfig& c, std::string_view v) { c.rw_mode = parse_rw_mode(trim(v)); },
              [](const ExperimentConfig& c) { return std::string(to_string(c.rw_mode)); }},
        ORBF_SIZE("featsel.max_features", "maximum selected inputs per target", selection.max_features),
        ORBF_DOUBLE("featsel.min_r2_gain", "stop when R^2 improves by less", selection.min_r2_gain),
        ORBF_DOUBLE("featsel.vif_threshold", "largest admissible VIF", selection.vif_threshold),
        ORBF_BOOL("featsel.own_lag", "include the target's own return among candidates", own_lag),
        ORBF_SIZE("rbfnet.hidden_units", "hidden units k; 0 means max(2, round(sqrt(n/2)))", rbfnet.hidden_units),
        ORBF_SIZE("rbfnet.kmeans_max_iter", "Lloyd iteration cap", rbfnet.kmeans_max_iter),
        ORBF_DOUBLE("rbfnet.kmeans_tol", "relative inertia change that stops Lloyd", rbfnet.kmeans_tol),
        ORBF_DOUBLE("rbfnet.shrinkage", "covariance shrinkage towards the diagonal", rbfnet.shrinkage.lambda),
        ORBF_DOUBLE("rbfnet.cov_floor", "ridge added to every prototype covariance", rbfnet.shrinkage.floor),
        ORBF_DOUBLE("rbfnet.prototype_decay", "decay of prototype sample counts", rbfnet.prototype_decay),
        ORBF_BOOL("rbfnet.update_prototypes", "move prototypes during the test period", rbfnet.update_prototypes),
        ORBF_BOOL("rbfnet.online", "keep fitting the rbfnet head during the test period", rbfnet.online),
        ORBF_DOUBLE("rbfnet.tau", "EWRLS forgetting factor of the rbfnet head", rbfnet.tau),
        ORBF_DOUBLE("rbfnet.delta", "EWRLS initial regularisation of the rbfnet head", rbfnet.delta),
        ORBF_DOUBLE("ewrls.tau", "forgetting factor of the linear EWRLS model", ewrls_tau),
        ORBF_DOUBLE("ewrls.delta", "initial regularisation of the linear EWRLS model", ewrls_delta),
        ORBF_DOUBLE("ridge.lambda", "ridge penalty (intercept unpenalised)", ridge_lambda),
        ORBF_SIZE("seed", "experiment seed (clustering initialisation)", seed),
        ORBF_SIZE("threads", "worker threads", threads),
        Field{"output.dir", "output directory",
              [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(trim(v)); },
              [](const ExperimentConfig& c) { return c.output_dir.string(); }},
    };
    return table;
}

#undef ORBF_DOUBLE
#undef ORBF_SIZE
#undef ORBF_BOOL

const Field& find_field(std::string_view key) {
    for (const auto& f : fields())
        if (key == f.key) return f;
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

} // namespace

void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    const auto& f = find_field(trim(key));
    try {
        f.set(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(f.key) + ": " + e.what());
    }
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& in, std::string_view source, ExperimentConfig base) {
    ExperimentConfig cfg = std::move(base);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto where = std::string(source) + ":" + std::to_string(lineno);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(where + ": malformed section header");
            section = std::string(trim(s.substr(1, s.size() - 2)));
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        std::string key(trim(s.substr(0, eq)));
        if (!section.empty()) key = section + "." + key;
        try {
            set_config_value(cfg, key, s.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    auto cfg = parse_config(in, path.string());
    // A relative data path is taken relative to the config file.
    if (!cfg.data_path.empty() && cfg.data_path.is_relative())
        cfg.data_path = path.parent_path() / cfg.data_path;
    return cfg;
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

std::vector<std::pair<std::string, std::string>> config_schema() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.doc);
    return out;
}

} // namespace orbf
