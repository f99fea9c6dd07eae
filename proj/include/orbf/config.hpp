#pragma once

#include "orbf/data.hpp"
#include "orbf/featsel.hpp"
#include "orbf/rbfnet.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace orbf {

enum class DataSource { Csv, JumpDiffusion, Ar1, RegimeFlip };
enum class RwMode { LastValue, Zero };

std::string_view to_string(DataSource s);
std::string_view to_string(RwMode m);
RwMode parse_rw_mode(std::string_view text);

/// Shared knobs for the synthetic generators; each generator reads the
/// fields it needs.
struct SyntheticSpec {
    std::size_t n = 1300;
    std::size_t instruments = 10;
    std::uint64_t seed = 0;
    double drift = 0.0;
    double vol = 0.01;
    double jump_intensity = 0.0;
    double jump_scale = 0.05;
    double initial_price = 100.0;
    double ar_coefficient = 0.6;
    std::size_t flip_row = 974;
    double coefficient_before = 1.0;
    double coefficient_after = -1.0;
    double noise_vol = 0.002;

    JumpDiffusionSpec jump_diffusion() const;
    Ar1PanelSpec ar1() const;
    RegimeFlipSpec regime_flip() const;
};

struct ExperimentConfig {
    DataSource source = DataSource::JumpDiffusion;
    std::filesystem::path data_path;
    std::vector<std::string> targets;  // empty: every instrument
    SyntheticSpec synth;

    ReturnKind returns = ReturnKind::Log;
    SplitSpec split;
    std::vector<std::size_t> horizons = default_horizons();
    std::vector<std::string> models = {"rw", "ridge", "ewrls", "rbfnet"};
    RwMode rw_mode = RwMode::LastValue;

    SelectionConfig selection;
    bool own_lag = true;  // the target's own return is a candidate input

    RbfNetConfig rbfnet;
    double ewrls_tau = 0.99;
    double ewrls_delta = 1.0;
    double ridge_lambda = 1.0;

    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::filesystem::path output_dir = "out";

    static std::vector<std::size_t> default_horizons();

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

inline const std::vector<std::string>& known_models() {
    static const std::vector<std::string> names = {"rw", "ridge", "ewrls", "rbfnet"};
    return names;
}

/// Sets one key (dotted path) from its textual value.
void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Applies a "key=value" override.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

/// Parses "key = value" lines; "[section]" prefixes later keys with
/// "section."; '#' starts a comment. Errors carry source, line and key.
ExperimentConfig parse_config(std::istream& in, std::string_view source = "<config>",
                              ExperimentConfig base = {});
/// Reads a config file; a relative data.path resolves against the file.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes every key with its effective value, loadable by parse_config.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

/// Key names with one-line descriptions, for --help output.
std::vector<std::pair<std::string, std::string>> config_schema();

} // namespace orbf
