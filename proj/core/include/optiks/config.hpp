#pragma once

#include "optiks/geometry.hpp"
#include "optiks/pns.hpp"
#include "optiks/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace optiks::config {

/// INI document: `[section]` headers, `key = value` lines, `#` or `;` comments
/// (whole-line, or after whitespace at the end of a value). Keys are unique
/// within a section; anything before the first section is an error.
struct IniValue {
    std::string text;
    std::size_t line = 0;
};
using IniSection = std::map<std::string, IniValue>;
using IniDocument = std::map<std::string, IniSection>;

IniDocument parse_ini(const std::string& text);

/// Generator settings, shared by the `[trajectory]` section and CLI flags.
struct GeneratorSettings {
    std::string kind;  // spiral | rosette | cepi
    std::optional<double> fov;
    std::optional<double> resolution;
    std::optional<long long> interleaves;
    std::optional<double> density_start;
    std::optional<double> density_end;
    std::optional<long long> petals;
    std::optional<double> undersampling;
    std::optional<double> point_spacing;
};

/// Throws UnsupportedKind / InvalidParams.
TrajectoryParams make_trajectory_params(const GeneratorSettings& g);

struct DesignConfig {
    DesignSpec spec;
    std::optional<PnsModel> pns_model;
    std::optional<std::filesystem::path> trajectory_file;
    std::optional<GeneratorSettings> generator;
};

/// Sections [hardware], [objective], [barriers], [solver], [files] and an optional
/// [trajectory]. Unknown sections or keys are ParseError; file paths resolve
/// against `base_dir`; missing data for an active term is MissingKey naming the key.
DesignConfig parse_design_config(const std::string& text, const std::filesystem::path& base_dir);
DesignConfig load_design_config(const std::filesystem::path& path);

}  // namespace optiks::config
