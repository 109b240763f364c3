#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "optiks/analysis.hpp"
#include "optiks/config.hpp"

namespace optiks::cli {

enum Exit : int { Ok = 0, Failed = 1, BadInput = 2 };

struct CommandOutcome {
    int exit_code = Ok;
    std::vector<std::filesystem::path> artifacts;
    std::string summary;
};

struct DesignArgs {
    std::filesystem::path config;
    std::optional<std::filesystem::path> trajectory;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    bool binary = false;
};

struct AnalyzeArgs {
    std::filesystem::path waveform;
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> trajectory;
    std::filesystem::path out = ".";
    std::vector<std::string> checks;  // limits | spectrum | fidelity | psf
};

struct FitAtfArgs {
    std::filesystem::path manifest;
    std::filesystem::path out = "atf.txt";
};

struct GenArgs {
    std::optional<std::filesystem::path> config;
    config::GeneratorSettings generator;  // kind empty => taken from the config
    std::filesystem::path out = "trajectory.txt";
    bool probes = false;
    ProbeConfig probe;
};

CommandOutcome cmd_design(const DesignArgs& a);
CommandOutcome cmd_analyze(const AnalyzeArgs& a);
CommandOutcome cmd_fit_atf(const FitAtfArgs& a);
CommandOutcome cmd_gen(const GenArgs& a);

/// Parses argv and dispatches; prints the summary and returns the exit code.
int run(int argc, char** argv);

}  // namespace optiks::cli
