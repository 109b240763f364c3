#pragma once

#include "optiks/analysis.hpp"
#include "optiks/geometry.hpp"
#include "optiks/losses.hpp"
#include "optiks/pipeline.hpp"
#include "optiks/pns.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace optiks::io {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
/// Whole-token parse; throws ParseError naming `what`.
double parse_double(std::string_view token, std::string_view what);
long long parse_integer(std::string_view token, std::string_view what);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& contents);

// `# optiks-trajectory v1 dims=D`, rows `p k_1 .. k_D`
ParamCurve parse_trajectory(const std::string& text);
std::string format_trajectory(const ParamCurve& curve);
ParamCurve read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const ParamCurve& curve);

// `# optiks-waveform v1 dt=<s> axes=D`, rows `g_1 .. g_D`
Waveform parse_waveform_text(const std::string& text);
std::string format_waveform_text(const Waveform& w);

/// Little-endian binary: 8-byte magic "OPTIKSWF", u32 version (1), u32 axes,
/// f64 dt, u64 n_t, then n_t*axes f64 values row by row.
std::string format_waveform_binary(const Waveform& w);
Waveform parse_waveform_binary(const std::string& bytes);

/// Picks the binary or text reader by content.
Waveform read_waveform(const std::filesystem::path& path);
void write_waveform(const std::filesystem::path& path, const Waveform& w, bool binary = false);

// lines `f_lo f_hi` in Hz
BandSet parse_bands(const std::string& text);
std::string format_bands(const BandSet& bands);
BandSet read_bands(const std::filesystem::path& path);

// `# optiks-atf v1 ref_hz=<Hz>`, rows `f A_1 .. A_D` (nan = missing)
Atf parse_atf(const std::string& text);
std::string format_atf(const Atf& atf);
Atf read_atf(const std::filesystem::path& path);
void write_atf(const std::filesystem::path& path, const Atf& atf);

// `r=<T/s> c=<s> alpha=<m>`
PnsModel parse_pns_model(const std::string& text);
std::string format_pns_model(const PnsModel& model);
PnsModel read_pns_model(const std::filesystem::path& path);

/// `# optiks-spectrum v1`, rows `f re(I) im(I) re(O) im(O)`.
struct SpectrumFile {
    Eigen::VectorXd freq;
    SpectrumPair pair;
};
SpectrumFile parse_spectrum(const std::string& text);
std::string format_spectrum(const SpectrumFile& s);

/// ATF fit manifest:
///   `# optiks-atf-manifest v1`
///   `ref_hz <Hz>`                      (optional, default 1000)
///   `ref_scale <a_1> .. <a_D>`         (optional)
///   `pair <axis> <spectrum file>`      (one or more; paths relative to the manifest)
struct AtfManifest {
    Eigen::VectorXd freq;
    std::vector<std::vector<SpectrumPair>> axes;
    std::optional<AtfReference> reference;
    double ref_hz = 1000.0;
};
AtfManifest read_atf_manifest(const std::filesystem::path& path);

/// Whitespace-separated numeric columns with a `#` header line.
std::string format_columns(const std::string& header, const std::vector<const Eigen::VectorXd*>& columns);

}  // namespace optiks::io
