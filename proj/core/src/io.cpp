#include "optiks/io.hpp"

#include "optiks/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace optiks::io {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr char kWaveformMagic[8] = {'O', 'P', 'T', 'I', 'K', 'S', 'W', 'F'};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> lines_of(const std::string& text) {
    std::vector<std::string_view> out;
    std::string_view v(text);
    std::size_t start = 0;
    while (start <= v.size()) {
        const auto nl = v.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < v.size()) out.push_back(v.substr(start));
            break;
        }
        out.push_back(v.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

// `key=value` attributes of a header line after the tag
std::string_view header_attr(std::string_view header, std::string_view key) {
    for (auto tok : split_ws(header)) {
        if (tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=') {
            return tok.substr(key.size() + 1);
        }
    }
    return {};
}

// first non-blank line must be `# <tag> v1 ...`
std::size_t expect_header(const std::vector<std::string_view>& lines, std::string_view tag, std::string_view* header) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto t = trim(lines[i]);
        if (t.empty()) continue;
        const auto toks = split_ws(t);
        if (toks.size() < 3 || toks[0] != "#" || toks[1] != tag || toks[2] != "v1") {
            fail(i + 1, "expected header '# " + std::string(tag) + " v1'");
        }
        *header = t;
        return i + 1;
    }
    throw Error(ErrorCode::ParseError, "missing '# " + std::string(tag) + " v1' header");
}

// numeric rows after the header; `#` lines and blanks skipped
std::vector<std::vector<double>> numeric_rows(const std::vector<std::string_view>& lines, std::size_t from,
                                              std::size_t width_min, std::size_t width_max) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = from; i < lines.size(); ++i) {
        const auto t = trim(lines[i]);
        if (t.empty() || t[0] == '#') continue;
        const auto toks = split_ws(t);
        if (toks.size() < width_min || toks.size() > width_max) {
            fail(i + 1, "expected " + std::to_string(width_min) + (width_min == width_max ? "" : "-" + std::to_string(width_max)) +
                            " columns, found " + std::to_string(toks.size()));
        }
        std::vector<double> row;
        for (auto tok : toks) {
            try {
                row.push_back(parse_double(tok, "value"));
            } catch (const Error& e) {
                fail(i + 1, e.what());
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Index parse_dims(std::string_view header, std::string_view key) {
    const auto v = header_attr(header, key);
    if (v.empty()) throw Error(ErrorCode::ParseError, "header lacks " + std::string(key) + "=");
    const long long d = parse_integer(v, key);
    if (d < 1 || d > 3) throw Error(ErrorCode::ParseError, std::string(key) + " must be 1, 2 or 3");
    return static_cast<Index>(d);
}

template <typename T>
void put_le(std::string& out, T value) {
    static_assert(std::endian::native == std::endian::little, "binary waveform I/O assumes a little-endian host");
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    return value;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view token, std::string_view what) {
    token = trim(token);
    if (!token.empty() && token[0] == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || r.ec != std::errc() || r.ptr != token.data() + token.size()) {
        throw Error(ErrorCode::ParseError, "invalid number for " + std::string(what) + ": '" + std::string(token) + "'");
    }
    return v;
}

long long parse_integer(std::string_view token, std::string_view what) {
    token = trim(token);
    long long v = 0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || r.ec != std::errc() || r.ptr != token.data() + token.size()) {
        throw Error(ErrorCode::ParseError, "invalid integer for " + std::string(what) + ": '" + std::string(token) + "'");
    }
    return v;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------

ParamCurve parse_trajectory(const std::string& text) {
    const auto lines = lines_of(text);
    std::string_view header;
    const std::size_t from = expect_header(lines, "optiks-trajectory", &header);
    const Index d = parse_dims(header, "dims");
    const auto rows = numeric_rows(lines, from, static_cast<std::size_t>(d) + 1, static_cast<std::size_t>(d) + 1);
    ParamCurve c;
    c.points.resize(static_cast<Index>(rows.size()), d);
    c.params.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        c.params(static_cast<Index>(i)) = rows[i][0];
        for (Index j = 0; j < d; ++j) c.points(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j) + 1];
    }
    c.validate();
    return c;
}

std::string format_trajectory(const ParamCurve& curve) {
    std::string out = "# optiks-trajectory v1 dims=" + std::to_string(curve.dims()) + "\n";
    for (Index i = 0; i < curve.size(); ++i) {
        out += format_double(curve.params(i));
        for (Index j = 0; j < curve.dims(); ++j) out += ' ' + format_double(curve.points(i, j));
        out += '\n';
    }
    return out;
}

ParamCurve read_trajectory(const std::filesystem::path& path) { return parse_trajectory(read_text(path)); }

void write_trajectory(const std::filesystem::path& path, const ParamCurve& curve) {
    write_text(path, format_trajectory(curve));
}

// ---------------------------------------------------------------------------

Waveform parse_waveform_text(const std::string& text) {
    const auto lines = lines_of(text);
    std::string_view header;
    const std::size_t from = expect_header(lines, "optiks-waveform", &header);
    const auto dt_tok = header_attr(header, "dt");
    if (dt_tok.empty()) throw Error(ErrorCode::ParseError, "waveform header lacks dt=");
    const double dt = parse_double(dt_tok, "dt");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::ParseError, "dt must be positive");
    const Index d = parse_dims(header, "axes");
    const auto rows = numeric_rows(lines, from, static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    MatrixXd g(static_cast<Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Index j = 0; j < d; ++j) g(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
    if (!g.allFinite()) throw Error(ErrorCode::ParseError, "waveform values must be finite");
    return Waveform::from_gradient(std::move(g), dt);
}

std::string format_waveform_text(const Waveform& w) {
    std::string out = "# optiks-waveform v1 dt=" + format_double(w.dt) + " axes=" + std::to_string(w.dims()) + "\n";
    for (Index i = 0; i < w.n_t(); ++i) {
        for (Index j = 0; j < w.dims(); ++j) {
            if (j > 0) out += ' ';
            out += format_double(w.g(i, j));
        }
        out += '\n';
    }
    return out;
}

std::string format_waveform_binary(const Waveform& w) {
    std::string out(kWaveformMagic, sizeof(kWaveformMagic));
    put_le<std::uint32_t>(out, 1);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.dims()));
    put_le<double>(out, w.dt);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(w.n_t()));
    for (Index i = 0; i < w.n_t(); ++i) {
        for (Index j = 0; j < w.dims(); ++j) put_le<double>(out, w.g(i, j));
    }
    return out;
}

Waveform parse_waveform_binary(const std::string& bytes) {
    if (bytes.size() < 32 || std::memcmp(bytes.data(), kWaveformMagic, 8) != 0) {
        throw Error(ErrorCode::ParseError, "not an optiks binary waveform");
    }
    const auto version = get_le<std::uint32_t>(bytes, 8);
    const auto dims = get_le<std::uint32_t>(bytes, 12);
    const auto dt = get_le<double>(bytes, 16);
    const auto n = get_le<std::uint64_t>(bytes, 24);
    if (version != 1) throw Error(ErrorCode::ParseError, "unsupported binary waveform version");
    if (dims < 1 || dims > 3) throw Error(ErrorCode::ParseError, "binary waveform axes must be 1, 2 or 3");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::ParseError, "dt must be positive");
    if (n > (bytes.size() - 32) / 8 || bytes.size() != 32 + n * dims * 8) {
        throw Error(ErrorCode::ParseError, "binary waveform length does not match its header");
    }
    MatrixXd g(static_cast<Index>(n), static_cast<Index>(dims));
    std::size_t off = 32;
    for (Index i = 0; i < g.rows(); ++i) {
        for (Index j = 0; j < g.cols(); ++j, off += 8) g(i, j) = get_le<double>(bytes, off);
    }
    if (!g.allFinite()) throw Error(ErrorCode::ParseError, "waveform values must be finite");
    return Waveform::from_gradient(std::move(g), dt);
}

Waveform read_waveform(const std::filesystem::path& path) {
    const std::string data = read_text(path);
    if (data.size() >= 8 && std::memcmp(data.data(), kWaveformMagic, 8) == 0) return parse_waveform_binary(data);
    return parse_waveform_text(data);
}

void write_waveform(const std::filesystem::path& path, const Waveform& w, bool binary) {
    write_text(path, binary ? format_waveform_binary(w) : format_waveform_text(w));
}

// ---------------------------------------------------------------------------

BandSet parse_bands(const std::string& text) {
    const auto rows = numeric_rows(lines_of(text), 0, 2, 2);
    std::vector<std::pair<double, double>> bands;
    for (const auto& r : rows) bands.emplace_back(r[0], r[1]);
    try {
        return BandSet(std::move(bands));
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::string format_bands(const BandSet& bands) {
    std::string out = "# f_lo f_hi (Hz)\n";
    for (const auto& [lo, hi] : bands.bands()) out += format_double(lo) + ' ' + format_double(hi) + '\n';
    return out;
}

BandSet read_bands(const std::filesystem::path& path) { return parse_bands(read_text(path)); }

// ---------------------------------------------------------------------------

Atf parse_atf(const std::string& text) {
    const auto lines = lines_of(text);
    std::string_view header;
    const std::size_t from = expect_header(lines, "optiks-atf", &header);
    Atf atf;
    const auto ref = header_attr(header, "ref_hz");
    if (!ref.empty()) atf.ref_hz = parse_double(ref, "ref_hz");
    const auto rows = numeric_rows(lines, from, 2, 4);
    if (rows.empty()) throw Error(ErrorCode::ParseError, "ATF has no rows");
    const std::size_t width = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != width) throw Error(ErrorCode::ParseError, "ATF rows must have the same column count");
    }
    atf.freq.resize(static_cast<Index>(rows.size()));
    atf.magnitude.resize(static_cast<Index>(rows.size()), static_cast<Index>(width - 1));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        atf.freq(static_cast<Index>(i)) = rows[i][0];
        for (std::size_t j = 1; j < width; ++j) atf.magnitude(static_cast<Index>(i), static_cast<Index>(j - 1)) = rows[i][j];
    }
    try {
        atf.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return atf;
}

std::string format_atf(const Atf& atf) {
    std::string out = "# optiks-atf v1 ref_hz=" + format_double(atf.ref_hz) + "\n";
    for (Index i = 0; i < atf.freq.size(); ++i) {
        out += format_double(atf.freq(i));
        for (Index j = 0; j < atf.dims(); ++j) out += ' ' + format_double(atf.magnitude(i, j));
        out += '\n';
    }
    return out;
}

Atf read_atf(const std::filesystem::path& path) { return parse_atf(read_text(path)); }

void write_atf(const std::filesystem::path& path, const Atf& atf) { write_text(path, format_atf(atf)); }

// ---------------------------------------------------------------------------

PnsModel parse_pns_model(const std::string& text) {
    PnsModel m;
    bool have_r = false, have_c = false, have_a = false;
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto t = trim(lines[i]);
        if (const auto hash = t.find('#'); hash != std::string_view::npos) t = trim(t.substr(0, hash));
        for (auto tok : split_ws(t)) {
            const auto eq = tok.find('=');
            if (eq == std::string_view::npos) fail(i + 1, "expected key=value, got '" + std::string(tok) + "'");
            const auto key = tok.substr(0, eq);
            const double v = parse_double(tok.substr(eq + 1), key);
            bool* seen = nullptr;
            if (key == "r") {
                m.rheobase = v;
                seen = &have_r;
            } else if (key == "c") {
                m.chronaxie = v;
                seen = &have_c;
            } else if (key == "alpha") {
                m.coil_length = v;
                seen = &have_a;
            } else {
                fail(i + 1, "unknown PNS key '" + std::string(key) + "'");
            }
            if (*seen) fail(i + 1, "duplicate PNS key '" + std::string(key) + "'");
            *seen = true;
        }
    }
    if (!have_r) throw Error(ErrorCode::MissingKey, "PNS model lacks r");
    if (!have_c) throw Error(ErrorCode::MissingKey, "PNS model lacks c");
    if (!have_a) throw Error(ErrorCode::MissingKey, "PNS model lacks alpha");
    try {
        m.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return m;
}

std::string format_pns_model(const PnsModel& model) {
    return "r=" + format_double(model.rheobase) + " c=" + format_double(model.chronaxie) +
           " alpha=" + format_double(model.coil_length) + "\n";
}

PnsModel read_pns_model(const std::filesystem::path& path) { return parse_pns_model(read_text(path)); }

// ---------------------------------------------------------------------------

SpectrumFile parse_spectrum(const std::string& text) {
    const auto lines = lines_of(text);
    std::string_view header;
    const std::size_t from = expect_header(lines, "optiks-spectrum", &header);
    const auto rows = numeric_rows(lines, from, 5, 5);
    SpectrumFile s;
    const auto n = static_cast<Index>(rows.size());
    s.freq.resize(n);
    s.pair.input.resize(n);
    s.pair.output.resize(n);
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        s.freq(i) = r[0];
        s.pair.input(i) = {r[1], r[2]};
        s.pair.output(i) = {r[3], r[4]};
    }
    return s;
}

std::string format_spectrum(const SpectrumFile& s) {
    std::string out = "# optiks-spectrum v1\n";
    for (Index i = 0; i < s.freq.size(); ++i) {
        out += format_double(s.freq(i)) + ' ' + format_double(s.pair.input(i).real()) + ' ' +
               format_double(s.pair.input(i).imag()) + ' ' + format_double(s.pair.output(i).real()) + ' ' +
               format_double(s.pair.output(i).imag()) + '\n';
    }
    return out;
}

AtfManifest read_atf_manifest(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    const auto lines = lines_of(text);
    std::string_view header;
    const std::size_t from = expect_header(lines, "optiks-atf-manifest", &header);
    const auto base = path.parent_path();
    AtfManifest m;
    std::vector<double> scale;
    bool have_freq = false;
    for (std::size_t i = from; i < lines.size(); ++i) {
        const auto t = trim(lines[i]);
        if (t.empty() || t[0] == '#') continue;
        const auto toks = split_ws(t);
        if (toks[0] == "ref_hz") {
            if (toks.size() != 2) fail(i + 1, "ref_hz takes one value");
            m.ref_hz = parse_double(toks[1], "ref_hz");
        } else if (toks[0] == "ref_scale") {
            if (toks.size() < 2 || toks.size() > 4) fail(i + 1, "ref_scale takes one value per axis");
            scale.clear();
            for (std::size_t j = 1; j < toks.size(); ++j) scale.push_back(parse_double(toks[j], "ref_scale"));
        } else if (toks[0] == "pair") {
            if (toks.size() != 3) fail(i + 1, "pair takes an axis and a file");
            const long long axis = parse_integer(toks[1], "axis");
            if (axis < 0 || axis > 2) fail(i + 1, "axis must be 0, 1 or 2");
            SpectrumFile s = parse_spectrum(read_text(base / std::string(toks[2])));
            if (!have_freq) {
                m.freq = s.freq;
                have_freq = true;
            } else if (s.freq.size() != m.freq.size() || (s.freq - m.freq).cwiseAbs().maxCoeff() > 0.0) {
                fail(i + 1, "spectrum files must share one frequency grid");
            }
            if (m.axes.size() <= static_cast<std::size_t>(axis)) m.axes.resize(static_cast<std::size_t>(axis) + 1);
            m.axes[static_cast<std::size_t>(axis)].push_back(std::move(s.pair));
        } else {
            fail(i + 1, "unknown manifest entry '" + std::string(toks[0]) + "'");
        }
    }
    if (m.axes.empty()) throw Error(ErrorCode::ParseError, "manifest lists no spectrum pairs");
    for (std::size_t a = 0; a < m.axes.size(); ++a) {
        if (m.axes[a].empty()) throw Error(ErrorCode::ParseError, "axis " + std::to_string(a) + " has no spectrum pairs");
    }
    if (!scale.empty()) {
        if (scale.size() != m.axes.size()) throw Error(ErrorCode::ParseError, "ref_scale needs one value per axis");
        m.reference = AtfReference{m.ref_hz, scale};
    }
    return m;
}

std::string format_columns(const std::string& header, const std::vector<const VectorXd*>& columns) {
    std::string out = "# " + header + "\n";
    const Index n = columns.empty() ? 0 : columns.front()->size();
    for (const auto* c : columns) {
        if (c->size() != n) throw Error(ErrorCode::ShapeMismatch, "columns differ in length");
    }
    for (Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j > 0) out += ' ';
            out += format_double((*columns[j])(i));
        }
        out += '\n';
    }
    return out;
}

}  // namespace optiks::io
