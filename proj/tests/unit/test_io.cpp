#include <doctest.h>

#include "support.hpp"

#include <filesystem>
#include <random>

using namespace optiks;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    return MatrixXd::NullaryExpr(r, c, [&] { return nd(rng) * std::pow(10.0, static_cast<int>(nd(rng) * 3)); });
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidParams;
}

}  // namespace

TEST_CASE("doubles print in shortest round-trip form") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 4e-6, 5e-324}) {
        CHECK(io::parse_double(io::format_double(x), "x") == x);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(code_of([] { io::parse_double("1.5x", "v"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { io::parse_integer("2.0", "n"); }) == ErrorCode::ParseError);
}

TEST_CASE("waveform text and binary round trips are bit exact") {
    const Waveform w = Waveform::from_gradient(random_matrix(37, 3, 1), 4e-6);
    const Waveform a = io::parse_waveform_text(io::format_waveform_text(w));
    CHECK(a.dt == w.dt);
    CHECK(a.g == w.g);
    CHECK(a.slew == w.slew);
    const std::string bytes = io::format_waveform_binary(w);
    CHECK(bytes.size() == 8 + 4 + 4 + 8 + 8 + 37 * 3 * 8);
    CHECK(bytes.substr(0, 8) == "OPTIKSWF");
    const Waveform b = io::parse_waveform_binary(bytes);
    CHECK(b.g == w.g);
    CHECK(b.dt == w.dt);
    CHECK(code_of([&] { io::parse_waveform_binary(bytes.substr(0, bytes.size() - 3)); }) == ErrorCode::ParseError);

    const auto dir = std::filesystem::temp_directory_path() / "optiks_io_test";
    std::filesystem::create_directories(dir);
    io::write_waveform(dir / "w.bin", w, true);
    io::write_waveform(dir / "w.txt", w, false);
    CHECK(io::read_waveform(dir / "w.bin").g == w.g);
    CHECK(io::read_waveform(dir / "w.txt").g == w.g);
    CHECK(code_of([&] { io::read_waveform(dir / "missing.txt"); }) == ErrorCode::IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("waveform text rejects malformed input") {
    CHECK(code_of([] { io::parse_waveform_text("1 2\n3 4\n"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { io::parse_waveform_text("# optiks-waveform v1 dt=4e-6 axes=2\n1 2\n3\n"); }) ==
          ErrorCode::ParseError);
    CHECK(code_of([] { io::parse_waveform_text("# optiks-waveform v1 dt=4e-6 axes=2\n1 nope\n"); }) ==
          ErrorCode::ParseError);
}

TEST_CASE("trajectory round trip") {
    ParamCurve c;
    c.points = random_matrix(20, 2, 2);
    c.params = VectorXd::LinSpaced(20, 0.0, 1.9) * (1.0 / 3.0);
    const ParamCurve r = io::parse_trajectory(io::format_trajectory(c));
    CHECK(r.points == c.points);
    CHECK(r.params == c.params);
}

TEST_CASE("bands, ATF, PNS model and spectrum round trips") {
    const BandSet bands({{550.0, 650.0}, {1100.0, 1300.5}});
    CHECK(io::parse_bands(io::format_bands(bands)).bands() == bands.bands());
    CHECK(code_of([] { io::parse_bands("500 400\n"); }) == ErrorCode::ParseError);

    Atf atf;
    atf.freq = VectorXd::LinSpaced(5, 100.0, 500.0);
    atf.magnitude = random_matrix(5, 2, 3).cwiseAbs();
    atf.magnitude(2, 1) = std::numeric_limits<double>::quiet_NaN();
    atf.ref_hz = 300.0;
    Atf a = io::parse_atf(io::format_atf(atf));
    CHECK(a.freq == atf.freq);
    CHECK(a.ref_hz == atf.ref_hz);
    CHECK(std::isnan(a.magnitude(2, 1)));
    a.magnitude(2, 1) = 0.0;  // NaN != NaN; compare the rest
    Atf b = atf;
    b.magnitude(2, 1) = 0.0;
    CHECK(a.magnitude == b.magnitude);

    const PnsModel m{20.0, 360e-6, 0.333};
    const PnsModel p = io::parse_pns_model(io::format_pns_model(m));
    CHECK(p.rheobase == m.rheobase);
    CHECK(p.chronaxie == m.chronaxie);
    CHECK(p.coil_length == m.coil_length);
    CHECK(code_of([] { io::parse_pns_model("r=20 c=0.00036\n"); }) == ErrorCode::MissingKey);

    io::SpectrumFile s;
    s.freq = VectorXd::LinSpaced(4, 10.0, 40.0);
    s.pair.input = Eigen::VectorXcd::Random(4);
    s.pair.output = Eigen::VectorXcd::Random(4);
    const io::SpectrumFile t = io::parse_spectrum(io::format_spectrum(s));
    CHECK(t.freq == s.freq);
    CHECK(t.pair.input == s.pair.input);
    CHECK(t.pair.output == s.pair.output);
}

TEST_CASE("design config: defaults, unknown keys, missing keys") {
    const auto cfg = config::parse_design_config("[hardware]\ng_max = 0.05\n", ".");
    CHECK(cfg.spec.hw.g_max == 0.05);
    CHECK(cfg.spec.objective.weights.time == 1e4);
    CHECK(cfg.spec.objective.weights.slew == 1e2);
    CHECK(code_of([] { config::parse_design_config("[hardware]\ng_maxx = 1\n", "."); }) == ErrorCode::ParseError);
    CHECK(code_of([] { config::parse_design_config("[bogus]\n", "."); }) == ErrorCode::ParseError);
    CHECK(code_of([] { config::parse_design_config("g_max = 1\n", "."); }) == ErrorCode::ParseError);
    try {
        config::parse_design_config("[objective]\nlambda_pns = 10\np_max = 80\n", ".");
        FAIL("expected MissingKey");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingKey);
        CHECK(std::string(e.what()).find("pns_model") != std::string::npos);
    }
    CHECK(code_of([] { config::parse_design_config("[trajectory]\nkind = hexagon\n", "."); }) ==
          ErrorCode::UnsupportedKind);
    CHECK(code_of([] { config::parse_design_config("[trajectory]\nfov = 0.2\n", "."); }) == ErrorCode::MissingKey);
}

TEST_CASE("shipped configs load") {
    for (const char* name : {"pns_spiral.ini", "band_spiral.ini", "mrf_bound.ini"}) {
        CAPTURE(name);
        const auto cfg = config::load_design_config(std::filesystem::path(OPTIKS_CONFIG_DIR) / name);
        CHECK(cfg.generator.has_value());
    }
}
