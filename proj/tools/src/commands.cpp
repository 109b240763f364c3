#include "commands.hpp"

#include "optiks/optiks.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace optiks::cli {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::VectorXd;

namespace {

bool bad_input(ErrorCode c) {
    switch (c) {
        case ErrorCode::ParseError:
        case ErrorCode::IoError:
        case ErrorCode::MissingKey:
        case ErrorCode::InvalidParams:
        case ErrorCode::UnsupportedKind:
        case ErrorCode::NoActiveTerms:
        case ErrorCode::NyquistViolation:
        case ErrorCode::AxisCountMismatch:
        case ErrorCode::NonMonotonicParams:
        case ErrorCode::DegenerateCurve:
        case ErrorCode::EmptyBandSet:
        case ErrorCode::NonTwoDimensional:
            return true;
        default:
            return false;
    }
}

CommandOutcome from_error(const Error& e) {
    CommandOutcome o;
    o.exit_code = bad_input(e.code()) ? BadInput : Failed;
    o.summary = std::string("error: ") + e.what();
    return o;
}

template <class F>
CommandOutcome guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return from_error(e);
    } catch (const std::exception& e) {
        CommandOutcome o;
        o.exit_code = BadInput;
        o.summary = std::string("error: ") + e.what();
        return o;
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::string check_line(const char* name, const LimitCheck& c) {
    std::string s = std::string(name) + " " + io::format_double(c.value);
    if (c.checked) {
        s += " limit " + io::format_double(c.limit) + " margin " + io::format_double(1.0 - c.utilization()) +
             (c.pass ? " pass" : " FAIL");
    } else {
        s += " unchecked";
    }
    return s + "\n";
}

std::string format_report(const LimitReport& r) {
    return "# optiks-limits v1\n" + check_line("gradient", r.gradient) + check_line("slew", r.slew) +
           check_line("pns", r.pns) + check_line("duration", r.duration) +
           std::string("overall ") + (r.pass() ? "pass" : "FAIL") + "\n";
}

ParamCurve load_curve(const config::DesignConfig& cfg, const std::optional<fs::path>& flag) {
    if (flag) return io::read_trajectory(*flag);
    if (cfg.trajectory_file) return io::read_trajectory(*cfg.trajectory_file);
    if (cfg.generator) return gen_trajectory(config::make_trajectory_params(*cfg.generator));
    throw Error(ErrorCode::MissingKey, "[files] trajectory (or a [trajectory] section, or --trajectory)");
}

ArcCurve make_arc(const ParamCurve& curve, const DesignSpec& spec) {
    if (spec.arc_samples > 0) return arclength_reparam(curve, spec.arc_samples);
    return arclength_reparam(curve, spec.hw, spec.arc_oversampling);
}

}  // namespace

CommandOutcome cmd_design(const DesignArgs& a) {
    return guarded([&] {
        config::DesignConfig cfg = config::load_design_config(a.config);
        if (a.seed) cfg.spec.solver.seed = *a.seed;
        const ParamCurve curve = load_curve(cfg, a.trajectory);
        const ArcCurve arc = make_arc(curve, cfg.spec);

        DesignResult r;
        try {
            r = run_design(arc, cfg.spec);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InfeasibleGrid || e.code() == ErrorCode::RasterTooCoarse) {
                CommandOutcome o;
                o.exit_code = Failed;
                o.summary = std::string("infeasible: ") + e.what();
                return o;
            }
            throw;
        }

        ensure_dir(a.out);
        CommandOutcome o;
        const fs::path wf = a.out / (a.binary ? "waveform.bin" : "waveform.txt");
        io::write_waveform(wf, r.waveform, a.binary);
        o.artifacts.push_back(wf);

        const fs::path sp = a.out / "speed.txt";
        io::write_text(sp, io::format_columns("s v xi", {&r.s, &r.v, &r.xi}));
        o.artifacts.push_back(sp);

        const auto n = static_cast<Index>(r.loss_trace.size());
        VectorXd it(n), loss(n), best(n);
        for (Index i = 0; i < n; ++i) {
            it(i) = static_cast<double>(i);
            loss(i) = r.loss_trace[static_cast<std::size_t>(i)];
            best(i) = r.best_trace[static_cast<std::size_t>(i)];
        }
        const fs::path lt = a.out / "loss.txt";
        io::write_text(lt, io::format_columns("iteration loss best", {&it, &loss, &best}));
        o.artifacts.push_back(lt);

        std::string report = format_report(r.report);
        report += "iterations " + std::to_string(r.iterations) + "\nbest_iteration " +
                  std::to_string(r.best_iteration) + "\nconverged " + (r.converged ? "yes" : "no") + "\nseed " +
                  std::to_string(cfg.spec.solver.seed) + "\n";
        const fs::path rp = a.out / "report.txt";
        io::write_text(rp, report);
        o.artifacts.push_back(rp);

        std::ostringstream s;
        s << "duration " << io::format_double(r.waveform.duration()) << " s (" << r.waveform.n_t() << " samples)\n"
          << "gradient margin " << io::format_double(1.0 - r.report.gradient.utilization()) << "\n"
          << "slew margin " << io::format_double(1.0 - r.report.slew.utilization()) << "\n";
        if (r.report.pns.checked) s << "pns margin " << io::format_double(1.0 - r.report.pns.utilization()) << "\n";
        if (r.report.duration.checked) {
            s << "duration margin " << io::format_double(1.0 - r.report.duration.utilization()) << "\n";
        }
        s << (r.feasible ? "feasible" : "INFEASIBLE: limits violated beyond tolerance");
        o.summary = s.str();
        o.exit_code = r.feasible ? Ok : Failed;
        return o;
    });
}

CommandOutcome cmd_analyze(const AnalyzeArgs& a) {
    return guarded([&] {
        const Waveform w = io::read_waveform(a.waveform);
        config::DesignConfig cfg;
        if (a.config) cfg = config::load_design_config(*a.config);
        const DesignSpec& spec = cfg.spec;
        std::vector<std::string> checks = a.checks;
        if (checks.empty()) checks.push_back("limits");

        ensure_dir(a.out);
        CommandOutcome o;
        std::ostringstream s;
        bool failed = false;
        for (const std::string& c : checks) {
            if (c == "limits") {
                std::optional<IecPnsModel> pns;
                if (cfg.pns_model) pns.emplace(*cfg.pns_model);
                const LimitReport r = verify_limits(w, spec.hw, pns ? &*pns : nullptr, spec.objective.p_max,
                                                    spec.objective.t_max);
                const fs::path p = a.out / "limits.txt";
                io::write_text(p, format_report(r));
                o.artifacts.push_back(p);
                s << "limits " << (r.pass() ? "pass" : "FAIL") << "\n";
                failed = failed || !r.pass();
            } else if (c == "spectrum") {
                const BandSet* bands = spec.objective.bands ? &*spec.objective.bands : nullptr;
                const SpectrumReport r = power_spectrum(w, bands);
                std::vector<VectorXd> cols;
                cols.reserve(static_cast<std::size_t>(w.dims()));
                std::string header = "f";
                for (Index d = 0; d < w.dims(); ++d) {
                    cols.emplace_back(r.magnitude.col(d));
                    header += " |G" + std::to_string(d) + "|";
                }
                std::vector<const VectorXd*> ptrs{&r.freq};
                for (const auto& col : cols) ptrs.push_back(&col);
                const fs::path p = a.out / "spectrum.txt";
                io::write_text(p, io::format_columns(header, ptrs));
                o.artifacts.push_back(p);
                std::string bt = "# optiks-band-power v1\n";
                for (const auto& b : r.bands) {
                    bt += io::format_double(b.f_lo) + " " + io::format_double(b.f_hi) + " " +
                          io::format_double(b.power) + "\n";
                }
                bt += "total " + io::format_double(r.total_power) + "\n";
                const fs::path pb = a.out / "band_power.txt";
                io::write_text(pb, bt);
                o.artifacts.push_back(pb);
                s << "spectrum total power " << io::format_double(r.total_power);
                if (!r.bands.empty()) s << ", in band " << io::format_double(r.band_total());
                s << "\n";
            } else if (c == "fidelity") {
                if (!a.trajectory) throw Error(ErrorCode::MissingKey, "--trajectory (required by --check fidelity)");
                // dense reference: one arc sample per input sample, at least
                const ParamCurve curve = io::read_trajectory(*a.trajectory);
                const ArcCurve arc = arclength_reparam(
                    curve, std::max(curve.size(), default_arc_samples(polyline_length(curve), spec.hw, 64.0)));
                const FidelityReport r = kspace_fidelity(w, arc, spec.hw.gamma_bar);
                const double tol = 1e-3 * arc.max_radius();
                const fs::path p = a.out / "fidelity.txt";
                io::write_text(p, io::format_columns("deviation", {&r.deviation}));
                o.artifacts.push_back(p);
                const bool ok = r.max_deviation <= tol;
                s << "fidelity max " << io::format_double(r.max_deviation) << " limit " << io::format_double(tol)
                  << (ok ? " pass" : " FAIL") << "\n";
                failed = failed || !ok;
            } else if (c == "psf") {
                const PsfResult r = psf_simulate(w, spec.hw.gamma_bar, PsfConfig{});
                std::ostringstream m;
                m << "# optiks-psf v1 pixel=" << io::format_double(r.pixel) << "\n";
                for (Index i = 0; i < r.magnitude.rows(); ++i) {
                    for (Index j = 0; j < r.magnitude.cols(); ++j) {
                        m << (j ? " " : "") << io::format_double(r.magnitude(i, j));
                    }
                    m << "\n";
                }
                const fs::path p = a.out / "psf.txt";
                io::write_text(p, m.str());
                o.artifacts.push_back(p);
                s << "psf fwhm " << io::format_double(r.fwhm_x) << " x " << io::format_double(r.fwhm_y) << " m\n";
            } else {
                throw Error(ErrorCode::InvalidParams, "unknown check '" + c + "' (limits|spectrum|fidelity|psf)");
            }
        }
        o.summary = s.str();
        if (!o.summary.empty()) o.summary.pop_back();
        o.exit_code = failed ? Failed : Ok;
        return o;
    });
}

CommandOutcome cmd_fit_atf(const FitAtfArgs& a) {
    return guarded([&] {
        const io::AtfManifest m = io::read_atf_manifest(a.manifest);
        Atf atf = fit_atf(m.freq, m.axes, m.reference);
        atf.ref_hz = m.ref_hz;
        CommandOutcome o;
        const auto usable = usable_bins(atf);
        std::ostringstream s;
        bool empty_axis = false;
        for (std::size_t d = 0; d < usable.size(); ++d) {
            s << "axis " << d << ": " << usable[d] << " usable bins\n";
            empty_axis = empty_axis || usable[d] == 0;
        }
        if (empty_axis) {
            o.exit_code = Failed;
            o.summary = s.str() + "an axis has no usable bins; nothing written";
            return o;
        }
        if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
        io::write_atf(a.out, atf);
        o.artifacts.push_back(a.out);
        o.summary = s.str() + "wrote " + a.out.string();
        return o;
    });
}

CommandOutcome cmd_gen(const GenArgs& a) {
    return guarded([&] {
        CommandOutcome o;
        if (a.probes) {
            ensure_dir(a.out);
            const auto freqs = probe_frequencies(a.probe);
            const auto waves = gen_probe_waveforms(a.probe);
            for (std::size_t i = 0; i < waves.size(); ++i) {
                const fs::path p = a.out / ("probe_" + io::format_double(freqs[i]) + "hz.txt");
                io::write_waveform(p, waves[i]);
                o.artifacts.push_back(p);
            }
            o.summary = "wrote " + std::to_string(waves.size()) + " probe waveforms to " + a.out.string();
            return o;
        }
        config::GeneratorSettings g = a.generator;
        if (a.config) {
            const config::DesignConfig cfg = config::load_design_config(*a.config);
            if (!cfg.generator) throw Error(ErrorCode::MissingKey, "[trajectory] kind");
            const config::GeneratorSettings& c = *cfg.generator;
            // flags override the file
            if (g.kind.empty()) g.kind = c.kind;
            if (!g.fov) g.fov = c.fov;
            if (!g.resolution) g.resolution = c.resolution;
            if (!g.interleaves) g.interleaves = c.interleaves;
            if (!g.density_start) g.density_start = c.density_start;
            if (!g.density_end) g.density_end = c.density_end;
            if (!g.petals) g.petals = c.petals;
            if (!g.undersampling) g.undersampling = c.undersampling;
            if (!g.point_spacing) g.point_spacing = c.point_spacing;
        }
        if (g.kind.empty()) throw Error(ErrorCode::MissingKey, "--kind (or [trajectory] kind in --config)");
        const ParamCurve curve = gen_trajectory(config::make_trajectory_params(g));
        if (a.out.has_parent_path()) ensure_dir(a.out.parent_path());
        io::write_trajectory(a.out, curve);
        o.artifacts.push_back(a.out);
        o.summary = "wrote " + std::to_string(curve.size()) + " samples (" + g.kind + ", length " +
                    io::format_double(polyline_length(curve)) + " cycles/m) to " + a.out.string();
        return o;
    });
}

int run(int argc, char** argv) {
    CLI::App app{"optiks: gradient waveform design along prescribed k-space trajectories"};
    app.require_subcommand(1);

    DesignArgs design;
    std::uint64_t seed = 0;
    auto* d = app.add_subcommand("design", "optimize the traversal speed for a config");
    d->add_option("--config", design.config, "design config (INI)")->required();
    d->add_option("--trajectory", design.trajectory, "trajectory file (overrides the config)");
    d->add_option("--out", design.out, "output directory");
    auto* seed_opt = d->add_option("--seed", seed, "solver seed (recorded; the solver is deterministic)");
    d->add_flag("--binary", design.binary, "write the waveform in the binary format");

    AnalyzeArgs analyze;
    auto* an = app.add_subcommand("analyze", "check limits, spectrum, fidelity or PSF of a waveform");
    an->add_option("waveform", analyze.waveform, "waveform file")->required();
    an->add_option("--config", analyze.config, "config supplying limits, PNS model and bands");
    an->add_option("--trajectory", analyze.trajectory, "prescribed trajectory (fidelity check)");
    an->add_option("--out", analyze.out, "report directory");
    an->add_option("--check", analyze.checks, "limits | spectrum | fidelity | psf (repeatable)");

    FitAtfArgs fit;
    auto* fa = app.add_subcommand("fit-atf", "fit acoustic transfer functions from a measurement manifest");
    fa->add_option("manifest", fit.manifest, "manifest file")->required();
    fa->add_option("--out", fit.out, "output ATF file");

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate a trajectory or probe waveforms");
    g->add_option("--config", gen.config, "config with a [trajectory] section");
    g->add_option("--out", gen.out, "output file (directory with --probes)");
    g->add_option("--kind", gen.generator.kind, "spiral | rosette | cepi");
    g->add_option("--fov", gen.generator.fov, "field of view, m");
    g->add_option("--resolution", gen.generator.resolution, "resolution, m");
    g->add_option("--interleaves", gen.generator.interleaves, "spiral interleaves");
    g->add_option("--density-start", gen.generator.density_start, "undersampling at the center");
    g->add_option("--density-end", gen.generator.density_end, "undersampling at the edge");
    g->add_option("--petals", gen.generator.petals, "rosette petals");
    g->add_option("--undersampling", gen.generator.undersampling, "CEPI phase-encode undersampling");
    g->add_option("--point-spacing", gen.generator.point_spacing, "max sample spacing, cycles/m");
    g->add_flag("--probes", gen.probes, "write sinusoidal probe waveforms instead");
    g->add_option("--axis", gen.probe.axis, "probe axis");
    g->add_option("--f-lo", gen.probe.f_lo, "first probe frequency, Hz");
    g->add_option("--f-hi", gen.probe.f_hi, "last probe frequency, Hz");
    g->add_option("--f-step", gen.probe.step, "probe frequency step, Hz");
    g->add_option("--amplitude", gen.probe.amplitude, "probe amplitude, T/m");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : BadInput;
    }
    if (*seed_opt) design.seed = seed;

    CommandOutcome o;
    if (*d) o = cmd_design(design);
    else if (*an) o = cmd_analyze(analyze);
    else if (*fa) o = cmd_fit_atf(fit);
    else o = cmd_gen(gen);

    (o.exit_code == Ok ? std::cout : std::cerr) << o.summary << "\n";
    for (const auto& p : o.artifacts) std::cout << "  " << p.string() << "\n";
    return o.exit_code;
}

}  // namespace optiks::cli
