#include "optiks/config.hpp"

#include "optiks/error.hpp"
#include "optiks/io.hpp"

#include <set>

namespace optiks::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"hardware", {"g_max", "s_max", "dt", "gamma_bar"}},
        {"objective",
         {"lambda_time", "lambda_bound_time", "lambda_slew", "lambda_pns", "lambda_band", "lambda_acoustic", "t_max",
          "p_max"}},
        {"barriers", {"delta_slew", "delta_pns", "delta_time"}},
        {"solver",
         {"init_derate", "step_size", "beta1", "beta2", "epsilon", "max_iterations", "terminal", "seed",
          "convergence_window", "convergence_tol", "arc_oversampling", "arc_samples"}},
        {"files", {"trajectory", "pns_model", "bands", "atf"}},
        {"trajectory",
         {"kind", "fov", "resolution", "interleaves", "density_start", "density_end", "petals", "undersampling",
          "point_spacing"}},
    };
    return s;
}

class Reader {
public:
    explicit Reader(const IniDocument& doc) : doc_(doc) {}

    const IniValue* find(const std::string& section, const std::string& key) const {
        const auto s = doc_.find(section);
        if (s == doc_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    void number(const std::string& section, const std::string& key, double& out) const {
        if (const auto* v = find(section, key)) out = parse(*v, section, key);
    }
    void number(const std::string& section, const std::string& key, std::optional<double>& out) const {
        if (const auto* v = find(section, key)) out = parse(*v, section, key);
    }
    void integer(const std::string& section, const std::string& key, std::optional<long long>& out) const {
        if (const auto* v = find(section, key)) out = parse_int(*v, section, key);
    }
    long long parse_int(const IniValue& v, const std::string& section, const std::string& key) const {
        try {
            return io::parse_integer(v.text, "[" + section + "] " + key);
        } catch (const Error& e) {
            fail(v.line, e.what());
        }
    }

private:
    double parse(const IniValue& v, const std::string& section, const std::string& key) const {
        try {
            return io::parse_double(v.text, "[" + section + "] " + key);
        } catch (const Error& e) {
            fail(v.line, e.what());
        }
    }
    const IniDocument& doc_;
};

}  // namespace

IniDocument parse_ini(const std::string& text) {
    IniDocument doc;
    std::string current;
    bool in_section = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string raw = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) fail(line_no, "empty section name");
            if (doc.count(current) != 0) fail(line_no, "duplicate section [" + current + "]");
            doc[current];
            in_section = true;
            continue;
        }
        if (!in_section) fail(line_no, "key outside of any section");
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = line.substr(eq + 1);
        for (std::size_t i = 0; i < value.size(); ++i) {
            if ((value[i] == '#' || value[i] == ';') && (i == 0 || value[i - 1] == ' ' || value[i - 1] == '\t')) {
                value.resize(i);
                break;
            }
        }
        value = trim(value);
        if (key.empty()) fail(line_no, "empty key");
        if (value.empty()) fail(line_no, "empty value for '" + key + "'");
        auto& sec = doc[current];
        if (sec.count(key) != 0) fail(line_no, "duplicate key '" + key + "' in [" + current + "]");
        sec[key] = IniValue{value, line_no};
    }
    return doc;
}

TrajectoryParams make_trajectory_params(const GeneratorSettings& g) {
    auto positive = [](std::optional<double> v, const char* name) {
        if (v && !(*v > 0.0)) throw Error(ErrorCode::InvalidParams, std::string(name) + " must be positive");
    };
    positive(g.fov, "fov");
    positive(g.resolution, "resolution");
    positive(g.point_spacing, "point_spacing");
    positive(g.undersampling, "undersampling");
    positive(g.density_start, "density_start");
    positive(g.density_end, "density_end");
    if (g.kind == "spiral") {
        SpiralParams p;
        if (g.fov) p.fov = *g.fov;
        if (g.resolution) p.resolution = *g.resolution;
        if (g.interleaves) {
            if (*g.interleaves < 1) throw Error(ErrorCode::InvalidParams, "interleaves must be >= 1");
            p.interleaves = static_cast<int>(*g.interleaves);
        }
        if (g.density_start || g.density_end) {
            p.density = linear_density(g.density_start.value_or(1.0), g.density_end.value_or(1.0));
        }
        if (g.point_spacing) p.point_spacing = *g.point_spacing;
        return p;
    }
    if (g.kind == "rosette") {
        RosetteParams p;
        if (g.resolution) p.resolution = *g.resolution;
        if (g.petals) {
            if (*g.petals < 1) throw Error(ErrorCode::InvalidParams, "petals must be >= 1");
            p.petals = static_cast<int>(*g.petals);
        }
        if (g.point_spacing) p.point_spacing = *g.point_spacing;
        return p;
    }
    if (g.kind == "cepi") {
        CepiParams p;
        if (g.fov) p.fov = *g.fov;
        if (g.resolution) p.resolution = *g.resolution;
        if (g.undersampling) p.undersampling = *g.undersampling;
        if (g.point_spacing) p.point_spacing = *g.point_spacing;
        return p;
    }
    throw Error(ErrorCode::UnsupportedKind, "unknown trajectory kind '" + g.kind + "'");
}

DesignConfig parse_design_config(const std::string& text, const std::filesystem::path& base_dir) {
    const IniDocument doc = parse_ini(text);
    for (const auto& [section, keys] : doc) {
        const auto s = schema().find(section);
        if (s == schema().end()) throw Error(ErrorCode::ParseError, "unknown section [" + section + "]");
        for (const auto& [key, value] : keys) {
            if (s->second.count(key) == 0) fail(value.line, "unknown key '" + key + "' in [" + section + "]");
        }
    }
    const Reader r(doc);
    DesignConfig cfg;
    DesignSpec& spec = cfg.spec;

    r.number("hardware", "g_max", spec.hw.g_max);
    r.number("hardware", "s_max", spec.hw.s_max);
    r.number("hardware", "dt", spec.hw.dt);
    r.number("hardware", "gamma_bar", spec.hw.gamma_bar);

    LossWeights& w = spec.objective.weights;
    w.time = 1e4;
    w.slew = 1e2;
    r.number("objective", "lambda_time", w.time);
    r.number("objective", "lambda_bound_time", w.bound_time);
    r.number("objective", "lambda_slew", w.slew);
    r.number("objective", "lambda_pns", w.pns);
    r.number("objective", "lambda_band", w.band);
    r.number("objective", "lambda_acoustic", w.acoustic);
    r.number("objective", "t_max", spec.objective.t_max);
    r.number("objective", "p_max", spec.objective.p_max);

    r.number("barriers", "delta_slew", spec.objective.delta_slew);
    r.number("barriers", "delta_pns", spec.objective.delta_pns);
    r.number("barriers", "delta_time", spec.objective.delta_time);

    SolverConfig& sc = spec.solver;
    r.number("solver", "init_derate", sc.init_derate);
    r.number("solver", "step_size", sc.step_size);
    r.number("solver", "beta1", sc.beta1);
    r.number("solver", "beta2", sc.beta2);
    r.number("solver", "epsilon", sc.epsilon);
    r.number("solver", "convergence_tol", sc.convergence_tol);
    r.number("solver", "arc_oversampling", spec.arc_oversampling);
    std::optional<long long> iv;
    r.integer("solver", "max_iterations", iv);
    if (iv) sc.max_iterations = static_cast<int>(*iv);
    iv.reset();
    r.integer("solver", "convergence_window", iv);
    if (iv) sc.convergence_window = static_cast<int>(*iv);
    iv.reset();
    r.integer("solver", "arc_samples", iv);
    if (iv) spec.arc_samples = static_cast<Eigen::Index>(*iv);
    iv.reset();
    r.integer("solver", "seed", iv);
    if (iv) {
        if (*iv < 0) throw Error(ErrorCode::ParseError, "[solver] seed must be nonnegative");
        sc.seed = static_cast<std::uint64_t>(*iv);
    }
    if (const auto* t = r.find("solver", "terminal")) {
        if (t->text == "zero") sc.terminal = TerminalSpeed::Zero;
        else if (t->text == "free") sc.terminal = TerminalSpeed::Free;
        else fail(t->line, "[solver] terminal must be 'zero' or 'free'");
    }

    auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
        if (const auto* v = r.find("files", key)) return base_dir / v->text;
        return std::nullopt;
    };
    cfg.trajectory_file = path_of("trajectory");
    if (const auto p = path_of("pns_model")) {
        cfg.pns_model = io::read_pns_model(*p);
        spec.objective.pns = std::make_shared<IecPnsModel>(*cfg.pns_model);
    }
    if (const auto p = path_of("bands")) spec.objective.bands = io::read_bands(*p);
    if (const auto p = path_of("atf")) spec.objective.atf = io::read_atf(*p);

    if (doc.count("trajectory") != 0) {
        const auto* kind = r.find("trajectory", "kind");
        if (kind == nullptr) throw Error(ErrorCode::MissingKey, "[trajectory] kind");
        GeneratorSettings g;
        g.kind = kind->text;
        r.number("trajectory", "fov", g.fov);
        r.number("trajectory", "resolution", g.resolution);
        r.integer("trajectory", "interleaves", g.interleaves);
        r.number("trajectory", "density_start", g.density_start);
        r.number("trajectory", "density_end", g.density_end);
        r.integer("trajectory", "petals", g.petals);
        r.number("trajectory", "undersampling", g.undersampling);
        r.number("trajectory", "point_spacing", g.point_spacing);
        make_trajectory_params(g);
        cfg.generator = g;
    }

    // name the missing key rather than the abstract requirement
    if (w.pns > 0.0 && !cfg.pns_model) throw Error(ErrorCode::MissingKey, "[files] pns_model (required by lambda_pns > 0)");
    if (w.pns > 0.0 && !spec.objective.p_max) throw Error(ErrorCode::MissingKey, "[objective] p_max (required by lambda_pns > 0)");
    if (w.bound_time > 0.0 && !spec.objective.t_max) {
        throw Error(ErrorCode::MissingKey, "[objective] t_max (required by lambda_bound_time > 0)");
    }
    if (w.band > 0.0 && !spec.objective.bands) throw Error(ErrorCode::MissingKey, "[files] bands (required by lambda_band > 0)");
    if (w.acoustic > 0.0 && !spec.objective.atf) {
        throw Error(ErrorCode::MissingKey, "[files] atf (required by lambda_acoustic > 0)");
    }
    spec.validate();
    return cfg;
}

DesignConfig load_design_config(const std::filesystem::path& path) {
    return parse_design_config(io::read_text(path), path.parent_path());
}

}  // namespace optiks::config
