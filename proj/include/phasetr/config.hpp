#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasetr {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
    int line;
};

enum class ProblemKind { elliptic, wave };
enum class FocalKind { all, disk };
enum class TargetKind { zero, gaussian, binary_disk };
enum class AlgorithmMode { convex_only, with_nonconvex };

// Experiment description, loaded from a sectioned key-value file. Physics
// and algorithm keys are mandatory; only [solver] and [output] have
// defaults.
struct RunConfig {
    ProblemKind problem = ProblemKind::wave;
    std::uint64_t seed = 0;

    struct Mesh {
        double x_min = -1, x_max = 1, y_min = -1, y_max = 2;
        int nx = 32, ny = 32;
        bool operator==(const Mesh&) const = default;
    } mesh;

    struct Time {  // wave only
        double t_final = 5.0;
        int n_steps = 128;
        bool operator==(const Time&) const = default;
    } time;

    struct Physics {
        // wave
        double c_sq = 20.0, b = 1.25e-2, sigma = 0.25;
        // elliptic
        double nu = 1.0;
        std::string control_op = "identity";  // identity | mollifier
        double mollifier_radius = 0.1;
        bool operator==(const Physics&) const = default;
    } physics;

    struct Source {  // wave only
        double amplitude = 1.0, center_x = 0.0, center_y = -0.5;
        double spatial_width = 0.1, frequency = 1.0, delay = 1.0;
        bool operator==(const Source&) const = default;
    } source;

    struct Objective {
        double gamma = 7.5e-6;
        FocalKind focal_type = FocalKind::disk;
        double focal_center_x = 0.0, focal_center_y = 1.25, focal_radius = 0.3;
        TargetKind target_type = TargetKind::gaussian;
        double target_amplitude = 1.0, target_center_x = 0.0, target_center_y = 1.25;
        double target_width = 0.15, target_radius = 0.25;
        bool operator==(const Objective&) const = default;
    } objective;

    struct Algorithm {
        double delta0 = 1.5, eps0 = 1.0, r = 5.0, rho = 1e-4;
        double kappa0 = 1e-8, delta_floor0 = 1.14e-5;
        double w0_value = 0.5;
        AlgorithmMode mode = AlgorithmMode::convex_only;
        int max_iter = 1000;
        bool operator==(const Algorithm&) const = default;
    } algorithm;

    struct Solver {
        double tol = 1e-10;
        int max_iter = 5000;
        double subproblem_tol = 1e-9;
        int subproblem_max_iter = 5000;
        int n_starts = 4;
        double max_seconds = 86400.0;
        bool operator==(const Solver&) const = default;
    } solver;

    struct Output {
        std::string dir = "out";
        bool dump_every_accept = true;
        bool wall_times = false;
        bool operator==(const Output&) const = default;
    } output;

    bool operator==(const RunConfig&) const = default;

    void validate() const {
        auto require = [](bool ok, const std::string& what) {
            if (!ok) throw ConfigError("validation: " + what);
        };
        require(mesh.nx >= 1 && mesh.ny >= 1, "mesh.nx and mesh.ny require >= 1");
        require(mesh.x_max > mesh.x_min, "mesh requires x_max > x_min");
        require(mesh.y_max > mesh.y_min, "mesh requires y_max > y_min");
        if (problem == ProblemKind::wave) {
            require(time.t_final > 0.0, "time.t_final requires > 0");
            require(time.n_steps >= 2, "time.n_steps requires >= 2");
            require(physics.c_sq > 0.0, "physics.c_sq requires > 0");
            require(physics.b > 0.0, "physics.b requires > 0");
            require(physics.sigma > 0.0, "physics.sigma requires > 0");
            require(source.spatial_width > 0.0, "source.spatial_width requires > 0");
            require(source.frequency > 0.0, "source.frequency requires > 0");
        } else {
            require(physics.nu > 0.0, "physics.nu requires > 0");
            require(physics.control_op == "identity" || physics.control_op == "mollifier",
                    "physics.control_op requires identity or mollifier");
            if (physics.control_op == "mollifier")
                require(physics.mollifier_radius > 0.0, "physics.mollifier_radius requires > 0");
        }
        require(objective.gamma > 0.0, "objective.gamma requires > 0");
        if (objective.focal_type == FocalKind::disk)
            require(objective.focal_radius > 0.0, "objective.focal_radius requires > 0");
        if (objective.target_type == TargetKind::gaussian)
            require(objective.target_width > 0.0, "objective.target_width requires > 0");
        if (objective.target_type == TargetKind::binary_disk)
            require(objective.target_radius > 0.0, "objective.target_radius requires > 0");
        require(algorithm.delta0 > 0.0, "algorithm.delta0 requires > 0");
        require(algorithm.eps0 > 0.0, "algorithm.eps0 requires > 0");
        require(algorithm.r > 4.0, "algorithm.r requires r > 4");
        require(algorithm.rho > 0.0 && algorithm.rho < 1.0, "algorithm.rho requires rho in (0,1)");
        require(algorithm.kappa0 > 0.0 && algorithm.kappa0 < algorithm.rho,
                "algorithm.kappa0 requires rho > kappa0 > 0");
        require(algorithm.delta_floor0 > 0.0 && algorithm.delta_floor0 < algorithm.delta0,
                "algorithm.delta_floor0 requires 0 < delta_floor0 < delta0");
        require(algorithm.w0_value >= 0.0 && algorithm.w0_value <= 1.0,
                "algorithm.w0_value requires [0,1]");
        require(algorithm.max_iter >= 1, "algorithm.max_iter requires >= 1");
        require(solver.tol > 0.0, "solver.tol requires > 0");
        require(solver.max_iter >= 1, "solver.max_iter requires >= 1");
        require(solver.subproblem_tol > 0.0, "solver.subproblem_tol requires > 0");
        require(solver.subproblem_max_iter >= 1, "solver.subproblem_max_iter requires >= 1");
        require(solver.n_starts >= 1, "solver.n_starts requires >= 1");
        require(solver.max_seconds > 0.0, "solver.max_seconds requires > 0");
        require(!output.dir.empty(), "output.dir requires a path");
    }
};

namespace detail {

struct RawEntry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct RawConfig {
    std::map<std::string, std::map<std::string, RawEntry>> sections;
    std::map<std::string, int> section_lines;

    const RawEntry* find(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        if (s == sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }
};

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline RawConfig parse_ini(std::istream& in) {
    RawConfig raw;
    std::string line, section;
    int line_no = 0;
    bool any_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        any_content = true;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("parse: unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("parse: empty section name", line_no);
            raw.section_lines.emplace(section, line_no);
            raw.sections[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("parse: expected key = value", line_no);
        if (section.empty()) throw ConfigError("parse: key outside of any section", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("parse: empty key", line_no);
        if (value.empty()) throw ConfigError("parse: empty value for key " + key, line_no);
        if (!raw.sections[section].emplace(key, RawEntry{value, line_no}).second)
            throw ConfigError("parse: duplicate key " + key, line_no);
    }
    if (!any_content) throw ConfigError("parse: empty configuration", 1);
    return raw;
}

inline double to_double(const RawEntry& e, const std::string& name) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(e.value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("parse: " + name + " expects a number, got '" + e.value + "'", e.line);
    }
    if (pos != e.value.size())
        throw ConfigError("parse: " + name + " expects a number, got '" + e.value + "'", e.line);
    return v;
}

inline int to_int(const RawEntry& e, const std::string& name) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(e.value, &pos);
    } catch (const std::exception&) {
        throw ConfigError("parse: " + name + " expects an integer, got '" + e.value + "'", e.line);
    }
    if (pos != e.value.size())
        throw ConfigError("parse: " + name + " expects an integer, got '" + e.value + "'", e.line);
    return static_cast<int>(v);
}

inline bool to_bool(const RawEntry& e, const std::string& name) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError("parse: " + name + " expects true/false", e.line);
}

class Reader {
public:
    explicit Reader(const RawConfig& raw) : raw_(raw) {}

    double number(const std::string& sec, const std::string& key) {
        const RawEntry* e = require(sec, key);
        return to_double(*e, sec + "." + key);
    }
    double number_or(const std::string& sec, const std::string& key, double fallback) {
        const RawEntry* e = raw_.find(sec, key);
        return e ? to_double(*e, sec + "." + key) : fallback;
    }
    int integer(const std::string& sec, const std::string& key) {
        return to_int(*require(sec, key), sec + "." + key);
    }
    int integer_or(const std::string& sec, const std::string& key, int fallback) {
        const RawEntry* e = raw_.find(sec, key);
        return e ? to_int(*e, sec + "." + key) : fallback;
    }
    std::string text(const std::string& sec, const std::string& key) {
        return require(sec, key)->value;
    }
    std::string text_or(const std::string& sec, const std::string& key, const std::string& fb) {
        const RawEntry* e = raw_.find(sec, key);
        return e ? e->value : fb;
    }
    bool boolean_or(const std::string& sec, const std::string& key, bool fallback) {
        const RawEntry* e = raw_.find(sec, key);
        return e ? to_bool(*e, sec + "." + key) : fallback;
    }
    bool has(const std::string& sec, const std::string& key) const {
        auto s = raw_.sections.find(sec);
        return s != raw_.sections.end() && s->second.count(key) > 0;
    }
    bool has_section(const std::string& sec) const { return raw_.sections.count(sec) > 0; }
    int section_line(const std::string& sec) const { return raw_.section_lines.at(sec); }

    void reject_unknown(const std::set<std::string>& known_sections) const {
        for (const auto& [sec, entries] : raw_.sections) {
            if (!known_sections.count(sec))
                throw ConfigError("validation: unknown section [" + sec + "]",
                                  raw_.section_lines.at(sec));
            for (const auto& [key, entry] : entries)
                if (!entry.used)
                    throw ConfigError("validation: unknown key '" + key + "' in section [" + sec + "]",
                                      entry.line);
        }
    }

private:
    const RawEntry* require(const std::string& sec, const std::string& key) {
        const RawEntry* e = raw_.find(sec, key);
        if (!e) throw ConfigError("validation: missing mandatory key " + sec + "." + key);
        return e;
    }
    const RawConfig& raw_;
};

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline RunConfig load_config_stream(std::istream& in) {
    const detail::RawConfig raw = detail::parse_ini(in);
    detail::Reader r(raw);
    RunConfig cfg;

    const std::string kind = r.text("problem", "type");
    if (kind == "wave")
        cfg.problem = ProblemKind::wave;
    else if (kind == "elliptic")
        cfg.problem = ProblemKind::elliptic;
    else
        throw ConfigError("validation: problem.type requires wave or elliptic");
    cfg.seed = static_cast<std::uint64_t>(r.integer_or("problem", "seed", 0));

    cfg.mesh.x_min = r.number("mesh", "x_min");
    cfg.mesh.x_max = r.number("mesh", "x_max");
    cfg.mesh.y_min = r.number("mesh", "y_min");
    cfg.mesh.y_max = r.number("mesh", "y_max");
    cfg.mesh.nx = r.integer("mesh", "nx");
    cfg.mesh.ny = r.integer("mesh", "ny");

    if (cfg.problem == ProblemKind::wave) {
        cfg.time.t_final = r.number("time", "t_final");
        cfg.time.n_steps = r.integer("time", "n_steps");
        cfg.physics.c_sq = r.number("physics", "c_sq");
        cfg.physics.b = r.number("physics", "b");
        cfg.physics.sigma = r.number("physics", "sigma");
        cfg.source.amplitude = r.number("source", "amplitude");
        cfg.source.center_x = r.number("source", "center_x");
        cfg.source.center_y = r.number("source", "center_y");
        cfg.source.spatial_width = r.number("source", "spatial_width");
        cfg.source.frequency = r.number("source", "frequency");
        cfg.source.delay = r.number("source", "delay");
    } else {
        if (r.has_section("time"))
            throw ConfigError("validation: section [time] only applies to the wave problem",
                              r.section_line("time"));
        if (r.has_section("source"))
            throw ConfigError("validation: section [source] only applies to the wave problem",
                              r.section_line("source"));
        cfg.physics.nu = r.number("physics", "nu");
        cfg.physics.control_op = r.text_or("physics", "control_op", "identity");
        cfg.physics.mollifier_radius = r.number_or("physics", "mollifier_radius", 0.1);
    }

    cfg.objective.gamma = r.number("objective", "gamma");
    const std::string focal = r.text_or("objective", "focal_type", "all");
    if (focal == "all")
        cfg.objective.focal_type = FocalKind::all;
    else if (focal == "disk")
        cfg.objective.focal_type = FocalKind::disk;
    else
        throw ConfigError("validation: objective.focal_type requires all or disk");
    if (cfg.objective.focal_type == FocalKind::disk) {
        cfg.objective.focal_center_x = r.number("objective", "focal_center_x");
        cfg.objective.focal_center_y = r.number("objective", "focal_center_y");
        cfg.objective.focal_radius = r.number("objective", "focal_radius");
    }
    const std::string target = r.text("objective", "target_type");
    if (target == "zero")
        cfg.objective.target_type = TargetKind::zero;
    else if (target == "gaussian")
        cfg.objective.target_type = TargetKind::gaussian;
    else if (target == "binary_disk")
        cfg.objective.target_type = TargetKind::binary_disk;
    else
        throw ConfigError("validation: objective.target_type requires zero, gaussian or binary_disk");
    if (cfg.objective.target_type != TargetKind::zero) {
        cfg.objective.target_amplitude = r.number("objective", "target_amplitude");
        cfg.objective.target_center_x = r.number("objective", "target_center_x");
        cfg.objective.target_center_y = r.number("objective", "target_center_y");
    }
    if (cfg.objective.target_type == TargetKind::gaussian)
        cfg.objective.target_width = r.number("objective", "target_width");
    if (cfg.objective.target_type == TargetKind::binary_disk)
        cfg.objective.target_radius = r.number("objective", "target_radius");

    cfg.algorithm.delta0 = r.number("algorithm", "delta0");
    cfg.algorithm.eps0 = r.number("algorithm", "eps0");
    cfg.algorithm.r = r.number("algorithm", "r");
    cfg.algorithm.rho = r.number("algorithm", "rho");
    cfg.algorithm.kappa0 = r.number("algorithm", "kappa0");
    cfg.algorithm.delta_floor0 = r.number("algorithm", "delta_floor0");
    cfg.algorithm.w0_value = r.number("algorithm", "w0_value");
    const std::string mode = r.text("algorithm", "mode");
    if (mode == "convex_only")
        cfg.algorithm.mode = AlgorithmMode::convex_only;
    else if (mode == "with_nonconvex")
        cfg.algorithm.mode = AlgorithmMode::with_nonconvex;
    else
        throw ConfigError("validation: algorithm.mode requires convex_only or with_nonconvex");
    cfg.algorithm.max_iter = r.integer("algorithm", "max_iter");

    cfg.solver.tol = r.number_or("solver", "tol", cfg.solver.tol);
    cfg.solver.max_iter = r.integer_or("solver", "max_iter", cfg.solver.max_iter);
    cfg.solver.subproblem_tol = r.number_or("solver", "subproblem_tol", cfg.solver.subproblem_tol);
    cfg.solver.subproblem_max_iter =
        r.integer_or("solver", "subproblem_max_iter", cfg.solver.subproblem_max_iter);
    cfg.solver.n_starts = r.integer_or("solver", "n_starts", cfg.solver.n_starts);
    cfg.solver.max_seconds = r.number_or("solver", "max_seconds", cfg.solver.max_seconds);

    cfg.output.dir = r.text_or("output", "dir", cfg.output.dir);
    cfg.output.dump_every_accept = r.boolean_or("output", "dump_every_accept", true);
    cfg.output.wall_times = r.boolean_or("output", "wall_times", false);

    r.reject_unknown({"problem", "mesh", "time", "physics", "source", "objective", "algorithm",
                      "solver", "output"});
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return load_config_stream(in);
}

inline std::string serialize(const RunConfig& cfg) {
    using detail::fmt;
    std::ostringstream out;
    out << "[problem]\n";
    out << "type = " << (cfg.problem == ProblemKind::wave ? "wave" : "elliptic") << "\n";
    out << "seed = " << cfg.seed << "\n\n";
    out << "[mesh]\n";
    out << "x_min = " << fmt(cfg.mesh.x_min) << "\nx_max = " << fmt(cfg.mesh.x_max) << "\n";
    out << "y_min = " << fmt(cfg.mesh.y_min) << "\ny_max = " << fmt(cfg.mesh.y_max) << "\n";
    out << "nx = " << cfg.mesh.nx << "\nny = " << cfg.mesh.ny << "\n\n";
    if (cfg.problem == ProblemKind::wave) {
        out << "[time]\n";
        out << "t_final = " << fmt(cfg.time.t_final) << "\nn_steps = " << cfg.time.n_steps << "\n\n";
        out << "[physics]\n";
        out << "c_sq = " << fmt(cfg.physics.c_sq) << "\nb = " << fmt(cfg.physics.b) << "\n";
        out << "sigma = " << fmt(cfg.physics.sigma) << "\n\n";
        out << "[source]\n";
        out << "amplitude = " << fmt(cfg.source.amplitude) << "\n";
        out << "center_x = " << fmt(cfg.source.center_x) << "\n";
        out << "center_y = " << fmt(cfg.source.center_y) << "\n";
        out << "spatial_width = " << fmt(cfg.source.spatial_width) << "\n";
        out << "frequency = " << fmt(cfg.source.frequency) << "\n";
        out << "delay = " << fmt(cfg.source.delay) << "\n\n";
    } else {
        out << "[physics]\n";
        out << "nu = " << fmt(cfg.physics.nu) << "\n";
        out << "control_op = " << cfg.physics.control_op << "\n";
        out << "mollifier_radius = " << fmt(cfg.physics.mollifier_radius) << "\n\n";
    }
    out << "[objective]\n";
    out << "gamma = " << fmt(cfg.objective.gamma) << "\n";
    out << "focal_type = " << (cfg.objective.focal_type == FocalKind::all ? "all" : "disk") << "\n";
    if (cfg.objective.focal_type == FocalKind::disk) {
        out << "focal_center_x = " << fmt(cfg.objective.focal_center_x) << "\n";
        out << "focal_center_y = " << fmt(cfg.objective.focal_center_y) << "\n";
        out << "focal_radius = " << fmt(cfg.objective.focal_radius) << "\n";
    }
    const char* tname = cfg.objective.target_type == TargetKind::zero ? "zero"
                        : cfg.objective.target_type == TargetKind::gaussian ? "gaussian"
                                                                            : "binary_disk";
    out << "target_type = " << tname << "\n";
    if (cfg.objective.target_type != TargetKind::zero) {
        out << "target_amplitude = " << fmt(cfg.objective.target_amplitude) << "\n";
        out << "target_center_x = " << fmt(cfg.objective.target_center_x) << "\n";
        out << "target_center_y = " << fmt(cfg.objective.target_center_y) << "\n";
    }
    if (cfg.objective.target_type == TargetKind::gaussian)
        out << "target_width = " << fmt(cfg.objective.target_width) << "\n";
    if (cfg.objective.target_type == TargetKind::binary_disk)
        out << "target_radius = " << fmt(cfg.objective.target_radius) << "\n";
    out << "\n[algorithm]\n";
    out << "delta0 = " << fmt(cfg.algorithm.delta0) << "\neps0 = " << fmt(cfg.algorithm.eps0) << "\n";
    out << "r = " << fmt(cfg.algorithm.r) << "\nrho = " << fmt(cfg.algorithm.rho) << "\n";
    out << "kappa0 = " << fmt(cfg.algorithm.kappa0) << "\n";
    out << "delta_floor0 = " << fmt(cfg.algorithm.delta_floor0) << "\n";
    out << "w0_value = " << fmt(cfg.algorithm.w0_value) << "\n";
    out << "mode = "
        << (cfg.algorithm.mode == AlgorithmMode::convex_only ? "convex_only" : "with_nonconvex")
        << "\n";
    out << "max_iter = " << cfg.algorithm.max_iter << "\n\n";
    out << "[solver]\n";
    out << "tol = " << fmt(cfg.solver.tol) << "\nmax_iter = " << cfg.solver.max_iter << "\n";
    out << "subproblem_tol = " << fmt(cfg.solver.subproblem_tol) << "\n";
    out << "subproblem_max_iter = " << cfg.solver.subproblem_max_iter << "\n";
    out << "n_starts = " << cfg.solver.n_starts << "\n";
    out << "max_seconds = " << fmt(cfg.solver.max_seconds) << "\n\n";
    out << "[output]\n";
    out << "dir = " << cfg.output.dir << "\n";
    out << "dump_every_accept = " << (cfg.output.dump_every_accept ? "true" : "false") << "\n";
    out << "wall_times = " << (cfg.output.wall_times ? "true" : "false") << "\n";
    return out.str();
}

}  // namespace phasetr
