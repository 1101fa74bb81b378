#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "chs/errors.hpp"
#include "chs/field_io.hpp"
#include "chs/grid.hpp"
#include "chs/potential.hpp"
#include "chs/stepper.hpp"

namespace chs {

/// SplitMix64; the generator behind `random_band` initial data.  Specified by
/// its public algorithm so other tooling can reproduce fields bit-exactly.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0,1) with 53 random bits.
inline double splitmix64_unit(std::uint64_t& state) {
    return static_cast<double>(splitmix64_next(state) >> 11) * 0x1.0p-53;
}

/// Named initial-data preset for one field (rho0 or mu0).
struct InitialPreset {
    enum class Kind { homogeneous, tanh_profile, random_band };
    Kind kind = Kind::homogeneous;
    double value = 0.5;                                       // homogeneous(value)
    double center = 0.5, width = 0.1, low = 0.1, high = 0.9;  // tanh_profile(c,w,lo,hi)
    std::uint64_t seed = 0;
    double lo = 0.0, hi = 1.0;                                // random_band(seed,lo,hi)

    friend bool operator==(const InitialPreset&, const InitialPreset&) = default;
};

struct SimConfig {
    // [grid]
    int dim = 1;
    std::array<int, 2> cells{128, 1};
    std::array<double, 2> extent{1.0, 1.0};
    // [physics]
    double eps = 0.0;
    double delta = 1.0;
    double lambda = 3.0;
    // [time]  (dt < 0 means "use the default delta/(4 lambda)")
    double dt = -1.0;
    double t_final = 1.0;
    int snapshot_stride = 0;  // 0 disables periodic snapshots
    // [initial]
    InitialPreset rho0{};                                  // homogeneous(0.5)
    InitialPreset mu0{InitialPreset::Kind::homogeneous, 0.0};
    // [solver]
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    double linear_tol = 1e-10;
    double singular_floor = 1e-12;
    // [output]
    std::string output_dir = "out";
    std::vector<std::string> formats{"csv", "snapshots", "report"};

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct ConfigIssue {
    std::string section;
    std::string key;
    std::string message;
    std::string locate() const { return section + "." + key + ": " + message; }
};

class ConfigValidationError : public InvalidArgument {
public:
    explicit ConfigValidationError(std::vector<ConfigIssue> iss)
        : InvalidArgument(join(iss)), issues(std::move(iss)) {}
    std::vector<ConfigIssue> issues;

private:
    static std::string join(const std::vector<ConfigIssue>& iss) {
        std::string s = "invalid configuration:";
        for (const auto& i : iss) s += "\n  " + i.locate();
        return s;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

inline bool parse_int(const std::string& s, long long& out) {
    try {
        std::size_t pos = 0;
        out = std::stoll(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

inline bool parse_u64(const std::string& s, std::uint64_t& out) {
    try {
        std::size_t pos = 0;
        out = std::stoull(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

// name(arg1, arg2, ...) -> name + raw args
inline bool parse_call(const std::string& s, std::string& name, std::vector<std::string>& args) {
    const auto open = s.find('(');
    const auto close = s.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open ||
        trim(s.substr(close + 1)) != "")
        return false;
    name = trim(s.substr(0, open));
    args.clear();
    std::string inner = s.substr(open + 1, close - open - 1);
    std::string cur;
    for (char c : inner) {
        if (c == ',') {
            args.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cur = trim(cur);
    if (!cur.empty() || !args.empty()) args.push_back(cur);
    return !name.empty();
}

}  // namespace detail

inline std::string to_string(const InitialPreset& p) {
    switch (p.kind) {
        case InitialPreset::Kind::homogeneous:
            return "homogeneous(" + format_g17(p.value) + ")";
        case InitialPreset::Kind::tanh_profile:
            return "tanh_profile(" + format_g17(p.center) + ", " + format_g17(p.width) + ", " +
                   format_g17(p.low) + ", " + format_g17(p.high) + ")";
        case InitialPreset::Kind::random_band:
            return "random_band(" + std::to_string(p.seed) + ", " + format_g17(p.lo) + ", " +
                   format_g17(p.hi) + ")";
    }
    return "";
}

inline bool parse_preset(const std::string& text, InitialPreset& out, std::string& err) {
    std::string name;
    std::vector<std::string> args;
    if (!detail::parse_call(text, name, args)) {
        err = "expected a preset like homogeneous(0.5), tanh_profile(c,w,lo,hi) "
              "or random_band(seed,lo,hi)";
        return false;
    }
    auto need = [&](std::size_t n) {
        if (args.size() != n) {
            err = name + " takes " + std::to_string(n) + " argument(s), got " +
                  std::to_string(args.size());
            return false;
        }
        return true;
    };
    if (name == "homogeneous") {
        if (!need(1)) return false;
        out.kind = InitialPreset::Kind::homogeneous;
        if (!detail::parse_double(args[0], out.value)) {
            err = "homogeneous: bad value '" + args[0] + "'";
            return false;
        }
        return true;
    }
    if (name == "tanh_profile") {
        if (!need(4)) return false;
        out.kind = InitialPreset::Kind::tanh_profile;
        if (!detail::parse_double(args[0], out.center) ||
            !detail::parse_double(args[1], out.width) ||
            !detail::parse_double(args[2], out.low) ||
            !detail::parse_double(args[3], out.high)) {
            err = "tanh_profile: arguments must be numbers";
            return false;
        }
        return true;
    }
    if (name == "random_band") {
        if (!need(3)) return false;
        out.kind = InitialPreset::Kind::random_band;
        if (!detail::parse_u64(args[0], out.seed)) {
            err = "random_band: bad seed '" + args[0] + "'";
            return false;
        }
        if (!detail::parse_double(args[1], out.lo) || !detail::parse_double(args[2], out.hi)) {
            err = "random_band: bounds must be numbers";
            return false;
        }
        return true;
    }
    err = "unknown preset '" + name + "'";
    return false;
}

inline Grid make_grid(const SimConfig& c) {
    return c.dim == 1 ? Grid::make_1d(c.cells[0], c.extent[0])
                      : Grid::make_2d(c.cells[0], c.cells[1], c.extent[0], c.extent[1]);
}

inline PotentialSpec make_potential(const SimConfig& c) {
    PotentialSpec s;
    s.lambda = c.lambda;
    s.singular_floor = c.singular_floor;
    return s;
}

inline StepParams make_step_params(const SimConfig& c) {
    StepParams p;
    p.eps = c.eps;
    p.delta = c.delta;
    p.dt = c.dt;
    p.newton_tol = c.newton_tol;
    p.newton_max_iter = c.newton_max_iter;
    p.linear_tol = c.linear_tol;
    return p;
}

inline Field build_field(const InitialPreset& p, const Grid& g) {
    Field f(g);
    switch (p.kind) {
        case InitialPreset::Kind::homogeneous:
            for (double& x : f.v) x = p.value;
            break;
        case InitialPreset::Kind::tanh_profile:
            // Profile along the x axis; constant across y in 2D.
            for (int j = 0; j < (g.dim == 2 ? g.cells[1] : 1); ++j)
                for (int i = 0; i < g.cells[0]; ++i) {
                    const double x = g.center(0, i);
                    const double s = 0.5 * (1.0 + std::tanh((x - p.center) / p.width));
                    f.v[static_cast<std::size_t>(j) * g.cells[0] + i] =
                        p.low + (p.high - p.low) * s;
                }
            break;
        case InitialPreset::Kind::random_band: {
            std::uint64_t state = p.seed;
            for (double& x : f.v) x = p.lo + (p.hi - p.lo) * splitmix64_unit(state);
            break;
        }
    }
    return f;
}

inline Field build_initial_rho(const SimConfig& c, const Grid& g) { return build_field(c.rho0, g); }
inline Field build_initial_mu(const SimConfig& c, const Grid& g) { return build_field(c.mu0, g); }

namespace detail {

struct RawConfig {
    // section -> key -> value, plus line numbers for duplicate detection
    std::map<std::string, std::map<std::string, std::string>> kv;
};

inline void validate_preset(const InitialPreset& p, bool is_rho, double eps,
                            const std::string& key, std::vector<ConfigIssue>& issues) {
    auto bad = [&](const std::string& msg) { issues.push_back({"initial", key, msg}); };
    double vmin = 0.0, vmax = 0.0;
    switch (p.kind) {
        case InitialPreset::Kind::homogeneous:
            vmin = vmax = p.value;
            if (is_rho && !(p.value > 0.0 && p.value < 1.0))
                bad("rho0 must lie strictly inside (0,1)");
            break;
        case InitialPreset::Kind::tanh_profile:
            if (!(p.width > 0.0)) bad("tanh_profile width must be positive");
            if (!(p.low < p.high)) bad("tanh_profile needs low < high");
            vmin = p.low;
            vmax = p.high;
            if (is_rho && (p.low < 0.0 || p.high > 1.0))
                bad("rho0 values must stay within (0,1): 0 <= low < high <= 1 required");
            break;
        case InitialPreset::Kind::random_band:
            if (!(p.lo < p.hi)) bad("random_band needs lo < hi");
            vmin = p.lo;
            vmax = p.hi;
            if (is_rho && (p.lo < 0.0 || p.hi > 1.0))
                bad("rho0 band must stay within [0,1]");
            break;
    }
    if (is_rho) {
        if (eps == 0.0 && vmin <= 0.0)
            bad("inf rho0 > 0 is required for the limit problem (eps = 0)");
    } else {
        if (vmin < 0.0) bad("mu0 must be nonnegative");
    }
    (void)vmax;
}

}  // namespace detail

/// Parse the `key = value` sectioned text, filling defaults and collecting
/// every violation (not only the first).  Throws ConfigValidationError when
/// the list is nonempty.
inline SimConfig parse_config_text(const std::string& text) {
    std::vector<ConfigIssue> issues;
    detail::RawConfig raw;

    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.push_back({"", "line " + std::to_string(lineno), "malformed section header"});
                continue;
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({section, "line " + std::to_string(lineno), "expected key = value"});
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            issues.push_back({section, "line " + std::to_string(lineno), "empty key"});
            continue;
        }
        if (raw.kv[section].count(key))
            issues.push_back({section, key, "duplicate key"});
        raw.kv[section][key] = value;
    }

    SimConfig c;
    auto take = [&](const std::string& sec, const std::string& key, std::string& out) {
        auto s = raw.kv.find(sec);
        if (s == raw.kv.end()) return false;
        auto k = s->second.find(key);
        if (k == s->second.end()) return false;
        out = k->second;
        s->second.erase(k);
        return true;
    };
    auto take_double = [&](const std::string& sec, const std::string& key, double& out) {
        std::string v;
        if (!take(sec, key, v)) return;
        if (!detail::parse_double(v, out))
            issues.push_back({sec, key, "not a finite number: '" + v + "'"});
    };
    auto take_int = [&](const std::string& sec, const std::string& key, int& out) {
        std::string v;
        if (!take(sec, key, v)) return;
        long long n = 0;
        if (!detail::parse_int(v, n))
            issues.push_back({sec, key, "not an integer: '" + v + "'"});
        else
            out = static_cast<int>(n);
    };

    // [grid]
    take_int("grid", "dim", c.dim);
    {
        std::string v;
        if (take("grid", "cells", v)) {
            auto parts = detail::split_list(v);
            bool ok = !parts.empty() && parts.size() <= 2;
            for (std::size_t i = 0; ok && i < parts.size(); ++i) {
                long long n = 0;
                ok = detail::parse_int(parts[i], n);
                if (ok) c.cells[i] = static_cast<int>(n);
            }
            if (parts.size() == 1) c.cells[1] = 1;
            if (!ok) issues.push_back({"grid", "cells", "expected 1 or 2 integers"});
        }
        if (take("grid", "extent", v)) {
            auto parts = detail::split_list(v);
            bool ok = !parts.empty() && parts.size() <= 2;
            for (std::size_t i = 0; ok && i < parts.size(); ++i)
                ok = detail::parse_double(parts[i], c.extent[i]);
            if (parts.size() == 1) c.extent[1] = 1.0;
            if (!ok) issues.push_back({"grid", "extent", "expected 1 or 2 numbers"});
        }
    }
    // [physics]
    take_double("physics", "eps", c.eps);
    take_double("physics", "delta", c.delta);
    take_double("physics", "lambda", c.lambda);
    // [time]
    take_double("time", "dt", c.dt);
    take_double("time", "t_final", c.t_final);
    take_int("time", "snapshot_stride", c.snapshot_stride);
    // [initial]
    for (const char* key : {"rho0", "mu0"}) {
        std::string v;
        if (take("initial", key, v)) {
            InitialPreset p;
            std::string err;
            if (!parse_preset(v, p, err))
                issues.push_back({"initial", key, err});
            else
                (key[0] == 'r' ? c.rho0 : c.mu0) = p;
        }
    }
    // [solver]
    take_double("solver", "newton_tol", c.newton_tol);
    take_int("solver", "newton_max_iter", c.newton_max_iter);
    take_double("solver", "linear_tol", c.linear_tol);
    take_double("solver", "singular_floor", c.singular_floor);
    // [output]
    {
        std::string v;
        if (take("output", "directory", v)) c.output_dir = v;
        if (take("output", "formats", v)) c.formats = detail::split_list(v);
    }

    // Anything left over is unknown.
    for (const auto& [sec, kv] : raw.kv)
        for (const auto& [key, val] : kv)
            issues.push_back({sec, key, "unknown key"});

    // Semantic validation.
    if (c.dim != 1 && c.dim != 2) issues.push_back({"grid", "dim", "dim must be 1 or 2"});
    for (int ax = 0; ax < (c.dim == 2 ? 2 : 1); ++ax) {
        if (c.cells[ax] < 3)
            issues.push_back({"grid", "cells", "need at least 3 cells per axis"});
        if (!(c.extent[ax] > 0.0))
            issues.push_back({"grid", "extent", "extent must be positive"});
    }
    if (!(c.eps >= 0.0 && c.eps <= 1.0))
        issues.push_back({"physics", "eps", "eps must lie in [0,1]"});
    if (!(c.delta > 0.0)) issues.push_back({"physics", "delta", "delta must be positive"});
    if (!(c.lambda >= 0.0)) issues.push_back({"physics", "lambda", "lambda must be nonnegative"});
    if (c.dt < 0.0) {
        // Default time step from the explicit-f2' stability heuristic dt <= delta/(4 lambda).
        c.dt = (c.lambda > 0.0) ? c.delta / (4.0 * c.lambda) : c.delta / 4.0;
    } else if (!(c.dt > 0.0)) {
        issues.push_back({"time", "dt", "dt must be positive"});
    }
    if (!(c.t_final > 0.0)) issues.push_back({"time", "t_final", "t_final must be positive"});
    if (c.snapshot_stride < 0)
        issues.push_back({"time", "snapshot_stride", "snapshot_stride must be >= 0"});
    detail::validate_preset(c.rho0, true, c.eps, "rho0", issues);
    detail::validate_preset(c.mu0, false, c.eps, "mu0", issues);
    if (!(c.newton_tol > 0.0))
        issues.push_back({"solver", "newton_tol", "must be positive"});
    if (c.newton_max_iter < 1)
        issues.push_back({"solver", "newton_max_iter", "must be at least 1"});
    if (!(c.linear_tol > 0.0)) issues.push_back({"solver", "linear_tol", "must be positive"});
    if (!(c.singular_floor > 0.0 && c.singular_floor < 1e-3))
        issues.push_back({"solver", "singular_floor", "must lie in (0, 1e-3)"});
    if (c.output_dir.empty()) issues.push_back({"output", "directory", "must not be empty"});
    for (const auto& fmt : c.formats)
        if (fmt != "csv" && fmt != "snapshots" && fmt != "report")
            issues.push_back({"output", "formats", "unknown format '" + fmt + "'"});

    if (!issues.empty()) throw ConfigValidationError(std::move(issues));
    return c;
}

inline SimConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigValidationError({{"", path, "cannot open config file"}});
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

/// Write the fully resolved configuration; re-parsing the output yields an
/// identical SimConfig.
inline void dump_resolved(std::ostream& os, const SimConfig& c) {
    os << "[grid]\n";
    os << "dim = " << c.dim << '\n';
    os << "cells = " << c.cells[0];
    if (c.dim == 2) os << ' ' << c.cells[1];
    os << '\n';
    os << "extent = " << format_g17(c.extent[0]);
    if (c.dim == 2) os << ' ' << format_g17(c.extent[1]);
    os << '\n';
    os << "\n[physics]\n";
    os << "eps = " << format_g17(c.eps) << '\n';
    os << "delta = " << format_g17(c.delta) << '\n';
    os << "lambda = " << format_g17(c.lambda) << '\n';
    os << "\n[time]\n";
    os << "dt = " << format_g17(c.dt) << '\n';
    os << "t_final = " << format_g17(c.t_final) << '\n';
    os << "snapshot_stride = " << c.snapshot_stride << '\n';
    os << "\n[initial]\n";
    os << "rho0 = " << to_string(c.rho0) << '\n';
    os << "mu0 = " << to_string(c.mu0) << '\n';
    os << "\n[solver]\n";
    os << "newton_tol = " << format_g17(c.newton_tol) << '\n';
    os << "newton_max_iter = " << c.newton_max_iter << '\n';
    os << "linear_tol = " << format_g17(c.linear_tol) << '\n';
    os << "singular_floor = " << format_g17(c.singular_floor) << '\n';
    os << "\n[output]\n";
    os << "directory = " << c.output_dir << '\n';
    os << "formats = ";
    for (std::size_t i = 0; i < c.formats.size(); ++i)
        os << (i ? "," : "") << c.formats[i];
    os << '\n';
}

}  // namespace chs
