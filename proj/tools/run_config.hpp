#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "torcone/error.hpp"
#include "torcone/experiments.hpp"

namespace torcone::cli {

struct KeySpec {
    const char* key;
    const char* fallback;
    const char* help;
};

// Every key is also a command-line flag of the same name.
inline const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs = {
        {"command", "verify", "solve | verify | constants | sweep | convergence"},
        {"opening", "pi/2", "cone opening angle; accepts numbers and multiples of pi (pi/2, 2pi, 0.5*pi)"},
        {"base_radius", "1", "R0 of the polar graph"},
        {"amplitude", "0", "perturbation amplitude epsilon"},
        {"modes", "2:1", "cosine modes m:a separated by commas, f = sum a cos(m pi theta / opening)"},
        {"h", "0.02", "target mesh size for torsion solves"},
        {"constants_h", "0.05", "target mesh size for eigenvalue constants"},
        {"h0", "0.2", "base mesh size of convergence studies"},
        {"refinements", "3", "uniform refinements of convergence studies"},
        {"eps", "0.01,0.02,0.04,0.08", "sweep amplitudes, ascending"},
        {"z_policy", "paper", "paper | alternative"},
        {"out", "", "output directory"},
        {"threads", "1", "worker threads for sweeps"},
        {"tol_rigid", "1e-3", "gross relative residual bound on unperturbed domains"},
        {"tol_identity", "0.05", "relative residual bound on perturbed domains"},
        {"rigidity_tol", "1e-3", "deficit tolerance of the rigidity detector, relative to the area"},
        {"min_l2_rate", "2.5", "minimum observed L2 rate"},
        {"min_h1_rate", "1.8", "minimum observed H1 rate"},
        {"slope_sbt", "1.0", "expected slope of pd_sbt vs deviation_sbt"},
        {"slope_tol_sbt", "0.15", "allowed deviation from slope_sbt"},
        {"slope_hk", "0.5", "expected slope of pd_hk vs deviation_hk"},
        {"slope_tol_hk", "0.1", "allowed deviation from slope_hk"},
        {"min_r2", "0.98", "minimum r^2 of the stability fits"},
        {"min_gap_slope", "0.85", "minimum slope of rho_e - rho_i vs deviation_sbt"},
    };
    return specs;
}

inline bool known_key(const std::string& k) {
    const auto& s = key_specs();
    return std::any_of(s.begin(), s.end(), [&](const KeySpec& x) { return k == x.key; });
}

struct Entry {
    std::string value;
    std::string origin;  // "default", "file:LINE" or "flag"
};

using RawConfig = std::map<std::string, Entry>;

inline std::string trim(const std::string& s) {
    auto b = s.begin(), e = s.end();
    while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
    return {b, e};
}

// Flat `key = value` text; '#' starts a comment. Errors carry source:line.
inline RawConfig parse_config_text(std::istream& in, const std::string& source) {
    RawConfig out;
    std::string line;
    int n = 0;
    auto fail = [&](const std::string& msg) { throw ConfigError(source + ":" + std::to_string(n), msg); };
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected `key = value`, got `" + line + "`");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) fail("empty key");
        if (!known_key(key)) fail("unknown key `" + key + "`");
        if (value.empty()) fail("empty value for `" + key + "`");
        if (out.count(key)) fail("duplicate key `" + key + "` (first set at " + out[key].origin + ")");
        out[key] = {value, "file:" + std::to_string(n)};
    }
    return out;
}

inline double parse_number(const std::string& text, const std::string& key) {
    const std::string s = trim(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw ConfigError(key, "expected a number, got `" + text + "`");
    return v;
}

inline int parse_int(const std::string& text, const std::string& key) {
    const double v = parse_number(text, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key, "expected an integer, got `" + text + "`");
    return static_cast<int>(v);
}

// "1.5708", "pi", "pi/2", "2pi", "2*pi", "0.5*pi", "3pi/4"
inline double parse_angle(const std::string& text, const std::string& key) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    const auto p = s.find("pi");
    if (p == std::string::npos) return parse_number(s, key);
    std::string pre = s.substr(0, p), post = s.substr(p + 2);
    if (!pre.empty() && pre.back() == '*') pre.pop_back();
    double v = pi * (pre.empty() ? 1.0 : parse_number(pre, key));
    if (!post.empty()) {
        if (post[0] != '/') throw ConfigError(key, "cannot read angle `" + text + "`");
        const double den = parse_number(post.substr(1), key);
        if (den == 0.0) throw ConfigError(key, "division by zero in `" + text + "`");
        v /= den;
    }
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(trim(item));
    return parts;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
    std::vector<double> v;
    for (const auto& p : split(text, ',')) {
        if (p.empty()) throw ConfigError(key, "empty entry in list `" + text + "`");
        v.push_back(parse_number(p, key));
    }
    if (v.empty()) throw ConfigError(key, "empty list");
    return v;
}

inline std::vector<CosineMode> parse_modes(const std::string& text, const std::string& key) {
    std::vector<CosineMode> modes;
    if (trim(text) == "none") return modes;
    for (const auto& p : split(text, ',')) {
        const auto c = p.find(':');
        if (c == std::string::npos) throw ConfigError(key, "mode `" + p + "` is not of the form m:a");
        const int m = parse_int(p.substr(0, c), key);
        if (m < 0) throw ConfigError(key, "mode index must be non-negative in `" + p + "`");
        modes.push_back({m, parse_number(p.substr(c + 1), key)});
    }
    return modes;
}

enum class Command { solve, verify, constants, sweep, convergence };

inline Command parse_command(const std::string& s) {
    if (s == "solve") return Command::solve;
    if (s == "verify") return Command::verify;
    if (s == "constants") return Command::constants;
    if (s == "sweep") return Command::sweep;
    if (s == "convergence") return Command::convergence;
    throw ConfigError("command", "unknown command `" + s + "`");
}

inline const char* command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::verify: return "verify";
        case Command::constants: return "constants";
        case Command::sweep: return "sweep";
        case Command::convergence: return "convergence";
    }
    return "?";
}

struct RunConfig {
    Command command = Command::verify;
    double opening = 0.5 * pi;
    double base_radius = 1.0;
    double amplitude = 0.0;
    std::vector<CosineMode> modes;
    double h = 0.02;
    double constants_h = 0.05;
    double h0 = 0.2;
    int refinements = 3;
    std::vector<double> eps;
    ZPolicy z_policy = ZPolicy::paper;
    std::string out;
    int threads = 1;
    std::map<std::string, double> tol;  // tol_rigid, tol_identity, rigidity_tol, thresholds
    RawConfig raw;                       // resolved text values, for the manifest

    PolarDomain domain() const { return PolarDomain::cosine_series(SectorCone(opening), base_radius, amplitude, modes); }
};

// Fills defaults, converts and validates. Errors name the key and where its value came from.
inline RunConfig resolve(RawConfig raw) {
    for (const auto& s : key_specs())
        if (!raw.count(s.key)) raw[s.key] = {s.fallback, "default"};
    RunConfig c;
    auto at = [&](const char* k) { return std::string(k) + " (" + raw[k].origin + ")"; };
    auto num = [&](const char* k) { return parse_number(raw[k].value, at(k)); };
    auto positive = [&](const char* k) {
        const double v = num(k);
        if (!(v > 0.0)) throw ConfigError(at(k), "must be positive, got " + raw[k].value);
        return v;
    };
    c.command = parse_command(raw["command"].value);
    c.opening = parse_angle(raw["opening"].value, at("opening"));
    if (!(c.opening > 0.0) || c.opening > 2.0 * pi * (1.0 + 1e-14))
        throw ConfigError(at("opening"), "must lie in (0, 2pi]");
    c.base_radius = positive("base_radius");
    c.amplitude = num("amplitude");
    if (c.amplitude < 0.0) throw ConfigError(at("amplitude"), "must be non-negative");
    c.modes = parse_modes(raw["modes"].value, at("modes"));
    c.h = positive("h");
    c.constants_h = positive("constants_h");
    c.h0 = positive("h0");
    c.refinements = parse_int(raw["refinements"].value, at("refinements"));
    if (c.refinements < 1 || c.refinements > 6) throw ConfigError(at("refinements"), "must lie in [1, 6]");
    c.eps = parse_list(raw["eps"].value, at("eps"));
    for (double e : c.eps)
        if (e < 0.0) throw ConfigError(at("eps"), "amplitudes must be non-negative");
    if (!std::is_sorted(c.eps.begin(), c.eps.end()) ||
        std::adjacent_find(c.eps.begin(), c.eps.end()) != c.eps.end())
        throw ConfigError(at("eps"), "list must be strictly ascending, got `" + raw["eps"].value + "`");
    const std::string zp = raw["z_policy"].value;
    if (zp == "paper") c.z_policy = ZPolicy::paper;
    else if (zp == "alternative") c.z_policy = ZPolicy::alternative;
    else throw ConfigError(at("z_policy"), "expected paper or alternative, got `" + zp + "`");
    c.out = raw["out"].value;
    c.threads = parse_int(raw["threads"].value, at("threads"));
    if (c.threads < 1) throw ConfigError(at("threads"), "must be at least 1");
    for (const char* k : {"tol_rigid", "tol_identity", "rigidity_tol", "min_l2_rate", "min_h1_rate", "slope_sbt",
                          "slope_tol_sbt", "slope_hk", "slope_tol_hk", "min_r2", "min_gap_slope"})
        c.tol[k] = positive(k);
    c.raw = std::move(raw);
    try {
        (void)c.domain();
    } catch (const PreconditionError& e) {
        throw ConfigError("domain", e.what());
    }
    return c;
}

}  // namespace torcone::cli
