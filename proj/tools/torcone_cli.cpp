// torcone_cli: solve, verify, constants, sweep and convergence runs with CSV + JSON output.
//
// Exit status: 0 all checks pass, 1 some check failed, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "torcone/experiments.hpp"

namespace fs = std::filesystem;
using namespace torcone;
using namespace torcone::cli;
using nlohmann::json;

#ifndef TORCONE_VERSION
#define TORCONE_VERSION "dev"
#endif

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path) {
        if (!os_) throw ConfigError("output", "cannot write " + path.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }

private:
    std::ofstream os_;
};

struct Check {
    std::string name;
    double value;
    std::string op;
    double threshold;
    bool pass;
};

struct Run {
    RunConfig cfg;
    fs::path out;
    std::vector<Check> checks;
    json meshes = json::array();
    std::vector<std::string> artifacts;

    void le(const std::string& n, double v, double t) { checks.push_back({n, v, "<=", t, v <= t}); }
    void ge(const std::string& n, double v, double t) { checks.push_back({n, v, ">=", t, v >= t}); }
    void flag(const std::string& n, bool ok) { checks.push_back({n, ok ? 1.0 : 0.0, "==", 1.0, ok}); }
    Csv csv(const std::string& file, const std::vector<std::string>& header) {
        artifacts.push_back(file);
        return Csv(out / file, header);
    }
    void mesh(const std::string& label, const TriMesh& m) {
        meshes.push_back({{"label", label}, {"h", mesh_size(m)}, {"triangles", m.num_triangles()},
                          {"p2_nodes", m.num_p2_nodes()}});
    }
    bool rigid() const { return cfg.amplitude == 0.0 || cfg.modes.empty(); }
};

std::shared_ptr<const TriMesh> solve_mesh(Run& run, const PolarDomain& d) {
    auto m = std::make_shared<const TriMesh>(generate_for_size(d, run.cfg.h));
    run.mesh("torsion", *m);
    return m;
}

Vec2 pick_z(const RunConfig& c, const FemSolution& u) {
    return c.z_policy == ZPolicy::paper ? center_z(u, normal_span_dim(u.mesh().domain().cone())) : alternative_center_z(u);
}

// Sign tolerance for invariants: 1e-8 times the L2 norm of u.
double sign_tol(const TorsionReport& tr) { return 1e-8 * tr.u_L2; }

void cmd_solve(Run& run) {
    const auto d = run.cfg.domain();
    const auto geo = analyze(d);
    const auto mesh = solve_mesh(run, d);
    const auto u = solve_torsion(mesh);
    const Vec2 z = pick_z(run.cfg, u);
    const auto tr = torsion_report(u, z);
    const auto db = distance_bound_check(u);
    const double h = mesh_size(*mesh);

    auto csv = run.csv("solve.csv", {"opening", "base_radius", "amplitude", "h", "p2_nodes", "cg_iterations", "area",
                                     "gamma0_length", "diameter", "R", "k", "r_interior", "r_exterior", "z_x", "z_y",
                                     "m_lower", "unu_max", "grad_max", "max_neg_u", "u_L2", "deficit_plain",
                                     "deficit_weighted", "fan_deficit_plain", "fan_deficit_weighted", "gamma1_flux",
                                     "gamma1_flux_weighted", "unu_minus_R_L2", "volume_flux", "h_mean", "grad_h_L2",
                                     "hess_h_L2", "pd_sbt", "pd_hk", "pd_hk_alt", "rho", "rho_alt", "rho_i", "rho_e",
                                     "distance_bound_margin"});
    csv.row({num(d.opening()), num(d.base_radius()), num(d.amplitude()), num(h), std::to_string(mesh->num_p2_nodes()),
             std::to_string(u.solver_stats().iterations), num(tr.area), num(tr.gamma0_length), num(geo.diameter),
             num(tr.R), std::to_string(geo.k), num(geo.r_interior), num(geo.r_exterior), num(z.x), num(z.y),
             num(tr.m_lower), num(tr.unu_max), num(tr.grad_max), num(tr.max_neg_u), num(tr.u_L2),
             num(tr.deficit_plain), num(tr.deficit_weighted), num(tr.fan_deficit_plain), num(tr.fan_deficit_weighted),
             num(tr.gamma1_flux), num(tr.gamma1_flux_weighted), num(tr.unu_minus_R_L2), num(tr.volume_flux),
             num(tr.h_mean), num(tr.grad_h_L2), num(tr.hess_h_L2), num(tr.pd.sbt), num(tr.pd.hk), num(tr.pd.hk_alt),
             num(tr.pd.rho), num(tr.pd.rho_alt), num(tr.rho_i), num(tr.rho_e), num(db.worst_margin)});

    double max_u = -1e300;
    for (double c : u.coefficients()) max_u = std::max(max_u, c);
    run.le("comparison_principle_max_u", max_u, sign_tol(tr));
    run.ge("deficit_plain_nonnegative", tr.deficit_plain, -sign_tol(tr));
    run.ge("deficit_weighted_nonnegative", tr.deficit_weighted, -sign_tol(tr));
    if (geo.r_interior > 0.0) run.ge("hopf_lower_bound", tr.m_lower, 0.95 * geo.r_interior);
    if (geo.r_exterior > 0.0) run.le("gradient_bound", tr.grad_max, gradient_bound(kDim, geo.r_exterior, geo.diameter));
    run.le("max_neg_u_bound", tr.max_neg_u, 0.5 * geo.diameter * geo.diameter);
    run.ge("distance_bound", db.worst_margin, -2.0 * h * h);
}

void write_identity(Csv& rows, Csv& terms, const IdentityReport& r, double h) {
    rows.row({r.name, num(h), num(r.lhs), num(r.rhs), num(r.residual), num(r.scale), num(r.relative_residual),
              num(r.gross_scale), num(r.gross_relative_residual), num(r.worst_sign_violation())});
    for (const auto& [side, list] : {std::pair{"lhs", &r.lhs_terms}, std::pair{"rhs", &r.rhs_terms},
                                     std::pair{"rhs_expanded", &r.rhs_expanded}})
        for (const auto& t : *list) terms.row({r.name, side, t.name, num(t.value), t.nonnegative ? "1" : "0"});
}

void cmd_verify(Run& run) {
    const auto d = run.cfg.domain();
    const int k = normal_span_dim(d.cone());
    const auto mesh = solve_mesh(run, d);
    const auto u = solve_torsion(mesh);
    const double h = mesh_size(*mesh);
    const Vec2 z = pick_z(run.cfg, u);
    const auto tr = torsion_report(u, z);

    std::vector<IdentityReport> reports;
    reports.push_back(serrin_identity(u, z));
    const auto sbt = sbt_identity(u, z);
    reports.push_back(sbt.sbt);
    reports.push_back(sbt.sbt_v2);
    const bool mc = curvature_scan(d).mean_convex();
    if (mc) reports.push_back(hk_identity(u));

    auto rows = run.csv("identities.csv", {"identity", "h", "lhs", "rhs", "residual", "scale", "relative_residual",
                                           "gross_scale", "gross_relative_residual", "worst_sign_violation"});
    auto terms = run.csv("identity_terms.csv", {"identity", "side", "term", "value", "nonnegative"});
    for (const auto& r : reports) {
        write_identity(rows, terms, r, h);
        if (run.rigid()) {
            run.le(r.name + "_gross_relative_residual", r.gross_relative_residual, run.cfg.tol.at("tol_rigid"));
            double worst = std::abs(r.rhs);
            for (const auto& t : r.lhs_terms) worst = std::max(worst, std::abs(t.value));
            run.le(r.name + "_max_term_relative", worst / r.gross_scale, run.cfg.tol.at("tol_rigid"));
        } else {
            run.le(r.name + "_relative_residual", r.relative_residual, run.cfg.tol.at("tol_identity"));
            // flat walls make the exact Gamma1 flux vanish; its discrete value is O(h) noise and is
            // gated by magnitude, the remaining sign-definite terms by sign
            double worst = 0.0, flux = 0.0;
            for (const auto& t : r.lhs_terms) {
                if (t.name.find("gamma1_flux") != std::string::npos) flux = std::max(flux, std::abs(t.value));
                else if (t.nonnegative) worst = std::min(worst, t.value);
            }
            run.ge(r.name + "_sign_definite_terms", worst, -sign_tol(tr));
            run.le(r.name + "_gamma1_flux_relative", flux / r.scale, run.cfg.tol.at("tol_identity"));
        }
    }
    if (!mc) run.flag("hk_mean_convex", false);

    const auto rig = rigidity_detector(u, run.cfg.tol.at("rigidity_tol"));
    auto rc = run.csv("rigidity.csv", {"is_rigid", "fitted_z_x", "fitted_z_y", "fitted_R", "deficit_plain"});
    rc.row({rig.is_rigid ? "1" : "0", num(rig.fitted_z.x), num(rig.fitted_z.y), num(rig.fitted_R), num(rig.deficit_plain)});
    if (run.rigid()) {
        run.flag("rigidity_detected", rig.is_rigid);
        run.le("rigidity_fitted_R_error", std::abs(rig.fitted_R - d.base_radius()), 1e-3 * d.base_radius());
        const double off = k == 2 ? norm(rig.fitted_z) : k == 1 ? std::abs(rig.fitted_z.y) : 0.0;
        run.le("rigidity_fitted_z_offset", off, 1e-3 * d.base_radius());
    }

    if (mc) {
        const double dhk = hk_deficit(d), scale = kDim * tr.area;
        run.ge("hk_deficit_nonnegative", dhk, -1e-8 * scale);
        if (run.rigid()) run.le("hk_deficit_rigid", std::abs(dhk), 1e-3 * scale);
    }

    auto rl = run.csv("reilly.csv", {"index", "value"});
    const auto rv = reilly_values(u);
    for (std::size_t i = 0; i < rv.size(); ++i) rl.row({std::to_string(i), num(rv[i])});
}

std::vector<std::string> constants_cells(const ConstantsReport& c) {
    const double nan = std::nan("");
    return {num(c.hopf.m_lower), c.hopf.available ? "1" : "0", num(c.grad_bound), num(c.max_u.bound_ii),
            num(c.max_u.bound_i), num(c.lambda2), num(c.mu2_inv), num(c.eta2_inv.value_or(nan)), num(c.Lambda2k),
            num(c.C_hk.general.value_or(nan)), num(c.C_hk.with_m.value_or(nan)), num(c.C_sbt.C_bar),
            num(c.C_sbt.C_hat), num(c.C_sbt_m ? c.C_sbt_m->C_hat : nan), num(c.zero_trace)};
}

const std::vector<std::string> kConstantsHeader = {
    "m_hopf", "hopf_available", "grad_bound", "max_u_bound_ii", "max_u_bound_i", "lambda2", "mu2_inv", "eta2_inv",
    "Lambda2k", "C_hk_general", "C_hk_with_m", "C_sbt_bar", "C_sbt_hat", "C_sbt_hat_m", "zero_trace_bound"};

void cmd_constants(Run& run) {
    const auto d = run.cfg.domain();
    const auto geo = analyze(d);
    const auto mesh = solve_mesh(run, d);
    run.mesh("constants", generate_for_size(d, run.cfg.constants_h));
    const auto u = solve_torsion(mesh);
    const auto tr = torsion_report(u, pick_z(run.cfg, u));
    const int k = run.cfg.z_policy == ZPolicy::paper ? geo.k : 0;
    const auto c = domain_constants(d, geo, k, run.cfg.constants_h, tr.unu_max, tr.max_neg_u);
    auto csv = run.csv("constants.csv", kConstantsHeader);
    csv.row(constants_cells(c));

    for (double v : {c.grad_bound, c.max_u.bound_ii, c.max_u.bound_i, c.lambda2, c.mu2_inv, c.Lambda2k, c.C_sbt.C_hat,
                     c.zero_trace})
        if (!(std::isfinite(v) && v > 0.0)) run.flag("constants_finite_positive", false);
    if (c.hopf.available) run.le("hopf_below_min_unu", c.hopf.m_lower, tr.m_lower / 0.95);
    run.ge("grad_bound_dominates", c.grad_bound, tr.grad_max);
    run.ge("max_u_bound_ii_dominates", c.max_u.bound_ii, tr.max_neg_u);
    run.ge("max_u_bound_i_dominates", c.max_u.bound_i, tr.max_neg_u);
    if (k == 1 && c.eta2_inv)
        run.le("lambda_branch_consistency",
               std::abs(c.Lambda2k - std::max(lambda_combiner(0, c.mu2_inv, std::nullopt),
                                              lambda_combiner(2, c.mu2_inv, c.eta2_inv))),
               1e-15);
}

void fit_row(Csv& csv, const std::string& name, const std::optional<FitResult>& f) {
    if (!f) {
        csv.row({name, "nan", "nan", "nan", "0"});
        return;
    }
    csv.row({name, num(f->slope), num(f->intercept), num(f->r_squared), std::to_string(f->points)});
}

void cmd_sweep(Run& run) {
    SweepOptions opt;
    opt.cone = SectorCone(run.cfg.opening);
    opt.R0 = run.cfg.base_radius;
    opt.modes = run.cfg.modes;
    opt.eps = run.cfg.eps;
    opt.h = run.cfg.h;
    opt.constants_h = run.cfg.constants_h;
    opt.z_policy = run.cfg.z_policy;
    opt.threads = run.cfg.threads;
    const auto res = stability_sweep(opt);

    std::vector<std::string> header = {"epsilon", "h", "mean_convex", "h_separated", "z_x", "z_y", "H0",
                                       "deviation_sbt", "deviation_hk", "pd_sbt", "pd_hk", "pd_hk_alt", "rho_i",
                                       "rho_e", "rho_gap", "C_sbt", "C_hk", "sbt_inequality", "hk_inequality",
                                       "serrin_relative_residual", "sbt_relative_residual", "hk_relative_residual",
                                       "deficit_plain", "hess_h_L2", "m_lower", "unu_max", "max_neg_u"};
    for (const auto& h : kConstantsHeader) header.push_back(h);
    auto csv = run.csv("sweep.csv", header);
    for (const auto& r : res.records) {
        std::vector<std::string> row = {
            num(r.epsilon), num(r.h), r.mean_convex ? "1" : "0", r.h_separated ? "1" : "0", num(r.z.x), num(r.z.y),
            num(r.H0), num(r.deviation_sbt), num(r.deviation_hk), num(r.pd_sbt), num(r.pd_hk), num(r.pd_hk_alt),
            num(r.rho_i), num(r.rho_e), num(r.rho_gap), num(r.C_sbt), num(r.C_hk), r.sbt_inequality ? "1" : "0",
            r.hk_inequality ? "1" : "0", num(r.serrin_relative_residual), num(r.sbt_relative_residual),
            num(r.hk_relative_residual), num(r.torsion.deficit_plain), num(r.torsion.hess_h_L2),
            num(r.torsion.m_lower), num(r.torsion.unu_max), num(r.torsion.max_neg_u)};
        for (auto& cell : constants_cells(r.constants)) row.push_back(std::move(cell));
        csv.row(row);
        run.meshes.push_back({{"label", "sweep eps=" + num(r.epsilon)}, {"h", r.h}});
        const std::string tag = "eps=" + num(r.epsilon);
        run.flag("sbt_inequality[" + tag + "]", r.sbt_inequality);
        run.flag("hk_inequality[" + tag + "]", r.hk_inequality);
        run.flag("h_separated[" + tag + "]", r.h_separated);
    }

    auto fits = run.csv("fits.csv", {"fit", "slope", "intercept", "r_squared", "points"});
    fit_row(fits, "pd_sbt_vs_deviation_sbt", res.fit_sbt);
    fit_row(fits, "pd_hk_vs_deviation_hk", res.fit_hk);
    fit_row(fits, "rho_gap_vs_deviation_sbt", res.fit_gap_sbt);
    fit_row(fits, "rho_gap_vs_sqrt_deviation_hk", res.fit_gap_hk);

    const auto& t = run.cfg.tol;
    if (res.fit_sbt) {
        run.le("fit_sbt_slope_error", std::abs(res.fit_sbt->slope - t.at("slope_sbt")), t.at("slope_tol_sbt"));
        run.ge("fit_sbt_r2", res.fit_sbt->r_squared, t.at("min_r2"));
    } else {
        run.flag("fit_sbt_available", false);
    }
    if (res.fit_hk) {
        run.le("fit_hk_slope_error", std::abs(res.fit_hk->slope - t.at("slope_hk")), t.at("slope_tol_hk"));
        run.ge("fit_hk_r2", res.fit_hk->r_squared, t.at("min_r2"));
    } else {
        run.flag("fit_hk_available", false);
    }
    if (res.fit_gap_sbt) run.ge("fit_gap_slope", res.fit_gap_sbt->slope, t.at("min_gap_slope"));

    json jf;
    auto fj = [](const std::optional<FitResult>& f) {
        return f ? json{{"slope", f->slope}, {"intercept", f->intercept}, {"r_squared", f->r_squared},
                        {"points", f->points}}
                 : json(nullptr);
    };
    jf["pd_sbt_vs_deviation_sbt"] = fj(res.fit_sbt);
    jf["pd_hk_vs_deviation_hk"] = fj(res.fit_hk);
    jf["rho_gap_vs_deviation_sbt"] = fj(res.fit_gap_sbt);
    jf["rho_gap_vs_sqrt_deviation_hk"] = fj(res.fit_gap_hk);
    jf["inequalities_hold"] = res.inequalities_hold;
    std::ofstream(run.out / "fits.json") << jf.dump(2) << "\n";
    run.artifacts.push_back("fits.json");
}

void cmd_convergence(Run& run) {
    const auto rows = convergence_study(SectorCone(run.cfg.opening), run.cfg.base_radius, run.cfg.h0,
                                        run.cfg.refinements);
    auto csv = run.csv("convergence.csv", {"level", "h", "p2_nodes", "l2_error", "h1_error", "l2_rate", "h1_rate",
                                           "cg_iterations"});
    for (const auto& r : rows) {
        csv.row({std::to_string(r.level), num(r.h), std::to_string(r.nodes), num(r.l2_error), num(r.h1_error),
                 num(r.l2_rate), num(r.h1_rate), std::to_string(r.cg_iterations)});
        run.meshes.push_back({{"label", "level " + std::to_string(r.level)}, {"h", r.h}, {"p2_nodes", r.nodes}});
        if (r.level > 0) {
            run.ge("l2_rate[level " + std::to_string(r.level) + "]", r.l2_rate, run.cfg.tol.at("min_l2_rate"));
            run.ge("h1_rate[level " + std::to_string(r.level) + "]", r.h1_rate, run.cfg.tol.at("min_h1_rate"));
        }
    }
}

fs::path prepare_out(const RunConfig& c) {
    std::string dir = c.out;
    if (dir.empty())
        if (const char* env = std::getenv("TORCONE_OUT"); env && *env) dir = env;
    if (dir.empty()) dir = "torcone_out";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("out", "cannot create output directory " + dir + ": " + ec.message());
    const fs::path probe = fs::path(dir) / ".write_probe";
    {
        std::ofstream p(probe);
        if (!p) throw ConfigError("out", "output directory " + dir + " is not writable");
    }
    fs::remove(probe, ec);
    return dir;
}

void write_manifest(const Run& run, int status) {
    json m;
    m["tool"] = "torcone_cli";
    m["version"] = TORCONE_VERSION;
    m["compiler"] = __VERSION__;
    m["cxx_standard"] = static_cast<long>(__cplusplus);
    m["command"] = command_name(run.cfg.command);
    json cfg = json::object();
    for (const auto& [k, e] : run.cfg.raw) cfg[k] = {{"value", e.value}, {"origin", e.origin}};
    m["config"] = cfg;
    m["meshes"] = run.meshes;
    m["artifacts"] = run.artifacts;
    json checks = json::array();
    for (const auto& c : run.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"op", c.op}, {"threshold", c.threshold}, {"pass", c.pass}});
    m["checks"] = checks;
    m["status"] = status == 0 ? "pass" : "fail";
    m["exit_status"] = status;
    std::ofstream(run.out / "manifest.json") << m.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Torsion problem in planar cones: identities, constants and stability sweeps"};
    std::string command, config_path;
    std::map<std::string, std::string> flags;
    app.set_help_flag("--help", "print this help");  // frees -h / --h for the mesh size key
    app.add_option("command", command, "solve | verify | constants | sweep | convergence");
    app.add_option("--config", config_path, "flat key = value configuration file");
    for (const auto& s : key_specs()) {
        if (std::string(s.key) == "command") continue;
        app.add_option(std::string("--") + s.key, flags[s.key], s.help);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Run run;
    try {
        RawConfig raw;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("config", "cannot open " + config_path);
            raw = parse_config_text(in, config_path);
        }
        for (const auto& [k, v] : flags)
            if (app.count("--" + k)) raw[k] = {v, "flag"};
        if (!command.empty()) raw["command"] = {command, "flag"};
        run.cfg = resolve(std::move(raw));
        run.out = prepare_out(run.cfg);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    }

    try {
        switch (run.cfg.command) {
            case Command::solve: cmd_solve(run); break;
            case Command::verify: cmd_verify(run); break;
            case Command::constants: cmd_constants(run); break;
            case Command::sweep: cmd_sweep(run); break;
            case Command::convergence: cmd_convergence(run); break;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure in " << e.where() << ": " << e.what() << "\n";
        write_manifest(run, 3);
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        write_manifest(run, 3);
        return 3;
    }

    bool ok = true;
    for (const auto& c : run.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " " << num(c.value) << " " << c.op << " "
                  << num(c.threshold) << "\n";
        ok = ok && c.pass;
    }
    const int status = ok ? 0 : 1;
    write_manifest(run, status);
    std::cout << "wrote " << run.artifacts.size() + 1 << " files to " << run.out.string() << "\n";
    return status;
}
