// Command-line front end for the viscous Cahn-Hilliard simulator.
//
// Subcommands: run | sweep-eps | long-time | mms | steady | mollify.
// Exit codes: 0 success, 2 configuration/validation error, 3 solver failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chs/chs.hpp"

namespace fs = std::filesystem;
using namespace chs;

namespace {

struct Common {
    std::string config_path;
    std::string output_dir;  // overrides the config's [output] directory when set
};

SimConfig load_config(const Common& common) {
    SimConfig cfg = common.config_path.empty() ? parse_config_text("")
                                               : parse_config(common.config_path);
    if (!common.output_dir.empty()) cfg.output_dir = common.output_dir;
    return cfg;
}

bool wants(const SimConfig& cfg, const std::string& fmt) {
    for (const auto& f : cfg.formats)
        if (f == fmt) return true;
    return false;
}

void prepare_output(const SimConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    std::ofstream rc(fs::path(cfg.output_dir) / "resolved_config.cfg");
    dump_resolved(rc, cfg);
}

void write_field_snapshot(const SimConfig& cfg, const std::string& stem, const Field& f,
                          double time) {
    save_snapshot((fs::path(cfg.output_dir) / (stem + ".txt")).string(), f, time);
}

std::string step_tag(int step) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", step);
    return buf;
}

int fail_marker(const SimConfig& cfg, std::ofstream* csv, const std::string& reason) {
    if (csv && csv->is_open()) {
        *csv << "FAILED: " << reason << '\n';
        csv->flush();
    }
    std::ofstream rep(fs::path(cfg.output_dir) / "report.txt", std::ios::app);
    rep << "FAILED: " << reason << '\n';
    std::cerr << "error: " << reason << '\n';
    return 3;
}

int cmd_run(const Common& common) {
    const SimConfig cfg = load_config(common);
    prepare_output(cfg);
    const PotentialSpec spec = make_potential(cfg);

    std::ofstream csv;
    if (wants(cfg, "csv")) {
        csv.open(fs::path(cfg.output_dir) / "diagnostics.csv");
        csv << diagnostics_csv_header() << '\n';
    }
    RunCallbacks cb;
    cb.on_step = [&](const State&, const DiagnosticsRecord& rec) {
        if (csv.is_open()) append_csv_row(csv, rec);
    };
    if (wants(cfg, "snapshots") && cfg.snapshot_stride >= 0) {
        cb.on_snapshot = [&](const State& s, int step) {
            write_field_snapshot(cfg, "snapshot_mu_" + step_tag(step), s.mu, s.time);
            write_field_snapshot(cfg, "snapshot_rho_" + step_tag(step), s.rho, s.time);
        };
    }

    try {
        const RunResult rr = run(cfg, spec, cb);
        if (wants(cfg, "report")) {
            std::ofstream rep(fs::path(cfg.output_dir) / "report.txt");
            const auto& last = rr.records.back();
            rep << "run completed\n";
            rep << "steps = " << rr.steps_taken << '\n';
            rep << "final_time = " << format_g17(rr.final_state.time) << '\n';
            rep << "barrier_r_star = " << format_g17(rr.barrier) << '\n';
            rep << "final_E = " << format_g17(last.lyapunov_E) << '\n';
            rep << "final_F = " << format_g17(last.free_energy_F) << '\n';
            rep << "min_mu_final = " << format_g17(last.min_mu) << '\n';
            rep << "min_rho_final = " << format_g17(last.min_rho) << '\n';
            rep << "dissipation_residual = "
                << format_g17(dissipation_residual(rr.records, cfg.dt)) << '\n';
        }
    } catch (const SolverFailure& e) {
        return fail_marker(cfg, &csv, e.what());
    } catch (const InvariantViolation& e) {
        return fail_marker(cfg, &csv, e.what());
    }
    return 0;
}

int cmd_sweep(const Common& common, const std::vector<double>& eps_list) {
    const SimConfig cfg = load_config(common);
    prepare_output(cfg);
    try {
        const SweepReport rep = eps_sweep(cfg, eps_list);
        std::ofstream csv(fs::path(cfg.output_dir) / "sweep.csv");
        write_sweep_csv(csv, rep);
        if (wants(cfg, "report")) {
            std::ofstream out(fs::path(cfg.output_dir) / "report.txt");
            out << "eps sweep vs the eps = 0 reference\n";
            for (std::size_t i = 0; i < rep.eps_values.size(); ++i)
                out << "eps = " << format_g17(rep.eps_values[i])
                    << "  mu_error = " << format_g17(rep.mu_errors[i])
                    << "  rho_error = " << format_g17(rep.rho_errors[i]) << '\n';
        }
    } catch (const SolverFailure& e) {
        return fail_marker(cfg, nullptr, e.what());
    } catch (const InvariantViolation& e) {
        return fail_marker(cfg, nullptr, e.what());
    }
    return 0;
}

int cmd_long_time(const Common& common, double t_max, double stall_tol) {
    const SimConfig cfg = load_config(common);
    prepare_output(cfg);
    try {
        const OmegaReport rep = long_time(cfg, t_max, stall_tol);
        std::ofstream csv(fs::path(cfg.output_dir) / "omega.csv");
        write_omega_csv(csv, rep);
        write_field_snapshot(cfg, "rho_final", rep.rho_final, rep.final_time);
        if (wants(cfg, "report")) {
            std::ofstream out(fs::path(cfg.output_dir) / "report.txt");
            out << (rep.stalled ? "stalled\n" : "did not stall by t_max\n");
            out << "final_time = " << format_g17(rep.final_time) << '\n';
            out << "mu_s = " << format_g17(rep.mu_s) << '\n';
            out << "spatial_var_mu = " << format_g17(rep.spatial_var_mu) << '\n';
            out << "match_error_vs_solve_steady = " << format_g17(rep.match_error) << '\n';
            out << "tail_grad_mu_sum = " << format_g17(rep.tail_grad_mu_sum) << '\n';
            out << "tail_dt_rho_sum = " << format_g17(rep.tail_dt_rho_sum) << '\n';
        }
    } catch (const SolverFailure& e) {
        return fail_marker(cfg, nullptr, e.what());
    } catch (const InvariantViolation& e) {
        return fail_marker(cfg, nullptr, e.what());
    }
    return 0;
}

int cmd_mms(const Common& common, int levels_space, int levels_time) {
    const SimConfig cfg = load_config(common);
    prepare_output(cfg);
    try {
        const MmsReport rep = mms_convergence(make_potential(cfg), levels_space, levels_time);
        std::ofstream csv(fs::path(cfg.output_dir) / "mms.csv");
        write_mms_csv(csv, rep);
        std::ofstream out(fs::path(cfg.output_dir) / "report.txt");
        out << "spatial_order = " << format_g17(rep.spatial_order) << '\n';
        out << "temporal_order = " << format_g17(rep.temporal_order) << '\n';
        std::cout << "spatial order  " << rep.spatial_order << "\ntemporal order "
                  << rep.temporal_order << '\n';
    } catch (const SolverFailure& e) {
        return fail_marker(cfg, nullptr, e.what());
    }
    return 0;
}

int cmd_steady(const Common& common, double mu_s, double guess) {
    const SimConfig cfg = load_config(common);
    prepare_output(cfg);
    try {
        const Grid grid = make_grid(cfg);
        if (!(guess > 0.0 && guess < 1.0))
            throw InvalidArgument("steady: --guess must lie in (0,1)");
        const Field rho_s = solve_steady(mu_s, make_potential(cfg), grid, Field(grid, guess));
        write_field_snapshot(cfg, "snapshot_steady", rho_s, 0.0);
        std::ofstream out(fs::path(cfg.output_dir) / "report.txt");
        out << "mu_s = " << format_g17(mu_s) << '\n';
        out << "rho_min = " << format_g17(min_value(rho_s)) << '\n';
        out << "rho_max = " << format_g17(max_value(rho_s)) << '\n';
    } catch (const SolverFailure& e) {
        return fail_marker(cfg, nullptr, e.what());
    }
    return 0;
}

int cmd_mollify(const Common& common, double eps_moll) {
    const SimConfig cfg = load_config(common);
    prepare_output(cfg);
    try {
        const Grid grid = make_grid(cfg);
        const Field raw = build_initial_rho(cfg, grid);
        const Field smooth = mollify_initial_rho(raw, eps_moll, make_potential(cfg),
                                                 cfg.newton_tol, cfg.newton_max_iter,
                                                 cfg.linear_tol);
        write_field_snapshot(cfg, "rho0_raw", raw, 0.0);
        write_field_snapshot(cfg, "rho0_mollified", smooth, 0.0);
        Field d(grid);
        for (std::size_t i = 0; i < d.size(); ++i) d.v[i] = smooth.v[i] - raw.v[i];
        std::ofstream out(fs::path(cfg.output_dir) / "report.txt");
        out << "eps_moll = " << format_g17(eps_moll) << '\n';
        out << "l2_change = " << format_g17(l2_norm(d)) << '\n';
    } catch (const SolverFailure& e) {
        return fail_marker(cfg, nullptr, e.what());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Viscous Cahn-Hilliard system simulator (eps >= 0, conservative form)"};
    app.require_subcommand(1);

    Common common;
    app.add_option("--config,-c", common.config_path, "configuration file (key = value sections)")
        ->capture_default_str();
    app.add_option("--output,-o", common.output_dir, "output directory override");

    auto* sc_run = app.add_subcommand("run", "advance the system to t_final, emit diagnostics");

    std::vector<double> eps_list{0.1, 0.05, 0.025, 0.0125};
    auto* sc_sweep = app.add_subcommand("sweep-eps", "eps -> 0 convergence study");
    sc_sweep->add_option("--eps", eps_list, "strictly decreasing eps values")->delimiter(',');

    double t_max = 100.0, stall_tol = 1e-6;
    auto* sc_long = app.add_subcommand("long-time", "run to stall and probe the omega-limit");
    sc_long->add_option("--t-max", t_max, "time horizon");
    sc_long->add_option("--stall-tol", stall_tol, "stall threshold on |grad mu| + ||dt rho||");

    int levels_space = 3, levels_time = 3;
    auto* sc_mms = app.add_subcommand("mms", "manufactured-solution convergence orders");
    sc_mms->add_option("--levels-space", levels_space, "spatial refinement levels (>= 3)");
    sc_mms->add_option("--levels-time", levels_time, "temporal refinement levels (>= 3)");

    double mu_s = 0.0, guess = 0.5;
    auto* sc_steady = app.add_subcommand("steady", "solve the steady-state system");
    sc_steady->add_option("--mu-s", mu_s, "constant steady chemical potential (>= 0)");
    sc_steady->add_option("--guess", guess, "homogeneous initial guess in (0,1)");

    double eps_moll = 1e-2;
    auto* sc_mollify = app.add_subcommand("mollify", "elliptic mollifier for rho0");
    sc_mollify->add_option("--eps-moll", eps_moll, "mollification parameter (> 0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sc_run->parsed()) return cmd_run(common);
        if (sc_sweep->parsed()) return cmd_sweep(common, eps_list);
        if (sc_long->parsed()) return cmd_long_time(common, t_max, stall_tol);
        if (sc_mms->parsed()) return cmd_mms(common, levels_space, levels_time);
        if (sc_steady->parsed()) return cmd_steady(common, mu_s, guess);
        if (sc_mollify->parsed()) return cmd_mollify(common, eps_moll);
    } catch (const ConfigValidationError& e) {
        std::cerr << "configuration error:\n";
        for (const auto& issue : e.issues) std::cerr << "  " << issue.locate() << '\n';
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
