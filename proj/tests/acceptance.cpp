// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures.  Tolerances are pinned here, in code.
//
// Usage: acceptance [--cli path/to/chs] [--configs path/to/configs]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chs/chs.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace chs;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

double l2_diff(const Field& a, const Field& b) {
    Field d(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) d.v[i] = a.v[i] - b.v[i];
    return l2_norm(d);
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

// --------------------------------------------------------------------------
// Criteria 1 and 2: positivity of mu and the uniform lower barrier on rho
// over randomized runs spanning eps in {0, 1e-3, 1e-1}.
// --------------------------------------------------------------------------
void criteria_positivity_barrier() {
    const std::vector<double> eps_set{0.0, 1e-3, 1e-1};
    const int n_seeds = 67;  // 67 seeds x 3 eps = 201 runs
    PotentialSpec spec;
    spec.lambda = 3.0;

    int runs = 0;
    double worst_mu = 0.0, worst_barrier_slack = 1e300;
    bool mu_ok = true, barrier_ok = true, rstar_consistent = true;
    std::string first_error;

    for (int seed = 0; seed < n_seeds && first_error.empty(); ++seed) {
        SimConfig c;
        if (seed % 4 == 3) {
            c.dim = 2;
            c.cells = {16, 16};
        } else {
            c.dim = 1;
            c.cells = {64, 1};
        }
        c.delta = 1.0;
        c.lambda = 3.0;
        c.dt = 1e-3;
        c.t_final = 0.02;
        c.rho0 = InitialPreset{InitialPreset::Kind::random_band, 0, 0, 0, 0, 0,
                               static_cast<std::uint64_t>(2 * seed + 1), 0.15, 0.85};
        c.mu0 = InitialPreset{InitialPreset::Kind::random_band, 0, 0, 0, 0, 0,
                              static_cast<std::uint64_t>(2 * seed + 1000), 0.0, 2.0};

        double rstar_ref = -1.0;
        for (double eps : eps_set) {
            SimConfig ce = c;
            ce.eps = eps;
            try {
                const RunResult rr = run(ce, spec);
                ++runs;
                if (rstar_ref < 0.0)
                    rstar_ref = rr.barrier;
                else if (rr.barrier != rstar_ref)
                    rstar_consistent = false;
                for (const auto& rec : rr.records) {
                    worst_mu = std::min(worst_mu, rec.min_mu);
                    worst_barrier_slack =
                        std::min(worst_barrier_slack, rec.min_rho - rr.barrier);
                    if (rec.min_mu < -1e-12) mu_ok = false;
                    if (rec.min_rho < rr.barrier - 1e-10) barrier_ok = false;
                }
            } catch (const std::exception& e) {
                first_error = e.what();
                mu_ok = barrier_ok = false;
            }
        }
    }
    report(1, "positivity of mu over randomized runs", mu_ok,
           first_error.empty()
               ? fmt("runs = %.0f, worst min(mu) = %.3e >= -1e-12", double(runs), worst_mu)
               : first_error);
    report(2, "uniform lower barrier r* on rho", barrier_ok && rstar_consistent,
           first_error.empty()
               ? fmt("worst min(rho) - r* = %.3e >= -1e-10; r* identical across eps: %.0f",
                     worst_barrier_slack, rstar_consistent ? 1.0 : 0.0)
               : first_error);
}

// --------------------------------------------------------------------------
// Criteria 3 and 4: the discrete first energy identity and the second-estimate
// balance, both O(dt) under halving on the 1D tanh preset.
// --------------------------------------------------------------------------
void criteria_energy_identities(const SimConfig& tanh1d) {
    const PotentialSpec spec = make_potential(tanh1d);
    double dis[2] = {0, 0}, bal[2] = {0, 0};
    const double dts[2] = {1e-3, 5e-4};
    for (int k = 0; k < 2; ++k) {
        SimConfig c = tanh1d;
        c.dt = dts[k];
        c.t_final = 1.0;
        const RunResult rr = run(c, spec);
        dis[k] = dissipation_residual(rr.records, c.dt);
        bal[k] = free_energy_balance_residual(rr.records, rr.mu_dtrho_work, c.dt, c.delta);
    }
    const double dis_factor = dis[0] / dis[1];
    report(3, "discrete first energy identity",
           dis[0] <= 1e-2 && dis_factor >= 1.5 && dis_factor <= 3.0,
           fmt("residual(dt=1e-3) = %.3e <= 1e-2, halving factor = %.3f in [1.5,3]", dis[0],
               dis_factor));
    const double bal_factor = bal[0] / bal[1];
    report(4, "discrete second-estimate balance is O(dt)",
           bal_factor >= 1.5 && bal_factor <= 3.0,
           fmt("residuals %.3e -> %.3e, halving factor = %.3f in [1.5,3]", bal[0], bal[1],
               bal_factor));
}

// --------------------------------------------------------------------------
// Criterion 5: manufactured-solution convergence orders.
// --------------------------------------------------------------------------
void criterion_mms() {
    PotentialSpec spec;
    spec.lambda = 3.0;
    const MmsReport rep = mms_convergence(spec, 3, 3);
    const bool pass = rep.spatial_order >= 1.8 && rep.spatial_order <= 2.2 &&
                      rep.temporal_order >= 0.8 && rep.temporal_order <= 1.2;
    report(5, "manufactured-solution verification", pass,
           fmt("spatial order = %.3f (2.0 +- 0.2), temporal order = %.3f (1.0 +- 0.2)",
               rep.spatial_order, rep.temporal_order));
}

// --------------------------------------------------------------------------
// Criterion 6: eps -> 0 convergence, tanh preset and homogeneous ODE oracle.
// --------------------------------------------------------------------------
void criterion_eps_convergence(const SimConfig& tanh1d, const SimConfig& homogeneous) {
    const std::vector<double> eps_list{0.1, 0.05, 0.025, 0.0125};
    bool pass = true;

    SimConfig c = tanh1d;
    c.t_final = 1.0;
    const SweepReport sweep = eps_sweep(c, eps_list);
    for (std::size_t i = 0; i + 1 < sweep.mu_errors.size(); ++i)
        if (!(sweep.mu_errors[i] > sweep.mu_errors[i + 1])) pass = false;
    const double ratio = sweep.mu_errors.back() / sweep.mu_errors.front();
    if (!(ratio < 0.2)) pass = false;

    // Homogeneous preset: each member run must land within 3x the
    // Richardson-estimated O(dt) bound of the two-ODE oracle.
    const PotentialSpec spec = make_potential(homogeneous);
    double worst_excess = 0.0;
    for (double eps : eps_list) {
        SimConfig m = homogeneous;
        m.eps = eps;
        const RunResult full = run(m, spec);
        SimConfig m2 = m;
        m2.dt = m.dt / 2.0;
        const RunResult half = run(m2, spec);
        const auto ode = oracle::integrate_two_ode(
            homogeneous.rho0.value, homogeneous.mu0.value, eps, homogeneous.delta,
            homogeneous.lambda, homogeneous.t_final, 1e-5);
        const double err = std::abs(full.final_state.rho.v[0] - ode.rho) +
                           std::abs(full.final_state.mu.v[0] - ode.mu);
        const double err_half = std::abs(half.final_state.rho.v[0] - ode.rho) +
                                std::abs(half.final_state.mu.v[0] - ode.mu);
        const double bound = 3.0 * std::max(2.0 * std::abs(err - err_half), 1e-12);
        worst_excess = std::max(worst_excess, err / bound);
        if (err > bound) pass = false;
    }
    report(6, "eps -> 0 convergence (subsequence limit analogue)", pass,
           fmt("mu errors strictly decreasing, final/first = %.4f < 0.2", ratio) +
               fmt("; ODE-oracle excess = %.3f <= 1", worst_excess));
}

// --------------------------------------------------------------------------
// Criterion 7: long-time / omega-limit characterization.
// --------------------------------------------------------------------------
void criterion_long_time(const SimConfig& tanh1d) {
    SimConfig c = tanh1d;
    c.eps = 0.05;
    c.dt = 0.015;
    const OmegaReport rep = long_time(c, 400.0, 1e-6);
    const bool pass = rep.stalled && rep.spatial_var_mu < 1e-8 &&
                      rep.steady_residuals.back() < 1e-6 && rep.match_error < 1e-6 &&
                      rep.tail_grad_mu_sum < 1e-8 && rep.tail_dt_rho_sum < 1e-8;
    report(7, "omega-limit is a steady state with constant mu", pass,
           fmt("var(mu) = %.2e < 1e-8, steady residual = %.3e < 1e-6, match = %.3e < 1e-6",
               rep.spatial_var_mu, rep.steady_residuals.back(), rep.match_error) +
               fmt(", tail sums %.2e / %.2e < 1e-8", rep.tail_grad_mu_sum,
                   rep.tail_dt_rho_sum));
}

// --------------------------------------------------------------------------
// Criterion 8: steady states are eps-independent fixed points of the stepper.
// --------------------------------------------------------------------------
void criterion_steady_fixed_points() {
    PotentialSpec spec;
    spec.lambda = 3.0;
    const Grid grid = Grid::make_1d(96, 1.0);
    bool pass = true;
    double worst = 0.0;
    for (double mu_s : {0.0, 0.1}) {
        const Field rho_s = solve_steady(mu_s, spec, grid, Field(grid, 0.3));
        for (double eps : {0.0, 0.1}) {
            State s;
            s.mu = Field(grid, mu_s);
            s.rho = rho_s;
            StepParams p;
            p.eps = eps;
            p.dt = 1e-2;
            const State next = step(s, p, spec);
            const double change = std::sqrt(std::pow(l2_diff(next.mu, s.mu), 2) +
                                            std::pow(l2_diff(next.rho, s.rho), 2));
            worst = std::max(worst, change);
            if (!(change < 1e-8)) pass = false;
        }
    }
    report(8, "steady states are eps-independent fixed points", pass,
           fmt("worst one-step L2 change = %.3e < 1e-8 (mu_s in {0,0.1}, eps in {0,0.1})",
               worst));
}

// --------------------------------------------------------------------------
// Criterion 9: tiny-grid oracle equivalence (dense elimination, bisection,
// high-order ODE), tolerance 1e-9.
// --------------------------------------------------------------------------
void criterion_oracles() {
    PotentialSpec spec;
    spec.lambda = 3.0;
    bool pass = true;
    double worst = 0.0;
    auto check = [&](double err) {
        worst = std::max(worst, err);
        if (!(err <= 1e-9)) pass = false;
    };

    {  // Laplacian, 3 cells, h = 1, values (0,1,2) vs dense mirror-ghost matrix.
        const Grid g = Grid::make_1d(3, 3.0);
        Field f(g);
        f.v = {0.0, 1.0, 2.0};
        const Field lap = laplacian_neumann(f);
        const auto expected = oracle::matvec(oracle::neumann_laplacian_1d(3, 1.0), f.v);
        for (int i = 0; i < 3; ++i) check(std::abs(lap.v[i] - expected[i]));
    }
    {  // Helmholtz, 3 cells vs dense elimination.
        const Grid g = Grid::make_1d(3, 3.0);
        Field a(g), rhs(g);
        a.v = {1.0, 2.0, 1.0};
        rhs.v = {1.0, 0.0, 1.0};
        const Field v = solve_helmholtz(a, rhs, 1e-13);
        auto A = oracle::neumann_laplacian_1d(3, 1.0);
        for (auto& row : A)
            for (auto& x : row) x = -x;
        for (int i = 0; i < 3; ++i) A[i][i] += a.v[i];
        const auto expected = oracle::dense_solve(A, rhs.v);
        for (int i = 0; i < 3; ++i) check(std::abs(v.v[i] - expected[i]));
    }
    {  // step_rho, 3 cells vs dense damped Newton.
        const Grid g = Grid::make_1d(3, 3.0);
        State s;
        s.mu = Field(g);
        s.rho = Field(g);
        s.mu.v = {1.0, 0.2, 0.5};
        s.rho.v = {0.3, 0.5, 0.7};
        StepParams p;
        p.delta = 0.7;
        p.dt = 0.01;
        p.newton_tol = 1e-12;
        const Field next = step_rho(s, p, spec);
        std::vector<double> gvec(3);
        for (int i = 0; i < 3; ++i) gvec[i] = s.mu.v[i] - 3.0 * (1.0 - 2.0 * s.rho.v[i]);
        const auto expected = oracle::dense_newton_rho(oracle::neumann_laplacian_1d(3, 1.0),
                                                       s.rho.v, gvec, p.delta / p.dt);
        for (int i = 0; i < 3; ++i) check(std::abs(next.v[i] - expected[i]));
    }
    {  // Lyapunov and free energy, 3 cells vs independent summation.
        const Grid g = Grid::make_1d(3, 3.0);
        State s;
        s.mu = Field(g);
        s.rho = Field(g);
        s.mu.v = {0.7, 1.3, 0.1};
        s.rho.v = {0.2, 0.6, 0.9};
        const double eps = 0.13;
        double e_exp = 0.0, f_exp = 0.0;
        for (int i = 0; i < 3; ++i) {
            e_exp += (0.5 * eps + s.rho.v[i]) * s.mu.v[i] * s.mu.v[i];
            f_exp += oracle::log_f(s.rho.v[i], 3.0);
        }
        f_exp += 0.5 * (std::pow(s.rho.v[1] - s.rho.v[0], 2) +
                        std::pow(s.rho.v[2] - s.rho.v[1], 2));
        check(std::abs(lyapunov_E(s, eps) - e_exp));
        check(std::abs(free_energy_F(s, spec) - f_exp));
    }
    {  // Homogeneous 4-cell run at tiny dt vs the RK4 two-ODE oracle.
        SimConfig c;
        c.cells = {4, 1};
        c.eps = 0.1;
        c.delta = 1.0;
        c.dt = 5e-7;
        c.t_final = 1e-3;
        c.linear_tol = 1e-14;
        c.rho0 = {InitialPreset::Kind::homogeneous, 0.3};
        c.mu0 = {InitialPreset::Kind::homogeneous, 0.5};
        const RunResult rr = run(c, spec);
        const auto ode = oracle::integrate_two_ode(0.3, 0.5, 0.1, 1.0, 3.0, 1e-3, 1e-7);
        check(std::abs(rr.final_state.rho.v[0] - ode.rho));
        check(std::abs(rr.final_state.mu.v[0] - ode.mu));
    }
    {  // Scalar bisection oracles: barrier root, mollifier, steady root.
        const double rM = oracle::bisect([](double r) { return oracle::log_f1p(r) + 3.0; },
                                         1e-8, 0.5, 1e-15);
        check(std::abs(lower_barrier(spec, 0.2) - rM));

        const Grid g = Grid::make_1d(4, 1.0);
        const Field out = mollify_initial_rho(Field(g, 0.3), 0.01, spec);
        const double moll_root = oracle::bisect(
            [](double x) { return (x - 0.3) / 0.01 + oracle::log_f1p(x); }, 1e-8, 1.0 - 1e-8,
            1e-15);
        check(std::abs(out.v[0] - moll_root));

        const Field rho_s = solve_steady(0.0, spec, g, Field(g, 0.1));
        const double steady_root = oracle::bisect(
            [](double r) { return oracle::log_fp(r, 3.0); }, 1e-3, 0.49, 1e-15);
        check(std::abs(rho_s.v[0] - steady_root));
    }
    report(9, "tiny-grid oracle equivalence", pass,
           fmt("worst |difference| = %.3e <= 1e-9", worst));
}

// --------------------------------------------------------------------------
// Criterion 10: byte-identical diagnostics.csv across repeated CLI runs.
// --------------------------------------------------------------------------
void criterion_determinism(const std::string& cli, const fs::path& configs_dir) {
    const fs::path work = fs::temp_directory_path() / "chs_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    // Short derived case so the double run stays cheap.
    SimConfig c = parse_config((configs_dir / "tanh1d.cfg").string());
    c.t_final = 0.05;
    c.snapshot_stride = 20;
    const fs::path cfg1 = work / "case1.cfg";
    const fs::path cfg2 = work / "case2.cfg";
    c.output_dir = (work / "out1").string();
    {
        std::ofstream os(cfg1);
        dump_resolved(os, c);
    }
    c.output_dir = (work / "out2").string();
    {
        std::ofstream os(cfg2);
        dump_resolved(os, c);
    }

    auto invoke = [&](const fs::path& cfg) {
        const std::string cmd = cli + " --config " + cfg.string() + " run > " +
                                (work / "stdout.txt").string() + " 2>&1";
        return std::system(cmd.c_str());
    };
    const int rc1 = invoke(cfg1);
    const int rc2 = invoke(cfg2);
    bool pass = (rc1 == 0 && rc2 == 0);
    std::string detail;
    if (!pass) {
        detail = fmt("CLI exit codes %.0f / %.0f", double(rc1), double(rc2));
    } else {
        const std::string a = read_file(work / "out1" / "diagnostics.csv");
        const std::string b = read_file(work / "out2" / "diagnostics.csv");
        pass = !a.empty() && a == b;
        detail = fmt("diagnostics.csv %.0f bytes, byte-identical", double(a.size()));
        const std::string sa = read_file(work / "out1" / "snapshot_rho_000020.txt");
        const std::string sb = read_file(work / "out2" / "snapshot_rho_000020.txt");
        if (sa.empty() || sa != sb) {
            pass = false;
            detail += ", snapshot mismatch";
        }
    }
    report(10, "repeated runs are byte-identical", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = "./chs";
    std::string configs = "configs";
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        if (key == "--cli") cli = argv[i + 1];
        if (key == "--configs") configs = argv[i + 1];
    }

    const SimConfig tanh1d = parse_config((fs::path(configs) / "tanh1d.cfg").string());
    const SimConfig homogeneous =
        parse_config((fs::path(configs) / "homogeneous.cfg").string());

    criteria_positivity_barrier();
    criteria_energy_identities(tanh1d);
    criterion_mms();
    criterion_eps_convergence(tanh1d, homogeneous);
    criterion_long_time(tanh1d);
    criterion_steady_fixed_points();
    criterion_oracles();
    criterion_determinism(cli, configs);

    std::printf("%d of 10 criteria passed\n", 10 - g_failures);
    return g_failures;
}
