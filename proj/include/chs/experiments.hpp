#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "chs/config.hpp"
#include "chs/diagnostics.hpp"
#include "chs/elliptic.hpp"
#include "chs/run.hpp"
#include "chs/stepper.hpp"

namespace chs {

/// Worker cap for embarrassingly parallel experiment jobs (sweep members,
/// refinement levels).  Reads CHS_THREADS; defaults to 1.  Results do not
/// depend on the cap: every job is deterministic and slots are preassigned.
inline int worker_cap() {
    if (const char* env = std::getenv("CHS_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

namespace detail {

template <class F>
void parallel_jobs(int njobs, F&& f) {
    const int nw = std::min(worker_cap(), njobs);
    if (nw <= 1) {
        for (int i = 0; i < njobs; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < njobs;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Steady states
// ---------------------------------------------------------------------------

/// Solve the steady-state system -laplacian(rho_s) + f'(rho_s) = mu_s with
/// homogeneous Neumann conditions; mu_s is a nonnegative constant.  The same
/// system governs both eps > 0 and eps = 0.  With a nonconvex f the solution
/// depends on the basin selected by the initial guess.
inline Field solve_steady(double mu_s, const PotentialSpec& spec, const Grid& grid,
                          const Field& initial_guess, double tol = 1e-10,
                          int max_iter = 200, double linear_tol = 1e-12) {
    if (!(mu_s >= 0.0)) throw InvalidArgument("solve_steady: mu_s must be nonnegative");
    if (!(initial_guess.grid == grid))
        throw InvalidArgument("solve_steady: guess does not match the grid");
    if (!(min_value(initial_guess) > 0.0 && max_value(initial_guess) < 1.0))
        throw InvalidArgument("solve_steady: guess must lie in (0,1)");
    Field b(grid, mu_s);
    SemilinearOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.linear_tol = linear_tol;
    opt.include_f2 = true;
    return solve_semilinear(initial_guess, 0.0, nullptr, b, spec, opt).x;
}

// ---------------------------------------------------------------------------
// eps -> 0 sweep
// ---------------------------------------------------------------------------

struct SweepReport {
    std::vector<double> eps_values;       // strictly decreasing
    std::vector<double> mu_errors;        // discrete L2(0,T;L2) vs the eps = 0 run
    std::vector<double> rho_errors;
    std::vector<double> empirical_rates;  // log2(err_i / err_{i+1}), size n-1
};

/// Run the configuration for each listed eps and for the eps = 0 reference on
/// the same grid, time step, and initial data; report space-time L2
/// discrepancies.  Members run as independent jobs.
inline SweepReport eps_sweep(const SimConfig& base_config, std::vector<double> eps_list) {
    if (eps_list.empty()) throw InvalidArgument("eps_sweep: empty eps list");
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
        if (!(eps_list[i] > eps_list[i + 1]))
            throw InvalidArgument("eps_sweep: eps list must be strictly decreasing");
    for (double e : eps_list)
        if (!(e >= 0.0 && e <= 1.0))
            throw InvalidArgument("eps_sweep: eps values must lie in [0,1]");

    const PotentialSpec spec = make_potential(base_config);

    // Reference trajectory at eps = 0, stored densely (desk scale).
    std::vector<Field> ref_mu, ref_rho;
    {
        SimConfig ref = base_config;
        ref.eps = 0.0;
        RunCallbacks cb;
        cb.on_step = [&](const State& s, const DiagnosticsRecord&) {
            ref_mu.push_back(s.mu);
            ref_rho.push_back(s.rho);
        };
        run(ref, spec, cb);
    }

    SweepReport report;
    report.eps_values = eps_list;
    report.mu_errors.assign(eps_list.size(), 0.0);
    report.rho_errors.assign(eps_list.size(), 0.0);

    detail::parallel_jobs(static_cast<int>(eps_list.size()), [&](int j) {
        SimConfig member = base_config;
        member.eps = eps_list[static_cast<std::size_t>(j)];
        double mu_sq = 0.0, rho_sq = 0.0;
        std::size_t k = 0;
        RunCallbacks cb;
        cb.on_step = [&](const State& s, const DiagnosticsRecord&) {
            if (k >= ref_mu.size())
                throw InvalidArgument("eps_sweep: trajectory lengths differ");
            if (k > 0) {  // identical initial data contribute nothing
                Field dmu(s.mu.grid), drho(s.rho.grid);
                for (std::size_t i = 0; i < dmu.size(); ++i) {
                    dmu.v[i] = s.mu.v[i] - ref_mu[k].v[i];
                    drho.v[i] = s.rho.v[i] - ref_rho[k].v[i];
                }
                const double nm = l2_norm(dmu), nr = l2_norm(drho);
                mu_sq += member.dt * nm * nm;
                rho_sq += member.dt * nr * nr;
            }
            ++k;
        };
        run(member, spec, cb);
        report.mu_errors[static_cast<std::size_t>(j)] = std::sqrt(mu_sq);
        report.rho_errors[static_cast<std::size_t>(j)] = std::sqrt(rho_sq);
    });

    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i) {
        const double a = report.mu_errors[i], b = report.mu_errors[i + 1];
        report.empirical_rates.push_back((a > 0.0 && b > 0.0) ? std::log2(a / b) : 0.0);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Long-time behavior / omega-limit probe
// ---------------------------------------------------------------------------

struct OmegaReport {
    std::vector<double> probe_times;       // dyadic record times 2^j dt, plus the final time
    std::vector<double> steady_residuals;  // at the probe times
    std::vector<double> grad_mu_norms;
    std::vector<double> dt_rho_norms;
    double mu_s = 0.0;            // mean(mu(T)): the constant steady chemical potential
    Field rho_final;              // rho(T)
    double match_error = 0.0;     // ||rho(T) - solve_steady(mu_s, guess rho(T))||_2
    double spatial_var_mu = 0.0;  // at the final time
    double final_time = 0.0;
    bool stalled = false;
    double tail_grad_mu_sum = 0.0;  // sum dt |grad mu|^2 over the last quarter of the run
    double tail_dt_rho_sum = 0.0;   // sum dt ||dt rho||^2 over the last quarter
};

/// Follow one trajectory until `t_max` or until grad_mu_l2 + dt_rho_l2 drops
/// below `stall_tol`; then compare the final state against the steady solver.
/// Non-stall by t_max is reported, not fatal.
inline OmegaReport long_time(const SimConfig& config, double t_max, double stall_tol) {
    if (!(t_max > 0.0)) throw InvalidArgument("long_time: t_max must be positive");
    if (!(stall_tol > 0.0)) throw InvalidArgument("long_time: stall_tol must be positive");
    const PotentialSpec spec = make_potential(config);

    SimConfig cfg = config;
    cfg.t_final = t_max;
    RunCallbacks cb;
    cb.stop_when = [&](const DiagnosticsRecord& r) {
        return r.grad_mu_l2 + r.dt_rho_l2 < stall_tol;
    };
    RunResult rr = run(cfg, spec, cb);

    OmegaReport rep;
    rep.stalled = rr.stopped_early;
    rep.final_time = rr.final_state.time;
    for (std::size_t j = 1; j < rr.records.size(); j *= 2) {
        rep.probe_times.push_back(rr.records[j].time);
        rep.steady_residuals.push_back(rr.records[j].steady_residual);
        rep.grad_mu_norms.push_back(rr.records[j].grad_mu_l2);
        rep.dt_rho_norms.push_back(rr.records[j].dt_rho_l2);
    }
    if (rr.records.size() > 1) {
        const auto& last = rr.records.back();
        if (rep.probe_times.empty() || rep.probe_times.back() != last.time) {
            rep.probe_times.push_back(last.time);
            rep.steady_residuals.push_back(last.steady_residual);
            rep.grad_mu_norms.push_back(last.grad_mu_l2);
            rep.dt_rho_norms.push_back(last.dt_rho_l2);
        }
    }

    rep.mu_s = mean(rr.final_state.mu);
    rep.spatial_var_mu = spatial_variance(rr.final_state.mu);
    rep.rho_final = rr.final_state.rho;
    try {
        const Field steady = solve_steady(std::max(rep.mu_s, 0.0), spec,
                                          rr.final_state.rho.grid, rr.final_state.rho);
        Field diff(rr.final_state.rho.grid);
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff.v[i] = rr.final_state.rho.v[i] - steady.v[i];
        rep.match_error = l2_norm(diff);
    } catch (const SolverFailure&) {
        // Mid-transient states need not sit near any steady state; report
        // the miss instead of failing the whole probe.
        rep.match_error = std::numeric_limits<double>::infinity();
    }

    const std::size_t n = rr.records.size();
    for (std::size_t k = n - (n - 1) / 4; k < n; ++k) {
        rep.tail_grad_mu_sum += cfg.dt * rr.records[k].grad_mu_l2 * rr.records[k].grad_mu_l2;
        rep.tail_dt_rho_sum += cfg.dt * rr.records[k].dt_rho_l2 * rr.records[k].dt_rho_l2;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Method of manufactured solutions
// ---------------------------------------------------------------------------

/// Manufactured solution on the unit interval:
///     mu*(x,t)  = 2 + cos(pi x) e^{-t}        (> 0, Neumann-compatible)
///     rho*(x,t) = 1/2 + 1/4 cos(pi x) e^{-t}  (in (0.25, 0.75))
struct MmsExact {
    static double mu(double x, double t) { return 2.0 + std::cos(M_PI * x) * std::exp(-t); }
    static double rho(double x, double t) {
        return 0.5 + 0.25 * std::cos(M_PI * x) * std::exp(-t);
    }
    static double dt_mu(double x, double t) { return -std::cos(M_PI * x) * std::exp(-t); }
    static double dt_rho(double x, double t) {
        return -0.25 * std::cos(M_PI * x) * std::exp(-t);
    }
    static double lap_mu(double x, double t) {
        return -M_PI * M_PI * std::cos(M_PI * x) * std::exp(-t);
    }
    static double lap_rho(double x, double t) {
        return -0.25 * M_PI * M_PI * std::cos(M_PI * x) * std::exp(-t);
    }
};

struct MmsRunErrors {
    double mu_error = 0.0;   // final-time L2 errors at cell centers
    double rho_error = 0.0;
};

/// Run the forced system so that the manufactured pair solves it exactly;
/// sources enter both equations and are evaluated at the new time level.
inline MmsRunErrors mms_forced_run(const PotentialSpec& spec, int n_cells, double dt,
                                   double t_final, double eps, double delta) {
    const Grid grid = Grid::make_1d(n_cells, 1.0);
    StepParams params;
    params.eps = eps;
    params.delta = delta;
    params.dt = dt;

    State s;
    s.mu = Field(grid);
    s.rho = Field(grid);
    for (int i = 0; i < n_cells; ++i) {
        const double x = grid.center(0, i);
        s.mu.v[static_cast<std::size_t>(i)] = MmsExact::mu(x, 0.0);
        s.rho.v[static_cast<std::size_t>(i)] = MmsExact::rho(x, 0.0);
    }

    const int n_steps = static_cast<int>(std::llround(t_final / dt));
    Field src_mu(grid), src_rho(grid);
    for (int k = 1; k <= n_steps; ++k) {
        const double t_new = k * dt;
        for (int i = 0; i < n_cells; ++i) {
            const double x = grid.center(0, i);
            const double mu = MmsExact::mu(x, t_new);
            const double rho = MmsExact::rho(x, t_new);
            const double dmu = MmsExact::dt_mu(x, t_new);
            const double drho = MmsExact::dt_rho(x, t_new);
            // d/dt(eps mu + 2 mu rho) - lap mu - mu d/dt rho
            src_mu.v[static_cast<std::size_t>(i)] =
                eps * dmu + 2.0 * (dmu * rho + mu * drho) - MmsExact::lap_mu(x, t_new) -
                mu * drho;
            // delta d/dt rho - lap rho + f'(rho) - mu
            src_rho.v[static_cast<std::size_t>(i)] =
                delta * drho - MmsExact::lap_rho(x, t_new) + f_prime(spec, rho) - mu;
        }
        StepSources sources{&src_mu, &src_rho};
        s = step(s, params, spec, &sources);
    }

    MmsRunErrors err;
    Field dmu(grid), drho(grid);
    const double T = n_steps * dt;
    for (int i = 0; i < n_cells; ++i) {
        const double x = grid.center(0, i);
        dmu.v[static_cast<std::size_t>(i)] = s.mu.v[static_cast<std::size_t>(i)] - MmsExact::mu(x, T);
        drho.v[static_cast<std::size_t>(i)] =
            s.rho.v[static_cast<std::size_t>(i)] - MmsExact::rho(x, T);
    }
    err.mu_error = l2_norm(dmu);
    err.rho_error = l2_norm(drho);
    return err;
}

struct MmsReport {
    std::vector<int> spatial_cells;
    std::vector<double> spatial_errors;   // combined sqrt(e_mu^2 + e_rho^2)
    std::vector<double> temporal_dts;
    std::vector<double> temporal_errors;
    double spatial_order = 0.0;   // least-squares slopes
    double temporal_order = 0.0;
};

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Verification by manufactured solutions: a spatial study with dt tied to h^2
/// (so the first-order time error stays subdominant) and a temporal study on a
/// fine fixed grid.  Orders are least-squares fits of log(error).
inline MmsReport mms_convergence(const PotentialSpec& spec, int levels_space = 3,
                                 int levels_time = 3) {
    if (levels_space < 3 || levels_time < 3)
        throw InvalidArgument("mms_convergence: need at least 3 refinement levels");
    const double eps = 0.1, delta = 1.0;

    MmsReport rep;
    rep.spatial_cells.resize(static_cast<std::size_t>(levels_space));
    rep.spatial_errors.resize(static_cast<std::size_t>(levels_space));
    for (int l = 0; l < levels_space; ++l)
        rep.spatial_cells[static_cast<std::size_t>(l)] = 32 << l;
    detail::parallel_jobs(levels_space, [&](int l) {
        const int n = rep.spatial_cells[static_cast<std::size_t>(l)];
        const double h = 1.0 / n;
        const double dt = 0.2 * h * h;
        const auto e = mms_forced_run(spec, n, dt, 0.1, eps, delta);
        rep.spatial_errors[static_cast<std::size_t>(l)] =
            std::hypot(e.mu_error, e.rho_error);
    });

    rep.temporal_dts.resize(static_cast<std::size_t>(levels_time));
    rep.temporal_errors.resize(static_cast<std::size_t>(levels_time));
    for (int l = 0; l < levels_time; ++l)
        rep.temporal_dts[static_cast<std::size_t>(l)] = 0.05 / (1 << l);
    detail::parallel_jobs(levels_time, [&](int l) {
        const double dt = rep.temporal_dts[static_cast<std::size_t>(l)];
        const auto e = mms_forced_run(spec, 256, dt, 0.4, eps, delta);
        rep.temporal_errors[static_cast<std::size_t>(l)] =
            std::hypot(e.mu_error, e.rho_error);
    });

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < rep.spatial_errors.size(); ++i) {
        lx.push_back(std::log(1.0 / rep.spatial_cells[i]));
        ly.push_back(std::log(rep.spatial_errors[i]));
    }
    rep.spatial_order = detail::ls_slope(lx, ly);
    lx.clear();
    ly.clear();
    for (std::size_t i = 0; i < rep.temporal_errors.size(); ++i) {
        lx.push_back(std::log(rep.temporal_dts[i]));
        ly.push_back(std::log(rep.temporal_errors[i]));
    }
    rep.temporal_order = detail::ls_slope(lx, ly);
    return rep;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline void write_sweep_csv(std::ostream& os, const SweepReport& r) {
    os << "eps,mu_error,rho_error,rate\n";
    for (std::size_t i = 0; i < r.eps_values.size(); ++i) {
        os << format_g17(r.eps_values[i]) << ',' << format_g17(r.mu_errors[i]) << ','
           << format_g17(r.rho_errors[i]) << ',';
        if (i + 1 < r.eps_values.size()) os << format_g17(r.empirical_rates[i]);
        os << '\n';
    }
}

inline void write_omega_csv(std::ostream& os, const OmegaReport& r) {
    os << "probe_time,steady_residual,grad_mu_l2,dt_rho_l2\n";
    for (std::size_t i = 0; i < r.probe_times.size(); ++i)
        os << format_g17(r.probe_times[i]) << ',' << format_g17(r.steady_residuals[i]) << ','
           << format_g17(r.grad_mu_norms[i]) << ',' << format_g17(r.dt_rho_norms[i]) << '\n';
}

inline void write_mms_csv(std::ostream& os, const MmsReport& r) {
    os << "study,level,error\n";
    for (std::size_t i = 0; i < r.spatial_errors.size(); ++i)
        os << "space," << r.spatial_cells[i] << ',' << format_g17(r.spatial_errors[i]) << '\n';
    for (std::size_t i = 0; i < r.temporal_errors.size(); ++i)
        os << "time," << format_g17(r.temporal_dts[i]) << ','
           << format_g17(r.temporal_errors[i]) << '\n';
}

}  // namespace chs
