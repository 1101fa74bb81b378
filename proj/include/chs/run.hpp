#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "chs/config.hpp"
#include "chs/diagnostics.hpp"
#include "chs/stepper.hpp"

namespace chs {

/// Streaming hooks for a trajectory; any of them may be empty.
struct RunCallbacks {
    /// Called for every record, including the initial one.
    std::function<void(const State&, const DiagnosticsRecord&)> on_step;
    /// Called for snapshots (initial state, every `snapshot_stride` steps, final state).
    std::function<void(const State&, int step_index)> on_snapshot;
    /// Checked after each step; returning true ends the run early.
    std::function<bool(const DiagnosticsRecord&)> stop_when;
};

struct RunResult {
    State final_state;
    std::vector<DiagnosticsRecord> records;  // records[0] is the initial state
    /// Per-step work integrals integral( mu_{k-1} (rho_k - rho_{k-1}) / dt ),
    /// the discrete counterpart of integral( mu dt_rho ) in the second estimate.
    std::vector<double> mu_dtrho_work;
    double barrier = 0.0;  // r* from the initial data
    int steps_taken = 0;
    bool stopped_early = false;
};

/// Validate initial data pointwise: mu0 >= 0 and 0 < rho0 < 1; the limit
/// problem (eps = 0) additionally needs inf rho0 > 0, which the strict
/// inequality already provides cellwise.
inline void validate_initial_data(const Field& mu0, const Field& rho0, double eps) {
    if (!all_finite(mu0) || !all_finite(rho0))
        throw InvalidArgument("initial data contain non-finite values");
    if (min_value(mu0) < 0.0)
        throw InvalidArgument("initial data: mu0 must be nonnegative");
    if (!(min_value(rho0) > 0.0))
        throw InvalidArgument(eps == 0.0
                                  ? "initial data: inf rho0 > 0 required for the limit problem"
                                  : "initial data: rho0 must be positive");
    if (!(max_value(rho0) < 1.0))
        throw InvalidArgument("initial data: rho0 must stay below 1");
}

/// Advance an initial state to t_final with uniform steps, emitting a record
/// per step.  Deterministic for a fixed configuration.
inline RunResult run_from(State initial, const StepParams& params, const PotentialSpec& spec,
                          double t_final, int snapshot_stride = 0,
                          const RunCallbacks& cb = {}) {
    params.validate();
    validate_initial_data(initial.mu, initial.rho, params.eps);
    if (!(t_final > initial.time))
        throw InvalidArgument("run: t_final must exceed the initial time");

    RunResult out;
    out.barrier = lower_barrier(spec, min_value(initial.rho));
    const int n_steps =
        static_cast<int>(std::ceil((t_final - initial.time) / params.dt - 1e-9));

    out.records.push_back(make_record(initial, initial, params.dt, params.eps, spec));
    if (cb.on_step) cb.on_step(initial, out.records.back());
    if (cb.on_snapshot) cb.on_snapshot(initial, 0);

    State cur = std::move(initial);
    const double t0 = cur.time;
    for (int k = 1; k <= n_steps; ++k) {
        State next = step(cur, params, spec);
        next.time = t0 + k * params.dt;  // multiply, not accumulate

        double w = 0.0;
        for (std::size_t i = 0; i < next.rho.size(); ++i)
            w += cur.mu.v[i] * (next.rho.v[i] - cur.rho.v[i]);
        out.mu_dtrho_work.push_back(w * next.mu.grid.cell_volume() / params.dt);

        out.records.push_back(make_record(cur, next, params.dt, params.eps, spec));
        cur = std::move(next);
        out.steps_taken = k;

        if (cb.on_step) cb.on_step(cur, out.records.back());
        if (cb.on_snapshot && snapshot_stride > 0 && k % snapshot_stride == 0 && k != n_steps)
            cb.on_snapshot(cur, k);
        if (cb.stop_when && cb.stop_when(out.records.back())) {
            out.stopped_early = true;
            break;
        }
    }
    if (cb.on_snapshot && out.steps_taken > 0) cb.on_snapshot(cur, out.steps_taken);
    out.final_state = std::move(cur);
    return out;
}

/// Build initial fields from the configuration's presets and run to t_final.
inline RunResult run(const SimConfig& config, const PotentialSpec& spec,
                     const RunCallbacks& cb = {}) {
    const Grid grid = make_grid(config);
    State s;
    s.mu = build_initial_mu(config, grid);
    s.rho = build_initial_rho(config, grid);
    s.time = 0.0;
    return run_from(std::move(s), make_step_params(config), spec, config.t_final,
                    config.snapshot_stride, cb);
}

inline RunResult run(const SimConfig& config, const RunCallbacks& cb = {}) {
    return run(config, make_potential(config), cb);
}

}  // namespace chs
