#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "chs/elliptic.hpp"
#include "chs/errors.hpp"
#include "chs/grid.hpp"
#include "chs/potential.hpp"

namespace chs {

namespace detail {
inline std::string format_diag(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6e", x);
    return buf;
}
}  // namespace detail

/// Simulation state: chemical potential mu >= 0 and order parameter
/// rho in (0,1) at one time instant.
struct State {
    Field mu;
    Field rho;
    double time = 0.0;
};

struct StepParams {
    double eps = 0.0;   // viscosity of the mu equation; 0 selects the limit problem
    double delta = 1.0; // viscosity of the rho equation
    double dt = 1e-3;
    double newton_tol = 1e-10; // sup-norm residual
    int newton_max_iter = 50;
    double linear_tol = 1e-10;

    void validate() const {
        if (!(eps >= 0.0 && eps <= 1.0))
            throw InvalidArgument("StepParams: eps must lie in [0,1]");
        if (!(delta > 0.0)) throw InvalidArgument("StepParams: delta must be positive");
        if (!(dt > 0.0)) throw InvalidArgument("StepParams: dt must be positive");
        if (!(newton_tol > 0.0 && linear_tol > 0.0))
            throw InvalidArgument("StepParams: tolerances must be positive");
        if (newton_max_iter < 1)
            throw InvalidArgument("StepParams: newton_max_iter must be at least 1");
    }
};

/// Optional per-step forcing, evaluated by the caller at the new time level
/// (used by the manufactured-solution harness).
struct StepSources {
    const Field* mu_source = nullptr;
    const Field* rho_source = nullptr;
};

/// Auxiliary variable u = (eps + 2 rho) .* mu.  Nonnegative whenever the state
/// invariants hold; its time derivative is what the conservative form of the
/// mu equation controls.
inline Field aux_u(const State& s, double eps) {
    Field u(s.mu.grid);
    for (std::size_t i = 0; i < u.size(); ++i)
        u.v[i] = (eps + 2.0 * s.rho.v[i]) * s.mu.v[i];
    return u;
}

/// One implicit step of the order-parameter equation:
///
///     delta (rho' - rho)/dt - laplacian(rho') + f1'(rho') = mu - f2'(rho),
///
/// with the singular convex part implicit and the smooth part explicit, so the
/// Newton system delta/dt + f1'' stays monotone.  The solution obeys the
/// discrete barrier rho' >= r* whenever mu >= 0 and rho >= r* (same
/// comparison argument as the continuous lemma: at the minimum cell the
/// Laplacian term has a sign, and f1'(r) <= -M for r <= r*).
inline Field step_rho(const State& s, const StepParams& p, const PotentialSpec& spec,
                      const Field* source = nullptr) {
    const double sigma = p.delta / p.dt;
    Field b(s.rho.grid);
    for (std::size_t i = 0; i < b.size(); ++i)
        b.v[i] = s.mu.v[i] - f2_prime(spec, s.rho.v[i]);
    if (source)
        for (std::size_t i = 0; i < b.size(); ++i) b.v[i] += source->v[i];

    SemilinearOptions opt;
    opt.tol = p.newton_tol;
    opt.max_iter = p.newton_max_iter;
    opt.linear_tol = p.linear_tol;
    opt.include_f2 = false;
    return solve_semilinear(s.rho, sigma, &s.rho, b, spec, opt).x;
}

/// One step of the chemical-potential equation in conservative form.  The
/// discrete update
///
///     (u' - u)/dt - laplacian(mu') = mu' (rho' - rho)/dt,   u' = (eps + 2 rho') mu',
///
/// collapses algebraically to the Helmholtz problem
///
///     ((eps + rho' + rho)/dt) mu' - laplacian(mu') = u/dt,
///
/// whose coefficient stays >= 2 r*/dt even at eps = 0.  The matrix is an
/// M-matrix, so u >= 0 forces mu' >= 0: positivity is a property of the
/// update, not a clamp.
inline Field step_mu(const State& s, const Field& rho_next, const StepParams& p,
                     const Field* source = nullptr) {
    Field a(s.mu.grid), rhs(s.mu.grid);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.v[i] = (p.eps + rho_next.v[i] + s.rho.v[i]) / p.dt;
        rhs.v[i] = (p.eps + 2.0 * s.rho.v[i]) * s.mu.v[i] / p.dt;
    }
    if (source)
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs.v[i] += source->v[i];
    if (!(min_value(a) > 0.0))
        throw InvalidArgument("step_mu: eps + rho' + rho must be positive "
                              "(limit problem needs inf rho0 > 0)");
    return solve_helmholtz(a, rhs, p.linear_tol);
}

/// Advance the coupled system by one time step (rho first, then mu) and check
/// the structural invariants of the result.  Throws InvariantViolation with a
/// diagnostic message if positivity, the lower barrier, or the upper bound
/// fails; throws SolverFailure if a subsolver gives up.
inline State step(const State& s, const StepParams& p, const PotentialSpec& spec,
                  const StepSources* sources = nullptr) {
    p.validate();
    const double rho_min_in = min_value(s.rho);
    if (!(max_value(s.rho) < 1.0))
        throw InvalidArgument("step: input rho must satisfy rho < 1");
    if (!(rho_min_in > 0.0))
        throw InvalidArgument(p.eps == 0.0
                                  ? "step: eps = 0 requires inf rho0 > 0 (degenerate data rejected)"
                                  : "step: input rho must satisfy rho > 0");
    const double barrier = lower_barrier(spec, rho_min_in);

    State next;
    next.rho = step_rho(s, p, spec, sources ? sources->rho_source : nullptr);
    next.mu = step_mu(s, next.rho, p, sources ? sources->mu_source : nullptr);
    next.time = s.time + p.dt;

    if (!all_finite(next.mu) || !all_finite(next.rho))
        throw InvariantViolation("step: non-finite values at t = " + std::to_string(next.time));
    const double mu_min = min_value(next.mu);
    if (mu_min < -1e-12)
        throw InvariantViolation("step: min(mu) = " + detail::format_diag(mu_min) +
                                 " < -1e-12 at t = " + std::to_string(next.time));
    const double rho_min = min_value(next.rho);
    if (rho_min < barrier - 1e-10)
        throw InvariantViolation("step: min(rho) = " + detail::format_diag(rho_min) +
                                 " below barrier r* = " + detail::format_diag(barrier) +
                                 " at t = " + std::to_string(next.time));
    const double rho_max = max_value(next.rho);
    if (rho_max > 1.0 - spec.singular_floor)
        throw InvariantViolation("step: max(rho) = " + detail::format_diag(rho_max) +
                                 " reached the upper clamp at t = " + std::to_string(next.time) +
                                 " (time step too large?)");
    return next;
}

/// Elliptic mollifier for rough initial data:
///
///     (rho0_eps - rho0)/eps - laplacian(rho0_eps) + f1'(rho0_eps) = 0,
///
/// a monotone problem solved by the same Newton engine.  As eps -> 0 the
/// output approaches rho0 wherever that is compatible with f1'.
inline Field mollify_initial_rho(const Field& rho0_raw, double eps_moll,
                                 const PotentialSpec& spec, double newton_tol = 1e-10,
                                 int newton_max_iter = 50, double linear_tol = 1e-10) {
    if (!(eps_moll > 0.0))
        throw InvalidArgument("mollify_initial_rho: eps must be positive");
    if (!(min_value(rho0_raw) > 0.0 && max_value(rho0_raw) < 1.0))
        throw InvalidArgument("mollify_initial_rho: raw data must lie in (0,1)");
    const Field zero_rhs(rho0_raw.grid, 0.0);

    SemilinearOptions opt;
    opt.tol = newton_tol;
    opt.max_iter = newton_max_iter;
    opt.linear_tol = linear_tol;
    opt.include_f2 = false;
    return solve_semilinear(rho0_raw, 1.0 / eps_moll, &rho0_raw, zero_rhs, spec, opt).x;
}

}  // namespace chs
