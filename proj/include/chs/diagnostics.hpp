#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>

#include "chs/field_io.hpp"
#include "chs/grid.hpp"
#include "chs/potential.hpp"
#include "chs/stepper.hpp"

namespace chs {

/// Per-step diagnostic quantities; one CSV row per record.
struct DiagnosticsRecord {
    double time = 0.0;
    double lyapunov_E = 0.0;
    double free_energy_F = 0.0;
    double grad_mu_l2 = 0.0;
    double dt_rho_l2 = 0.0;
    double min_mu = 0.0;
    double min_rho = 0.0;
    double max_rho = 0.0;
    double mean_mu = 0.0;
    double spatial_var_mu = 0.0;
    double steady_residual = 0.0;
};

/// Lyapunov functional E = integral( (eps/2) mu^2 + rho mu^2 ).  The scheme
/// dissipates it exactly: E' + dt |grad mu'|^2 + 1/2 integral((eps+2rho)(mu-mu')^2) = E.
inline double lyapunov_E(const State& s, double eps) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.mu.size(); ++i) {
        const double m2 = s.mu.v[i] * s.mu.v[i];
        acc += (0.5 * eps + s.rho.v[i]) * m2;
    }
    return acc * s.mu.grid.cell_volume();
}

/// Free energy F = 1/2 |grad rho|^2 + integral f(rho), the functional whose
/// viscous gradient flow (driven by mu) the rho equation realizes.
inline double free_energy_F(const State& s, const PotentialSpec& spec) {
    double acc = 0.0;
    for (double r : s.rho.v) acc += f(spec, r);
    const double gn = h1_seminorm(s.rho);
    return 0.5 * gn * gn + acc * s.rho.grid.cell_volume();
}

/// Distance from the steady-state system: ||-lap rho + f'(rho) - mean(mu)||_2
/// plus |grad mu|.  Vanishes exactly at a steady state with constant mu.
inline double steady_residual(const State& s, const PotentialSpec& spec) {
    const Field lap = laplacian_neumann(s.rho);
    const double mu_bar = mean(s.mu);
    Field r(s.rho.grid);
    for (std::size_t i = 0; i < r.size(); ++i)
        r.v[i] = -lap.v[i] + f_prime(spec, s.rho.v[i]) - mu_bar;
    return l2_norm(r) + h1_seminorm(s.mu);
}

/// Assemble the record for `cur`; `prev` supplies the backward difference for
/// dt_rho (pass cur itself for the initial record).
inline DiagnosticsRecord make_record(const State& prev, const State& cur, double dt,
                                     double eps, const PotentialSpec& spec) {
    DiagnosticsRecord r;
    r.time = cur.time;
    r.lyapunov_E = lyapunov_E(cur, eps);
    r.free_energy_F = free_energy_F(cur, spec);
    r.grad_mu_l2 = h1_seminorm(cur.mu);
    if (&prev != &cur && dt > 0.0) {
        Field d(cur.rho.grid);
        for (std::size_t i = 0; i < d.size(); ++i)
            d.v[i] = (cur.rho.v[i] - prev.rho.v[i]) / dt;
        r.dt_rho_l2 = l2_norm(d);
    }
    r.min_mu = min_value(cur.mu);
    r.min_rho = min_value(cur.rho);
    r.max_rho = max_value(cur.rho);
    r.mean_mu = mean(cur.mu);
    r.spatial_var_mu = spatial_variance(cur.mu);
    r.steady_residual = steady_residual(cur, spec);
    return r;
}

/// Residual of the discrete first energy identity over records [0..n]:
/// | E(t_n) + sum_{k=1..n} dt grad_mu(t_k)^2 - E(0) |.  Equals the accumulated
/// numerical dissipation of the scheme; O(dt) for smooth runs.
inline double dissipation_residual(std::span<const DiagnosticsRecord> records, double dt) {
    if (records.size() < 2)
        throw InvalidArgument("dissipation_residual: need at least 2 records");
    double gsum = 0.0;
    for (std::size_t k = 1; k < records.size(); ++k)
        gsum += dt * records[k].grad_mu_l2 * records[k].grad_mu_l2;
    return std::abs(records.back().lyapunov_E + gsum - records.front().lyapunov_E);
}

/// Residual of the discrete second-estimate balance,
/// | F(t_n) + delta sum dt ||dt_rho||^2 - F(0) - sum dt integral(mu dt_rho) |,
/// where `work` holds the per-step values integral(mu_{k-1} (rho_k - rho_{k-1})/dt).
inline double free_energy_balance_residual(std::span<const DiagnosticsRecord> records,
                                           std::span<const double> work, double dt,
                                           double delta) {
    if (records.size() < 2 || work.size() + 1 != records.size())
        throw InvalidArgument("free_energy_balance_residual: inconsistent series lengths");
    double dsum = 0.0, wsum = 0.0;
    for (std::size_t k = 1; k < records.size(); ++k) {
        dsum += dt * records[k].dt_rho_l2 * records[k].dt_rho_l2;
        wsum += dt * work[k - 1];
    }
    return std::abs(records.back().free_energy_F + delta * dsum -
                    records.front().free_energy_F - wsum);
}

inline const char* diagnostics_csv_header() {
    return "time,E,F,grad_mu_l2,dt_rho_l2,min_mu,min_rho,max_rho,mean_mu,var_mu,steady_residual";
}

inline void append_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
    os << format_g17(r.time) << ',' << format_g17(r.lyapunov_E) << ','
       << format_g17(r.free_energy_F) << ',' << format_g17(r.grad_mu_l2) << ','
       << format_g17(r.dt_rho_l2) << ',' << format_g17(r.min_mu) << ','
       << format_g17(r.min_rho) << ',' << format_g17(r.max_rho) << ','
       << format_g17(r.mean_mu) << ',' << format_g17(r.spatial_var_mu) << ','
       << format_g17(r.steady_residual) << '\n';
}

}  // namespace chs
