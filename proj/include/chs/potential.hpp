#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "chs/errors.hpp"

namespace chs {

/// Double-well free-energy density split f = f1 + f2 on (0,1).
///
/// f1 is the convex part, singular at both endpoints; f2 is a smooth
/// perturbation with bounded curvature.  The default is the logarithmic
/// double well
///
///     f(r) = r ln r + (1-r) ln(1-r) + lambda r(1-r),
///
/// which has two wells for lambda > 2.  A tabulated potential can be
/// supplied instead (kind = custom_table); it interpolates user samples
/// piecewise-linearly in the derivatives and cannot represent the endpoint
/// singularities outside its node range.
enum class PotentialKind { logarithmic, custom_table };

/// Node samples for a tabulated split potential.  Nodes r must be strictly
/// increasing and lie inside (0,1); derivative samples are interpolated
/// linearly, values are interpolated consistently with the derivative
/// interpolant (exact trapezoid integral between nodes).
struct PotentialTable {
    std::vector<double> r;
    std::vector<double> f1;
    std::vector<double> f1p;
    std::vector<double> f2;
    std::vector<double> f2p;
};

struct PotentialSpec {
    PotentialKind kind = PotentialKind::logarithmic;
    double lambda = 3.0;           // weight of the smooth well f2(r) = lambda r(1-r)
    double singular_floor = 1e-12; // interior clamp used by Newton iterates, never by checks
    PotentialTable table;          // only read when kind == custom_table
};

namespace detail {

inline void require_unit_interval(double r, const char* who) {
    if (!(r > 0.0 && r < 1.0))
        throw InvalidArgument(std::string(who) + ": argument " + std::to_string(r) +
                              " outside (0,1)");
}

// Locate the interpolation cell; nodes are strictly increasing.
inline std::size_t table_cell(const std::vector<double>& nodes, double r, const char* who) {
    if (nodes.size() < 2 || r < nodes.front() || r > nodes.back())
        throw InvalidArgument(std::string(who) + ": argument outside table range");
    auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
    std::size_t k = static_cast<std::size_t>(it - nodes.begin());
    if (k == 0) k = 1;
    if (k == nodes.size()) k = nodes.size() - 1;
    return k - 1;
}

inline double lerp_at(const std::vector<double>& x, const std::vector<double>& y,
                      std::size_t k, double r) {
    const double t = (r - x[k]) / (x[k + 1] - x[k]);
    return y[k] + t * (y[k + 1] - y[k]);
}

// Value consistent with the piecewise-linear derivative: anchor value at the
// left node plus the exact integral of the linear derivative segment.
inline double integrated_at(const std::vector<double>& x, const std::vector<double>& val,
                            const std::vector<double>& der, std::size_t k, double r) {
    const double dr = r - x[k];
    const double slope = (der[k + 1] - der[k]) / (x[k + 1] - x[k]);
    return val[k] + der[k] * dr + 0.5 * slope * dr * dr;
}

}  // namespace detail

inline double f1(const PotentialSpec& spec, double r) {
    detail::require_unit_interval(r, "f1");
    if (spec.kind == PotentialKind::logarithmic)
        return r * std::log(r) + (1.0 - r) * std::log(1.0 - r);
    const auto k = detail::table_cell(spec.table.r, r, "f1");
    return detail::integrated_at(spec.table.r, spec.table.f1, spec.table.f1p, k, r);
}

inline double f1_prime(const PotentialSpec& spec, double r) {
    detail::require_unit_interval(r, "f1_prime");
    if (spec.kind == PotentialKind::logarithmic)
        return std::log(r / (1.0 - r));
    const auto k = detail::table_cell(spec.table.r, r, "f1_prime");
    return detail::lerp_at(spec.table.r, spec.table.f1p, k, r);
}

inline double f1_second(const PotentialSpec& spec, double r) {
    detail::require_unit_interval(r, "f1_second");
    if (spec.kind == PotentialKind::logarithmic)
        return 1.0 / (r * (1.0 - r));
    const auto k = detail::table_cell(spec.table.r, r, "f1_second");
    return (spec.table.f1p[k + 1] - spec.table.f1p[k]) /
           (spec.table.r[k + 1] - spec.table.r[k]);
}

inline double f2(const PotentialSpec& spec, double r) {
    detail::require_unit_interval(r, "f2");
    if (spec.kind == PotentialKind::logarithmic)
        return spec.lambda * r * (1.0 - r);
    const auto k = detail::table_cell(spec.table.r, r, "f2");
    return detail::integrated_at(spec.table.r, spec.table.f2, spec.table.f2p, k, r);
}

inline double f2_prime(const PotentialSpec& spec, double r) {
    detail::require_unit_interval(r, "f2_prime");
    if (spec.kind == PotentialKind::logarithmic)
        return spec.lambda * (1.0 - 2.0 * r);
    const auto k = detail::table_cell(spec.table.r, r, "f2_prime");
    return detail::lerp_at(spec.table.r, spec.table.f2p, k, r);
}

inline double f2_second(const PotentialSpec& spec, double r) {
    detail::require_unit_interval(r, "f2_second");
    if (spec.kind == PotentialKind::logarithmic)
        return -2.0 * spec.lambda;
    const auto k = detail::table_cell(spec.table.r, r, "f2_second");
    return (spec.table.f2p[k + 1] - spec.table.f2p[k]) /
           (spec.table.r[k + 1] - spec.table.r[k]);
}

inline double f(const PotentialSpec& spec, double r) { return f1(spec, r) + f2(spec, r); }

inline double f_prime(const PotentialSpec& spec, double r) {
    return f1_prime(spec, r) + f2_prime(spec, r);
}

inline double f_second(const PotentialSpec& spec, double r) {
    return f1_second(spec, r) + f2_second(spec, r);
}

/// M = sup over (0,1) of |f2'|.  For the logarithmic kind f2' = lambda(1-2r),
/// whose supremum over the open interval is lambda (endpoint limit).
inline double sup_abs_f2_prime(const PotentialSpec& spec) {
    if (spec.kind == PotentialKind::logarithmic)
        return spec.lambda;
    double m = 0.0;
    for (double v : spec.table.f2p) m = std::max(m, std::abs(v));
    return m;
}

/// The uniform lower barrier r* = min(rho0_min, r_M), where r_M is the unique
/// root of f1'(r) = -M.  Guarantees f1'(r*) <= -M and r* <= rho0_min, which is
/// what the per-step barrier argument needs.  Safeguarded bisection; the left
/// bracket end is returned so the inequality f1'(r*) <= -M holds exactly.
inline double lower_barrier(const PotentialSpec& spec, double rho0_min) {
    if (!(rho0_min > 0.0 && rho0_min < 1.0))
        throw InvalidArgument("lower_barrier: rho0_min must lie in (0,1), got " +
                              std::to_string(rho0_min));
    const double M = sup_abs_f2_prime(spec);

    // f1' is strictly increasing with f1'(1/2) = 0 >= -M, so r_M <= 1/2.
    double hi = 0.5;
    if (f1_prime(spec, hi) <= -M) return std::min(rho0_min, hi);

    const double lo_min =
        spec.kind == PotentialKind::custom_table ? spec.table.r.front() : 0.0;
    double lo = std::max(0.25, lo_min);
    int expand = 0;
    while (f1_prime(spec, lo) > -M) {
        if (lo <= lo_min || lo <= 1e-300)
            throw SolverFailure("lower_barrier: f1' never reaches -M on the evaluable range",
                                expand, lo);
        lo = std::max(lo * 0.125, lo_min);
        if (++expand > 200)
            throw SolverFailure("lower_barrier: could not bracket f1' = -M", expand, lo);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f1_prime(spec, mid) <= -M)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * lo) break;
    }
    return std::min(rho0_min, lo);
}

}  // namespace chs
