#pragma once

#include <algorithm>
#include <cmath>

#include "chs/banded.hpp"
#include "chs/errors.hpp"
#include "chs/grid.hpp"
#include "chs/potential.hpp"

namespace chs {

/// Damped Newton solver for the semilinear Neumann problem
///
///     sigma (x - x_ref) - laplacian(x) + phi'(x) = b,     x in (0,1) cellwise,
///
/// where phi' is either f1' alone (implicit singular part; the rho step and
/// the initial-data mollifier) or the full f' (steady states).
///
/// With phi = f1 the Jacobian diag(sigma + f1''(x)) - laplacian is a symmetric
/// positive definite M-matrix (f1'' > 0), so the Newton system is solved by
/// CG.  With phi = f the curvature f'' changes sign and the Jacobian can be
/// indefinite -- steady interface profiles are saddle points of the energy --
/// so the system is solved by a banded direct factorization and the iteration
/// remains a genuine root finder that converges to unstable steady states too.
///
/// Globalization: the step is halved until the iterate stays inside
/// [floor, 1-floor] and the residual 2-norm satisfies an Armijo-type decrease
/// (the Newton direction is a descent direction for ||F|| whenever the
/// Jacobian is nonsingular).
struct SemilinearOptions {
    double tol = 1e-10;  // sup-norm of the residual
    int max_iter = 50;
    double linear_tol = 1e-10;  // CG tolerance (SPD branch only)
    int max_halvings = 60;
    bool include_f2 = false;  // false: phi = f1; true: phi = f
};

struct SemilinearResult {
    Field x;
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline double phi_prime(const PotentialSpec& spec, double r, bool include_f2) {
    return include_f2 ? f_prime(spec, r) : f1_prime(spec, r);
}
inline double phi_second(const PotentialSpec& spec, double r, bool include_f2) {
    return include_f2 ? f_second(spec, r) : f1_second(spec, r);
}

// Newton step through the banded Jacobian diag(coeff) - laplacian (possibly
// indefinite); bandwidth 1 in 1D, nx in 2D.
inline Field banded_newton_step(const Field& coeff, const Field& negF) {
    const Grid& g = coeff.grid;
    const int n = g.total_cells();
    const int nx = g.cells[0];
    const int band = (g.dim == 1) ? 1 : nx;
    BandedLU lu(n, band, band);
    const double ihx2 = 1.0 / (g.h(0) * g.h(0));
    const double ihy2 = (g.dim == 2) ? 1.0 / (g.h(1) * g.h(1)) : 0.0;
    const int ny = (g.dim == 2) ? g.cells[1] : 1;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int c = j * nx + i;
            double diag = coeff.v[static_cast<std::size_t>(c)];
            if (i > 0) {
                diag += ihx2;
                lu.set(c, c - 1, -ihx2);
            }
            if (i < nx - 1) {
                diag += ihx2;
                lu.set(c, c + 1, -ihx2);
            }
            if (g.dim == 2) {
                if (j > 0) {
                    diag += ihy2;
                    lu.set(c, c - nx, -ihy2);
                }
                if (j < ny - 1) {
                    diag += ihy2;
                    lu.set(c, c + nx, -ihy2);
                }
            }
            lu.set(c, c, diag);
        }
    lu.factor();
    Field d(g);
    d.v = lu.solve(negF.v);
    return d;
}

}  // namespace detail

inline SemilinearResult solve_semilinear(Field x0, double sigma, const Field* x_ref,
                                         const Field& b, const PotentialSpec& spec,
                                         const SemilinearOptions& opt) {
    const Grid& g = x0.grid;
    const std::size_t n = x0.size();
    const double lo = spec.singular_floor;
    const double hi = 1.0 - spec.singular_floor;
    if (sigma > 0.0 && x_ref == nullptr)
        throw InvalidArgument("solve_semilinear: sigma > 0 requires a reference field");

    for (double& x : x0.v) x = std::clamp(x, lo, hi);

    auto residual_field = [&](const Field& x, Field& out) {
        Field lap = laplacian_neumann(x);
        for (std::size_t i = 0; i < n; ++i) {
            double r = -lap.v[i] + detail::phi_prime(spec, x.v[i], opt.include_f2) - b.v[i];
            if (sigma > 0.0) r += sigma * (x.v[i] - x_ref->v[i]);
            out.v[i] = r;
        }
    };
    auto sup_norm = [&](const Field& f) {
        double m = 0.0;
        for (double x : f.v) m = std::max(m, std::abs(x));
        return m;
    };
    auto two_norm = [&](const Field& f) {
        double s = 0.0;
        for (double x : f.v) s += x * x;
        return std::sqrt(s);
    };

    Field F(g), coeff(g), trial(g), Ft(g);
    residual_field(x0, F);
    double res = sup_norm(F);

    for (int it = 0; it < opt.max_iter; ++it) {
        if (res <= opt.tol) return {std::move(x0), it, res};

        for (std::size_t i = 0; i < n; ++i)
            coeff.v[i] = sigma + detail::phi_second(spec, x0.v[i], opt.include_f2);
        Field negF(g);
        for (std::size_t i = 0; i < n; ++i) negF.v[i] = -F.v[i];

        Field d(g);
        if (opt.include_f2) {
            d = detail::banded_newton_step(coeff, negF);
        } else {
            // sigma + f1'' >= f1'' > 0: SPD M-matrix, CG applies.
            d = solve_helmholtz(coeff, negF, opt.linear_tol);
        }

        const double g0 = two_norm(F);
        double alpha = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings <= opt.max_halvings; ++halvings) {
            bool feasible = true;
            for (std::size_t i = 0; i < n; ++i) {
                trial.v[i] = x0.v[i] + alpha * d.v[i];
                if (trial.v[i] < lo || trial.v[i] > hi) {
                    feasible = false;
                    break;
                }
            }
            if (feasible) {
                residual_field(trial, Ft);
                const double gt = two_norm(Ft);
                if (gt <= (1.0 - 1e-4 * alpha) * g0 + 1e-14 * (1.0 + g0)) {
                    x0.v.swap(trial.v);
                    F.v.swap(Ft.v);
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw SolverFailure("solve_semilinear: line search failed (iterate cannot stay "
                                "inside (0,1) or the residual does not decrease)",
                                it, res);
        res = sup_norm(F);
    }
    if (res <= opt.tol) return {std::move(x0), opt.max_iter, res};
    throw SolverFailure("solve_semilinear: Newton did not converge", opt.max_iter, res);
}

}  // namespace chs
