#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "chs/errors.hpp"

namespace chs {

/// Uniform cell-centered Cartesian mesh on an interval (dim 1) or rectangle
/// (dim 2).  Cell (ix, iy) is centered at ((ix+1/2)hx, (iy+1/2)hy); storage is
/// row-major with x fastest.
struct Grid {
    int dim = 1;
    std::array<int, 2> cells{3, 1};
    std::array<double, 2> extent{1.0, 1.0};

    static Grid make_1d(int n, double len) {
        Grid g;
        g.dim = 1;
        g.cells = {n, 1};
        g.extent = {len, 1.0};
        g.validate();
        return g;
    }

    static Grid make_2d(int nx, int ny, double lx, double ly) {
        Grid g;
        g.dim = 2;
        g.cells = {nx, ny};
        g.extent = {lx, ly};
        g.validate();
        return g;
    }

    void validate() const {
        if (dim != 1 && dim != 2)
            throw InvalidArgument("Grid: dim must be 1 or 2");
        for (int ax = 0; ax < dim; ++ax) {
            if (cells[ax] < 3)
                throw InvalidArgument("Grid: need at least 3 cells per axis");
            if (!(extent[ax] > 0.0))
                throw InvalidArgument("Grid: extent must be positive");
        }
    }

    int total_cells() const { return dim == 1 ? cells[0] : cells[0] * cells[1]; }
    double h(int axis) const { return extent[axis] / cells[axis]; }
    double cell_volume() const { return dim == 1 ? h(0) : h(0) * h(1); }
    double domain_volume() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }
    /// Center coordinate of cell index i along an axis.
    double center(int axis, int i) const { return (i + 0.5) * h(axis); }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim == b.dim && a.cells == b.cells && a.extent == b.extent;
    }
};

/// Scalar field: one value per cell, row-major (x fastest).
struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0)
        : grid(g), v(static_cast<std::size_t>(g.total_cells()), fill) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    double& at(int ix, int iy) { return v[static_cast<std::size_t>(iy) * grid.cells[0] + ix]; }
    double at(int ix, int iy) const {
        return v[static_cast<std::size_t>(iy) * grid.cells[0] + ix];
    }
};

inline double min_value(const Field& f) {
    double m = f.v[0];
    for (double x : f.v) m = std::min(m, x);
    return m;
}

inline double max_value(const Field& f) {
    double m = f.v[0];
    for (double x : f.v) m = std::max(m, x);
    return m;
}

inline bool all_finite(const Field& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Homogeneous-Neumann Laplacian: 3-point (1D) / 5-point (2D) stencil with
/// mirror ghost cells (the ghost copies the interior cell adjacent to the
/// face), so the flux through every boundary face is exactly zero.  The
/// resulting matrix is symmetric with zero row sums.
inline Field laplacian_neumann(const Field& f) {
    const Grid& g = f.grid;
    Field out(g);
    const int nx = g.cells[0];
    const double ihx2 = 1.0 / (g.h(0) * g.h(0));
    if (g.dim == 1) {
        for (int i = 0; i < nx; ++i) {
            const double c = f.v[i];
            const double w = (i > 0) ? f.v[i - 1] : c;
            const double e = (i < nx - 1) ? f.v[i + 1] : c;
            out.v[i] = (w - 2.0 * c + e) * ihx2;
        }
        return out;
    }
    const int ny = g.cells[1];
    const double ihy2 = 1.0 / (g.h(1) * g.h(1));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double c = f.at(i, j);
            const double w = (i > 0) ? f.at(i - 1, j) : c;
            const double e = (i < nx - 1) ? f.at(i + 1, j) : c;
            const double s = (j > 0) ? f.at(i, j - 1) : c;
            const double n = (j < ny - 1) ? f.at(i, j + 1) : c;
            out.at(i, j) = (w - 2.0 * c + e) * ihx2 + (s - 2.0 * c + n) * ihy2;
        }
    }
    return out;
}

inline double integrate(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * f.grid.cell_volume();
}

inline double l2_norm(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * f.grid.cell_volume());
}

/// Discrete H1 seminorm from face-centered differences; boundary faces carry
/// zero flux and do not contribute.  Satisfies the discrete Green identity
/// <-laplacian_neumann(u), u> = h1_seminorm(u)^2 exactly.
inline double h1_seminorm(const Field& f) {
    const Grid& g = f.grid;
    const int nx = g.cells[0];
    const double vol = g.cell_volume();
    double s = 0.0;
    if (g.dim == 1) {
        const double ihx2 = 1.0 / (g.h(0) * g.h(0));
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = f.v[i + 1] - f.v[i];
            s += d * d * ihx2;
        }
        return std::sqrt(s * vol);
    }
    const int ny = g.cells[1];
    const double ihx2 = 1.0 / (g.h(0) * g.h(0));
    const double ihy2 = 1.0 / (g.h(1) * g.h(1));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = f.at(i + 1, j) - f.at(i, j);
            s += d * d * ihx2;
        }
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double d = f.at(i, j + 1) - f.at(i, j);
            s += d * d * ihy2;
        }
    return std::sqrt(s * vol);
}

inline double mean(const Field& f) { return integrate(f) / f.grid.domain_volume(); }

inline double spatial_variance(const Field& f) {
    const double m = mean(f);
    double s = 0.0;
    for (double x : f.v) s += (x - m) * (x - m);
    return s * f.grid.cell_volume() / f.grid.domain_volume();
}

/// Discrete inner product <u, v> = sum u_i v_i h^dim.
inline double inner(const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.v[i] * b.v[i];
    return s * a.grid.cell_volume();
}

namespace detail {

// y = a .* x - laplacian_neumann(x), written in place without allocating.
inline void helmholtz_apply(const Field& a, const Field& x, Field& y) {
    const Grid& g = x.grid;
    const int nx = g.cells[0];
    const double ihx2 = 1.0 / (g.h(0) * g.h(0));
    if (g.dim == 1) {
        for (int i = 0; i < nx; ++i) {
            const double c = x.v[i];
            const double w = (i > 0) ? x.v[i - 1] : c;
            const double e = (i < nx - 1) ? x.v[i + 1] : c;
            y.v[i] = a.v[i] * c - (w - 2.0 * c + e) * ihx2;
        }
        return;
    }
    const int ny = g.cells[1];
    const double ihy2 = 1.0 / (g.h(1) * g.h(1));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = x.at(i, j);
            const double w = (i > 0) ? x.at(i - 1, j) : c;
            const double e = (i < nx - 1) ? x.at(i + 1, j) : c;
            const double s = (j > 0) ? x.at(i, j - 1) : c;
            const double n = (j < ny - 1) ? x.at(i, j + 1) : c;
            y.at(i, j) = a.at(i, j) * c - (w - 2.0 * c + e) * ihx2 - (s - 2.0 * c + n) * ihy2;
        }
}

// Diagonal of the Helmholtz matrix: a_i plus the stencil diagonal, which is
// smaller in boundary cells (mirror ghosts drop the corresponding term).
inline Field helmholtz_diagonal(const Field& a) {
    const Grid& g = a.grid;
    Field d(g);
    const int nx = g.cells[0];
    const double ihx2 = 1.0 / (g.h(0) * g.h(0));
    if (g.dim == 1) {
        for (int i = 0; i < nx; ++i)
            d.v[i] = a.v[i] + ((i > 0 ? 1 : 0) + (i < nx - 1 ? 1 : 0)) * ihx2;
        return d;
    }
    const int ny = g.cells[1];
    const double ihy2 = 1.0 / (g.h(1) * g.h(1));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            d.at(i, j) = a.at(i, j) + ((i > 0 ? 1 : 0) + (i < nx - 1 ? 1 : 0)) * ihx2 +
                         ((j > 0 ? 1 : 0) + (j < ny - 1 ? 1 : 0)) * ihy2;
    return d;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

/// Solve a .* v - laplacian_neumann(v) = rhs with min(a) > 0.
///
/// The matrix is a symmetric M-matrix (positive diagonal, nonpositive
/// off-diagonal, nonnegative inverse), so rhs >= 0 implies v >= 0 for the
/// exact solution.  Jacobi-preconditioned conjugate gradients, stopping at
/// ||rhs - A v||_2 <= tol ||rhs||_2.  max_iter <= 0 selects the default of
/// 10 N iterations.
inline Field solve_helmholtz(const Field& a, const Field& rhs, double tol, int max_iter = 0) {
    if (!(a.grid == rhs.grid))
        throw InvalidArgument("solve_helmholtz: coefficient and rhs grids differ");
    if (!(min_value(a) > 0.0))
        throw InvalidArgument("solve_helmholtz: coefficient field must be positive");
    if (!(tol > 0.0))
        throw InvalidArgument("solve_helmholtz: tol must be positive");

    const std::size_t n = rhs.size();
    if (max_iter <= 0) max_iter = 10 * static_cast<int>(n);

    const double rhs_norm = std::sqrt(detail::dot(rhs.v, rhs.v));
    Field x(rhs.grid);
    if (rhs_norm == 0.0) return x;

    const Field diag = detail::helmholtz_diagonal(a);
    for (std::size_t i = 0; i < n; ++i) x.v[i] = rhs.v[i] / diag.v[i];

    Field r(rhs.grid), z(rhs.grid), p(rhs.grid), Ap(rhs.grid);
    detail::helmholtz_apply(a, x, Ap);
    for (std::size_t i = 0; i < n; ++i) r.v[i] = rhs.v[i] - Ap.v[i];
    for (std::size_t i = 0; i < n; ++i) z.v[i] = r.v[i] / diag.v[i];
    p.v = z.v;
    double rz = detail::dot(r.v, z.v);

    const double stop = tol * rhs_norm;
    for (int it = 0; it < max_iter; ++it) {
        const double rnorm = std::sqrt(detail::dot(r.v, r.v));
        if (rnorm <= stop) return x;
        detail::helmholtz_apply(a, p, Ap);
        const double pAp = detail::dot(p.v, Ap.v);
        if (!(pAp > 0.0))
            throw SolverFailure("solve_helmholtz: CG breakdown (operator not SPD?)", it, rnorm);
        const double alpha = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) x.v[i] += alpha * p.v[i];
        for (std::size_t i = 0; i < n; ++i) r.v[i] -= alpha * Ap.v[i];
        for (std::size_t i = 0; i < n; ++i) z.v[i] = r.v[i] / diag.v[i];
        const double rz_next = detail::dot(r.v, z.v);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p.v[i] = z.v[i] + beta * p.v[i];
    }
    const double rnorm = std::sqrt(detail::dot(r.v, r.v));
    if (rnorm <= stop) return x;
    throw SolverFailure("solve_helmholtz: CG did not converge", max_iter, rnorm / rhs_norm);
}

}  // namespace chs
