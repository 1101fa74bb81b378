#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "chs/errors.hpp"

namespace chs {

/// Banded LU factorization with partial pivoting (LAPACK band layout:
/// A(i,j) lives at ab[(kl + ku + i - j) * n + j], with kl extra rows on top
/// for pivoting fill-in).  Used for the possibly indefinite Jacobians of the
/// steady-state Newton iteration, where CG does not apply.
class BandedLU {
public:
    BandedLU(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<std::size_t>(ldab_) * n, 0.0), ipiv_(n, 0) {}

    /// Set A(i,j); only |i - j| <= max(kl, ku) entries are addressable.
    void set(int i, int j, double v) { ab_[index(i, j)] = v; }
    double get(int i, int j) const { return ab_[index(i, j)]; }

    void factor() {
        const int band = kl_ + ku_;
        for (int j = 0; j < n_; ++j) {
            const int km = std::min(kl_, n_ - 1 - j);
            int p = 0;
            for (int q = 1; q <= km; ++q)
                if (std::abs(entry(band + q, j)) > std::abs(entry(band + p, j))) p = q;
            ipiv_[j] = j + p;
            const double piv = entry(band + p, j);
            if (piv == 0.0)
                throw SolverFailure("BandedLU: singular matrix", j, 0.0);
            if (p != 0) {
                const int jmax = std::min(j + band, n_ - 1);
                for (int c = j; c <= jmax; ++c)
                    std::swap(entry(band + j - c, c), entry(band + (j + p) - c, c));
            }
            for (int q = 1; q <= km; ++q) {
                const double m = entry(band + q, j) / entry(band, j);
                entry(band + q, j) = m;
                const int jmax = std::min(j + band, n_ - 1);
                for (int c = j + 1; c <= jmax; ++c)
                    entry(band + (j + q) - c, c) -= m * entry(band + j - c, c);
            }
        }
        factored_ = true;
    }

    std::vector<double> solve(std::vector<double> b) const {
        if (!factored_) throw InvalidArgument("BandedLU: factor() before solve()");
        const int band = kl_ + ku_;
        for (int j = 0; j < n_; ++j) {
            if (ipiv_[j] != j) std::swap(b[j], b[ipiv_[j]]);
            const int km = std::min(kl_, n_ - 1 - j);
            for (int q = 1; q <= km; ++q) b[j + q] -= entry(band + q, j) * b[j];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            const int cmax = std::min(j + band, n_ - 1);
            double s = b[j];
            for (int c = j + 1; c <= cmax; ++c) s -= entry(band + j - c, c) * b[c];
            b[j] = s / entry(band, j);
        }
        return b;
    }

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(kl_ + ku_ + i - j) * n_ + j;
    }
    double& entry(int r, int j) { return ab_[static_cast<std::size_t>(r) * n_ + j]; }
    double entry(int r, int j) const { return ab_[static_cast<std::size_t>(r) * n_ + j]; }

    int n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

}  // namespace chs
