#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "chs/errors.hpp"
#include "chs/grid.hpp"

namespace chs {

/// Format a double with 17 significant digits (lossless text round-trip).
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Plain-text field snapshot.
/// Line 1: `dim n1 [n2] h1 [h2] time`; then one value per line, row-major
/// (x fastest), 17 significant digits.
inline void save_snapshot(std::ostream& os, const Field& f, double time) {
    const Grid& g = f.grid;
    os << g.dim << ' ' << g.cells[0];
    if (g.dim == 2) os << ' ' << g.cells[1];
    os << ' ' << format_g17(g.h(0));
    if (g.dim == 2) os << ' ' << format_g17(g.h(1));
    os << ' ' << format_g17(time) << '\n';
    for (double x : f.v) os << format_g17(x) << '\n';
}

inline void save_snapshot(const std::string& path, const Field& f, double time) {
    std::ofstream os(path);
    if (!os) throw InvalidArgument("save_snapshot: cannot open " + path);
    save_snapshot(os, f, time);
}

struct Snapshot {
    Field field;
    double time = 0.0;
};

inline Snapshot load_snapshot(std::istream& is) {
    int dim = 0;
    if (!(is >> dim) || (dim != 1 && dim != 2))
        throw InvalidArgument("load_snapshot: bad header (dim)");
    int nx = 0, ny = 1;
    double hx = 0.0, hy = 1.0;
    if (!(is >> nx)) throw InvalidArgument("load_snapshot: bad header (n1)");
    if (dim == 2 && !(is >> ny)) throw InvalidArgument("load_snapshot: bad header (n2)");
    if (!(is >> hx)) throw InvalidArgument("load_snapshot: bad header (h1)");
    if (dim == 2 && !(is >> hy)) throw InvalidArgument("load_snapshot: bad header (h2)");
    double time = 0.0;
    if (!(is >> time)) throw InvalidArgument("load_snapshot: bad header (time)");

    Snapshot s;
    s.time = time;
    s.field = Field(dim == 1 ? Grid::make_1d(nx, nx * hx) : Grid::make_2d(nx, ny, nx * hx, ny * hy));
    for (double& x : s.field.v)
        if (!(is >> x)) throw InvalidArgument("load_snapshot: truncated value list");
    return s;
}

inline Snapshot load_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("load_snapshot: cannot open " + path);
    return load_snapshot(is);
}

}  // namespace chs
