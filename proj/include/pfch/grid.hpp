// Cell-centered uniform 2D grid, scalar fields and the discrete elliptic
// operators in conservative flux form (mirror ghosts for Neumann, ghost = -u
// for homogeneous Dirichlet).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfch {

enum class Bc { NeumannZero, DirichletZero };

inline constexpr std::int64_t kDefaultMaxCells = std::int64_t(1) << 22;

struct GridSpec {
    int nx = 0, ny = 0;
    double lx = 0, ly = 0;
    double hx = 0, hy = 0;

    static GridSpec make(int nx, int ny, double lx, double ly,
                         std::int64_t max_cells = kDefaultMaxCells) {
        if (nx < 4 || ny < 4)
            throw std::invalid_argument("GridSpec: nx and ny must be >= 4");
        if (!(lx > 0) || !(ly > 0))
            throw std::invalid_argument("GridSpec: lx and ly must be > 0");
        if (std::int64_t(nx) * std::int64_t(ny) > max_cells)
            throw std::invalid_argument("GridSpec: nx*ny exceeds the cell cap (" +
                                        std::to_string(max_cells) + ")");
        GridSpec g;
        g.nx = nx; g.ny = ny; g.lx = lx; g.ly = ly;
        g.hx = lx / nx; g.hy = ly / ny;
        return g;
    }

    int cells() const { return nx * ny; }
    int id(int i, int j) const { return j * nx + i; }
    double xc(int i) const { return (i + 0.5) * hx; }
    double yc(int j) const { return (j + 0.5) * hy; }
    double area() const { return lx * ly; }
    double cell_area() const { return hx * hy; }

    bool same(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
    }
};

struct ScalarField {
    GridSpec grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, double fill = 0.0)
        : grid(g), v(size_t(g.cells()), fill) {}

    double& operator()(int i, int j) { return v[size_t(grid.id(i, j))]; }
    double operator()(int i, int j) const { return v[size_t(grid.id(i, j))]; }
    size_t size() const { return v.size(); }
};

// Face-indexed coefficient storage. x-face (i,j), i in 0..nx, sits between
// cells (i-1,j) and (i,j); y-face (i,j), j in 0..ny, between (i,j-1) and (i,j).
struct FaceCoefficients {
    GridSpec grid;
    std::vector<double> x;  // (nx+1)*ny
    std::vector<double> y;  // nx*(ny+1)

    FaceCoefficients() = default;
    explicit FaceCoefficients(const GridSpec& g, double fill = 0.0)
        : grid(g),
          x(size_t((g.nx + 1) * g.ny), fill),
          y(size_t(g.nx * (g.ny + 1)), fill) {}

    int xid(int i, int j) const { return j * (grid.nx + 1) + i; }
    int yid(int i, int j) const { return j * grid.nx + i; }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* who) {
    if (!a.same(b)) throw std::invalid_argument(std::string(who) + ": grid mismatch");
}

inline double mean(const ScalarField& f) {
    double s = 0;
    for (double x : f.v) s += x;
    return s * f.grid.cell_area() / f.grid.area();
}

inline void subtract_mean(ScalarField& f) {
    double m = mean(f);
    for (double& x : f.v) x -= m;
}

// Discrete L2 product: hx*hy * sum f_i g_i.
inline double inner(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f.grid, g.grid, "inner");
    double s = 0;
    for (size_t n = 0; n < f.v.size(); ++n) s += f.v[n] * g.v[n];
    return s * f.grid.cell_area();
}

inline double norm_h(const ScalarField& f) { return std::sqrt(inner(f, f)); }

inline double max_abs(const ScalarField& f) {
    double m = 0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

// 5-point Laplacian with mirrored ghost cells (zero normal derivative).
inline void laplace_neumann_into(const ScalarField& f, ScalarField& out) {
    const GridSpec& g = f.grid;
    if (!out.grid.same(g)) out = ScalarField(g);
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    const double* u = f.v.data();
    double* o = out.v.data();
    for (int j = 0; j < g.ny; ++j) {
        const int row = j * g.nx;
        for (int i = 0; i < g.nx; ++i) {
            const int n = row + i;
            const double c = u[n];
            const double uw = (i > 0) ? u[n - 1] : c;
            const double ue = (i < g.nx - 1) ? u[n + 1] : c;
            const double us = (j > 0) ? u[n - g.nx] : c;
            const double un = (j < g.ny - 1) ? u[n + g.nx] : c;
            o[n] = ax * (uw - 2.0 * c + ue) + ay * (us - 2.0 * c + un);
        }
    }
}

inline ScalarField laplace_neumann(const ScalarField& f) {
    ScalarField out(f.grid);
    laplace_neumann_into(f, out);
    return out;
}

// -div(k grad u) by flux differencing on faces.
inline void apply_elliptic_into(const FaceCoefficients& k, const ScalarField& u,
                                Bc bc, ScalarField& out) {
    const GridSpec& g = u.grid;
    require_same_grid(k.grid, g, "apply_elliptic");
    if (!out.grid.same(g)) out = ScalarField(g);
    const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
    const bool dir = (bc == Bc::DirichletZero);
    const double* uv = u.v.data();
    double* o = out.v.data();
    for (int j = 0; j < g.ny; ++j) {
        const int row = j * g.nx;
        const int xrow = j * (g.nx + 1);
        for (int i = 0; i < g.nx; ++i) {
            const int n = row + i;
            const double c = uv[n];
            // face gradients; ghost = c (Neumann) or -c (Dirichlet)
            double gw, ge, gs, gn;
            gw = (i > 0) ? (c - uv[n - 1]) * ihx : (dir ? 2.0 * c * ihx : 0.0);
            ge = (i < g.nx - 1) ? (uv[n + 1] - c) * ihx : (dir ? -2.0 * c * ihx : 0.0);
            gs = (j > 0) ? (c - uv[n - g.nx]) * ihy : (dir ? 2.0 * c * ihy : 0.0);
            gn = (j < g.ny - 1) ? (uv[n + g.nx] - c) * ihy : (dir ? -2.0 * c * ihy : 0.0);
            const double qw = k.x[size_t(xrow + i)] * gw;
            const double qe = k.x[size_t(xrow + i + 1)] * ge;
            const double qs = k.y[size_t(j * g.nx + i)] * gs;
            const double qn = k.y[size_t((j + 1) * g.nx + i)] * gn;
            o[n] = -((qe - qw) * ihx + (qn - qs) * ihy);
        }
    }
}

inline ScalarField apply_elliptic(const FaceCoefficients& k, const ScalarField& u, Bc bc) {
    ScalarField out(u.grid);
    apply_elliptic_into(k, u, bc, out);
    return out;
}

// Face coefficients from cell values by arithmetic averaging; boundary faces
// take the adjacent cell value (mirror ghost).
inline void faces_from_cells_into(const ScalarField& c, FaceCoefficients& k) {
    const GridSpec& g = c.grid;
    if (!k.grid.same(g)) k = FaceCoefficients(g);
    const double* v = c.v.data();
    for (int j = 0; j < g.ny; ++j) {
        const int row = j * g.nx;
        const int xrow = j * (g.nx + 1);
        k.x[size_t(xrow)] = v[row];
        for (int i = 1; i < g.nx; ++i)
            k.x[size_t(xrow + i)] = 0.5 * (v[row + i - 1] + v[row + i]);
        k.x[size_t(xrow + g.nx)] = v[row + g.nx - 1];
    }
    for (int i = 0; i < g.nx; ++i) {
        k.y[size_t(i)] = v[i];
        k.y[size_t(g.ny * g.nx + i)] = v[(g.ny - 1) * g.nx + i];
    }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            k.y[size_t(j * g.nx + i)] = 0.5 * (v[(j - 1) * g.nx + i] + v[j * g.nx + i]);
}

inline FaceCoefficients faces_from_cells(const ScalarField& c) {
    FaceCoefficients k(c.grid);
    faces_from_cells_into(c, k);
    return k;
}

// Face gradients of u under the given boundary convention.
inline void face_gradients_into(const ScalarField& u, Bc bc, FaceCoefficients& gr) {
    const GridSpec& g = u.grid;
    if (!gr.grid.same(g)) gr = FaceCoefficients(g);
    const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
    const bool dir = (bc == Bc::DirichletZero);
    const double* v = u.v.data();
    for (int j = 0; j < g.ny; ++j) {
        const int row = j * g.nx;
        const int xrow = j * (g.nx + 1);
        gr.x[size_t(xrow)] = dir ? 2.0 * v[row] * ihx : 0.0;
        for (int i = 1; i < g.nx; ++i)
            gr.x[size_t(xrow + i)] = (v[row + i] - v[row + i - 1]) * ihx;
        gr.x[size_t(xrow + g.nx)] = dir ? -2.0 * v[row + g.nx - 1] * ihx : 0.0;
    }
    for (int i = 0; i < g.nx; ++i) {
        gr.y[size_t(i)] = dir ? 2.0 * v[i] * ihy : 0.0;
        gr.y[size_t(g.ny * g.nx + i)] = dir ? -2.0 * v[(g.ny - 1) * g.nx + i] * ihy : 0.0;
    }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            gr.y[size_t(j * g.nx + i)] = (v[j * g.nx + i] - v[(j - 1) * g.nx + i]) * ihy;
}

// Quadrature weight of a face: full cell area in the interior, half on the
// boundary (trapezoid in the face-normal direction).
inline double face_weight_x(const GridSpec& g, int i) {
    return (i == 0 || i == g.nx) ? 0.5 * g.cell_area() : g.cell_area();
}
inline double face_weight_y(const GridSpec& g, int j) {
    return (j == 0 || j == g.ny) ? 0.5 * g.cell_area() : g.cell_area();
}

// Dirichlet-seminorm squared: sum_f w_f |grad u|_f^2 (the discrete V0 norm).
inline double grad_sq(const ScalarField& u, Bc bc) {
    const GridSpec& g = u.grid;
    FaceCoefficients gr(g);
    face_gradients_into(u, bc, gr);
    double s = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double q = gr.x[size_t(j * (g.nx + 1) + i)];
            s += face_weight_x(g, i) * q * q;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double q = gr.y[size_t(j * g.nx + i)];
            s += face_weight_y(g, j) * q * q;
        }
    return s;
}

inline double norm_v0(const ScalarField& u) { return std::sqrt(grad_sq(u, Bc::DirichletZero)); }

}  // namespace pfch
