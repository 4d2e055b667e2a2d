// Energy functionals E1..E4, the augmented minimizing-movements value, and
// assembly of the chemical potentials mu~ and w = P[-Gamma lap c + mu~].
//
// Quadrature pack: gradient terms on faces (half weight at the boundary,
// where Neumann gradients vanish anyway), pointwise terms at cells, electric
// term on faces with face-averaged eps. With these choices w is the exact
// H-gradient of the discrete energy along tangent directions, up to solver
// tolerance. The quartic delta-regularization of F_delta is accounted under
// e2 (the local, non-entropy part).
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "pfch/electrostatics.hpp"
#include "pfch/grid.hpp"
#include "pfch/operators.hpp"
#include "pfch/physics.hpp"

namespace pfch {

struct EnergyReport {
    double e1 = 0, e2 = 0, e3 = 0, e4 = 0;
    double total = 0;
    double augmented = 0;
    double dissipation = 0;
};

struct ChemPotential {
    Field3 w;
    Field3 mu_tilde;
};

// Nonlocal solves reused between the energy and the potentials.
struct NonlocalCache {
    ScalarField na, nb;  // N(c_A - mean), N(c_B - mean)
};

inline void nonlocal_solve(const Field3& c, double tol, NonlocalCache& cache) {
    const GridSpec& g = c.grid();
    ScalarField d(g);
    d.v = c.a.v;
    subtract_mean(d);
    if (!cache.na.grid.same(g)) cache.na = ScalarField(g);
    inv_neumann_laplacian_into(d, tol, cache.na);
    d.v = c.b.v;
    subtract_mean(d);
    if (!cache.nb.grid.same(g)) cache.nb = ScalarField(g);
    inv_neumann_laplacian_into(d, tol, cache.nb);
}

// E1^delta: face quadrature of the gradient term plus cell quadrature of the
// regularized potential.
inline double energy_e1(const PhaseState& state, const ModelParams& p) {
    const GridSpec& g = state.grid();
    double grad_part = 0;
    for (int comp = 0; comp < 3; ++comp) {
        const double* u = state.c.comp(comp).v.data();
        double s = 0;
        for (int j = 0; j < g.ny; ++j) {
            const int row = j * g.nx;
            for (int i = 1; i < g.nx; ++i) {
                const double d = (u[row + i] - u[row + i - 1]) / g.hx;
                s += d * d;
            }
        }
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double d = (u[j * g.nx + i] - u[(j - 1) * g.nx + i]) / g.hy;
                s += d * d;
            }
        grad_part += 0.5 * p.gamma[size_t(comp)] * s * g.cell_area();
    }
    double pot = 0;
    for (int comp = 0; comp < 3; ++comp) {
        const double* u = state.c.comp(comp).v.data();
        double s = 0;
        for (int n = 0; n < g.cells(); ++n) s += psi_delta(0, u[n], p.delta);
        pot += p.theta[size_t(comp)] * s * g.cell_area();
    }
    return grad_part + pot;
}

// E2 + the quartic regularization term of F_delta.
inline double energy_e2(const PhaseState& state, const ModelParams& p) {
    const GridSpec& g = state.grid();
    const double* a = state.c.a.v.data();
    const double* b = state.c.b.v.data();
    const double* s = state.c.s.v.data();
    double acc = 0;
    for (int n = 0; n < g.cells(); ++n) {
        const double q = a[n] * a[n] * a[n] * a[n] + b[n] * b[n] * b[n] * b[n] +
                         s[n] * s[n] * s[n] * s[n];
        acc += a[n] * b[n] + b[n] * s[n] + a[n] * s[n] + p.delta * q;
    }
    return acc * g.cell_area();
}

inline double energy_e3_from_cache(const PhaseState& state, const ModelParams& p,
                                   const NonlocalCache& cache) {
    const GridSpec& g = state.grid();
    ScalarField da(g), db(g);
    da.v = state.c.a.v;
    db.v = state.c.b.v;
    subtract_mean(da);
    subtract_mean(db);
    const double paa = inner(cache.na, da), pbb = inner(cache.nb, db);
    const double pab = 0.5 * (inner(cache.na, db) + inner(cache.nb, da));
    return 0.5 * p.alpha_aa * paa + 0.5 * p.alpha_bb * pbb + p.alpha_ab * pab;
}

inline double energy_e3(const PhaseState& state, const ModelParams& p, double tol) {
    NonlocalCache cache;
    nonlocal_solve(state.c, tol, cache);
    return energy_e3_from_cache(state, p, cache);
}

// E4 = 1/2 sum_f w_f eps_f |E0 - grad Phi|_f^2.
inline double energy_e4(const ModelParams& p, const PhaseState& state, const ElectroState& es) {
    const GridSpec& g = state.grid();
    ScalarField eps = eps_cells(p.permittivity, state.c.a, state.c.b);
    FaceCoefficients k(g), gp(g), ex(g), ey(g);
    faces_from_cells_into(eps, k);
    face_gradients_into(es.phi, Bc::DirichletZero, gp);
    faces_from_cells_into(es.e0x, ex);
    faces_from_cells_into(es.e0y, ey);
    double acc = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const size_t f = size_t(j * (g.nx + 1) + i);
            const double e = ex.x[f] - gp.x[f];
            acc += face_weight_x(g, i) * k.x[f] * e * e;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const size_t f = size_t(j * g.nx + i);
            const double e = ey.y[f] - gp.y[f];
            acc += face_weight_y(g, j) * k.y[f] * e * e;
        }
    return 0.5 * acc;
}

inline EnergyReport total_energy(const PhaseState& state, const ElectroState& es,
                                 const ModelParams& p, double tol) {
    EnergyReport r;
    r.e1 = energy_e1(state, p);
    r.e2 = energy_e2(state, p);
    r.e3 = energy_e3(state, p, tol);
    r.e4 = energy_e4(p, state, es);
    r.total = r.e1 + r.e2 + r.e3 + r.e4;
    r.augmented = r.total;
    return r;
}

// E^{delta,n}(v) = E^delta(v, Phi) + 1/(2 tau) ||v - c_prev||^2_{*,M(c_prev)}.
inline double augmented_energy(const PhaseState& v, const PhaseState& c_prev,
                               const ElectroState& es, const ModelParams& p, double tol) {
    for (int i = 0; i < 3; ++i)
        if (std::abs(mean(v.c.comp(i)) - mean(c_prev.c.comp(i))) > 1e-9)
            throw std::invalid_argument("augmented_energy: mean mismatch between v and c_prev");
    Field3 diff(v.grid());
    for (int c = 0; c < 3; ++c)
        for (size_t n = 0; n < diff.comp(c).v.size(); ++n)
            diff.comp(c).v[n] = v.c.comp(c).v[n] - c_prev.c.comp(c).v[n];
    const double dn = dual_norm(p.mobility, c_prev, diff, tol);
    EnergyReport r = total_energy(v, es, p, tol);
    return r.total + dn * dn / (2.0 * p.tau);
}

// mu~ rows from precomputed nonlocal and electric parts. The electric term
// enters rows A and B only (d eps/d s3 = 0).
inline void mu_tilde_from_parts_into(const Field3& c, const ScalarField& na, const ScalarField& nb,
                                     const ScalarField& esq, const ModelParams& p, Field3& mu) {
    const GridSpec& g = c.grid();
    if (!mu.grid().same(g)) mu = Field3(g);
    const double* a = c.a.v.data();
    const double* b = c.b.v.data();
    const double* s = c.s.v.data();
    double* ma = mu.a.v.data();
    double* mb = mu.b.v.data();
    double* ms = mu.s.v.data();
    for (int n = 0; n < g.cells(); ++n) {
        const auto ge = eps_grad(p.permittivity, a[n], b[n]);
        const double half_esq = 0.5 * esq.v[size_t(n)];
        ma[n] = p.theta[0] * psi_delta(1, a[n], p.delta) + (b[n] + s[n]) +
                4.0 * p.delta * a[n] * a[n] * a[n] + p.alpha_aa * na.v[size_t(n)] +
                p.alpha_ab * nb.v[size_t(n)] + ge[0] * half_esq;
        mb[n] = p.theta[1] * psi_delta(1, b[n], p.delta) + (a[n] + s[n]) +
                4.0 * p.delta * b[n] * b[n] * b[n] + p.alpha_ab * na.v[size_t(n)] +
                p.alpha_bb * nb.v[size_t(n)] + ge[1] * half_esq;
        ms[n] = p.theta[2] * psi_delta(1, s[n], p.delta) + (a[n] + b[n]) +
                4.0 * p.delta * s[n] * s[n] * s[n];
    }
}

inline Field3 assemble_mu_tilde(const PhaseState& state, const ElectroState& es,
                                const ModelParams& p, double tol) {
    NonlocalCache cache;
    nonlocal_solve(state.c, tol, cache);
    ScalarField esq = efield_sq_cells(es.phi, es.e0x, es.e0y);
    Field3 mu(state.grid());
    mu_tilde_from_parts_into(state.c, cache.na, cache.nb, esq, p, mu);
    return mu;
}

inline void assemble_w_from_parts_into(const Field3& c, const ScalarField& na,
                                       const ScalarField& nb, const ScalarField& esq,
                                       const ModelParams& p, ChemPotential& out) {
    mu_tilde_from_parts_into(c, na, nb, esq, p, out.mu_tilde);
    const GridSpec& g = c.grid();
    if (!out.w.grid().same(g)) out.w = Field3(g);
    ScalarField lap(g);
    for (int comp = 0; comp < 3; ++comp) {
        laplace_neumann_into(c.comp(comp), lap);
        const double gamma = p.gamma[size_t(comp)];
        double* wv = out.w.comp(comp).v.data();
        const double* muv = out.mu_tilde.comp(comp).v.data();
        for (int n = 0; n < g.cells(); ++n) wv[n] = -gamma * lap.v[size_t(n)] + muv[n];
    }
    project_tangent_inplace(out.w);
}

inline ChemPotential assemble_w(const PhaseState& state, const ElectroState& es,
                                const ModelParams& p, double tol) {
    NonlocalCache cache;
    nonlocal_solve(state.c, tol, cache);
    ScalarField esq = efield_sq_cells(es.phi, es.e0x, es.e0y);
    ChemPotential cp;
    assemble_w_from_parts_into(state.c, cache.na, cache.nb, esq, p, cp);
    return cp;
}

}  // namespace pfch
