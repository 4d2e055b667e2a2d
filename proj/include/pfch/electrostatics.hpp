// The variable-permittivity solution map S(eta), its Lipschitz stability and
// its first and second directional derivatives. Each derivative is the exact
// derivative of the discrete flux-form system, so Taylor checks converge at
// clean second order.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "pfch/grid.hpp"
#include "pfch/operators.hpp"
#include "pfch/physics.hpp"

namespace pfch {

struct ElectroState {
    ScalarField phi;        // electric potential, Dirichlet 0
    ScalarField e0x, e0y;   // applied field, cell-centered
};

namespace detail {

// Cell values interpolated to faces (mirror at the boundary).
inline void cells_to_faces(const ScalarField& c, FaceCoefficients& f) { faces_from_cells_into(c, f); }

// rhs_P = -div_h(k_f e0_f): the fixed source of the potential equation.
inline void div_flux_into(const GridSpec& g, const FaceCoefficients& qx_qy, ScalarField& out,
                          double sign) {
    if (!out.grid.same(g)) out = ScalarField(g);
    const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
    for (int j = 0; j < g.ny; ++j) {
        const int xrow = j * (g.nx + 1);
        for (int i = 0; i < g.nx; ++i) {
            const double dx = (qx_qy.x[size_t(xrow + i + 1)] - qx_qy.x[size_t(xrow + i)]) * ihx;
            const double dy = (qx_qy.y[size_t((j + 1) * g.nx + i)] - qx_qy.y[size_t(j * g.nx + i)]) * ihy;
            out.v[size_t(g.id(i, j))] = sign * (dx + dy);
        }
    }
}

}  // namespace detail

// Permittivity at cells from the copolymer order parameters.
inline ScalarField eps_cells(const PermittivitySpec& p, const ScalarField& cA, const ScalarField& cB) {
    require_same_grid(cA.grid, cB.grid, "eps_cells");
    ScalarField e(cA.grid);
    for (size_t n = 0; n < e.v.size(); ++n)
        e.v[n] = eps_value(p, cA.v[n], cB.v[n]);
    return e;
}

// Solves (eps(c) grad Phi, grad v) = (eps(c) E0, grad v) for all Dirichlet-0
// test fields; warm start through `phi`.
inline CgInfo solve_potential_into(const PermittivitySpec& p, const ScalarField& cA,
                                   const ScalarField& cB, const ScalarField& e0x,
                                   const ScalarField& e0y, double tol, ScalarField& phi,
                                   int max_iters = 0) {
    const GridSpec& g = cA.grid;
    ScalarField eps = eps_cells(p, cA, cB);
    FaceCoefficients k(g), e0f(g), q(g);
    faces_from_cells_into(eps, k);
    FaceCoefficients ex(g), ey(g);
    faces_from_cells_into(e0x, ex);
    faces_from_cells_into(e0y, ey);
    for (size_t n = 0; n < q.x.size(); ++n) q.x[n] = k.x[n] * ex.x[n];
    for (size_t n = 0; n < q.y.size(); ++n) q.y[n] = k.y[n] * ey.y[n];
    ScalarField rhs(g);
    detail::div_flux_into(g, q, rhs, -1.0);
    if (max_iters <= 0) max_iters = default_max_iters(g);
    return cg_elliptic(k, Bc::DirichletZero, rhs, phi, tol, max_iters, /*zero_mean=*/false);
}

inline ScalarField solve_potential(const PermittivitySpec& p, const ScalarField& cA,
                                   const ScalarField& cB, const ScalarField& e0x,
                                   const ScalarField& e0y, double tol) {
    ScalarField phi(cA.grid);
    solve_potential_into(p, cA, cB, e0x, e0y, tol, phi);
    return phi;
}

// |E|^2 at cells with E = E0 - grad Phi: arithmetic mean of the squared face
// components (the quadrature whose c-derivative closes the discrete chain
// rule for E4).
inline ScalarField efield_sq_cells(const ScalarField& phi, const ScalarField& e0x,
                                   const ScalarField& e0y) {
    const GridSpec& g = phi.grid;
    FaceCoefficients gp(g), ex(g), ey(g);
    face_gradients_into(phi, Bc::DirichletZero, gp);
    faces_from_cells_into(e0x, ex);
    faces_from_cells_into(e0y, ey);
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j) {
        const int xrow = j * (g.nx + 1);
        for (int i = 0; i < g.nx; ++i) {
            const double ew = ex.x[size_t(xrow + i)] - gp.x[size_t(xrow + i)];
            const double ee = ex.x[size_t(xrow + i + 1)] - gp.x[size_t(xrow + i + 1)];
            const double es = ey.y[size_t(j * g.nx + i)] - gp.y[size_t(j * g.nx + i)];
            const double en = ey.y[size_t((j + 1) * g.nx + i)] - gp.y[size_t((j + 1) * g.nx + i)];
            out.v[size_t(g.id(i, j))] = 0.5 * (ew * ew + ee * ee) + 0.5 * (es * es + en * en);
        }
    }
    return out;
}

// DS(eta)[h]: solves -div(eps grad u*) = -div(b (E0 - grad Phi)) with
// b = (d eps/d s . h) averaged to faces, Phi the converged potential.
inline ScalarField ds_map(const PermittivitySpec& p, const ScalarField& cA, const ScalarField& cB,
                          const ScalarField& e0x, const ScalarField& e0y, const ScalarField& phi,
                          const ScalarField& h1, const ScalarField& h2, double tol) {
    const GridSpec& g = cA.grid;
    ScalarField eps = eps_cells(p, cA, cB);
    ScalarField bcell(g);
    for (size_t n = 0; n < bcell.v.size(); ++n) {
        const auto gr = eps_grad(p, cA.v[n], cB.v[n]);
        bcell.v[n] = gr[0] * h1.v[n] + gr[1] * h2.v[n];
    }
    FaceCoefficients k(g), b(g), gp(g), ex(g), ey(g), q(g);
    faces_from_cells_into(eps, k);
    faces_from_cells_into(bcell, b);
    face_gradients_into(phi, Bc::DirichletZero, gp);
    faces_from_cells_into(e0x, ex);
    faces_from_cells_into(e0y, ey);
    for (size_t n = 0; n < q.x.size(); ++n) q.x[n] = b.x[n] * (ex.x[n] - gp.x[n]);
    for (size_t n = 0; n < q.y.size(); ++n) q.y[n] = b.y[n] * (ey.y[n] - gp.y[n]);
    ScalarField rhs(g), u(g);
    detail::div_flux_into(g, q, rhs, -1.0);
    cg_elliptic(k, Bc::DirichletZero, rhs, u, tol, default_max_iters(g), false);
    return u;
}

// D2S(eta)[k,h]: -div(eps grad u#) = -div(q (E0 - grad Phi) - b_h grad u_k
//                                         - b_k grad u_h), q = h^T Hess(eps) k.
inline ScalarField d2s_map(const PermittivitySpec& p, const ScalarField& cA, const ScalarField& cB,
                           const ScalarField& e0x, const ScalarField& e0y, const ScalarField& phi,
                           const ScalarField& h1, const ScalarField& h2, const ScalarField& k1,
                           const ScalarField& k2, double tol) {
    const GridSpec& g = cA.grid;
    ScalarField eps = eps_cells(p, cA, cB);
    ScalarField bh(g), bk(g), qc(g);
    for (size_t n = 0; n < bh.v.size(); ++n) {
        const auto gr = eps_grad(p, cA.v[n], cB.v[n]);
        const auto H = eps_hess(p, cA.v[n], cB.v[n]);
        bh.v[n] = gr[0] * h1.v[n] + gr[1] * h2.v[n];
        bk.v[n] = gr[0] * k1.v[n] + gr[1] * k2.v[n];
        qc.v[n] = H[0] * k1.v[n] * h1.v[n] + H[1] * (k1.v[n] * h2.v[n] + k2.v[n] * h1.v[n]) +
                  H[3] * k2.v[n] * h2.v[n];
    }
    ScalarField uh = ds_map(p, cA, cB, e0x, e0y, phi, h1, h2, tol);
    ScalarField uk = ds_map(p, cA, cB, e0x, e0y, phi, k1, k2, tol);

    FaceCoefficients kf(g), bhf(g), bkf(g), qf(g), gp(g), guh(g), guk(g), ex(g), ey(g), flux(g);
    faces_from_cells_into(eps, kf);
    faces_from_cells_into(bh, bhf);
    faces_from_cells_into(bk, bkf);
    faces_from_cells_into(qc, qf);
    face_gradients_into(phi, Bc::DirichletZero, gp);
    face_gradients_into(uh, Bc::DirichletZero, guh);
    face_gradients_into(uk, Bc::DirichletZero, guk);
    faces_from_cells_into(e0x, ex);
    faces_from_cells_into(e0y, ey);
    for (size_t n = 0; n < flux.x.size(); ++n)
        flux.x[n] = qf.x[n] * (ex.x[n] - gp.x[n]) - bhf.x[n] * guk.x[n] - bkf.x[n] * guh.x[n];
    for (size_t n = 0; n < flux.y.size(); ++n)
        flux.y[n] = qf.y[n] * (ey.y[n] - gp.y[n]) - bhf.y[n] * guk.y[n] - bkf.y[n] * guh.y[n];
    ScalarField rhs(g), u(g);
    detail::div_flux_into(g, flux, rhs, -1.0);
    cg_elliptic(kf, Bc::DirichletZero, rhs, u, tol, default_max_iters(g), false);
    return u;
}

// Prop. A.2 numbers: distance of solutions in the discrete H^1_0 seminorm and
// of inputs in the max norm, plus the constructive Lipschitz constant.
struct StabilityResult {
    double dist_solutions = 0;
    double dist_inputs = 0;
};

inline StabilityResult stability_check(const PermittivitySpec& p, const ScalarField& eta1a,
                                       const ScalarField& eta1b, const ScalarField& eta2a,
                                       const ScalarField& eta2b, const ScalarField& e0x,
                                       const ScalarField& e0y, double tol) {
    const GridSpec& g = eta1a.grid;
    ScalarField u1 = solve_potential(p, eta1a, eta1b, e0x, e0y, tol);
    ScalarField u2 = solve_potential(p, eta2a, eta2b, e0x, e0y, tol);
    ScalarField d(g);
    for (size_t n = 0; n < d.v.size(); ++n) d.v[n] = u1.v[n] - u2.v[n];
    StabilityResult r;
    r.dist_solutions = norm_v0(d);
    for (size_t n = 0; n < d.v.size(); ++n) {
        const double da = eta1a.v[n] - eta2a.v[n], db = eta1b.v[n] - eta2b.v[n];
        r.dist_inputs = std::max(r.dist_inputs, std::hypot(da, db));
    }
    return r;
}

// C = 2 eps^* eps_*^-2 (1 + eps^* eps_*^-1) ||E0||_H^2 sup|d eps/d s|.
inline double stability_constant(const PermittivitySpec& p, const ScalarField& e0x,
                                 const ScalarField& e0y) {
    const double lo = p.eps_star(), hi = p.eps_sup();
    const double e0sq = inner(e0x, e0x) + inner(e0y, e0y);
    return 2.0 * hi / (lo * lo) * (1.0 + hi / lo) * e0sq * eps_sup_grad_sampled(p);
}

}  // namespace pfch
