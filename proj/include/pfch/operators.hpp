// The abstract operators made concrete: tangent projector P, inverse Neumann
// Laplacian N on mean-zero data, the mobility-weighted inverse N_phi and the
// dual norms they induce. All inverses are plain conjugate gradients with
// relative-residual stopping and per-iteration re-projection onto the
// constraint subspace; everything runs single-threaded in a fixed order.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pfch/grid.hpp"
#include "pfch/physics.hpp"

namespace pfch {

struct Field3 {
    ScalarField a, b, s;

    Field3() = default;
    explicit Field3(const GridSpec& g, double fill = 0.0) : a(g, fill), b(g, fill), s(g, fill) {}

    ScalarField& comp(int i) { return i == 0 ? a : (i == 1 ? b : s); }
    const ScalarField& comp(int i) const { return i == 0 ? a : (i == 1 ? b : s); }
    const GridSpec& grid() const { return a.grid; }
};

// Pointwise-sum-zero triple; descent directions additionally carry zero means.
using TangentField = Field3;

struct PhaseState {
    Field3 c;
    std::array<double, 3> target_mean = {0, 0, 0};
    const GridSpec& grid() const { return c.grid(); }
};

inline std::array<double, 3> project_tangent(const std::array<double, 3>& v) {
    const double m = (v[0] + v[1] + v[2]) / 3.0;
    return {v[0] - m, v[1] - m, v[2] - m};
}

inline void project_tangent_inplace(Field3& f) {
    double* pa = f.a.v.data();
    double* pb = f.b.v.data();
    double* ps = f.s.v.data();
    for (size_t n = 0; n < f.a.v.size(); ++n) {
        const double m = (pa[n] + pb[n] + ps[n]) / 3.0;
        pa[n] -= m; pb[n] -= m; ps[n] -= m;
    }
}

inline Field3 project_tangent(const Field3& f) {
    Field3 out = f;
    project_tangent_inplace(out);
    return out;
}

inline void subtract_means(Field3& f) {
    subtract_mean(f.a);
    subtract_mean(f.b);
    subtract_mean(f.s);
}

inline double max_sum_violation(const Field3& f, double target) {
    double m = 0;
    for (size_t n = 0; n < f.a.v.size(); ++n)
        m = std::max(m, std::abs(f.a.v[n] + f.b.v[n] + f.s.v[n] - target));
    return m;
}

inline double norm_h(const Field3& f) {
    return std::sqrt(inner(f.a, f.a) + inner(f.b, f.b) + inner(f.s, f.s));
}

inline double inner3(const Field3& f, const Field3& g) {
    return inner(f.a, g.a) + inner(f.b, g.b) + inner(f.s, g.s);
}

// L4 norm of an R^3-valued cell field.
inline double norm_l4(const Field3& f) {
    double s = 0;
    for (size_t n = 0; n < f.a.v.size(); ++n) {
        const double q = f.a.v[n] * f.a.v[n] + f.b.v[n] * f.b.v[n] + f.s.v[n] * f.s.v[n];
        s += q * q;
    }
    return std::pow(s * f.grid().cell_area(), 0.25);
}

// ---------------------------------------------------------------------------
struct CgInfo {
    int iters = 0;
    double rel_residual = 0;
    bool converged = false;
};

inline int default_max_iters(const GridSpec& g) { return 10 * g.cells(); }

namespace detail {
inline double dot_plain(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
    return s;
}
}  // namespace detail

// CG for -div(k grad u) = b. With zero_mean the singular Neumann operator is
// inverted on the mean-free subspace (b and the iterates are re-centered each
// sweep). x carries the warm start in and the solution out.
inline CgInfo cg_elliptic(const FaceCoefficients& k, Bc bc, const ScalarField& b_in,
                          ScalarField& x, double tol, int max_iters, bool zero_mean) {
    const GridSpec& g = b_in.grid;
    if (!x.grid.same(g)) x = ScalarField(g);
    ScalarField b = b_in, r(g), p(g), ap(g);
    if (zero_mean) {
        subtract_mean(b);
        subtract_mean(x);
    }
    const double bnorm = std::sqrt(detail::dot_plain(b.v, b.v));
    if (bnorm == 0.0) {
        x = ScalarField(g);
        return {0, 0.0, true};
    }
    apply_elliptic_into(k, x, bc, ap);
    for (size_t n = 0; n < r.v.size(); ++n) r.v[n] = b.v[n] - ap.v[n];
    if (zero_mean) subtract_mean(r);
    double rr = detail::dot_plain(r.v, r.v);
    CgInfo info;
    if (std::sqrt(rr) <= tol * bnorm) {
        info.converged = true;
        info.rel_residual = std::sqrt(rr) / bnorm;
        return info;
    }
    p = r;
    for (int it = 1; it <= max_iters; ++it) {
        apply_elliptic_into(k, p, bc, ap);
        const double pap = detail::dot_plain(p.v, ap.v);
        if (!(pap > 0)) throw std::runtime_error("cg_elliptic: operator lost positivity");
        const double alpha = rr / pap;
        for (size_t n = 0; n < x.v.size(); ++n) x.v[n] += alpha * p.v[n];
        for (size_t n = 0; n < r.v.size(); ++n) r.v[n] -= alpha * ap.v[n];
        if (zero_mean) subtract_mean(r);
        const double rr_new = detail::dot_plain(r.v, r.v);
        info.iters = it;
        info.rel_residual = std::sqrt(rr_new) / bnorm;
        if (info.rel_residual <= tol) {
            info.converged = true;
            if (zero_mean) subtract_mean(x);
            return info;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (size_t n = 0; n < p.v.size(); ++n) p.v[n] = r.v[n] + beta * p.v[n];
    }
    throw std::runtime_error("cg_elliptic: no convergence within max iterations (rel residual " +
                             std::to_string(info.rel_residual) + ")");
}

// N f: mean-zero u with -lap u = f. Warm-start variant.
inline CgInfo inv_neumann_laplacian_into(const ScalarField& f, double tol, ScalarField& u,
                                         int max_iters = 0) {
    const GridSpec& g = f.grid;
    const double fm = mean(f);
    if (std::abs(fm) > 1e-10 * std::max(norm_h(f), 1e-300))
        throw std::invalid_argument("inv_neumann_laplacian: input has non-zero mean");
    FaceCoefficients ones(g, 1.0);
    if (max_iters <= 0) max_iters = default_max_iters(g);
    return cg_elliptic(ones, Bc::NeumannZero, f, u, tol, max_iters, /*zero_mean=*/true);
}

inline ScalarField inv_neumann_laplacian(const ScalarField& f, double tol) {
    ScalarField u(f.grid);
    inv_neumann_laplacian_into(f, tol, u);
    return u;
}

// ---------------------------------------------------------------------------
// Mobility-weighted block operator A_phi u = -div(M(phi) grad u) and its CG
// inverse on tangent fields.

// Face matrices (symmetric, stored as 6 coefficient planes per direction).
struct MobilityFaces {
    GridSpec grid;
    bool is_constant = true;
    Mat3 m = kProjectorMatrix;
    std::array<std::vector<double>, 6> x, y;  // 00,01,02,11,12,22

    static int pack(int i, int j) {
        if (i > j) std::swap(i, j);
        if (i == 0) return j;          // 00,01,02
        if (i == 1) return 2 + j;      // 11,12
        return 5;                      // 22
    }
};

inline MobilityFaces mobility_faces(const MobilitySpec& spec, const PhaseState& phi) {
    MobilityFaces mf;
    mf.grid = phi.grid();
    if (spec.constant()) {
        mf.is_constant = true;
        mf.m = mobility(spec, {0, 0, 0});
        return mf;
    }
    mf.is_constant = false;
    const GridSpec& g = mf.grid;
    const size_t nxf = size_t((g.nx + 1) * g.ny), nyf = size_t(g.nx * (g.ny + 1));
    for (auto& v : mf.x) v.assign(nxf, 0.0);
    for (auto& v : mf.y) v.assign(nyf, 0.0);
    auto cell_m = [&](int n) {
        return mobility(spec, {phi.c.a.v[size_t(n)], phi.c.b.v[size_t(n)], phi.c.s.v[size_t(n)]});
    };
    std::vector<Mat3> mc(size_t(g.cells()));
    for (int n = 0; n < g.cells(); ++n) mc[size_t(n)] = cell_m(n);
    auto put = [&](std::array<std::vector<double>, 6>& dst, size_t f, const Mat3& m) {
        dst[0][f] = m[0]; dst[1][f] = m[1]; dst[2][f] = m[2];
        dst[3][f] = m[4]; dst[4][f] = m[5]; dst[5][f] = m[8];
    };
    auto avg = [](const Mat3& a, const Mat3& b) {
        Mat3 r;
        for (int q = 0; q < 9; ++q) r[size_t(q)] = 0.5 * (a[size_t(q)] + b[size_t(q)]);
        return r;
    };
    for (int j = 0; j < g.ny; ++j) {
        put(mf.x, size_t(j * (g.nx + 1)), mc[size_t(g.id(0, j))]);
        for (int i = 1; i < g.nx; ++i)
            put(mf.x, size_t(j * (g.nx + 1) + i), avg(mc[size_t(g.id(i - 1, j))], mc[size_t(g.id(i, j))]));
        put(mf.x, size_t(j * (g.nx + 1) + g.nx), mc[size_t(g.id(g.nx - 1, j))]);
    }
    for (int i = 0; i < g.nx; ++i) {
        put(mf.y, size_t(i), mc[size_t(g.id(i, 0))]);
        for (int j = 1; j < g.ny; ++j)
            put(mf.y, size_t(j * g.nx + i), avg(mc[size_t(g.id(i, j - 1))], mc[size_t(g.id(i, j))]));
        put(mf.y, size_t(g.ny * g.nx + i), mc[size_t(g.id(i, g.ny - 1))]);
    }
    return mf;
}

inline void apply_weighted_into(const MobilityFaces& mf, const Field3& u, Field3& out) {
    const GridSpec& g = mf.grid;
    if (!out.grid().same(g)) out = Field3(g);
    if (mf.is_constant) {
        // constant M commutes with the Laplacian
        std::array<const std::vector<double>*, 3> laps;
        static thread_local std::array<ScalarField, 3> scratch;
        for (int j = 0; j < 3; ++j) {
            laplace_neumann_into(u.comp(j), scratch[size_t(j)]);
            laps[size_t(j)] = &scratch[size_t(j)].v;
        }
        for (int i = 0; i < 3; ++i) {
            double* o = out.comp(i).v.data();
            const double mi0 = mf.m[size_t(3 * i)], mi1 = mf.m[size_t(3 * i + 1)], mi2 = mf.m[size_t(3 * i + 2)];
            for (size_t n = 0; n < out.comp(i).v.size(); ++n)
                o[n] = -(mi0 * (*laps[0])[n] + mi1 * (*laps[1])[n] + mi2 * (*laps[2])[n]);
        }
        return;
    }
    const double ihx = 1.0 / g.hx, ihy = 1.0 / g.hy;
    auto mij = [&](const std::array<std::vector<double>, 6>& dir, size_t f, int i, int j) {
        return dir[size_t(MobilityFaces::pack(i, j))][f];
    };
    for (int i = 0; i < 3; ++i) {
        double* o = out.comp(i).v.data();
        for (int jj = 0; jj < g.ny; ++jj) {
            const int row = jj * g.nx;
            const int xrow = jj * (g.nx + 1);
            for (int ii = 0; ii < g.nx; ++ii) {
                const int n = row + ii;
                double qe = 0, qw = 0, qn = 0, qs = 0;
                for (int j = 0; j < 3; ++j) {
                    const double* uv = u.comp(j).v.data();
                    const double c = uv[n];
                    const double gw = (ii > 0) ? (c - uv[n - 1]) * ihx : 0.0;
                    const double ge = (ii < g.nx - 1) ? (uv[n + 1] - c) * ihx : 0.0;
                    const double gs = (jj > 0) ? (c - uv[n - g.nx]) * ihy : 0.0;
                    const double gn = (jj < g.ny - 1) ? (uv[n + g.nx] - c) * ihy : 0.0;
                    qw += mij(mf.x, size_t(xrow + ii), i, j) * gw;
                    qe += mij(mf.x, size_t(xrow + ii + 1), i, j) * ge;
                    qs += mij(mf.y, size_t(jj * g.nx + ii), i, j) * gs;
                    qn += mij(mf.y, size_t((jj + 1) * g.nx + ii), i, j) * gn;
                }
                o[n] = -((qe - qw) * ihx + (qn - qs) * ihy);
            }
        }
    }
}

namespace detail {
inline void constrain_tangent(Field3& f) {
    project_tangent_inplace(f);
    subtract_means(f);
}
inline double dot3_plain(const Field3& a, const Field3& b) {
    return dot_plain(a.a.v, b.a.v) + dot_plain(a.b.v, b.b.v) + dot_plain(a.s.v, b.s.v);
}
}  // namespace detail

// N_phi eta: tangent field u with (M(phi) grad u, grad v) = (eta, v) for all
// tangent v. Block CG with the constraint re-applied every iteration.
inline CgInfo weighted_inverse_into(const MobilityFaces& mf, const Field3& eta_in, double tol,
                                    Field3& u, int max_iters = 0) {
    const GridSpec& g = mf.grid;
    if (max_iters <= 0) max_iters = default_max_iters(g);
    if (!u.grid().same(g)) u = Field3(g);
    Field3 b = eta_in, r(g), p(g), ap(g);
    detail::constrain_tangent(b);
    detail::constrain_tangent(u);
    const double bnorm = std::sqrt(detail::dot3_plain(b, b));
    if (bnorm == 0.0) {
        u = Field3(g);
        return {0, 0.0, true};
    }
    apply_weighted_into(mf, u, r);
    for (int c = 0; c < 3; ++c)
        for (size_t n = 0; n < r.comp(c).v.size(); ++n)
            r.comp(c).v[n] = b.comp(c).v[n] - r.comp(c).v[n];
    detail::constrain_tangent(r);
    double rr = detail::dot3_plain(r, r);
    CgInfo info;
    if (std::sqrt(rr) <= tol * bnorm) {
        info.converged = true;
        info.rel_residual = std::sqrt(rr) / bnorm;
        return info;
    }
    p = r;
    for (int it = 1; it <= max_iters; ++it) {
        apply_weighted_into(mf, p, ap);
        const double pap = detail::dot3_plain(p, ap);
        if (!(pap > 0)) throw std::runtime_error("weighted_inverse: operator lost positivity");
        const double alpha = rr / pap;
        for (int c = 0; c < 3; ++c) {
            double* x = u.comp(c).v.data();
            double* rv = r.comp(c).v.data();
            const double* pv = p.comp(c).v.data();
            const double* av = ap.comp(c).v.data();
            for (size_t n = 0; n < u.comp(c).v.size(); ++n) {
                x[n] += alpha * pv[n];
                rv[n] -= alpha * av[n];
            }
        }
        detail::constrain_tangent(r);
        const double rr_new = detail::dot3_plain(r, r);
        info.iters = it;
        info.rel_residual = std::sqrt(rr_new) / bnorm;
        if (info.rel_residual <= tol) {
            info.converged = true;
            detail::constrain_tangent(u);
            return info;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int c = 0; c < 3; ++c) {
            double* pv = p.comp(c).v.data();
            const double* rv = r.comp(c).v.data();
            for (size_t n = 0; n < p.comp(c).v.size(); ++n) pv[n] = rv[n] + beta * pv[n];
        }
    }
    throw std::runtime_error("weighted_inverse: no convergence within max iterations");
}

inline Field3 weighted_inverse(const MobilitySpec& spec, const PhaseState& phi,
                               const Field3& eta, double tol) {
    MobilityFaces mf = mobility_faces(spec, phi);
    Field3 u(phi.grid());
    weighted_inverse_into(mf, eta, tol, u);
    return u;
}

// Weighted Dirichlet form (M grad u, grad u) over interior faces.
inline double weighted_dirichlet_form(const MobilityFaces& mf, const Field3& u) {
    const GridSpec& g = mf.grid;
    std::array<FaceCoefficients, 3> gr;
    for (int c = 0; c < 3; ++c) face_gradients_into(u.comp(c), Bc::NeumannZero, gr[size_t(c)]);
    double acc = 0;
    auto mat_at = [&](bool xdir, size_t f, int i, int j) {
        if (mf.is_constant) return mf.m[size_t(3 * i + j)];
        const auto& dir = xdir ? mf.x : mf.y;
        return dir[size_t(MobilityFaces::pack(i, j))][f];
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const size_t f = size_t(j * (g.nx + 1) + i);
            for (int ci = 0; ci < 3; ++ci)
                for (int cj = 0; cj < 3; ++cj)
                    acc += g.cell_area() * mat_at(true, f, ci, cj) *
                           gr[size_t(ci)].x[f] * gr[size_t(cj)].x[f];
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const size_t f = size_t(j * g.nx + i);
            for (int ci = 0; ci < 3; ++ci)
                for (int cj = 0; cj < 3; ++cj)
                    acc += g.cell_area() * mat_at(false, f, ci, cj) *
                           gr[size_t(ci)].y[f] * gr[size_t(cj)].y[f];
        }
    return acc;
}

// ||eta||_{*,phi} = sqrt((M(phi) grad N_phi eta, grad N_phi eta)).
inline double dual_norm(const MobilitySpec& spec, const PhaseState& phi, const Field3& eta,
                        double tol) {
    MobilityFaces mf = mobility_faces(spec, phi);
    Field3 u(phi.grid());
    weighted_inverse_into(mf, eta, tol, u);
    return std::sqrt(std::max(0.0, weighted_dirichlet_form(mf, u)));
}

// Both sides of the Lemma 2.1 bound for a state-dependent mobility.
struct Lemma21Result {
    double lhs = 0, rhs = 0;
};

inline Lemma21Result lemma21_check(const MobilitySpec& spec, const PhaseState& phi1,
                                   const PhaseState& phi2, const Field3& eta, double tol) {
    if (spec.constant())
        throw std::invalid_argument("lemma21_check: requires a state-dependent mobility");
    const GridSpec& g = phi1.grid();
    MobilityFaces mf1 = mobility_faces(spec, phi1);
    MobilityFaces mf2 = mobility_faces(spec, phi2);
    Field3 u1(g), u2(g);
    weighted_inverse_into(mf1, eta, tol, u1);
    weighted_inverse_into(mf2, eta, tol, u2);

    std::array<FaceCoefficients, 3> g1, g2;
    for (int c = 0; c < 3; ++c) {
        face_gradients_into(u1.comp(c), Bc::NeumannZero, g1[size_t(c)]);
        face_gradients_into(u2.comp(c), Bc::NeumannZero, g2[size_t(c)]);
    }
    double lhs2 = 0, grad4 = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const size_t f = size_t(j * (g.nx + 1) + i);
            double d2 = 0, q2 = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = g1[size_t(c)].x[f] - g2[size_t(c)].x[f];
                d2 += d * d;
                q2 += g2[size_t(c)].x[f] * g2[size_t(c)].x[f];
            }
            lhs2 += g.cell_area() * d2;
            grad4 += g.cell_area() * q2 * q2;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const size_t f = size_t(j * g.nx + i);
            double d2 = 0, q2 = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = g1[size_t(c)].y[f] - g2[size_t(c)].y[f];
                d2 += d * d;
                q2 += g2[size_t(c)].y[f] * g2[size_t(c)].y[f];
            }
            lhs2 += g.cell_area() * d2;
            grad4 += g.cell_area() * q2 * q2;
        }
    Field3 dphi(g);
    for (int c = 0; c < 3; ++c)
        for (size_t n = 0; n < dphi.comp(c).v.size(); ++n)
            dphi.comp(c).v[n] = phi1.c.comp(c).v[n] - phi2.c.comp(c).v[n];
    Lemma21Result out;
    out.lhs = std::sqrt(lhs2);
    out.rhs = (mobility_lipschitz(spec) / mobility_lambda0(spec)) * norm_l4(dphi) *
              std::pow(grad4, 0.25);
    return out;
}

}  // namespace pfch
