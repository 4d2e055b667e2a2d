// Verification battery for the electrostatic solution map: Taylor remainder
// ratios for DS and D2S over step halvings, second-derivative symmetry,
// derivative linearity and the Lipschitz stability bound.
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "pfch/electrostatics.hpp"
#include "pfch/io.hpp"

namespace pfch {

struct CheckRow {
    std::string name;
    double value = 0;
    double lo = 0, hi = 0;  // acceptance window [lo, hi]
    bool pass = false;
};

// Smooth Neumann-compatible field: base + amp * sum of low cosine modes with
// seeded coefficients (normalized so the sum of |coefficients| is 1).
inline ScalarField smooth_field(const GridSpec& g, double base, double amp, Lcg64& rng) {
    static constexpr int kModes[6][2] = {{1, 0}, {0, 1}, {1, 1}, {2, 0}, {0, 2}, {2, 1}};
    std::array<double, 6> a{};
    double asum = 0;
    for (auto& c : a) {
        c = rng.uniform_pm1();
        asum += std::abs(c);
    }
    for (auto& c : a) c /= asum;
    ScalarField f(g);
    const double pi = 3.14159265358979323846;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xc(i) / g.lx, y = g.yc(j) / g.ly;
            double v = 0;
            for (int m = 0; m < 6; ++m)
                v += a[size_t(m)] * std::cos(kModes[m][0] * pi * x) * std::cos(kModes[m][1] * pi * y);
            f(i, j) = base + amp * v;
        }
    return f;
}

struct DerivativeCheckConfig {
    int n = 64;
    double lx = 1, ly = 1;
    int samples = 10;
    double tol = 1e-12;                 // CG tolerance for the verification solves
    std::array<double, 3> steps = {1e-2, 5e-3, 2.5e-3};
    double ratio_lo = 3.6, ratio_hi = 4.4;
    double sym_tol = 1e-8;
    std::uint64_t seed = 20240901;
};

inline std::vector<CheckRow> derivative_check(const PermittivitySpec& perm,
                                              const ScalarField& e0x, const ScalarField& e0y,
                                              const DerivativeCheckConfig& cfg) {
    const GridSpec g = e0x.grid;
    Lcg64 rng(cfg.seed);
    std::vector<CheckRow> rows;

    auto v0_dist = [&](const ScalarField& u, const ScalarField& v) {
        ScalarField d(g);
        for (size_t n = 0; n < d.v.size(); ++n) d.v[n] = u.v[n] - v.v[n];
        return norm_v0(d);
    };

    for (int s = 0; s < cfg.samples; ++s) {
        // half the samples exercise the affine region, half the clamp bands
        // (where the permittivity Hessian is active)
        const bool band = (s % 2 == 1);
        ScalarField eta1 = band ? smooth_field(g, -0.25, 0.12, rng) : smooth_field(g, 0.40, 0.25, rng);
        ScalarField eta2 = band ? smooth_field(g, 1.25, 0.12, rng) : smooth_field(g, 0.35, 0.25, rng);
        ScalarField h1 = smooth_field(g, 0.0, 1.0, rng);
        ScalarField h2 = smooth_field(g, 0.0, 1.0, rng);
        ScalarField k1 = smooth_field(g, 0.0, 1.0, rng);
        ScalarField k2 = smooth_field(g, 0.0, 1.0, rng);

        ScalarField u0 = solve_potential(perm, eta1, eta2, e0x, e0y, cfg.tol);
        ScalarField us = ds_map(perm, eta1, eta2, e0x, e0y, u0, h1, h2, cfg.tol);

        // first derivative: || S(eta + t h) - S(eta) - t u* || = O(t^2)
        std::array<double, 3> err1{};
        for (int q = 0; q < 3; ++q) {
            const double t = cfg.steps[size_t(q)];
            ScalarField p1(g), p2(g);
            for (size_t n = 0; n < p1.v.size(); ++n) {
                p1.v[n] = eta1.v[n] + t * h1.v[n];
                p2.v[n] = eta2.v[n] + t * h2.v[n];
            }
            ScalarField ut = solve_potential(perm, p1, p2, e0x, e0y, cfg.tol);
            ScalarField rem(g);
            for (size_t n = 0; n < rem.v.size(); ++n)
                rem.v[n] = ut.v[n] - u0.v[n] - t * us.v[n];
            err1[size_t(q)] = norm_v0(rem);
        }
        for (int q = 0; q < 2; ++q) {
            CheckRow r;
            r.name = "ds_taylor_ratio[" + std::to_string(s) + "." + std::to_string(q) + "]";
            r.value = err1[size_t(q)] / err1[size_t(q + 1)];
            r.lo = cfg.ratio_lo;
            r.hi = cfg.ratio_hi;
            r.pass = r.value >= r.lo && r.value <= r.hi;
            rows.push_back(r);
        }

        // second derivative: || DS(eta + t k)[h] - DS(eta)[h] - t u# || = O(t^2)
        ScalarField uhk = d2s_map(perm, eta1, eta2, e0x, e0y, u0, h1, h2, k1, k2, cfg.tol);
        std::array<double, 3> err2{};
        for (int q = 0; q < 3; ++q) {
            const double t = cfg.steps[size_t(q)];
            ScalarField p1(g), p2(g);
            for (size_t n = 0; n < p1.v.size(); ++n) {
                p1.v[n] = eta1.v[n] + t * k1.v[n];
                p2.v[n] = eta2.v[n] + t * k2.v[n];
            }
            ScalarField u0t = solve_potential(perm, p1, p2, e0x, e0y, cfg.tol);
            ScalarField ust = ds_map(perm, p1, p2, e0x, e0y, u0t, h1, h2, cfg.tol);
            ScalarField rem(g);
            for (size_t n = 0; n < rem.v.size(); ++n)
                rem.v[n] = ust.v[n] - us.v[n] - t * uhk.v[n];
            err2[size_t(q)] = norm_v0(rem);
        }
        for (int q = 0; q < 2; ++q) {
            CheckRow r;
            r.name = "d2s_taylor_ratio[" + std::to_string(s) + "." + std::to_string(q) + "]";
            r.value = err2[size_t(q)] / err2[size_t(q + 1)];
            r.lo = cfg.ratio_lo;
            r.hi = cfg.ratio_hi;
            r.pass = r.value >= r.lo && r.value <= r.hi;
            rows.push_back(r);
        }

        // symmetry of the second derivative
        ScalarField ukh = d2s_map(perm, eta1, eta2, e0x, e0y, u0, k1, k2, h1, h2, cfg.tol);
        double gap = 0, scale = 0;
        {
            ScalarField d(g);
            for (size_t n = 0; n < d.v.size(); ++n) d.v[n] = uhk.v[n] - ukh.v[n];
            gap = norm_h(d);
            scale = norm_h(uhk);
        }
        CheckRow r;
        r.name = "d2s_symmetry[" + std::to_string(s) + "]";
        r.value = gap / (1.0 + scale);
        r.lo = 0;
        r.hi = cfg.sym_tol;
        r.pass = r.value <= r.hi;
        rows.push_back(r);
        (void)v0_dist;
    }
    return rows;
}

inline std::vector<CheckRow> stability_suite(const PermittivitySpec& perm, const ScalarField& e0x,
                                             const ScalarField& e0y, int pairs, double tol,
                                             std::uint64_t seed = 77001) {
    const GridSpec g = e0x.grid;
    Lcg64 rng(seed);
    const double cbound = stability_constant(perm, e0x, e0y);
    std::vector<CheckRow> rows;
    for (int s = 0; s < pairs; ++s) {
        ScalarField a1 = smooth_field(g, 0.35, 0.3, rng);
        ScalarField b1 = smooth_field(g, 0.35, 0.3, rng);
        ScalarField a2 = smooth_field(g, 0.35, 0.3, rng);
        ScalarField b2 = smooth_field(g, 0.35, 0.3, rng);
        StabilityResult sr = stability_check(perm, a1, b1, a2, b2, e0x, e0y, tol);
        CheckRow r;
        r.name = "stability_ratio[" + std::to_string(s) + "]";
        r.value = sr.dist_inputs > 0 ? sr.dist_solutions / sr.dist_inputs : 0.0;
        r.lo = 0;
        r.hi = cbound * 1.1;
        r.pass = r.value <= r.hi;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace pfch
