// Lemma-level statements monitored numerically on recorded trajectories:
// cumulative energy inequality, conservation, simplex confinement, Hoelder
// quotients, continuous dependence and stationarity residuals. Every check is
// a pure function of recorded data and re-runnable offline.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfch/energy.hpp"
#include "pfch/stepper.hpp"

namespace pfch {

struct CheckReport {
    std::string name;
    double worst = 0;       // most adverse value observed
    double threshold = 0;
    bool pass = false;
    long index = -1;        // row where the worst value occurred
};

// E(t_n) + sum of dissipation terms up to n stays below E(0), cumulatively.
inline CheckReport check_energy_inequality(const DiagnosticsSeries& s,
                                           double slack_rel = 1e-10) {
    CheckReport r{"energy_inequality", -1e300, 0, true, -1};
    if (s.rows.empty()) return r;
    const double e0 = s.rows.front().total;
    double dissip = 0;
    for (size_t n = 1; n < s.rows.size(); ++n) {
        dissip += s.rows[n].dissipation;
        const double slack = slack_rel * (1.0 + std::abs(e0));
        const double viol = (s.rows[n].total + dissip) - e0 - slack;
        if (viol > r.worst) {
            r.worst = viol;
            r.index = long(n);
        }
        // per-step form as well
        const double step_viol = s.rows[n].augmented - s.rows[n - 1].total -
                                 slack_rel * (1.0 + std::abs(s.rows[n - 1].total));
        if (step_viol > r.worst) {
            r.worst = step_viol;
            r.index = long(n);
        }
    }
    r.pass = r.worst <= 0;
    return r;
}

inline CheckReport check_mass_conservation(const DiagnosticsSeries& s, double tol = 1e-10) {
    CheckReport r{"mass_conservation", 0, tol, true, -1};
    if (s.rows.empty()) return r;
    for (size_t n = 0; n < s.rows.size(); ++n)
        for (int i = 0; i < 3; ++i) {
            const double d = std::abs(s.rows[n].mass[size_t(i)] - s.rows[0].mass[size_t(i)]);
            if (d > r.worst) {
                r.worst = d;
                r.index = long(n);
            }
        }
    r.pass = r.worst <= tol;
    return r;
}

inline CheckReport check_sum_constraint(const DiagnosticsSeries& s, double tol = 1e-10) {
    CheckReport r{"sum_constraint", 0, tol, true, -1};
    for (size_t n = 0; n < s.rows.size(); ++n)
        if (s.rows[n].sum_violation > r.worst) {
            r.worst = s.rows[n].sum_violation;
            r.index = long(n);
        }
    r.pass = r.worst <= tol;
    return r;
}

inline CheckReport check_confinement(const DiagnosticsSeries& s, double floor = -0.05) {
    CheckReport r{"simplex_confinement", 0, floor, true, -1};
    double lo = 0;
    for (size_t n = 0; n < s.rows.size(); ++n)
        for (int i = 0; i < 3; ++i)
            if (s.rows[n].cmin[size_t(i)] < lo) {
                lo = s.rows[n].cmin[size_t(i)];
                r.index = long(n);
            }
    r.worst = lo;
    r.pass = lo >= floor;
    return r;
}

// Metric-gradient residual against its row-wise threshold grad_tol(1+||w||).
inline CheckReport check_el_residual(const DiagnosticsSeries& s, double grad_tol = 1e-8) {
    CheckReport r{"euler_lagrange_residual", -1e300, 0, true, -1};
    for (size_t n = 1; n < s.rows.size(); ++n) {
        const double excess = s.rows[n].el_residual - grad_tol * (1.0 + s.rows[n].w_norm);
        if (excess > r.worst) {
            r.worst = excess;
            r.index = long(n);
        }
    }
    if (s.rows.size() <= 1) r.worst = 0;
    r.pass = r.worst <= 0;
    return r;
}

// Piecewise-linear interpolant between stored states.
inline Field3 interpolate_state(const Trajectory& tr, double t) {
    if (tr.times.empty()) throw std::invalid_argument("interpolate_state: empty trajectory");
    if (t <= tr.times.front()) return tr.states.front();
    if (t >= tr.times.back()) return tr.states.back();
    size_t k = 1;
    while (k < tr.times.size() && tr.times[k] < t) ++k;
    const double t0 = tr.times[k - 1], t1 = tr.times[k];
    const double b = (t - t0) / (t1 - t0);
    Field3 out = tr.states[k - 1];
    for (int c = 0; c < 3; ++c)
        for (size_t n = 0; n < out.comp(c).v.size(); ++n)
            out.comp(c).v[n] = (1.0 - b) * tr.states[k - 1].comp(c).v[n] + b * tr.states[k].comp(c).v[n];
    return out;
}

// max over sampled pairs of ||c(t1) - c(t2)||_H / |t1 - t2|^{1/4}.
inline double holder_quotient(const Trajectory& tr, int pairs, std::uint64_t seed = 17) {
    if (tr.states.size() < 2) return 0.0;
    double worst = 0;
    auto eval_pair = [&](double t1, double t2) {
        if (t1 == t2) return;
        Field3 a = interpolate_state(tr, t1);
        Field3 bf = interpolate_state(tr, t2);
        for (int c = 0; c < 3; ++c)
            for (size_t n = 0; n < a.comp(c).v.size(); ++n)
                a.comp(c).v[n] -= bf.comp(c).v[n];
        const double q = norm_h(a) / std::pow(std::abs(t1 - t2), 0.25);
        worst = std::max(worst, q);
    };
    // adjacent stored pairs plus seeded random pairs across the whole range
    for (size_t k = 1; k < tr.times.size(); ++k) eval_pair(tr.times[k - 1], tr.times[k]);
    std::uint64_t x = seed ? seed : 1;
    auto next_u = [&x]() {
        x = x * 6364136223846793005ull + 1442695040888963407ull;
        return double(x >> 11) * (1.0 / 9007199254740992.0);
    };
    const double t0 = tr.times.front(), t1 = tr.times.back();
    for (int k = 0; k < pairs; ++k) {
        const double a = t0 + (t1 - t0) * next_u();
        const double b = t0 + (t1 - t0) * next_u();
        eval_pair(a, b);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Discrete V* surrogate: sqrt(||f - mean||_*^2 + |mean|^2 |Omega|), with
// ||.||_* = ||grad N .||_H realized through the inverse Neumann Laplacian.
inline double norm_vstar(const Field3& f, double tol) {
    double acc = 0;
    const double area = f.grid().area();
    for (int c = 0; c < 3; ++c) {
        ScalarField d(f.grid());
        d.v = f.comp(c).v;
        const double m = mean(d);
        for (double& x : d.v) x -= m;
        ScalarField u = inv_neumann_laplacian(d, tol);
        acc += inner(u, d) + m * m * area;  // (N d, d) = ||grad N d||^2
    }
    return std::sqrt(std::max(0.0, acc));
}

inline double norm_v(const Field3& f) {
    double acc = 0;
    for (int c = 0; c < 3; ++c)
        acc += inner(f.comp(c), f.comp(c)) + grad_sq(f.comp(c), Bc::NeumannZero);
    return std::sqrt(acc);
}

struct ContinuousDependenceResult {
    std::vector<double> lhs_curve;  // per-step V* distance of the states
    double lhs = 0;                 // L_inf(V*) + L2(V) + L2(V0 for Phi)
    double rhs = 0;                 // ||c01-c02||_{V*} + |mean diff|^{1/2}
};

// Theorem 2.3 experiment: run both initial states through the same scheme and
// aggregate both sides of the continuous dependence estimate.
inline ContinuousDependenceResult continuous_dependence(const PhaseState& c0a,
                                                        const PhaseState& c0b,
                                                        const ScalarField& e0x,
                                                        const ScalarField& e0y,
                                                        const ModelParams& params,
                                                        const StepConfig& cfg, double t_end) {
    if (!params.mobility.constant())
        throw std::invalid_argument("continuous_dependence: requires constant mobility");
    if (!c0a.grid().same(c0b.grid()))
        throw std::invalid_argument("continuous_dependence: grid mismatch");
    Trajectory ta = run(c0a, e0x, e0y, params, cfg, t_end, 1);
    Trajectory tb = run(c0b, e0x, e0y, params, cfg, t_end, 1);
    if (ta.states.size() != tb.states.size())
        throw std::runtime_error("continuous_dependence: trajectories diverged in length");

    ContinuousDependenceResult out;
    const double tol = cfg.cg_tol;
    double sup_vstar = 0, l2v = 0, l2phi = 0;
    StepEngine ea(params, cfg, e0x, e0y), eb(params, cfg, e0x, e0y);
    for (size_t k = 0; k < ta.states.size(); ++k) {
        Field3 d = ta.states[k];
        for (int c = 0; c < 3; ++c)
            for (size_t n = 0; n < d.comp(c).v.size(); ++n)
                d.comp(c).v[n] -= tb.states[k].comp(c).v[n];
        const double vs = norm_vstar(d, tol);
        out.lhs_curve.push_back(vs);
        sup_vstar = std::max(sup_vstar, vs);
        const double nv = norm_v(d);
        l2v += nv * nv * cfg.tau;
        // potential distance at matching states
        ScalarField pa(c0a.grid()), pb(c0a.grid());
        solve_potential_into(params.permittivity, ta.states[k].a, ta.states[k].b, e0x, e0y, tol, pa);
        solve_potential_into(params.permittivity, tb.states[k].a, tb.states[k].b, e0x, e0y, tol, pb);
        for (size_t n = 0; n < pa.v.size(); ++n) pa.v[n] -= pb.v[n];
        const double np = norm_v0(pa);
        l2phi += np * np * cfg.tau;
    }
    out.lhs = sup_vstar + std::sqrt(l2v) + std::sqrt(l2phi);

    Field3 d0 = c0a.c;
    double mean_sq = 0;
    for (int c = 0; c < 3; ++c) {
        const double dm = mean(c0a.c.comp(c)) - mean(c0b.c.comp(c));
        mean_sq += dm * dm;
        for (size_t n = 0; n < d0.comp(c).v.size(); ++n) d0.comp(c).v[n] -= c0b.c.comp(c).v[n];
    }
    out.rhs = norm_vstar(d0, tol) + std::pow(mean_sq, 0.25);  // sqrt of the R^3 norm
    return out;
}

inline double stationarity_residual(const PhaseState& state, const ElectroState& es,
                                    const ModelParams& params, double tol) {
    ChemPotential cp = assemble_w(state, es, params, tol);
    double acc = 0;
    for (int c = 0; c < 3; ++c) {
        ScalarField d(state.grid());
        d.v = cp.w.comp(c).v;
        subtract_mean(d);
        acc += inner(d, d);
    }
    return std::sqrt(acc);
}

// Machine-readable verdict file: one line per check.
inline void write_verdict(const std::string& path, const std::vector<CheckReport>& checks) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_verdict: cannot open " + path);
    for (const auto& c : checks)
        std::fprintf(f, "%s worst=%.17g threshold=%.17g %s\n", c.name.c_str(), c.worst,
                     c.threshold, c.pass ? "pass" : "FAIL");
    std::fclose(f);
}

}  // namespace pfch
