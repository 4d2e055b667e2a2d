// One semi-implicit time step: minimize the augmented energy
//   E^{delta,n}(v) = E^delta(v, S(v)) + 1/(2 tau) ||v - c_prev||^2_{*,M(c_prev)}
// over the mass- and sum-constrained manifold, with Phi eliminated by the
// exact electrostatic solve. Projected gradient descent with a clamped
// Barzilai-Borwein trial step and Armijo backtracking; every accepted trial
// decreases E^{delta,n}, which yields the discrete energy inequality by
// construction.
//
// Within a step the quadratic pieces (nonlocal term, metric penalty) are
// expanded exactly in the step size around solves refreshed at every accepted
// iterate, so line-search trials only pay for one potential solve each.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pfch/electrostatics.hpp"
#include "pfch/energy.hpp"
#include "pfch/grid.hpp"
#include "pfch/operators.hpp"
#include "pfch/physics.hpp"

namespace pfch {

struct StepConfig {
    double tau = 1e-3;
    double delta = 1e-4;
    double grad_tol = 1e-8;     // stationarity tolerance on the metric gradient
    int max_inner = 500;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double tau_min = 1e-9;      // adaptive floor for stall handling
    double cg_tol = 1e-11;      // relative residual of the inner solves
    double stall_step = 1e-14;  // line search declared stalled below this s
};

inline std::vector<std::string> validate_step_config(const StepConfig& c) {
    std::vector<std::string> bad;
    if (!(c.tau > 0)) bad.push_back("step: tau must be > 0");
    if (!(c.grad_tol > 0)) bad.push_back("step: grad_tol must be > 0");
    if (c.max_inner <= 0) bad.push_back("step: max_inner must be > 0");
    if (!(c.armijo_c > 0 && c.armijo_c < 1)) bad.push_back("step: armijo_c must lie in (0,1)");
    if (!(c.backtrack > 0 && c.backtrack < 1)) bad.push_back("step: backtrack must lie in (0,1)");
    if (!(c.tau_min > 0)) bad.push_back("step: tau_min must be > 0");
    return bad;
}

struct StepResult {
    PhaseState state;
    ScalarField phi;
    EnergyReport report;
    int inner_iters = 0;
    double accepted_tau = 0;
    double residual = 0;  // final ||g||_H
    double w_norm = 0;
    std::array<double, 3> w_mean = {0, 0, 0};
    double stat_residual = 0;  // ||w - mean(w)||_H
    bool converged = true;
};

// Per-step record mirroring the DiagnosticsSeries contract.
struct DiagRecord {
    double time = 0;
    std::array<double, 3> mass = {0, 0, 0};
    double e1 = 0, e2 = 0, e3 = 0, e4 = 0, total = 0, augmented = 0, dissipation = 0;
    std::array<double, 3> cmin = {0, 0, 0};
    std::array<double, 3> cmax = {0, 0, 0};
    double sum_violation = 0;
    double w_norm = 0;
    std::array<double, 3> w_mean = {0, 0, 0};
    std::array<double, 3> psi_lq = {0, 0, 0};  // ||psi_delta'(c_i)||_{L^{q/2}}, q = 4
    double stat_residual = 0;
    double el_residual = 0;  // final metric-gradient norm of the inner solve
    int inner_iters = 0;
    double accepted_tau = 0;
};

struct DiagnosticsSeries {
    std::vector<DiagRecord> rows;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Field3> states;
    DiagnosticsSeries series;
    PhaseState final_state;
    ScalarField final_phi;
};

using StepCallback = std::function<void(int step, double time, const StepResult&)>;

// ---------------------------------------------------------------------------
class StepEngine {
  public:
    StepEngine(const ModelParams& params, const StepConfig& cfg, const ScalarField& e0x,
               const ScalarField& e0y)
        : p_(params), cfg_(cfg), g_(e0x.grid), e0x_(e0x), e0y_(e0y) {
        p_.delta = cfg.delta;
        default_mob_ = (p_.mobility.kind == MobilitySpec::Kind::ConstantProjector);
        if (!default_mob_) mob_faces_template_ = mobility_faces(p_.mobility, PhaseState{Field3(g_), {0, 0, 0}});
        phi_v_ = ScalarField(g_);
        last_s_ = 0.1;
    }

    const ModelParams& params() const { return p_; }

    // Advances state in place; phi carries the warm start in and out.
    StepResult step(PhaseState& state, ScalarField& phi) {
        double tau_eff = cfg_.tau;
        for (;;) {
            bool stalled = false;
            StepResult r = attempt(state, phi, tau_eff, stalled);
            if (!stalled) {
                state = r.state;
                phi = r.phi;
                return r;
            }
            tau_eff *= 0.5;
            if (tau_eff < cfg_.tau_min)
                throw std::runtime_error("step: time step underflow during stall handling");
        }
    }

    // Energies plus potentials at a state (used for the t = 0 record).
    StepResult evaluate(const PhaseState& state, ScalarField& phi) {
        StepResult r;
        r.state = state;
        solve_potential_into(p_.permittivity, state.c.a, state.c.b, e0x_, e0y_, cfg_.cg_tol, phi);
        r.phi = phi;
        ElectroState es{phi, e0x_, e0y_};
        r.report = total_energy(state, es, p_, cfg_.cg_tol);
        ChemPotential cp = assemble_w(state, es, p_, cfg_.cg_tol);
        finish_w_stats(cp.w, r);
        r.accepted_tau = 0;
        return r;
    }

  private:
    ModelParams p_;
    StepConfig cfg_;
    GridSpec g_;
    ScalarField e0x_, e0y_;
    bool default_mob_ = true;
    MobilityFaces mob_faces_template_;

    // persistent warm-started fields
    ScalarField phi_v_;
    ScalarField na_v_, nb_v_;
    double last_s_ = 0.1;

    struct Iterate {
        Field3 v;
        ScalarField na, nb;      // N(v_i - mean_i)
        ScalarField phi, esq;
        Field3 nma;              // N_M (v - c_prev)
        ChemPotential cp;
        Field3 grad;
        double e124 = 0, e3 = 0, pen = 0, eaug = 0;
        double gnorm2 = 0, wnorm = 0;
    };

    void metric_solve(const Field3& a, Field3& out, const PhaseState& c_prev) {
        if (default_mob_) {
            // constant projector mobility acts as the identity on tangent
            // fields: componentwise scalar inverse, third slot by linearity
            ScalarField rhs(g_);
            rhs.v = a.a.v;
            subtract_mean(rhs);
            inv_neumann_laplacian_into(rhs, cfg_.cg_tol, out.a);
            rhs.v = a.b.v;
            subtract_mean(rhs);
            inv_neumann_laplacian_into(rhs, cfg_.cg_tol, out.b);
            for (size_t n = 0; n < out.s.v.size(); ++n) out.s.v[n] = -out.a.v[n] - out.b.v[n];
        } else {
            MobilityFaces mf = mobility_faces(p_.mobility, c_prev);
            weighted_inverse_into(mf, a, cfg_.cg_tol, out);
        }
    }

    void prepare(Iterate& it, const PhaseState& c_prev, const ScalarField& na_prev,
                 const ScalarField& nb_prev, double tau_eff, bool solve_phi) {
        ScalarField rhs(g_);
        rhs.v = it.v.a.v;
        subtract_mean(rhs);
        inv_neumann_laplacian_into(rhs, cfg_.cg_tol, it.na);
        rhs.v = it.v.b.v;
        subtract_mean(rhs);
        inv_neumann_laplacian_into(rhs, cfg_.cg_tol, it.nb);

        if (solve_phi)
            solve_potential_into(p_.permittivity, it.v.a, it.v.b, e0x_, e0y_, cfg_.cg_tol, it.phi);
        it.esq = efield_sq_cells(it.phi, e0x_, e0y_);

        if (default_mob_) {
            if (!it.nma.grid().same(g_)) it.nma = Field3(g_);
            for (size_t n = 0; n < it.nma.a.v.size(); ++n) {
                it.nma.a.v[n] = it.na.v[n] - na_prev.v[n];
                it.nma.b.v[n] = it.nb.v[n] - nb_prev.v[n];
                it.nma.s.v[n] = -it.nma.a.v[n] - it.nma.b.v[n];
            }
        } else {
            Field3 a(g_);
            for (int c = 0; c < 3; ++c)
                for (size_t n = 0; n < a.comp(c).v.size(); ++n)
                    a.comp(c).v[n] = it.v.comp(c).v[n] - c_prev.c.comp(c).v[n];
            metric_solve(a, it.nma, c_prev);
        }

        assemble_w_from_parts_into(it.v, it.na, it.nb, it.esq, p_, it.cp);
        it.wnorm = norm_h(it.cp.w);

        // g = (w - mean(w)) + (1/tau) N_M (v - c_prev)
        if (!it.grad.grid().same(g_)) it.grad = Field3(g_);
        const double itau = 1.0 / tau_eff;
        for (int c = 0; c < 3; ++c) {
            const double wm = mean(it.cp.w.comp(c));
            const double* wv = it.cp.w.comp(c).v.data();
            const double* mv = it.nma.comp(c).v.data();
            double* gv = it.grad.comp(c).v.data();
            for (size_t n = 0; n < it.grad.comp(c).v.size(); ++n)
                gv[n] = (wv[n] - wm) + itau * mv[n];
        }
        it.gnorm2 = inner3(it.grad, it.grad);

        it.e124 = energy_e1_c(it.v) + energy_e2_c(it.v) + e4_of(it.v, it.phi);
        it.e3 = e3_of(it.v, it.na, it.nb);
        double penq = 0;
        for (int c = 0; c < 3; ++c) {
            ScalarField diff(g_);
            for (size_t n = 0; n < diff.v.size(); ++n)
                diff.v[n] = it.v.comp(c).v[n] - c_prev.c.comp(c).v[n];
            penq += inner(it.nma.comp(c), diff);
        }
        it.pen = penq / (2.0 * tau_eff);
        it.eaug = it.e124 + it.e3 + it.pen;
    }

    double energy_e1_c(const Field3& c) const {
        PhaseState tmp;  // thin view: energy_e1 only reads .c
        tmp.c = c;
        return energy_e1(tmp, p_);
    }
    double energy_e2_c(const Field3& c) const {
        PhaseState tmp;
        tmp.c = c;
        return energy_e2(tmp, p_);
    }
    double e4_of(const Field3& c, const ScalarField& phi) const {
        PhaseState tmp;
        tmp.c = c;
        ElectroState es{phi, e0x_, e0y_};
        return energy_e4(p_, tmp, es);
    }
    double e3_of(const Field3& c, const ScalarField& na, const ScalarField& nb) const {
        ScalarField da(g_), db(g_);
        da.v = c.a.v;
        db.v = c.b.v;
        subtract_mean(da);
        subtract_mean(db);
        const double paa = inner(na, da), pbb = inner(nb, db);
        const double pab = 0.5 * (inner(na, db) + inner(nb, da));
        return 0.5 * p_.alpha_aa * paa + 0.5 * p_.alpha_bb * pbb + p_.alpha_ab * pab;
    }

    void finish_w_stats(const Field3& w, StepResult& r) const {
        r.w_norm = norm_h(w);
        double acc = 0;
        for (int c = 0; c < 3; ++c) {
            r.w_mean[size_t(c)] = mean(w.comp(c));
            ScalarField d(g_);
            d.v = w.comp(c).v;
            for (double& x : d.v) x -= r.w_mean[size_t(c)];
            acc += inner(d, d);
        }
        r.stat_residual = std::sqrt(acc);
    }

    StepResult attempt(const PhaseState& state_in, ScalarField& phi_warm, double tau_eff,
                       bool& stalled) {
        stalled = false;
        const PhaseState& c_prev = state_in;

        // nonlocal fields frozen at c_prev (reused for the metric identity)
        ScalarField na_prev(g_), nb_prev(g_), rhs(g_);
        rhs.v = c_prev.c.a.v;
        subtract_mean(rhs);
        if (na_v_.grid.same(g_)) na_prev = na_v_;
        inv_neumann_laplacian_into(rhs, cfg_.cg_tol, na_prev);
        rhs.v = c_prev.c.b.v;
        subtract_mean(rhs);
        if (nb_v_.grid.same(g_)) nb_prev = nb_v_;
        inv_neumann_laplacian_into(rhs, cfg_.cg_tol, nb_prev);

        Iterate it;
        it.v = c_prev.c;
        it.na = na_prev;
        it.nb = nb_prev;
        it.phi = phi_warm.grid.same(g_) ? phi_warm : ScalarField(g_);
        prepare(it, c_prev, na_prev, nb_prev, tau_eff, /*solve_phi=*/true);
        const double e_start = it.eaug;

        ScalarField ng_a(g_), ng_b(g_);
        Field3 nmg(g_), g_old(g_), vt(g_);
        ScalarField phi_t = it.phi;
        bool have_old = false;
        double s_used = 0;

        StepResult r;
        int k = 0;
        for (; k < cfg_.max_inner; ++k) {
            const double gnorm = std::sqrt(it.gnorm2);
            if (gnorm <= cfg_.grad_tol * (1.0 + it.wnorm)) break;

            // direction solves for the quadratic expansions
            ScalarField ga(g_), gb(g_);
            ga.v = it.grad.a.v;
            subtract_mean(ga);
            gb.v = it.grad.b.v;
            subtract_mean(gb);
            inv_neumann_laplacian_into(ga, cfg_.cg_tol, ng_a);
            inv_neumann_laplacian_into(gb, cfg_.cg_tol, ng_b);
            if (default_mob_) {
                for (size_t n = 0; n < nmg.a.v.size(); ++n) {
                    nmg.a.v[n] = ng_a.v[n];
                    nmg.b.v[n] = ng_b.v[n];
                    nmg.s.v[n] = -ng_a.v[n] - ng_b.v[n];
                }
            } else {
                metric_solve(it.grad, nmg, c_prev);
            }

            // E3(v - s g) = e3 - s X1 + s^2 X2
            ScalarField da(g_), db(g_);
            da.v = it.v.a.v;
            subtract_mean(da);
            db.v = it.v.b.v;
            subtract_mean(db);
            const double x1 =
                0.5 * (p_.alpha_aa * (inner(ng_a, da) + inner(it.na, it.grad.a)) +
                       p_.alpha_ab * (inner(ng_a, db) + inner(it.na, it.grad.b)) +
                       p_.alpha_ab * (inner(ng_b, da) + inner(it.nb, it.grad.a)) +
                       p_.alpha_bb * (inner(ng_b, db) + inner(it.nb, it.grad.b)));
            const double x2 = 0.5 * (p_.alpha_aa * inner(ng_a, it.grad.a) +
                                     p_.alpha_ab * inner(ng_a, it.grad.b) +
                                     p_.alpha_ab * inner(ng_b, it.grad.a) +
                                     p_.alpha_bb * inner(ng_b, it.grad.b));
            // pen(v - s g) = pen - (s/tau) P1 + (s^2/(2 tau)) P2
            Field3 a_cur(g_);
            for (int c = 0; c < 3; ++c)
                for (size_t n = 0; n < a_cur.comp(c).v.size(); ++n)
                    a_cur.comp(c).v[n] = it.v.comp(c).v[n] - c_prev.c.comp(c).v[n];
            const double p1 = 0.5 * (inner3(it.nma, it.grad) + inner3(nmg, a_cur));
            const double p2 = inner3(nmg, it.grad);

            // Barzilai-Borwein trial step, clamped
            double s0 = last_s_;
            if (have_old) {
                double num = 0, den = 0;
                for (int c = 0; c < 3; ++c) {
                    const double* gn = it.grad.comp(c).v.data();
                    const double* go = g_old.comp(c).v.data();
                    for (size_t n = 0; n < it.grad.comp(c).v.size(); ++n) {
                        const double dv = -s_used * go[n];
                        num += dv * dv;
                        den += dv * (gn[n] - go[n]);
                    }
                }
                s0 = (den > 0 && std::isfinite(num / den)) ? num / den : 2.0 * s_used;
            }
            s0 = std::clamp(s0, 1e-9, 1e2);

            double s = s0;
            bool accepted = false;
            while (s >= cfg_.stall_step) {
                for (int c = 0; c < 3; ++c) {
                    const double* vv = it.v.comp(c).v.data();
                    const double* gv = it.grad.comp(c).v.data();
                    double* tv = vt.comp(c).v.data();
                    for (size_t n = 0; n < vt.comp(c).v.size(); ++n) tv[n] = vv[n] - s * gv[n];
                }
                solve_potential_into(p_.permittivity, vt.a, vt.b, e0x_, e0y_, cfg_.cg_tol, phi_t);
                const double e124_t = energy_e1_c(vt) + energy_e2_c(vt) + e4_of(vt, phi_t);
                const double e3_t = it.e3 - s * x1 + s * s * x2;
                const double pen_t = it.pen - (s / tau_eff) * p1 + (s * s / (2.0 * tau_eff)) * p2;
                const double eaug_t = e124_t + e3_t + pen_t;
                if (eaug_t <= it.eaug - cfg_.armijo_c * s * it.gnorm2) {
                    accepted = true;
                    break;
                }
                s *= cfg_.backtrack;
            }
            if (!accepted) {
                stalled = true;
                r.converged = false;
                return r;
            }

            g_old = it.grad;
            s_used = s;
            last_s_ = s;
            have_old = true;

            it.v.a.v.swap(vt.a.v);
            it.v.b.v.swap(vt.b.v);
            it.v.s.v.swap(vt.s.v);
            it.phi.v.swap(phi_t.v);
            // seed the warm starts with the linear updates before refreshing
            for (size_t n = 0; n < it.na.v.size(); ++n) {
                it.na.v[n] -= s * ng_a.v[n];
                it.nb.v[n] -= s * ng_b.v[n];
            }
            prepare(it, c_prev, na_prev, nb_prev, tau_eff, /*solve_phi=*/false);
        }

        r.inner_iters = k;
        r.accepted_tau = tau_eff;
        r.residual = std::sqrt(it.gnorm2);
        r.converged = r.residual <= cfg_.grad_tol * (1.0 + it.wnorm);

        r.state.c = it.v;
        r.state.target_mean = c_prev.target_mean;
        r.phi = it.phi;
        r.report.e1 = energy_e1_c(it.v);
        r.report.e2 = energy_e2_c(it.v);
        r.report.e3 = it.e3;
        r.report.e4 = e4_of(it.v, it.phi);
        r.report.total = r.report.e1 + r.report.e2 + r.report.e3 + r.report.e4;
        r.report.dissipation = it.pen;
        r.report.augmented = r.report.total + it.pen;
        finish_w_stats(it.cp.w, r);

        // carry warm starts to the next step
        na_v_ = it.na;
        nb_v_ = it.nb;
        return r;
    }
};

// ---------------------------------------------------------------------------
inline DiagRecord make_record(double time, const StepResult& r, const ModelParams& p) {
    DiagRecord d;
    d.time = time;
    d.e1 = r.report.e1;
    d.e2 = r.report.e2;
    d.e3 = r.report.e3;
    d.e4 = r.report.e4;
    d.total = r.report.total;
    d.augmented = r.report.augmented;
    d.dissipation = r.report.dissipation;
    const Field3& c = r.state.c;
    for (int i = 0; i < 3; ++i) {
        const ScalarField& f = c.comp(i);
        d.mass[size_t(i)] = mean(f);
        double lo = f.v[0], hi = f.v[0], lq = 0;
        for (double x : f.v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
            const double q = psi_delta(1, x, p.delta);
            lq += q * q;
        }
        d.cmin[size_t(i)] = lo;
        d.cmax[size_t(i)] = hi;
        d.psi_lq[size_t(i)] = std::sqrt(lq * f.grid.cell_area());
    }
    d.sum_violation = max_sum_violation(c, 1.0);
    d.w_norm = r.w_norm;
    d.w_mean = r.w_mean;
    d.stat_residual = r.stat_residual;
    d.el_residual = r.residual;
    d.inner_iters = r.inner_iters;
    d.accepted_tau = r.accepted_tau;
    return d;
}

// Constant-interpolant trajectory of the minimizing-movements scheme.
inline Trajectory run(const PhaseState& c0, const ScalarField& e0x, const ScalarField& e0y,
                      const ModelParams& params, const StepConfig& cfg, double t_end,
                      int store_every = 1, const StepCallback& callback = {}) {
    StepEngine engine(params, cfg, e0x, e0y);
    Trajectory traj;
    PhaseState state = c0;
    ScalarField phi(c0.grid());

    StepResult init = engine.evaluate(state, phi);
    traj.series.rows.push_back(make_record(0.0, init, engine.params()));
    traj.times.push_back(0.0);
    traj.states.push_back(state.c);
    if (callback) callback(0, 0.0, init);

    double t = 0;
    int step_idx = 0;
    while (t < t_end - 1e-15) {
        StepResult r = engine.step(state, phi);
        t += r.accepted_tau;
        ++step_idx;
        traj.series.rows.push_back(make_record(t, r, engine.params()));
        if (store_every > 0 && step_idx % store_every == 0) {
            traj.times.push_back(t);
            traj.states.push_back(state.c);
        }
        if (callback) callback(step_idx, t, r);
    }
    if (traj.times.empty() || traj.times.back() != t) {
        traj.times.push_back(t);
        traj.states.push_back(state.c);
    }
    traj.final_state = state;
    traj.final_phi = phi;
    return traj;
}

// Iterates until || w - mean(w) ||_H <= stat_tol (1 + ||w||_H).
inline StepResult run_to_stationary(const PhaseState& c0, const ScalarField& e0x,
                                    const ScalarField& e0y, const ModelParams& params,
                                    const StepConfig& cfg, double stat_tol, long max_steps,
                                    double wall_budget_s = 0,
                                    const StepCallback& callback = {}) {
    StepEngine engine(params, cfg, e0x, e0y);
    PhaseState state = c0;
    ScalarField phi(c0.grid());
    const auto t0 = std::chrono::steady_clock::now();

    StepResult last = engine.evaluate(state, phi);
    if (last.stat_residual <= stat_tol * (1.0 + last.w_norm)) return last;

    double t = 0;
    for (long k = 1; k <= max_steps; ++k) {
        StepResult r = engine.step(state, phi);
        t += r.accepted_tau;
        if (callback) callback(int(k), t, r);
        if (r.stat_residual <= stat_tol * (1.0 + r.w_norm)) {
            r.converged = true;
            return r;
        }
        last = r;
        if (wall_budget_s > 0) {
            const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (el > wall_budget_s) break;
        }
    }
    last.converged = false;  // budget exhausted; partial state returned
    return last;
}

}  // namespace pfch
