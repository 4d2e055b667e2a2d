// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Groups: standard-run (criteria 1-5), electrostatics (6-7), operators (8),
// potential (9), convergence (10), stationary (11), determinism (12).
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "pfch/cli.hpp"
#include "pfch/derivative_check.hpp"
#include "pfch/diagnostics.hpp"
#include "pfch/io.hpp"
#include "pfch/stepper.hpp"

using namespace pfch;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %2d %-34s %s  (%s)\n", number, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// The standard scenario of the acceptance criteria.
RunConfig standard_config() {
    RunConfig cfg;
    cfg.nx = cfg.ny = 64;
    cfg.lx = cfg.ly = 1.0;
    cfg.model.gamma = {1e-3, 1e-3, 1e-3};
    cfg.model.theta = {1, 1, 1};
    cfg.model.alpha_aa = cfg.model.alpha_bb = 100.0;
    cfg.model.alpha_ab = 0.0;
    cfg.model.delta = 1e-4;
    cfg.model.tau = 1e-3;
    cfg.model.permittivity = PermittivitySpec{2.0, 3.0, 1.0, 2.0};
    cfg.step.tau = 1e-3;
    cfg.step.delta = 1e-4;
    cfg.step.grad_tol = 1e-8;
    cfg.step.max_inner = 2000;
    cfg.step.tau_min = 1e-3;  // acceptance pins tau fixed
    cfg.initial.m = {0.3, 0.3, 0.4};
    cfg.initial.amplitude = 0.05;
    cfg.initial.seed = 414243;
    cfg.initial.seed_set = true;
    cfg.field.ex = 1.0;
    cfg.field.ey = 0.0;
    return cfg;
}

// ---------------------------------------------------------------------------
int standard_run() {
    RunConfig cfg = standard_config();
    const GridSpec g = cfg.grid();
    PhaseState c0 = init_state(cfg);
    ScalarField ex = build_e0x(cfg, g), ey = build_e0y(cfg, g);
    const int steps = 200;

    std::vector<Field3> snaps;
    std::vector<int> snap_at = {50, 120, 200};
    Trajectory tr = run(c0, ex, ey, cfg.model, cfg.step, steps * cfg.step.tau, 1,
                        [&](int k, double, const StepResult& r) {
                            for (int q : snap_at)
                                if (k == q) snaps.push_back(r.state.c);
                        });

    // 1: per-step energy inequality
    {
        double worst = -1e300;
        long idx = -1;
        for (size_t n = 1; n < tr.series.rows.size(); ++n) {
            const double slack = 1e-10 * (1 + std::abs(tr.series.rows[n - 1].total));
            const double v = tr.series.rows[n].augmented - tr.series.rows[n - 1].total - slack;
            if (v > worst) {
                worst = v;
                idx = long(n);
            }
        }
        criterion(1, "energy_inequality", worst <= 0,
                  fmt("worst violation %.3e at step %g", worst, double(idx)));
    }
    // 2: mass conservation
    {
        double worst = 0;
        for (const auto& r : tr.series.rows)
            for (int i = 0; i < 3; ++i)
                worst = std::max(worst, std::abs(r.mass[size_t(i)] - cfg.initial.m[size_t(i)]));
        criterion(2, "mass_conservation", worst <= 1e-10, fmt("max drift %.3e", worst));
    }
    // 3: sum constraint and confinement
    {
        double sum_worst = 0, cmin = 0;
        for (const auto& r : tr.series.rows) {
            sum_worst = std::max(sum_worst, r.sum_violation);
            for (int i = 0; i < 3; ++i) cmin = std::min(cmin, r.cmin[size_t(i)]);
        }
        criterion(3, "simplex_constraints", sum_worst <= 1e-10 && cmin >= -0.05,
                  fmt("sum %.3e, min c %.3e", sum_worst, cmin));
    }
    // 4: Euler-Lagrange residual
    {
        double worst = -1e300;
        for (size_t n = 1; n < tr.series.rows.size(); ++n)
            worst = std::max(worst, tr.series.rows[n].el_residual -
                                        1e-8 * (1 + tr.series.rows[n].w_norm));
        criterion(4, "euler_lagrange_residual", worst <= 0, fmt("worst excess %.3e", worst));
    }
    // 5: energy-gradient consistency at three snapshots
    {
        double worst = 0;
        Lcg64 seeds(90210);
        const double tol = 1e-12;
        for (const Field3& c : snaps) {
            PhaseState st;
            st.c = c;
            for (int i = 0; i < 3; ++i) st.target_mean[size_t(i)] = mean(c.comp(i));
            ScalarField phi = solve_potential(cfg.model.permittivity, c.a, c.b, ex, ey, tol);
            ElectroState es{phi, ex, ey};
            ChemPotential cp = assemble_w(st, es, cfg.model, tol);
            for (int k = 0; k < 20; ++k) {
                Lcg64 rng(seeds.next());
                Field3 h(g);
                h.a = smooth_field(g, 0.0, 1.0, rng);
                h.b = smooth_field(g, 0.0, 1.0, rng);
                h.s = smooth_field(g, 0.0, 1.0, rng);
                project_tangent_inplace(h);
                subtract_means(h);
                const double slope = inner3(cp.w, h);
                const double t = 1e-5;
                PhaseState plus = st, minus = st;
                for (int cci = 0; cci < 3; ++cci)
                    for (size_t n = 0; n < h.comp(cci).v.size(); ++n) {
                        plus.c.comp(cci).v[n] += t * h.comp(cci).v[n];
                        minus.c.comp(cci).v[n] -= t * h.comp(cci).v[n];
                    }
                ScalarField php = solve_potential(cfg.model.permittivity, plus.c.a, plus.c.b, ex, ey, tol);
                ScalarField phm = solve_potential(cfg.model.permittivity, minus.c.a, minus.c.b, ex, ey, tol);
                ElectroState esp{php, ex, ey}, esm{phm, ex, ey};
                const double ep = total_energy(plus, esp, cfg.model, tol).total;
                const double em = total_energy(minus, esm, cfg.model, tol).total;
                const double fd = (ep - em) / (2 * t);
                worst = std::max(worst, std::abs(fd - slope) / (1 + std::abs(slope)));
            }
        }
        criterion(5, "energy_gradient_consistency", worst <= 1e-4,
                  fmt("worst relative mismatch %.3e", worst));
    }
    return g_failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
int electrostatics_suite() {
    RunConfig cfg = standard_config();
    const GridSpec g = cfg.grid();
    ScalarField ex = build_e0x(cfg, g), ey = build_e0y(cfg, g);

    DerivativeCheckConfig dc;
    dc.samples = 10;
    auto rows = derivative_check(cfg.model.permittivity, ex, ey, dc);
    bool taylor = true, sym = true;
    double worst_ratio_lo = 1e300, worst_ratio_hi = 0, worst_sym = 0;
    for (const auto& r : rows) {
        if (r.name.rfind("d2s_symmetry", 0) == 0) {
            sym = sym && r.pass;
            worst_sym = std::max(worst_sym, r.value);
        } else {
            taylor = taylor && r.pass;
            worst_ratio_lo = std::min(worst_ratio_lo, r.value);
            worst_ratio_hi = std::max(worst_ratio_hi, r.value);
        }
    }
    criterion(6, "electrostatic_derivatives", taylor && sym,
              fmt("ratios in [%.3f, %.3f], sym gap %.2e", worst_ratio_lo, worst_ratio_hi,
                  worst_sym));

    auto stab = stability_suite(cfg.model.permittivity, ex, ey, 10, dc.tol);
    bool ok = true;
    double worst = 0, bound = stab.empty() ? 0 : stab[0].hi;
    for (const auto& r : stab) {
        ok = ok && r.pass;
        worst = std::max(worst, r.value);
    }
    criterion(7, "lipschitz_stability", ok, fmt("worst ratio %.4g vs bound %.4g", worst, bound));
    return g_failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
PhaseState testutil_state(const GridSpec& g, std::uint64_t seed);

int operators_suite() {
    const GridSpec g = GridSpec::make(48, 48, 1.0, 1.0);
    Lcg64 rng(1001);

    // projector algebra (pointwise, exact arithmetic to rounding)
    bool proj_ok = true;
    for (int k = 0; k < 1000; ++k) {
        std::array<double, 3> v = {rng.uniform_pm1(), rng.uniform_pm1(), rng.uniform_pm1()};
        auto pv = project_tangent(v);
        auto ppv = project_tangent(pv);
        for (int i = 0; i < 3; ++i)
            proj_ok = proj_ok && std::abs(ppv[size_t(i)] - pv[size_t(i)]) <= 1e-15;
        proj_ok = proj_ok && std::abs(pv[0] + pv[1] + pv[2]) <= 1e-15;
    }
    auto pxi = project_tangent(std::array<double, 3>{1, 1, 1});
    proj_ok = proj_ok && pxi[0] == 0 && pxi[1] == 0 && pxi[2] == 0;

    // N self-adjoint and positive
    bool n_ok = true;
    double worst_sa = 0;
    for (int k = 0; k < 5; ++k) {
        Lcg64 r2(2000 + std::uint64_t(k));
        ScalarField a = smooth_field(g, 0.0, 1.0, r2);
        ScalarField b = smooth_field(g, 0.0, 1.0, r2);
        subtract_mean(a);
        subtract_mean(b);
        ScalarField na = inv_neumann_laplacian(a, 1e-12);
        ScalarField nb = inv_neumann_laplacian(b, 1e-12);
        const double lhs = inner(na, b), rhs = inner(a, nb);
        worst_sa = std::max(worst_sa, std::abs(lhs - rhs) / (1 + std::abs(lhs)));
        n_ok = n_ok && (worst_sa <= 1e-8) && inner(na, a) > 0;
    }

    // A_phi o N_phi round trip with the state-dependent mobility
    MobilitySpec dep;
    dep.kind = MobilitySpec::Kind::StateDependent;
    double worst_rt = 0;
    for (int k = 0; k < 3; ++k) {
        PhaseState phi = testutil_state(g, 3000 + std::uint64_t(k));
        MobilityFaces mf = mobility_faces(dep, phi);
        Lcg64 r3(4000 + std::uint64_t(k));
        Field3 u(g);
        u.a = smooth_field(g, 0.0, 1.0, r3);
        u.b = smooth_field(g, 0.0, 1.0, r3);
        u.s = smooth_field(g, 0.0, 1.0, r3);
        project_tangent_inplace(u);
        subtract_means(u);
        Field3 eta(g), back(g);
        apply_weighted_into(mf, u, eta);
        weighted_inverse_into(mf, eta, 1e-12, back);
        double diff = 0;
        for (int c = 0; c < 3; ++c)
            for (size_t n = 0; n < u.comp(c).v.size(); ++n)
                diff = std::max(diff, std::abs(back.comp(c).v[n] - u.comp(c).v[n]));
        worst_rt = std::max(worst_rt, diff / (1 + norm_h(u)));
    }

    // Lemma 2.1 on 10 random instances
    bool lemma_ok = true;
    double worst_margin = 0;
    for (int k = 0; k < 10; ++k) {
        PhaseState p1 = testutil_state(g, 5000 + 2 * std::uint64_t(k));
        PhaseState p2 = testutil_state(g, 5001 + 2 * std::uint64_t(k));
        Lcg64 r4(6000 + std::uint64_t(k));
        Field3 eta(g);
        eta.a = smooth_field(g, 0.0, 1.0, r4);
        eta.b = smooth_field(g, 0.0, 1.0, r4);
        eta.s = smooth_field(g, 0.0, 1.0, r4);
        project_tangent_inplace(eta);
        subtract_means(eta);
        Lemma21Result lr = lemma21_check(dep, p1, p2, eta, 1e-12);
        lemma_ok = lemma_ok && lr.lhs <= lr.rhs * (1 + 1e-6);
        worst_margin = std::max(worst_margin, lr.rhs > 0 ? lr.lhs / lr.rhs : 0.0);
    }

    criterion(8, "operator_algebra", proj_ok && n_ok && worst_rt <= 1e-7 && lemma_ok,
              fmt("N sa %.2e, roundtrip %.2e, lemma2.1 max lhs/rhs %.3f", worst_sa, worst_rt,
                  worst_margin));
    return g_failures == 0 ? 0 : 1;
}

PhaseState testutil_state(const GridSpec& g, std::uint64_t seed) {
    Lcg64 rng(seed);
    PhaseState st;
    st.c = Field3(g);
    st.c.a = smooth_field(g, 0.30, 0.08, rng);
    st.c.b = smooth_field(g, 0.30, 0.08, rng);
    for (size_t n = 0; n < st.c.s.v.size(); ++n)
        st.c.s.v[n] = 1.0 - st.c.a.v[n] - st.c.b.v[n];
    for (int i = 0; i < 3; ++i) st.target_mean[size_t(i)] = mean(st.c.comp(i));
    return st;
}

// ---------------------------------------------------------------------------
int potential_suite() {
    const double delta = 1e-4;
    // C4 matching at s = delta
    bool c4 = true;
    const double below = std::nextafter(delta, 0.0);
    for (int k = 0; k <= 4; ++k) {
        const double lhs = psi_delta(k, below, delta);
        const double rhs = psi_d(k, delta);
        c4 = c4 && std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs));
    }
    // psi_delta <= psi on (delta, 1); checked on all of (0,1)
    bool below_psi = true;
    for (int n = 1; n < 20000; ++n) {
        const double s = n / 20000.0;
        below_psi = below_psi && psi_delta(0, s, delta) <= psi(s) + 1e-14;
    }
    // convexity on [-5, 5]
    bool convex = true;
    for (int n = 0; n <= 100000; ++n) {
        const double s = -5.0 + 10.0 * n / 100000.0;
        convex = convex && psi_delta(2, s, delta) >= 0.0;
    }
    criterion(9, "psi_regularization", c4 && below_psi && convex,
              std::string("C4 ") + (c4 ? "ok" : "BAD") + ", below-psi " +
                  (below_psi ? "ok" : "BAD") + ", convex " + (convex ? "ok" : "BAD"));

    // F_delta lower bound with the constructive constant
    ModelParams p;
    p.delta = delta;
    // C0 oracle: sup of -psi_delta over a wide bracket (quartic growth makes
    // the tails positive; sample + refine)
    double c0 = 0;
    for (int n = 0; n <= 400000; ++n) {
        const double s = -40.0 + 80.0 * n / 400000.0;
        c0 = std::max(c0, -psi_delta(0, s, delta));
    }
    const double c_i = 1.0;  // |I(s)| <= |s|^2 <= 1 + |s|^2
    const double c1 = 3.0 * 1.0 * c0 + c_i + 2.0 * c_i * c_i / delta;
    bool bound = true;
    double worst = 1e300;
    Lcg64 rng(13);
    for (int k = 0; k < 200000; ++k) {
        std::array<double, 3> s = {10 * rng.uniform_pm1(), 10 * rng.uniform_pm1(),
                                   10 * rng.uniform_pm1()};
        const double l4 = s[0] * s[0] * s[0] * s[0] + s[1] * s[1] * s[1] * s[1] +
                          s[2] * s[2] * s[2] * s[2];
        const double gap = f_delta(s, p) - (0.5 * delta * l4 - c1);
        worst = std::min(worst, gap);
        bound = bound && gap >= 0;
    }
    criterion(9, "f_delta_lower_bound", bound, fmt("min slack %.4g with C1 %.4g", worst, c1));
    return g_failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
int convergence_suite() {
    const double pi = 3.14159265358979323846;
    // variable-permittivity Dirichlet problem with a manufactured potential
    auto dirichlet_err = [&](int n) {
        GridSpec g = GridSpec::make(n, n, 1.0, 1.0);
        PermittivitySpec p;
        ScalarField cA(g), cB(g), ex(g), ey(g), exact(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.xc(i), y = g.yc(j);
                cA(i, j) = 0.3 + 0.2 * std::sin(pi * x) * std::cos(pi * y);
                cB(i, j) = 0.3 - 0.15 * std::cos(pi * x) * std::sin(pi * y);
                exact(i, j) = std::sin(pi * x) * std::sin(pi * y);
                ex(i, j) = pi * std::cos(pi * x) * std::sin(pi * y);
                ey(i, j) = pi * std::sin(pi * x) * std::cos(pi * y);
            }
        ScalarField phi = solve_potential(p, cA, cB, ex, ey, 1e-13);
        double err = 0;
        for (size_t m = 0; m < phi.v.size(); ++m) err = std::max(err, std::abs(phi.v[m] - exact.v[m]));
        return err;
    };
    // Neumann problem: -lap u = f with a manufactured cosine solution
    auto neumann_err = [&](int n) {
        GridSpec g = GridSpec::make(n, n, 1.0, 1.0);
        ScalarField f(g), exact(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.xc(i), y = g.yc(j);
                exact(i, j) = std::cos(pi * x) * std::cos(2 * pi * y);
                f(i, j) = (pi * pi + 4 * pi * pi) * exact(i, j);
            }
        subtract_mean(f);
        ScalarField u = inv_neumann_laplacian(f, 1e-13);
        double err = 0;
        for (size_t m = 0; m < u.v.size(); ++m) err = std::max(err, std::abs(u.v[m] - exact.v[m]));
        return err;
    };
    bool ok = true;
    std::string detail;
    auto study = [&](const std::function<double(int)>& solver) {
        double prev = 0;
        for (int n : {16, 32, 64, 128}) {
            const double e = solver(n);
            if (prev > 0) {
                const double order = std::log2(prev / e);
                ok = ok && order >= 1.9;
                detail += fmt("%.2f ", order);
            }
            prev = e;
        }
    };
    study(dirichlet_err);
    study(neumann_err);
    criterion(10, "manufactured_convergence", ok, "observed orders " + detail);
    return g_failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
int stationary_suite() {
    RunConfig cfg = standard_config();
    const GridSpec g = cfg.grid();
    PhaseState c0 = init_state(cfg);
    ScalarField ex = build_e0x(cfg, g), ey = build_e0y(cfg, g);

    StepResult fin = run_to_stationary(c0, ex, ey, cfg.model, cfg.step, 1e-6, 100000, 0);
    const bool terminated = fin.converged;

    double delta_e = 1e300;
    if (terminated) {
        StepResult again = run_to_stationary(fin.state, ex, ey, cfg.model, cfg.step, 1e-6, 100000, 0);
        delta_e = std::abs(again.report.total - fin.report.total);
    }
    criterion(11, "stationarity", terminated && delta_e <= 1e-9,
              fmt("stat residual %.3e, re-run energy change %.3e", fin.stat_residual, delta_e));
    return g_failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
int determinism_suite(const std::string& cli_path) {
    namespace fs = std::filesystem;
    const std::string base = fs::temp_directory_path() / "pfch_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string cfg_path = base + "/run.cfg";
    iodetail::write_file_atomic(cfg_path,
                                "[grid]\nnx = 32\nny = 32\n"
                                "[model]\nalpha_aa = 100\nalpha_bb = 100\n"
                                "[initial]\nseed = 2718\n"
                                "[output]\nt_end = 0.02\nsnapshot_every = 10\n");
    auto run_once = [&](const std::string& out) {
        const std::string cmd = "'" + cli_path + "' run --config '" + cfg_path + "' --out '" +
                                out + "' > /dev/null";
        return std::system(cmd.c_str());
    };
    const int rc1 = run_once(base + "/a");
    const int rc2 = run_once(base + "/b");
    bool same = (rc1 == 0 && rc2 == 0);
    std::string diff_file = "none";
    for (const char* f : {"series.csv", "final.pfch", "snap_000001.pfch", "snap_000002.pfch"}) {
        const std::string fa = base + "/a/" + f, fb = base + "/b/" + f;
        if (!fs::exists(fa) || !fs::exists(fb)) {
            same = false;
            diff_file = f;
            break;
        }
        if (iodetail::read_file(fa) != iodetail::read_file(fb)) {
            same = false;
            diff_file = f;
            break;
        }
    }
    criterion(12, "determinism", same, same ? "all outputs byte-identical" : "mismatch in " + diff_file);
    return g_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr,
                     "usage: pfch_acceptance <standard-run|electrostatics|operators|potential|"
                     "convergence|stationary|determinism [cli-path]|all>\n");
        return 2;
    }
    const std::string mode = argv[1];
    if (mode == "standard-run") return standard_run();
    if (mode == "electrostatics") return electrostatics_suite();
    if (mode == "operators") return operators_suite();
    if (mode == "potential") return potential_suite();
    if (mode == "convergence") return convergence_suite();
    if (mode == "stationary") return stationary_suite();
    if (mode == "determinism") {
        if (argc < 3) {
            std::fprintf(stderr, "determinism mode needs the cli path\n");
            return 2;
        }
        return determinism_suite(argv[2]);
    }
    if (mode == "all") {
        standard_run();
        electrostatics_suite();
        operators_suite();
        potential_suite();
        convergence_suite();
        stationary_suite();
        return g_failures == 0 ? 0 : 1;
    }
    std::fprintf(stderr, "unknown mode '%s'\n", mode.c_str());
    return 2;
}
