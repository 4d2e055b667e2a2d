#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pfch/operators.hpp"

using namespace pfch;
using testutil::mean_zero_rough;
using testutil::rough_field;
using testutil::smooth_tangent;

TEST_CASE("tangent projector action") {
    auto z = project_tangent(std::array<double, 3>{1, 1, 1});
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK(z[2] == 0.0);
    auto e1 = project_tangent(std::array<double, 3>{1, 0, 0});
    CHECK(e1[0] == Catch::Approx(2.0 / 3));
    CHECK(e1[1] == Catch::Approx(-1.0 / 3));
    CHECK(e1[2] == Catch::Approx(-1.0 / 3));

    Lcg64 rng(5);
    for (int k = 0; k < 200; ++k) {
        std::array<double, 3> v = {rng.uniform_pm1(), rng.uniform_pm1(), rng.uniform_pm1()};
        auto pv = project_tangent(v);
        auto ppv = project_tangent(pv);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(ppv[size_t(i)] - pv[size_t(i)]) <= 1e-15);
        // symmetry: (Pu, v) = (u, Pv)
        std::array<double, 3> u = {rng.uniform_pm1(), rng.uniform_pm1(), rng.uniform_pm1()};
        auto pu = project_tangent(u);
        double lhs = 0, rhs = 0;
        for (int i = 0; i < 3; ++i) {
            lhs += pu[size_t(i)] * v[size_t(i)];
            rhs += u[size_t(i)] * pv[size_t(i)];
        }
        CHECK(lhs == Catch::Approx(rhs).margin(1e-15));
    }
}

TEST_CASE("inverse neumann laplacian") {
    GridSpec g = GridSpec::make(24, 20, 1.0, 1.2);
    ScalarField zero(g);
    CHECK(max_abs(inv_neumann_laplacian(zero, 1e-12)) == 0.0);

    // inverse relation: f = -lap g  =>  N f = g
    Lcg64 rng(31);
    ScalarField gsm = smooth_field(g, 0.0, 1.0, rng);
    subtract_mean(gsm);
    ScalarField f = laplace_neumann(gsm);
    for (auto& x : f.v) x = -x;
    ScalarField u = inv_neumann_laplacian(f, 1e-12);
    double worst = 0;
    for (size_t n = 0; n < u.v.size(); ++n) worst = std::max(worst, std::abs(u.v[n] - gsm.v[n]));
    CHECK(worst < 1e-8 * std::max(1.0, max_abs(gsm)));

    // self-adjointness and positivity
    ScalarField a = mean_zero_rough(g, 41), b = mean_zero_rough(g, 42);
    ScalarField na = inv_neumann_laplacian(a, 1e-12), nb = inv_neumann_laplacian(b, 1e-12);
    CHECK(inner(na, b) == Catch::Approx(inner(a, nb)).epsilon(1e-8));
    CHECK(inner(na, a) > 0.0);

    ScalarField biased(g, 1.0);
    CHECK_THROWS_AS(inv_neumann_laplacian(biased, 1e-10), std::invalid_argument);
}

TEST_CASE("weighted inverse: identity with the default mobility") {
    GridSpec g = GridSpec::make(20, 20, 1.0, 1.0);
    MobilitySpec spec;  // constant projector
    PhaseState phi = testutil::smooth_state(g, 7);
    Field3 eta = smooth_tangent(g, 8);

    Field3 zero(g);
    Field3 uz = weighted_inverse(spec, phi, zero, 1e-12);
    CHECK(norm_h(uz) == 0.0);

    Field3 u = weighted_inverse(spec, phi, eta, 1e-12);
    // componentwise scalar inverses after tangent projection
    for (int c = 0; c < 3; ++c) {
        ScalarField rhs(g);
        rhs.v = eta.comp(c).v;
        subtract_mean(rhs);
        ScalarField ref = inv_neumann_laplacian(rhs, 1e-12);
        double worst = 0;
        for (size_t n = 0; n < ref.v.size(); ++n)
            worst = std::max(worst, std::abs(ref.v[n] - u.comp(c).v[n]));
        CHECK(worst < 1e-8 * std::max(1.0, max_abs(ref)));
    }
    CHECK(max_sum_violation(u, 0.0) < 1e-10);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(mean(u.comp(c))) < 1e-12);
}

TEST_CASE("weighted inverse round-trips through the forward operator") {
    GridSpec g = GridSpec::make(16, 16, 1.0, 1.0);
    MobilitySpec spec;
    spec.kind = MobilitySpec::Kind::StateDependent;
    PhaseState phi = testutil::smooth_state(g, 17);
    MobilityFaces mf = mobility_faces(spec, phi);

    Field3 u_ref = smooth_tangent(g, 18);
    Field3 eta(g);
    apply_weighted_into(mf, u_ref, eta);
    Field3 u(g);
    weighted_inverse_into(mf, eta, 1e-12, u);
    double worst = 0;
    for (int c = 0; c < 3; ++c)
        for (size_t n = 0; n < u.comp(c).v.size(); ++n)
            worst = std::max(worst, std::abs(u.comp(c).v[n] - u_ref.comp(c).v[n]));
    CHECK(worst < 1e-7 * std::max(1.0, norm_h(u_ref)));
}

TEST_CASE("dual norm identities") {
    GridSpec g = GridSpec::make(20, 16, 1.0, 1.0);
    MobilitySpec spec;
    PhaseState phi = testutil::smooth_state(g, 23);
    Field3 eta = smooth_tangent(g, 24);

    Field3 zero(g);
    CHECK(dual_norm(spec, phi, zero, 1e-12) == 0.0);

    const double dn = dual_norm(spec, phi, eta, 1e-12);
    // ||eta||^2 = (N_phi eta, eta)
    Field3 u = weighted_inverse(spec, phi, eta, 1e-12);
    CHECK(dn * dn == Catch::Approx(inner3(u, eta)).epsilon(1e-8));

    Field3 eta2 = eta;
    for (int c = 0; c < 3; ++c)
        for (auto& x : eta2.comp(c).v) x *= 2.0;
    CHECK(dual_norm(spec, phi, eta2, 1e-12) == Catch::Approx(2.0 * dn).epsilon(1e-10));

    // with the default constant mobility this is the plain *-norm
    double plain = 0;
    for (int c = 0; c < 3; ++c) {
        ScalarField d(g);
        d.v = eta.comp(c).v;
        subtract_mean(d);
        ScalarField nd = inv_neumann_laplacian(d, 1e-12);
        plain += inner(nd, d);
    }
    CHECK(dn == Catch::Approx(std::sqrt(plain)).epsilon(1e-8));
}

TEST_CASE("lemma 2.1 bound for the state-dependent mobility") {
    GridSpec g = GridSpec::make(16, 16, 1.0, 1.0);
    MobilitySpec dep;
    dep.kind = MobilitySpec::Kind::StateDependent;
    MobilitySpec constant;

    PhaseState p1 = testutil::smooth_state(g, 61);
    Field3 eta = smooth_tangent(g, 63);
    CHECK_THROWS_AS(lemma21_check(constant, p1, p1, eta, 1e-10), std::invalid_argument);

    Lemma21Result same = lemma21_check(dep, p1, p1, eta, 1e-12);
    CHECK(same.lhs <= 1e-8 * (1.0 + same.rhs));

    for (int k = 0; k < 10; ++k) {
        PhaseState a = testutil::smooth_state(g, 100 + 2 * std::uint64_t(k));
        PhaseState b = testutil::smooth_state(g, 101 + 2 * std::uint64_t(k));
        Field3 e = smooth_tangent(g, 300 + std::uint64_t(k));
        Lemma21Result r = lemma21_check(dep, a, b, e, 1e-12);
        CHECK(r.lhs <= r.rhs * (1.0 + 1e-6));
    }
}
