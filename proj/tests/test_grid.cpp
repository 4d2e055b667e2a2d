#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pfch/grid.hpp"

using namespace pfch;
using testutil::rough_field;

TEST_CASE("grid spec validation") {
    CHECK_THROWS_AS(GridSpec::make(2, 8, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::make(8, 8, -1, 1), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec::make(4096, 4096, 1, 1, 1 << 20), std::invalid_argument);
    GridSpec g = GridSpec::make(10, 20, 2.0, 5.0);
    CHECK(g.hx == Catch::Approx(0.2));
    CHECK(g.hy == Catch::Approx(0.25));
}

TEST_CASE("mean is the exact cell average") {
    GridSpec g = GridSpec::make(4, 4, 1, 1);
    ScalarField one(g, 1.0), zero(g);
    CHECK(mean(one) == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(mean(zero) == 0.0);
    ScalarField ramp(g);
    for (int n = 0; n < 16; ++n) ramp.v[size_t(n)] = n;
    CHECK(mean(ramp) == Catch::Approx(7.5).epsilon(1e-15));  // arithmetic mean of cell values
}

TEST_CASE("inner product") {
    GridSpec g = GridSpec::make(8, 6, 2.0, 3.0);
    ScalarField one(g, 1.0);
    CHECK(inner(one, one) == Catch::Approx(6.0).epsilon(1e-14));
    ScalarField f = rough_field(g, 11), h = rough_field(g, 12);
    CHECK(inner(f, h) == Catch::Approx(inner(h, f)));
    CHECK(inner(f, f) >= 0.0);
    GridSpec g2 = GridSpec::make(8, 8, 2.0, 3.0);
    ScalarField other(g2);
    CHECK_THROWS_AS(inner(f, other), std::invalid_argument);
}

TEST_CASE("neumann laplacian stencil and mean") {
    GridSpec g = GridSpec::make(5, 5, 5, 5);  // hx = hy = 1
    ScalarField f(g);
    f(2, 2) = 1.0;
    ScalarField lap = laplace_neumann(f);
    CHECK(lap(2, 2) == Catch::Approx(-4.0));
    CHECK(lap(1, 2) == Catch::Approx(1.0));
    CHECK(lap(3, 2) == Catch::Approx(1.0));
    CHECK(lap(2, 1) == Catch::Approx(1.0));
    CHECK(lap(2, 3) == Catch::Approx(1.0));
    CHECK(lap(0, 0) == 0.0);

    ScalarField c(g, 3.7);
    CHECK(max_abs(laplace_neumann(c)) == 0.0);

    GridSpec g2 = GridSpec::make(32, 24, 1.0, 1.5);
    ScalarField r = rough_field(g2, 5);
    CHECK(std::abs(mean(laplace_neumann(r))) < 1e-11 * max_abs(r) / g2.hx / g2.hx);
}

TEST_CASE("neumann laplacian second-order convergence on a cosine mode") {
    const double pi = 3.14159265358979323846;
    auto err = [&](int n) {
        GridSpec g = GridSpec::make(n, 4, 1.0, 1.0);
        ScalarField f(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f(i, j) = std::cos(pi * g.xc(i));
        ScalarField lap = laplace_neumann(f);
        double worst = 0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                worst = std::max(worst, std::abs(lap(i, j) + pi * pi * f(i, j)));
        return worst;
    };
    const double e32 = err(32), e64 = err(64);
    const double order = std::log2(e32 / e64);
    CHECK(order > 1.9);
}

TEST_CASE("apply_elliptic reduces to the laplacian for unit coefficients") {
    GridSpec g = GridSpec::make(16, 12, 1.0, 2.0);
    FaceCoefficients ones(g, 1.0);
    ScalarField u = rough_field(g, 21);
    ScalarField a = apply_elliptic(ones, u, Bc::NeumannZero);
    ScalarField l = laplace_neumann(u);
    double worst = 0;
    for (size_t n = 0; n < u.v.size(); ++n) worst = std::max(worst, std::abs(a.v[n] + l.v[n]));
    CHECK(worst < 1e-10);

    ScalarField zero(g);
    CHECK(max_abs(apply_elliptic(ones, zero, Bc::DirichletZero)) == 0.0);
}

TEST_CASE("apply_elliptic conservation, self-adjointness, positivity") {
    GridSpec g = GridSpec::make(20, 16, 1.0, 1.3);
    ScalarField kcells = rough_field(g, 31, 0.4, 3.6);
    FaceCoefficients k = faces_from_cells(kcells);
    ScalarField u = rough_field(g, 32), v = rough_field(g, 33);

    ScalarField au = apply_elliptic(k, u, Bc::NeumannZero);
    CHECK(std::abs(mean(au)) < 1e-12 * std::max(1.0, max_abs(au)));

    for (Bc bc : {Bc::NeumannZero, Bc::DirichletZero}) {
        ScalarField a1 = apply_elliptic(k, u, bc);
        ScalarField a2 = apply_elliptic(k, v, bc);
        const double lhs = inner(a1, v), rhs = inner(u, a2);
        CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }

    ScalarField ad = apply_elliptic(k, u, Bc::DirichletZero);
    CHECK(inner(ad, u) > 0.0);
}

TEST_CASE("dirichlet manufactured solution converges at second order") {
    const double pi = 3.14159265358979323846;
    auto err = [&](int n) {
        GridSpec g = GridSpec::make(n, n, 1.0, 1.0);
        FaceCoefficients ones(g, 1.0);
        ScalarField u(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                u(i, j) = std::sin(pi * g.xc(i)) * std::sin(pi * g.yc(j));
        ScalarField au = apply_elliptic(ones, u, Bc::DirichletZero);
        double worst = 0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                worst = std::max(worst, std::abs(au(i, j) - 2 * pi * pi * u(i, j)));
        return worst;
    };
    const double order = std::log2(err(32) / err(64));
    CHECK(order > 1.9);
}

TEST_CASE("face averaging mirrors at the boundary") {
    GridSpec g = GridSpec::make(4, 4, 1, 1);
    ScalarField c(g);
    for (int n = 0; n < 16; ++n) c.v[size_t(n)] = n + 1;
    FaceCoefficients k = faces_from_cells(c);
    CHECK(k.x[size_t(k.xid(0, 0))] == Catch::Approx(1.0));
    CHECK(k.x[size_t(k.xid(1, 0))] == Catch::Approx(1.5));
    CHECK(k.x[size_t(k.xid(4, 0))] == Catch::Approx(4.0));
    CHECK(k.y[size_t(k.yid(0, 0))] == Catch::Approx(1.0));
    CHECK(k.y[size_t(k.yid(0, 1))] == Catch::Approx(3.0));
    CHECK(k.y[size_t(k.yid(0, 4))] == Catch::Approx(13.0));
}
