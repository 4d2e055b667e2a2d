// Shared test utilities: deterministic random fields and finite-difference
// oracles, independent of the implementation paths they check.
#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "pfch/derivative_check.hpp"
#include "pfch/io.hpp"
#include "pfch/operators.hpp"

namespace testutil {

using pfch::Field3;
using pfch::GridSpec;
using pfch::Lcg64;
using pfch::ScalarField;

inline ScalarField rough_field(const GridSpec& g, std::uint64_t seed, double lo = -1.0,
                               double hi = 1.0) {
    Lcg64 rng(seed);
    ScalarField f(g);
    for (auto& x : f.v) x = lo + 0.5 * (hi - lo) * (rng.uniform_pm1() + 1.0);
    return f;
}

inline ScalarField mean_zero_rough(const GridSpec& g, std::uint64_t seed) {
    ScalarField f = rough_field(g, seed);
    pfch::subtract_mean(f);
    return f;
}

// Smooth tangent field (pointwise sum zero, mean zero per component).
inline Field3 smooth_tangent(const GridSpec& g, std::uint64_t seed, double amp = 1.0) {
    Lcg64 rng(seed);
    Field3 f(g);
    f.a = pfch::smooth_field(g, 0.0, amp, rng);
    f.b = pfch::smooth_field(g, 0.0, amp, rng);
    f.s = pfch::smooth_field(g, 0.0, amp, rng);
    pfch::project_tangent_inplace(f);
    pfch::subtract_means(f);
    return f;
}

// Smooth phase state strictly inside the simplex.
inline pfch::PhaseState smooth_state(const GridSpec& g, std::uint64_t seed, double amp = 0.08) {
    Lcg64 rng(seed);
    pfch::PhaseState st;
    st.c = Field3(g);
    st.c.a = pfch::smooth_field(g, 0.30, amp, rng);
    st.c.b = pfch::smooth_field(g, 0.30, amp, rng);
    for (size_t n = 0; n < st.c.s.v.size(); ++n)
        st.c.s.v[n] = 1.0 - st.c.a.v[n] - st.c.b.v[n];
    for (int i = 0; i < 3; ++i) st.target_mean[size_t(i)] = pfch::mean(st.c.comp(i));
    return st;
}

// Central finite difference of a scalar function of n variables.
inline std::array<double, 3> central_grad3(const std::function<double(std::array<double, 3>)>& f,
                                           std::array<double, 3> x, double h = 1e-6) {
    std::array<double, 3> g{};
    for (int i = 0; i < 3; ++i) {
        auto xp = x, xm = x;
        xp[size_t(i)] += h;
        xm[size_t(i)] -= h;
        g[size_t(i)] = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

inline std::array<double, 2> central_grad2(const std::function<double(double, double)>& f,
                                           double x, double y, double h = 1e-6) {
    return {(f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h)};
}

}  // namespace testutil
