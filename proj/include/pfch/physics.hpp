// Pointwise material laws: the logarithmic potential and its C4 Taylor
// regularization, the local interaction polynomial, the clamped permittivity
// and the mobility matrix family.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfch {

inline constexpr double kPsiAtOne = 0.36787944117144232160;  // e^{-1}
inline constexpr double kDeltaCap = 1.0 / 3.0;
inline constexpr double kEpsFloor = 1e-6;

// Flory-Huggins logarithm psi(s) = s ln s + 1/e on (0,1]. Above 1 the
// extension stays convex (psi'' = 1) out to s = 12 so the regularized
// potential is convex on every sampled window, then rolls off C1 to a
// constant, keeping psi and psi' bounded for s >= 1.
inline constexpr double kPsiConvexEnd = 12.0;
inline constexpr double kPsiFlatStart = 24.0;  // kPsiConvexEnd + psi'(kPsiConvexEnd)

inline double psi_d(int k, double s) {
    if (k < 0 || k > 4) throw std::invalid_argument("psi_d: k must be 0..4");
    if (s < 0.0) {
        if (k == 0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("psi_d: derivative requested at s < 0");
    }
    if (s == 0.0) {
        if (k == 0) return kPsiAtOne;
        throw std::domain_error("psi_d: derivative requested at s = 0");
    }
    if (s <= 1.0) {
        switch (k) {
            case 0: return s * std::log(s) + kPsiAtOne;
            case 1: return 1.0 + std::log(s);
            case 2: return 1.0 / s;
            case 3: return -1.0 / (s * s);
            default: return 2.0 / (s * s * s);
        }
    }
    if (s <= kPsiConvexEnd) {
        const double t = s - 1.0;
        switch (k) {
            case 0: return kPsiAtOne + t + 0.5 * t * t;
            case 1: return s;
            case 2: return 1.0;
            default: return 0.0;
        }
    }
    const double cap_base = kPsiAtOne + (kPsiConvexEnd - 1.0) +
                            0.5 * (kPsiConvexEnd - 1.0) * (kPsiConvexEnd - 1.0);
    const double slope = kPsiConvexEnd;  // psi'(kPsiConvexEnd)
    if (s <= kPsiFlatStart) {
        const double u = s - kPsiConvexEnd;
        switch (k) {
            case 0: return cap_base + slope * u - 0.5 * u * u;
            case 1: return slope - u;
            case 2: return -1.0;
            default: return 0.0;
        }
    }
    return (k == 0) ? cap_base + 0.5 * slope * slope : 0.0;
}

inline double psi(double s) { return psi_d(0, s); }

// C4 regularization: quartic Taylor polynomial of psi about delta below it.
inline double psi_delta(int k, double s, double delta) {
    if (!(delta > 0.0 && delta < kDeltaCap))
        throw std::invalid_argument("psi_delta: delta must lie in (0, 1/3)");
    if (s >= delta) return psi_d(k, s);
    const double d0 = psi_d(0, delta), d1 = psi_d(1, delta), d2 = psi_d(2, delta),
                 d3 = psi_d(3, delta), d4 = psi_d(4, delta);
    const double t = s - delta;
    switch (k) {
        case 0: return d0 + t * (d1 + t * (d2 / 2 + t * (d3 / 6 + t * d4 / 24)));
        case 1: return d1 + t * (d2 + t * (d3 / 2 + t * d4 / 6));
        case 2: return d2 + t * (d3 + t * d4 / 2);
        case 3: return d3 + t * d4;
        case 4: return d4;
        default: throw std::invalid_argument("psi_delta: k must be 0..4");
    }
}

// Local interaction I(s) = s1 s2 + s2 s3 + s1 s3 (its own C2 extension).
inline double interaction_value(const std::array<double, 3>& s) {
    return s[0] * s[1] + s[1] * s[2] + s[0] * s[2];
}
inline std::array<double, 3> interaction_grad(const std::array<double, 3>& s) {
    return {s[1] + s[2], s[0] + s[2], s[0] + s[1]};
}
inline std::array<double, 9> interaction_hess(const std::array<double, 3>&) {
    return {0, 1, 1, 1, 0, 1, 1, 1, 0};
}

// ---------------------------------------------------------------------------
// Permittivity. sigma is the monotone C2 clamp: identity on [0,1], constant
// outside [-1/2, 3/2], quintic q(x) = x + 8x^4 + (48/5)x^5 on the lower band,
// point-reflected on the upper one. Range [-0.3, 1.3].
inline constexpr double kSigmaLo = -0.3;
inline constexpr double kSigmaHi = 1.3;

namespace detail {
inline double clamp_q(double x) { return x + 8.0 * x * x * x * x + 9.6 * x * x * x * x * x; }
inline double clamp_q1(double x) { return 1.0 + 32.0 * x * x * x + 48.0 * x * x * x * x; }
inline double clamp_q2(double x) { return 96.0 * x * x + 192.0 * x * x * x; }
}  // namespace detail

inline double sigma_clamp(double x) {
    if (x <= -0.5) return kSigmaLo;
    if (x < 0.0) return detail::clamp_q(x);
    if (x <= 1.0) return x;
    if (x < 1.5) return 1.0 - detail::clamp_q(1.0 - x);
    return kSigmaHi;
}
inline double sigma_clamp_d(double x) {
    if (x <= -0.5 || x >= 1.5) return 0.0;
    if (x < 0.0) return detail::clamp_q1(x);
    if (x <= 1.0) return 1.0;
    return detail::clamp_q1(1.0 - x);
}
inline double sigma_clamp_dd(double x) {
    if (x <= -0.5 || x >= 1.5) return 0.0;
    if (x < 0.0) return detail::clamp_q2(x);
    if (x <= 1.0) return 0.0;
    return -detail::clamp_q2(1.0 - x);
}

struct PermittivitySpec {
    double eps_s = 2.0;
    double eps_a = 3.0;
    double eps_b = 1.0;
    double cutoff_radius = 2.0;

    double far_value() const { return (eps_a + eps_b + eps_s) / 3.0; }
    // exact global bounds (corner values of the sigma range)
    double eps_star() const {
        return eps_s + std::min((eps_a - eps_s) * kSigmaLo, (eps_a - eps_s) * kSigmaHi) +
               std::min((eps_b - eps_s) * kSigmaLo, (eps_b - eps_s) * kSigmaHi);
    }
    double eps_sup() const {
        return eps_s + std::max((eps_a - eps_s) * kSigmaLo, (eps_a - eps_s) * kSigmaHi) +
               std::max((eps_b - eps_s) * kSigmaLo, (eps_b - eps_s) * kSigmaHi);
    }
};

inline std::vector<std::string> validate_permittivity(const PermittivitySpec& p) {
    std::vector<std::string> bad;
    if (!(p.eps_a > 0 && p.eps_b > 0 && p.eps_s > 0))
        bad.push_back("permittivity: eps_a, eps_b, eps_s must be > 0");
    if (!(p.cutoff_radius >= 2.0))
        bad.push_back("permittivity: cutoff_radius must be >= 2");
    if (!(p.eps_star() >= kEpsFloor))
        bad.push_back("permittivity: resulting eps_* = " + std::to_string(p.eps_star()) +
                      " falls below the positive floor");
    return bad;
}

namespace detail {
// quintic smoothstep and its derivatives
inline double sstep(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double sstep1(double t) { return t * t * (30.0 + t * (-60.0 + 30.0 * t)); }
inline double sstep2(double t) { return t * (60.0 + t * (-180.0 + 120.0 * t)); }

struct Chi { double v, d1, d2; };
inline Chi chi_cutoff(const PermittivitySpec& p, double r) {
    const double r1 = p.cutoff_radius, r0 = 0.8 * r1;
    if (r <= r0) return {1.0, 0.0, 0.0};
    if (r >= r1) return {0.0, 0.0, 0.0};
    const double w = r1 - r0, t = (r - r0) / w;
    return {1.0 - sstep(t), -sstep1(t) / w, -sstep2(t) / (w * w)};
}
}  // namespace detail

inline double eps_separable(const PermittivitySpec& p, double s1, double s2) {
    return p.eps_s + (p.eps_a - p.eps_s) * sigma_clamp(s1) + (p.eps_b - p.eps_s) * sigma_clamp(s2);
}

inline double eps_value(const PermittivitySpec& p, double s1, double s2) {
    const double r = std::hypot(s1, s2);
    const auto chi = detail::chi_cutoff(p, r);
    if (chi.v == 1.0) return eps_separable(p, s1, s2);
    if (chi.v == 0.0) return p.far_value();
    return p.far_value() + chi.v * (eps_separable(p, s1, s2) - p.far_value());
}

inline std::array<double, 2> eps_grad(const PermittivitySpec& p, double s1, double s2) {
    const double r = std::hypot(s1, s2);
    const auto chi = detail::chi_cutoff(p, r);
    const double g1 = (p.eps_a - p.eps_s) * sigma_clamp_d(s1);
    const double g2 = (p.eps_b - p.eps_s) * sigma_clamp_d(s2);
    if (chi.d1 == 0.0) {
        if (chi.v == 0.0) return {0.0, 0.0};
        return {g1, g2};
    }
    const double diff = eps_separable(p, s1, s2) - p.far_value();
    const double u1 = s1 / r, u2 = s2 / r;
    return {chi.d1 * u1 * diff + chi.v * g1, chi.d1 * u2 * diff + chi.v * g2};
}

inline std::array<double, 4> eps_hess(const PermittivitySpec& p, double s1, double s2) {
    const double r = std::hypot(s1, s2);
    const auto chi = detail::chi_cutoff(p, r);
    const double h1 = (p.eps_a - p.eps_s) * sigma_clamp_dd(s1);
    const double h2 = (p.eps_b - p.eps_s) * sigma_clamp_dd(s2);
    if (chi.d1 == 0.0) {
        if (chi.v == 0.0) return {0, 0, 0, 0};
        return {h1, 0, 0, h2};
    }
    const double g1 = (p.eps_a - p.eps_s) * sigma_clamp_d(s1);
    const double g2 = (p.eps_b - p.eps_s) * sigma_clamp_d(s2);
    const double diff = eps_separable(p, s1, s2) - p.far_value();
    const double u1 = s1 / r, u2 = s2 / r;
    std::array<double, 4> H;
    const double proj11 = (1.0 - u1 * u1) / r, proj22 = (1.0 - u2 * u2) / r,
                 proj12 = -u1 * u2 / r;
    H[0] = chi.d2 * u1 * u1 * diff + chi.d1 * proj11 * diff + 2.0 * chi.d1 * u1 * g1 + chi.v * h1;
    H[1] = chi.d2 * u1 * u2 * diff + chi.d1 * proj12 * diff + chi.d1 * (u1 * g2 + u2 * g1);
    H[2] = H[1];
    H[3] = chi.d2 * u2 * u2 * diff + chi.d1 * proj22 * diff + 2.0 * chi.d1 * u2 * g2 + chi.v * h2;
    return H;
}

// Sampled sup of |grad eps| over its (compact) support; feeds the Lipschitz
// constant of the solution-map stability bound.
inline double eps_sup_grad_sampled(const PermittivitySpec& p, int n = 801) {
    const double R = p.cutoff_radius + 0.05;
    double m = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double s1 = -R + 2.0 * R * i / (n - 1);
            const double s2 = -R + 2.0 * R * j / (n - 1);
            const auto g = eps_grad(p, s1, s2);
            m = std::max(m, std::hypot(g[0], g[1]));
        }
    return m;
}

// ---------------------------------------------------------------------------
// Mobility. Matrices are row-major 3x3 with ker M = span(1,1,1) and uniform
// positive definiteness on the tangent plane.
using Mat3 = std::array<double, 9>;

inline constexpr Mat3 kProjectorMatrix = {2.0 / 3, -1.0 / 3, -1.0 / 3,
                                          -1.0 / 3, 2.0 / 3, -1.0 / 3,
                                          -1.0 / 3, -1.0 / 3, 2.0 / 3};

struct MobilitySpec {
    enum class Kind { ConstantProjector, ConstantMatrix, StateDependent };
    Kind kind = Kind::ConstantProjector;
    Mat3 m = kProjectorMatrix;    // ConstantMatrix payload
    std::string tag = "tanh12";   // StateDependent registry tag

    bool constant() const { return kind != Kind::StateDependent; }
};

inline constexpr double kTanh12Beta = 0.25;

inline Mat3 mobility(const MobilitySpec& spec, const std::array<double, 3>& s) {
    switch (spec.kind) {
        case MobilitySpec::Kind::ConstantProjector: return kProjectorMatrix;
        case MobilitySpec::Kind::ConstantMatrix: return spec.m;
        case MobilitySpec::Kind::StateDependent: {
            if (spec.tag != "tanh12")
                throw std::invalid_argument("mobility: unknown state-dependent tag '" + spec.tag + "'");
            const double g = kTanh12Beta * std::tanh(s[0] - s[1]);
            Mat3 m = kProjectorMatrix;
            m[0] += 0.5 * g; m[1] -= 0.5 * g;
            m[3] -= 0.5 * g; m[4] += 0.5 * g;
            return m;
        }
    }
    throw std::logic_error("mobility: bad kind");
}

// Smallest eigenvalue of M restricted to the tangent plane (orthonormal basis
// (1,-1,0)/sqrt2, (1,1,-2)/sqrt6).
inline double tangent_min_eig(const Mat3& m) {
    const double b1[3] = {1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0};
    const double b2[3] = {1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0)};
    auto quad = [&](const double* u, const double* v) {
        double s = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += u[i] * m[size_t(3 * i + j)] * v[j];
        return s;
    };
    const double a = quad(b1, b1), b = quad(b1, b2), d = quad(b2, b2);
    const double mid = 0.5 * (a + d), off = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return mid - off;
}

// Structural constants used by the dual-norm machinery and Lemma 2.1 checks.
inline double mobility_lambda0(const MobilitySpec& spec) {
    switch (spec.kind) {
        case MobilitySpec::Kind::ConstantProjector: return 1.0;
        case MobilitySpec::Kind::ConstantMatrix: return tangent_min_eig(spec.m);
        case MobilitySpec::Kind::StateDependent: return 1.0 - kTanh12Beta;
    }
    return 0.0;
}
// Certified Lipschitz constant for Lemma 2.1 (zero for constant mobilities):
// ||M(s)-M(s')||_op <= sqrt(2) beta |s-s'|, declared with margin as 2 beta.
inline double mobility_lipschitz(const MobilitySpec& spec) {
    return spec.constant() ? 0.0 : 2.0 * kTanh12Beta;
}

inline std::vector<std::string> validate_mobility(const MobilitySpec& spec) {
    std::vector<std::string> bad;
    if (spec.kind == MobilitySpec::Kind::StateDependent && spec.tag != "tanh12") {
        bad.push_back("mobility: unknown state-dependent tag '" + spec.tag + "'");
        return bad;
    }
    // sample a few states; constant specs are covered by the single sample
    const std::array<std::array<double, 3>, 3> probes = {{{0.3, 0.3, 0.4}, {1, 0, 0}, {-2, 5, 7}}};
    for (const auto& s : probes) {
        const Mat3 m = mobility(spec, s);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < i; ++j)
                if (std::abs(m[size_t(3 * i + j)] - m[size_t(3 * j + i)]) > 1e-12) {
                    bad.push_back("mobility: matrix is not symmetric");
                    return bad;
                }
        for (int i = 0; i < 3; ++i) {
            const double r = m[size_t(3 * i)] + m[size_t(3 * i + 1)] + m[size_t(3 * i + 2)];
            if (std::abs(r) > 1e-12) {
                bad.push_back("mobility: (1,1,1) is not in the kernel");
                return bad;
            }
        }
        if (!(tangent_min_eig(m) > 0)) {
            bad.push_back("mobility: not positive definite on the tangent plane");
            return bad;
        }
        if (spec.constant()) break;
    }
    return bad;
}

// ---------------------------------------------------------------------------
struct ModelParams {
    std::array<double, 3> gamma = {1e-3, 1e-3, 1e-3};
    std::array<double, 3> theta = {1.0, 1.0, 1.0};
    double alpha_aa = 0.0, alpha_ab = 0.0, alpha_bb = 0.0;
    double delta = 1e-4;
    double tau = 1e-3;
    MobilitySpec mobility;
    PermittivitySpec permittivity;

    double alpha(int i, int j) const {
        if (i == 0 && j == 0) return alpha_aa;
        if (i == 1 && j == 1) return alpha_bb;
        return alpha_ab;
    }
};

inline std::vector<std::string> validate_params(const ModelParams& p) {
    std::vector<std::string> bad;
    for (int i = 0; i < 3; ++i) {
        if (!(p.gamma[size_t(i)] > 0)) bad.push_back("model: gamma must be > 0");
        if (!(p.theta[size_t(i)] > 0)) bad.push_back("model: theta must be > 0");
    }
    if (!(p.delta > 0 && p.delta < kDeltaCap))
        bad.push_back("model: delta must lie in (0, 1/3)");
    if (!(p.tau > 0)) bad.push_back("model: tau must be > 0");
    for (auto& s : validate_mobility(p.mobility)) bad.push_back(s);
    for (auto& s : validate_permittivity(p.permittivity)) bad.push_back(s);
    return bad;
}

// Regularized free-energy density F_delta and its gradient. The quartic
// penalty is delta * sum_i s_i^4 (the form whose derivative appears in the
// discrete Euler-Lagrange system).
inline double f_delta(const std::array<double, 3>& s, const ModelParams& p) {
    double v = interaction_value(s);
    for (int i = 0; i < 3; ++i) {
        const double si = s[size_t(i)];
        v += p.theta[size_t(i)] * psi_delta(0, si, p.delta) + p.delta * si * si * si * si;
    }
    return v;
}

inline std::array<double, 3> grad_f_delta(const std::array<double, 3>& s, const ModelParams& p) {
    std::array<double, 3> g = interaction_grad(s);
    for (int i = 0; i < 3; ++i) {
        const double si = s[size_t(i)];
        g[size_t(i)] += p.theta[size_t(i)] * psi_delta(1, si, p.delta) +
                        4.0 * p.delta * si * si * si;
    }
    return g;
}

}  // namespace pfch
