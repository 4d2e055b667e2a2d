// Configuration parsing, deterministic initial conditions, snapshot and
// time-series persistence, and the CLI entry points.
//
// Config format: UTF-8 key = value lines under [grid], [model], [step],
// [initial], [field], [output]; '#' starts a comment. The full key list is
// documented in docs/config-reference.md. Validation collects every
// violation, not just the first.
#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pfch/diagnostics.hpp"
#include "pfch/stepper.hpp"

namespace pfch {

// ---------------------------------------------------------------------------
// Seeded noise: Knuth MMIX 64-bit linear congruential generator.
struct Lcg64 {
    std::uint64_t x;
    explicit Lcg64(std::uint64_t seed) : x(seed) {}
    std::uint64_t next() {
        x = x * 6364136223846793005ull + 1442695040888963407ull;
        return x;
    }
    // uniform in [-1, 1) from the top 53 bits
    double uniform_pm1() { return 2.0 * (double(next() >> 11) * (1.0 / 9007199254740992.0)) - 1.0; }
};

// ---------------------------------------------------------------------------
struct InitialSpec {
    enum class Kind { UniformNoise, FromFile };
    Kind kind = Kind::UniformNoise;
    std::array<double, 3> m = {0.3, 0.3, 0.4};
    double amplitude = 0.05;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double margin = 0.01;
    std::string path;
};

struct FieldSpec {
    enum class Kind { Constant, PolyGradient };
    Kind kind = Kind::Constant;
    double ex = 1.0, ey = 0.0;
    std::array<double, 9> coeffs = {0, 0, 0, 0, 0, 0, 0, 0, 0};  // c[3i+j] x^i y^j
};

struct OutputSpec {
    std::string dir = "out";
    std::string series = "series.csv";
    int snapshot_every = 0;  // 0 = final snapshot only
    double t_end = 0.2;
    int store_every = 1;
    double stat_tol = 1e-6;
    long max_steps = 100000;
    double wall_budget_s = 0;  // 0 = unlimited
};

struct RunConfig {
    int nx = 64, ny = 64;
    double lx = 1.0, ly = 1.0;
    ModelParams model;
    StepConfig step;
    InitialSpec initial;
    FieldSpec field;
    OutputSpec output;

    GridSpec grid(std::int64_t max_cells = kDefaultMaxCells) const {
        return GridSpec::make(nx, ny, lx, ly, max_cells);
    }
};

// ---------------------------------------------------------------------------
namespace cfgdetail {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Tree {
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::vector<std::string> errors;
};

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline Tree lex(const std::string& text) {
    Tree t;
    std::string section;
    int line = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string raw = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::string s = trim(raw);
        if (s.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                t.errors.push_back("line " + std::to_string(line) + ": malformed section header");
                continue;
            }
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                t.errors.push_back("line " + std::to_string(line) + ": empty section name");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos) {
            t.errors.push_back("line " + std::to_string(line) + ": expected key = value");
            continue;
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (section.empty()) {
            t.errors.push_back("line " + std::to_string(line) + ": key '" + key +
                               "' outside any section");
            continue;
        }
        if (key.empty()) {
            t.errors.push_back("line " + std::to_string(line) + ": empty key");
            continue;
        }
        auto& sec = t.sections[section];
        if (sec.count(key))
            t.errors.push_back("line " + std::to_string(line) + ": duplicate key [" + section +
                               "] " + key);
        sec[key] = Entry{val, line, false};
        if (pos > text.size()) break;
    }
    return t;
}

struct Reader {
    Tree& t;
    std::vector<std::string>& errors;

    std::optional<Entry*> find(const std::string& sec, const std::string& key) {
        auto s = t.sections.find(sec);
        if (s == t.sections.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        k->second.used = true;
        return &k->second;
    }
    void bad(const std::string& sec, const std::string& key, int line, const std::string& what) {
        errors.push_back("[" + sec + "] " + key + " (line " + std::to_string(line) + "): " + what);
    }
    void real(const std::string& sec, const std::string& key, double& dst) {
        auto e = find(sec, key);
        if (!e) return;
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod((*e)->value.c_str(), &end);
        if (errno || end == (*e)->value.c_str() || *end != '\0')
            bad(sec, key, (*e)->line, "not a real number: '" + (*e)->value + "'");
        else
            dst = v;
    }
    void integer(const std::string& sec, const std::string& key, long& dst) {
        auto e = find(sec, key);
        if (!e) return;
        errno = 0;
        char* end = nullptr;
        const long v = std::strtol((*e)->value.c_str(), &end, 10);
        if (errno || end == (*e)->value.c_str() || *end != '\0')
            bad(sec, key, (*e)->line, "not an integer: '" + (*e)->value + "'");
        else
            dst = v;
    }
    void integer(const std::string& sec, const std::string& key, int& dst) {
        long v = dst;
        integer(sec, key, v);
        dst = int(v);
    }
    void uinteger(const std::string& sec, const std::string& key, std::uint64_t& dst, bool& set) {
        auto e = find(sec, key);
        if (!e) return;
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull((*e)->value.c_str(), &end, 10);
        if (errno || end == (*e)->value.c_str() || *end != '\0')
            bad(sec, key, (*e)->line, "not an unsigned integer: '" + (*e)->value + "'");
        else {
            dst = v;
            set = true;
        }
    }
    void word(const std::string& sec, const std::string& key, std::string& dst) {
        auto e = find(sec, key);
        if (e) dst = (*e)->value;
    }
    template <size_t N>
    void reals(const std::string& sec, const std::string& key, std::array<double, N>& dst,
               bool& set) {
        auto e = find(sec, key);
        if (!e) return;
        std::array<double, N> out{};
        const char* c = (*e)->value.c_str();
        char* end = nullptr;
        size_t got = 0;
        while (*c && got < N) {
            errno = 0;
            const double v = std::strtod(c, &end);
            if (end == c) break;
            out[got++] = v;
            c = end;
            while (*c == ',' || std::isspace(static_cast<unsigned char>(*c))) ++c;
        }
        if (got != N || *c != '\0')
            bad(sec, key, (*e)->line, "expected " + std::to_string(N) + " numbers");
        else {
            dst = out;
            set = true;
        }
    }
    void sweep_unknown(const std::set<std::string>& known_sections,
                       const std::map<std::string, std::set<std::string>>& known_keys) {
        for (auto& [sec, entries] : t.sections) {
            if (!known_sections.count(sec)) {
                errors.push_back("[" + sec + "]: unknown section");
                continue;
            }
            for (auto& [key, e] : entries)
                if (!e.used && !known_keys.at(sec).count(key))
                    errors.push_back("[" + sec + "] " + key + " (line " + std::to_string(e.line) +
                                     "): unknown key");
        }
    }
};

}  // namespace cfgdetail

struct ConfigResult {
    RunConfig cfg;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

inline ConfigResult parse_config(const std::string& text) {
    ConfigResult out;
    cfgdetail::Tree tree = cfgdetail::lex(text);
    out.errors = tree.errors;
    cfgdetail::Reader r{tree, out.errors};
    RunConfig& c = out.cfg;

    r.integer("grid", "nx", c.nx);
    r.integer("grid", "ny", c.ny);
    r.real("grid", "lx", c.lx);
    r.real("grid", "ly", c.ly);

    r.real("model", "gamma_a", c.model.gamma[0]);
    r.real("model", "gamma_b", c.model.gamma[1]);
    r.real("model", "gamma_s", c.model.gamma[2]);
    r.real("model", "theta_a", c.model.theta[0]);
    r.real("model", "theta_b", c.model.theta[1]);
    r.real("model", "theta_s", c.model.theta[2]);
    r.real("model", "alpha_aa", c.model.alpha_aa);
    r.real("model", "alpha_ab", c.model.alpha_ab);
    r.real("model", "alpha_bb", c.model.alpha_bb);
    r.real("model", "delta", c.model.delta);
    r.real("model", "eps_a", c.model.permittivity.eps_a);
    r.real("model", "eps_b", c.model.permittivity.eps_b);
    r.real("model", "eps_s", c.model.permittivity.eps_s);
    r.real("model", "cutoff_radius", c.model.permittivity.cutoff_radius);
    std::string mob = "projector";
    r.word("model", "mobility", mob);
    bool mob_matrix_set = false;
    std::array<double, 9> mm{};
    r.reals("model", "mobility_matrix", mm, mob_matrix_set);
    if (mob == "projector") {
        c.model.mobility.kind = MobilitySpec::Kind::ConstantProjector;
        if (mob_matrix_set)
            out.errors.push_back("[model] mobility_matrix: only valid with mobility = matrix");
    } else if (mob == "matrix") {
        c.model.mobility.kind = MobilitySpec::Kind::ConstantMatrix;
        if (!mob_matrix_set)
            out.errors.push_back("[model] mobility_matrix: required when mobility = matrix");
        else
            c.model.mobility.m = mm;
    } else if (mob == "tanh12") {
        c.model.mobility.kind = MobilitySpec::Kind::StateDependent;
        c.model.mobility.tag = "tanh12";
    } else {
        out.errors.push_back("[model] mobility: must be projector, matrix or tanh12");
    }

    r.real("step", "tau", c.step.tau);
    r.real("step", "grad_tol", c.step.grad_tol);
    r.integer("step", "max_inner", c.step.max_inner);
    r.real("step", "armijo_c", c.step.armijo_c);
    r.real("step", "backtrack", c.step.backtrack);
    r.real("step", "tau_min", c.step.tau_min);
    r.real("step", "cg_tol", c.step.cg_tol);

    std::string ikind = "uniform_noise";
    r.word("initial", "kind", ikind);
    if (ikind == "uniform_noise")
        c.initial.kind = InitialSpec::Kind::UniformNoise;
    else if (ikind == "file")
        c.initial.kind = InitialSpec::Kind::FromFile;
    else
        out.errors.push_back("[initial] kind: must be uniform_noise or file");
    r.real("initial", "m_a", c.initial.m[0]);
    r.real("initial", "m_b", c.initial.m[1]);
    r.real("initial", "m_s", c.initial.m[2]);
    r.real("initial", "amplitude", c.initial.amplitude);
    r.uinteger("initial", "seed", c.initial.seed, c.initial.seed_set);
    r.real("initial", "margin", c.initial.margin);
    r.word("initial", "path", c.initial.path);

    std::string fkind = "constant";
    r.word("field", "kind", fkind);
    bool coeffs_set = false;
    if (fkind == "constant")
        c.field.kind = FieldSpec::Kind::Constant;
    else if (fkind == "poly_gradient")
        c.field.kind = FieldSpec::Kind::PolyGradient;
    else
        out.errors.push_back("[field] kind: must be constant or poly_gradient");
    r.real("field", "ex", c.field.ex);
    r.real("field", "ey", c.field.ey);
    r.reals("field", "coeffs", c.field.coeffs, coeffs_set);
    if (c.field.kind == FieldSpec::Kind::PolyGradient && !coeffs_set)
        out.errors.push_back("[field] coeffs: required when kind = poly_gradient");

    r.word("output", "dir", c.output.dir);
    r.word("output", "series", c.output.series);
    r.integer("output", "snapshot_every", c.output.snapshot_every);
    r.real("output", "t_end", c.output.t_end);
    r.integer("output", "store_every", c.output.store_every);
    r.real("output", "stat_tol", c.output.stat_tol);
    r.integer("output", "max_steps", c.output.max_steps);
    r.real("output", "wall_budget_s", c.output.wall_budget_s);

    const std::set<std::string> secs = {"grid", "model", "step", "initial", "field", "output"};
    const std::map<std::string, std::set<std::string>> keys = {
        {"grid", {"nx", "ny", "lx", "ly"}},
        {"model",
         {"gamma_a", "gamma_b", "gamma_s", "theta_a", "theta_b", "theta_s", "alpha_aa", "alpha_ab",
          "alpha_bb", "delta", "eps_a", "eps_b", "eps_s", "cutoff_radius", "mobility",
          "mobility_matrix"}},
        {"step", {"tau", "grad_tol", "max_inner", "armijo_c", "backtrack", "tau_min", "cg_tol"}},
        {"initial", {"kind", "m_a", "m_b", "m_s", "amplitude", "seed", "margin", "path"}},
        {"field", {"kind", "ex", "ey", "coeffs"}},
        {"output",
         {"dir", "series", "snapshot_every", "t_end", "store_every", "stat_tol", "max_steps",
          "wall_budget_s"}}};
    r.sweep_unknown(secs, keys);

    // semantic validation
    if (c.nx < 4 || c.ny < 4) out.errors.push_back("[grid] nx, ny: must be >= 4");
    if (!(c.lx > 0) || !(c.ly > 0)) out.errors.push_back("[grid] lx, ly: must be > 0");
    for (auto& e : validate_params(c.model)) out.errors.push_back(e);
    for (auto& e : validate_step_config(c.step)) out.errors.push_back(e);
    c.model.tau = c.step.tau;
    c.step.delta = c.model.delta;
    if (c.initial.kind == InitialSpec::Kind::UniformNoise) {
        const double msum = c.initial.m[0] + c.initial.m[1] + c.initial.m[2];
        if (std::abs(msum - 1.0) > 1e-12)
            out.errors.push_back("[initial] m_a+m_b+m_s must equal 1 (got " +
                                 std::to_string(msum) + ")");
        if (!(c.initial.amplitude >= 0))
            out.errors.push_back("[initial] amplitude: must be >= 0");
        const double mmin = std::min({c.initial.m[0], c.initial.m[1], c.initial.m[2]});
        if (!(mmin - 2.0 * c.initial.amplitude >= c.initial.margin))
            out.errors.push_back(
                "[initial] m, amplitude: need min(m) - 2*amplitude >= margin so the state stays "
                "strictly inside the simplex (reduce amplitude or move m inward)");
        if (c.initial.amplitude > 0 && !c.initial.seed_set)
            out.errors.push_back("[initial] seed: mandatory when amplitude > 0");
    } else if (c.initial.path.empty()) {
        out.errors.push_back("[initial] path: required when kind = file");
    }
    if (c.output.t_end < 0) out.errors.push_back("[output] t_end: must be >= 0");
    if (c.output.store_every < 1) out.errors.push_back("[output] store_every: must be >= 1");
    return out;
}

// ---------------------------------------------------------------------------
inline PhaseState init_state(const RunConfig& cfg, std::int64_t max_cells = kDefaultMaxCells);

inline ScalarField build_e0x(const RunConfig& cfg, const GridSpec& g) {
    ScalarField f(g);
    if (cfg.field.kind == FieldSpec::Kind::Constant) {
        for (auto& x : f.v) x = cfg.field.ex;
        return f;
    }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xc(i), y = g.yc(j);
            double v = 0;
            for (int p = 1; p <= 2; ++p)
                for (int q = 0; q <= 2; ++q)
                    v += cfg.field.coeffs[size_t(3 * p + q)] * p * std::pow(x, p - 1) * std::pow(y, q);
            f(i, j) = v;
        }
    return f;
}

inline ScalarField build_e0y(const RunConfig& cfg, const GridSpec& g) {
    ScalarField f(g);
    if (cfg.field.kind == FieldSpec::Kind::Constant) {
        for (auto& x : f.v) x = cfg.field.ey;
        return f;
    }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xc(i), y = g.yc(j);
            double v = 0;
            for (int p = 0; p <= 2; ++p)
                for (int q = 1; q <= 2; ++q)
                    v += cfg.field.coeffs[size_t(3 * p + q)] * q * std::pow(x, p) * std::pow(y, q - 1);
            f(i, j) = v;
        }
    return f;
}

// ---------------------------------------------------------------------------
// Snapshot format PFCH1: magic (5 bytes), u32 LE nx, ny, field count, then the
// name table (u32 LE length + UTF-8 bytes per field), then per field nx*ny
// f64 LE row-major. Round-trips are bit exact; writes go through a temp file
// and a rename.
namespace iodetail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf.push_back(char((v >> (8 * k)) & 0xff));
}
inline void put_f64(std::string& buf, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int k = 0; k < 8; ++k) buf.push_back(char((v >> (8 * k)) & 0xff));
}
inline std::uint32_t get_u32(const std::string& buf, size_t& pos) {
    if (pos + 4 > buf.size()) throw std::runtime_error("snapshot: truncated u32");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<unsigned char>(buf[pos + size_t(k)])) << (8 * k);
    pos += 4;
    return v;
}
inline double get_f64(const std::string& buf, size_t& pos) {
    if (pos + 8 > buf.size()) throw std::runtime_error("snapshot: truncated f64");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<unsigned char>(buf[pos + size_t(k)])) << (8 * k);
    pos += 8;
    return std::bit_cast<double>(v);
}

inline void write_file_atomic(const std::string& path, const std::string& data) {
    const std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for write: " + tmp);
    if (!data.empty() && std::fwrite(data.data(), 1, data.size(), f) != data.size()) {
        std::fclose(f);
        throw std::runtime_error("short write: " + tmp);
    }
    std::fclose(f);
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string out;
    char buf[1 << 16];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

}  // namespace iodetail

struct Snapshot {
    std::uint32_t nx = 0, ny = 0;
    std::vector<std::pair<std::string, std::vector<double>>> fields;
};

inline void write_snapshot(const std::string& path, const Snapshot& s) {
    std::string buf;
    buf.append("PFCH1", 5);
    iodetail::put_u32(buf, s.nx);
    iodetail::put_u32(buf, s.ny);
    iodetail::put_u32(buf, std::uint32_t(s.fields.size()));
    for (const auto& [name, data] : s.fields) {
        iodetail::put_u32(buf, std::uint32_t(name.size()));
        buf.append(name);
    }
    const size_t cells = size_t(s.nx) * size_t(s.ny);
    for (const auto& [name, data] : s.fields) {
        if (data.size() != cells)
            throw std::invalid_argument("write_snapshot: field '" + name + "' has wrong size");
        for (double d : data) iodetail::put_f64(buf, d);
    }
    iodetail::write_file_atomic(path, buf);
}

inline Snapshot read_snapshot(const std::string& path) {
    const std::string buf = iodetail::read_file(path);
    if (buf.size() < 5 || buf.compare(0, 5, "PFCH1") != 0)
        throw std::runtime_error("read_snapshot: magic mismatch in " + path);
    size_t pos = 5;
    Snapshot s;
    s.nx = iodetail::get_u32(buf, pos);
    s.ny = iodetail::get_u32(buf, pos);
    const std::uint32_t count = iodetail::get_u32(buf, pos);
    const std::uint64_t cells = std::uint64_t(s.nx) * std::uint64_t(s.ny);
    if (s.nx > (1u << 21) || s.ny > (1u << 21))
        throw std::runtime_error("read_snapshot: dimension overflow");
    s.fields.resize(count);
    for (auto& [name, data] : s.fields) {
        const std::uint32_t len = iodetail::get_u32(buf, pos);
        if (pos + len > buf.size()) throw std::runtime_error("read_snapshot: truncated name table");
        name.assign(buf, pos, len);
        pos += len;
    }
    for (auto& [name, data] : s.fields) {
        data.resize(cells);
        for (auto& d : data) d = iodetail::get_f64(buf, pos);
    }
    if (pos != buf.size()) throw std::runtime_error("read_snapshot: trailing bytes in " + path);
    return s;
}

// ---------------------------------------------------------------------------
inline PhaseState init_state(const RunConfig& cfg, std::int64_t max_cells) {
    const GridSpec g = cfg.grid(max_cells);
    PhaseState st;
    st.c = Field3(g);
    if (cfg.initial.kind == InitialSpec::Kind::FromFile) {
        Snapshot s = read_snapshot(cfg.initial.path);
        if (int(s.nx) != g.nx || int(s.ny) != g.ny)
            throw std::runtime_error("init_state: snapshot grid does not match config");
        bool got_a = false, got_b = false, got_s = false;
        for (auto& [name, data] : s.fields) {
            if (name == "c_a") { st.c.a.v = data; got_a = true; }
            if (name == "c_b") { st.c.b.v = data; got_b = true; }
            if (name == "c_s") { st.c.s.v = data; got_s = true; }
        }
        if (!got_a || !got_b || !got_s)
            throw std::runtime_error("init_state: snapshot lacks c_a/c_b/c_s fields");
        for (int i = 0; i < 3; ++i) st.target_mean[size_t(i)] = mean(st.c.comp(i));
        if (max_sum_violation(st.c, 1.0) > 1e-9)
            throw std::runtime_error("init_state: snapshot state violates the sum constraint");
        return st;
    }
    const auto& init = cfg.initial;
    Lcg64 rng(init.seed);
    for (auto& x : st.c.a.v) x = init.m[0] + init.amplitude * rng.uniform_pm1();
    for (auto& x : st.c.b.v) x = init.m[1] + init.amplitude * rng.uniform_pm1();
    // re-center to the exact target means, then close the simplex
    double shift = init.m[0] - mean(st.c.a);
    for (auto& x : st.c.a.v) x += shift;
    shift = init.m[1] - mean(st.c.b);
    for (auto& x : st.c.b.v) x += shift;
    for (size_t n = 0; n < st.c.s.v.size(); ++n) st.c.s.v[n] = 1.0 - st.c.a.v[n] - st.c.b.v[n];
    st.target_mean = init.m;
    double lo = 1, hi = 0;
    for (int i = 0; i < 3; ++i)
        for (double x : st.c.comp(i).v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    if (lo < init.margin || hi > 1.0 - init.margin)
        throw std::runtime_error(
            "init_state: generated state leaves [margin, 1-margin]; reduce amplitude or margin");
    return st;
}

// ---------------------------------------------------------------------------
// CSV time series; header names match the DiagnosticsSeries fields.
inline const char* series_header() {
    return "time,mass_a,mass_b,mass_s,e1,e2,e3,e4,total,augmented,dissipation,"
           "min_c_a,min_c_b,min_c_s,max_c_a,max_c_b,max_c_s,sum_violation,"
           "w_norm,w_mean_a,w_mean_b,w_mean_s,psi_lq_a,psi_lq_b,psi_lq_s,"
           "stat_residual,el_residual,inner_iters,accepted_tau";
}

inline std::string format_series(const DiagnosticsSeries& s) {
    std::string out;
    out += series_header();
    out += '\n';
    char line[2048];
    for (const auto& r : s.rows) {
        std::snprintf(line, sizeof line,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n",
                      r.time, r.mass[0], r.mass[1], r.mass[2], r.e1, r.e2, r.e3, r.e4, r.total,
                      r.augmented, r.dissipation, r.cmin[0], r.cmin[1], r.cmin[2], r.cmax[0],
                      r.cmax[1], r.cmax[2], r.sum_violation, r.w_norm, r.w_mean[0], r.w_mean[1],
                      r.w_mean[2], r.psi_lq[0], r.psi_lq[1], r.psi_lq[2], r.stat_residual,
                      r.el_residual, r.inner_iters, r.accepted_tau);
        out += line;
    }
    return out;
}

inline void write_series(const std::string& path, const DiagnosticsSeries& s) {
    iodetail::write_file_atomic(path, format_series(s));
}

inline DiagnosticsSeries read_series(const std::string& path) {
    const std::string text = iodetail::read_file(path);
    DiagnosticsSeries s;
    size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != series_header())
                throw std::runtime_error("read_series: unexpected header in " + path);
            first = false;
            continue;
        }
        std::array<double, 29> f{};
        const char* c = line.c_str();
        char* end = nullptr;
        for (size_t k = 0; k < f.size(); ++k) {
            f[k] = std::strtod(c, &end);
            if (end == c) throw std::runtime_error("read_series: bad row in " + path);
            c = end;
            if (*c == ',') ++c;
        }
        DiagRecord r;
        r.time = f[0];
        r.mass = {f[1], f[2], f[3]};
        r.e1 = f[4]; r.e2 = f[5]; r.e3 = f[6]; r.e4 = f[7];
        r.total = f[8]; r.augmented = f[9]; r.dissipation = f[10];
        r.cmin = {f[11], f[12], f[13]};
        r.cmax = {f[14], f[15], f[16]};
        r.sum_violation = f[17];
        r.w_norm = f[18];
        r.w_mean = {f[19], f[20], f[21]};
        r.psi_lq = {f[22], f[23], f[24]};
        r.stat_residual = f[25];
        r.el_residual = f[26];
        r.inner_iters = int(f[27]);
        r.accepted_tau = f[28];
        s.rows.push_back(r);
    }
    return s;
}

inline Snapshot snapshot_of(const PhaseState& st, const ScalarField& phi) {
    Snapshot s;
    s.nx = std::uint32_t(st.grid().nx);
    s.ny = std::uint32_t(st.grid().ny);
    s.fields = {{"c_a", st.c.a.v}, {"c_b", st.c.b.v}, {"c_s", st.c.s.v}, {"phi", phi.v}};
    return s;
}

}  // namespace pfch
