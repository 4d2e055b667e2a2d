// CLI entry points: run, stationary, check, derivative-test.
// Exit codes: 0 all checks pass, 1 any check failure, 2 usage/config error.
#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfch/derivative_check.hpp"
#include "pfch/diagnostics.hpp"
#include "pfch/io.hpp"
#include "pfch/stepper.hpp"

namespace pfch {

namespace clidetail {

inline std::int64_t max_cells_from_env() {
    const char* e = std::getenv("PFCH_MAX_CELLS");
    if (!e) return kDefaultMaxCells;
    char* end = nullptr;
    const long long v = std::strtoll(e, &end, 10);
    if (end == e || *end != '\0' || v <= 0) return kDefaultMaxCells;
    return v;
}

inline bool load_config(const std::string& path, RunConfig& cfg) {
    std::string text;
    try {
        text = iodetail::read_file(path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return false;
    }
    ConfigResult res = parse_config(text);
    if (!res.ok()) {
        for (const auto& msg : res.errors) std::fprintf(stderr, "config error: %s\n", msg.c_str());
        return false;
    }
    cfg = res.cfg;
    return true;
}

inline void log_line(std::FILE* f, const std::string& msg) {
    if (!f) return;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    std::fprintf(f, "[%s] %s\n", buf, msg.c_str());
    std::fflush(f);
}

struct Overrides {
    std::optional<std::string> out;
    std::optional<double> t_end;
    std::optional<std::uint64_t> seed;
    std::optional<int> snapshot_every;
};

inline void apply(const Overrides& o, RunConfig& cfg) {
    if (o.out) cfg.output.dir = *o.out;
    if (o.t_end) cfg.output.t_end = *o.t_end;
    if (o.seed) {
        cfg.initial.seed = *o.seed;
        cfg.initial.seed_set = true;
    }
    if (o.snapshot_every) cfg.output.snapshot_every = *o.snapshot_every;
}

inline std::vector<CheckReport> run_series_checks(const DiagnosticsSeries& series,
                                                  double grad_tol) {
    return {check_energy_inequality(series), check_mass_conservation(series),
            check_sum_constraint(series), check_confinement(series),
            check_el_residual(series, grad_tol)};
}

inline int report_checks(const std::vector<CheckReport>& checks, const std::string& verdict_path) {
    bool all = true;
    for (const auto& c : checks) {
        std::printf("%-28s worst=%-13.5g threshold=%-13.5g %s\n", c.name.c_str(), c.worst,
                    c.threshold, c.pass ? "pass" : "FAIL");
        all = all && c.pass;
    }
    if (!verdict_path.empty()) write_verdict(verdict_path, checks);
    return all ? 0 : 1;
}

inline int simulate(const RunConfig& cfg, bool stationary_mode) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output.dir, ec);
    const std::string dir = cfg.output.dir;
    std::FILE* log = std::fopen((dir + "/run.log").c_str(), "w");

    PhaseState state;
    ScalarField e0x, e0y;
    GridSpec grid;
    try {
        grid = cfg.grid(max_cells_from_env());
        state = init_state(cfg, max_cells_from_env());
        e0x = build_e0x(cfg, grid);
        e0y = build_e0y(cfg, grid);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        if (log) std::fclose(log);
        return 2;
    }
    log_line(log, stationary_mode ? "stationary run started" : "run started");

    DiagnosticsSeries series;
    int snap_count = 0;
    auto snapshot_path = [&](int idx) {
        char name[64];
        std::snprintf(name, sizeof name, "snap_%06d.pfch", idx);
        return dir + "/" + name;
    };
    bool converged = true;
    try {
        StepEngine engine(cfg.model, cfg.step, e0x, e0y);
        ScalarField phi(grid);
        StepResult init = engine.evaluate(state, phi);
        series.rows.push_back(make_record(0.0, init, engine.params()));

        if (!stationary_mode) {
            double t = 0;
            int k = 0;
            while (t < cfg.output.t_end - 1e-15) {
                StepResult r = engine.step(state, phi);
                t += r.accepted_tau;
                ++k;
                series.rows.push_back(make_record(t, r, engine.params()));
                if (cfg.output.snapshot_every > 0 && k % cfg.output.snapshot_every == 0)
                    write_snapshot(snapshot_path(++snap_count), snapshot_of(state, phi));
            }
        } else {
            double t = 0;
            bool done = init.stat_residual <= cfg.output.stat_tol * (1.0 + init.w_norm);
            const auto t0 = std::chrono::steady_clock::now();
            for (long k = 1; k <= cfg.output.max_steps && !done; ++k) {
                StepResult r = engine.step(state, phi);
                t += r.accepted_tau;
                series.rows.push_back(make_record(t, r, engine.params()));
                if (cfg.output.snapshot_every > 0 && k % cfg.output.snapshot_every == 0)
                    write_snapshot(snapshot_path(++snap_count), snapshot_of(state, phi));
                done = r.stat_residual <= cfg.output.stat_tol * (1.0 + r.w_norm);
                if (cfg.output.wall_budget_s > 0 &&
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >
                        cfg.output.wall_budget_s)
                    break;
            }
            converged = done;
            if (!done)
                std::fprintf(stderr, "stationary: budget exhausted before reaching stat_tol\n");
        }
        write_snapshot(dir + "/final.pfch", snapshot_of(state, phi));
        write_series(dir + "/" + cfg.output.series, series);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        log_line(log, std::string("aborted: ") + e.what());
        if (log) std::fclose(log);
        return 1;
    }
    log_line(log, "finished");
    if (log) std::fclose(log);

    const int rc = report_checks(run_series_checks(series, cfg.step.grad_tol), dir + "/verdict.txt");
    return (!converged && stationary_mode) ? 1 : rc;
}

}  // namespace clidetail

inline int cli(const std::vector<std::string>& args) {
    CLI::App app{"pfch: ternary copolymer/homopolymer phase-field simulator with electrostatics"};
    app.require_subcommand(1);

    clidetail::Overrides ov;
    std::string config_path, series_path, out_path;
    double grad_tol = 1e-8;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file")->required();
        sub->add_option("--out", ov.out, "output directory override");
        sub->add_option("--t-end", ov.t_end, "final time override");
        sub->add_option("--seed", ov.seed, "noise seed override");
        sub->add_option("--snapshot-every", ov.snapshot_every, "snapshot cadence override");
    };
    CLI::App* runc = app.add_subcommand("run", "advance the gradient flow to t_end");
    add_common(runc);
    CLI::App* stat = app.add_subcommand("stationary", "iterate to a stationary state");
    add_common(stat);
    CLI::App* chk = app.add_subcommand("check", "replay a saved series through the diagnostics");
    chk->add_option("--series", series_path, "series csv path")->required();
    chk->add_option("--grad-tol", grad_tol, "Euler-Lagrange residual threshold");
    chk->add_option("--verdict", out_path, "verdict output path");
    CLI::App* dt = app.add_subcommand("derivative-test",
                                      "electrostatic derivative and stability verification");
    dt->add_option("--config", config_path, "config file (optional; defaults otherwise)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (runc->parsed() || stat->parsed()) {
        RunConfig cfg;
        if (!clidetail::load_config(config_path, cfg)) return 2;
        clidetail::apply(ov, cfg);
        return clidetail::simulate(cfg, stat->parsed());
    }
    if (chk->parsed()) {
        DiagnosticsSeries series;
        try {
            series = read_series(series_path);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 2;
        }
        if (out_path.empty()) out_path = series_path + ".verdict";
        return clidetail::report_checks(clidetail::run_series_checks(series, grad_tol), out_path);
    }
    if (dt->parsed()) {
        GridSpec g;
        PermittivitySpec perm;
        ScalarField e0x, e0y;
        if (!config_path.empty()) {
            RunConfig cfg;
            if (!clidetail::load_config(config_path, cfg)) return 2;
            try {
                g = cfg.grid(clidetail::max_cells_from_env());
            } catch (const std::exception& e) {
                std::fprintf(stderr, "error: %s\n", e.what());
                return 2;
            }
            perm = cfg.model.permittivity;
            e0x = build_e0x(cfg, g);
            e0y = build_e0y(cfg, g);
        } else {
            g = GridSpec::make(48, 48, 1.0, 1.0);
            e0x = ScalarField(g, 1.0);
            e0y = ScalarField(g, 0.0);
        }
        DerivativeCheckConfig dc;
        dc.samples = 10;
        auto rows = derivative_check(perm, e0x, e0y, dc);
        auto stab = stability_suite(perm, e0x, e0y, 10, dc.tol);
        rows.insert(rows.end(), stab.begin(), stab.end());
        bool all = true;
        std::printf("%-26s %-14s %-22s %s\n", "check", "value", "window", "result");
        for (const auto& r : rows) {
            std::printf("%-26s %-14.6g [%.3g, %.3g]%*s %s\n", r.name.c_str(), r.value, r.lo, r.hi,
                        6, "", r.pass ? "pass" : "FAIL");
            all = all && r.pass;
        }
        return all ? 0 : 1;
    }
    return 2;
}

}  // namespace pfch
