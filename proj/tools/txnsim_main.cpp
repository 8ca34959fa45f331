#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "txnsim/csv.hpp"
#include "txnsim/engine.hpp"
#include "txnsim/experiments.hpp"
#include "txnsim/node.hpp"
#include "txnsim/version.hpp"

using namespace txnsim;

namespace {

namespace fs = std::filesystem;

struct Common {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "flat key=value config file");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--set", c.sets, "override a config key (key=value, repeatable)");
    cmd->add_option("--seed", c.seed, "master seed override")->each([&](const std::string&) {
        c.seed_given = true;
    });
    cmd->add_option("--workers", c.workers, "max concurrent runs");
}

ExperimentConfig load(const Common& c) {
    ExperimentConfig cfg = c.config_path.empty() ? parse_config("", c.sets)
                                                 : parse_config_file(c.config_path, c.sets);
    if (c.seed_given) {
        cfg.base.seed = c.seed;
        cfg.validate();
    }
    return cfg;
}

double now_sec() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Single-cell commands derive the same per-cell seed the sweep would use.
SimConfig cell_config(const ExperimentConfig& cfg) {
    SimConfig sim = cfg.base;
    sim.seed = cell_seed(cfg.base.seed, sim.density, sim.capacity);
    sim.mean_ttf = std::numeric_limits<double>::infinity();
    return sim;
}

void emit_single_cell(const std::string& out_dir, const ExperimentConfig& cfg,
                      const SimConfig& sim, double r0, double r1, double m0,
                      const std::string& command, double wall) {
    CellResult row;
    row.density = sim.density;
    row.capacity = sim.capacity;
    row.seed_base = sim.seed;
    row.replications = cfg.replications;
    row.r0 = r0;
    row.r1 = r1;
    row.rho0 = (r1 > 0.0 && std::isfinite(r0) && std::isfinite(r1)) ? r0 / r1
                                                                    : std::numeric_limits<double>::quiet_NaN();
    row.m0 = m0;
    write_cells_csv((fs::path(out_dir) / "cells.csv").string(), {row});
    write_manifest((fs::path(out_dir) / "manifest.txt").string(), cfg, command, wall,
                   {{"master", cfg.base.seed}, {"cell", sim.seed}});
}

int cmd_run_once(const Common& c, const std::string& trace_path, const std::string& edges_path,
                 bool audit) {
    const double t0 = now_sec();
    const ExperimentConfig cfg = load(c);
    if (!c.out_dir.empty())
        ensure_writable_dir(c.out_dir);

    RunOptions opts;
    std::string trace;
    if (!trace_path.empty())
        opts.trace = &trace;
    opts.audit = audit;
    const RunMetrics m = run_simulation(cfg.base, opts);

    if (!trace_path.empty()) {
        std::ofstream f(trace_path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write trace file '" + trace_path + "'");
        f << trace;
    }
    if (!edges_path.empty()) {
        RngStream topo(cfg.base.seed, "topology");
        Network net = generate_er(cfg.base.n_nodes, cfg.base.density, topo);
        net.seed = cfg.base.seed;
        std::ofstream f(edges_path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write edge list '" + edges_path + "'");
        export_edge_list(net, f);
    }
    if (c.out_dir.empty()) {
        std::cout << m.to_text();
    } else {
        std::ofstream f(fs::path(c.out_dir) / "metrics.txt", std::ios::binary);
        f << m.to_text();
        write_manifest((fs::path(c.out_dir) / "manifest.txt").string(), cfg, "run-once",
                       now_sec() - t0, {{"master", cfg.base.seed}});
        std::cout << "phase=" << to_string(m.phase) << "\n";
    }
    return 0;
}

int cmd_find_rate(const Common& c, bool want_r1, double r0_given) {
    const double t0 = now_sec();
    const ExperimentConfig cfg = load(c);
    if (!c.out_dir.empty())
        ensure_writable_dir(c.out_dir);
    const SimConfig sim = cell_config(cfg);
    double r0 = std::numeric_limits<double>::quiet_NaN();
    double r1 = std::numeric_limits<double>::quiet_NaN();
    if (want_r1) {
        double lo = 0.0;
        if (r0_given >= 0.0) {
            lo = r0_given;
        }
        const RateSearch rs =
            find_r1(sim, cfg.replications, cfg.bisection_tolerance, c.workers, lo);
        r1 = rs.value;
        std::cout << "r1=" << format_g6(r1) << (rs.zero_flag ? " (zero_flag)" : "") << "\n";
    } else {
        const RateSearch rs = find_r0(sim, cfg.replications, cfg.bisection_tolerance, c.workers);
        r0 = rs.value;
        std::cout << "r0=" << format_g6(r0) << (rs.zero_flag ? " (zero_flag)" : "")
                  << (rs.threshold_reinterpreted ? " (abort_threshold_zero_aborts)" : "") << "\n";
    }
    if (!c.out_dir.empty())
        emit_single_cell(c.out_dir, cfg, sim, r0, r1, std::numeric_limits<double>::quiet_NaN(),
                         want_r1 ? "find-r1" : "find-r0", now_sec() - t0);
    return 0;
}

int cmd_find_m0(const Common& c, double r0_given) {
    const double t0 = now_sec();
    const ExperimentConfig cfg = load(c);
    if (!c.out_dir.empty())
        ensure_writable_dir(c.out_dir);
    const SimConfig sim = cell_config(cfg);
    double r0 = r0_given;
    if (!(r0 >= 0.0)) {
        r0 = find_r0(sim, cfg.replications, cfg.bisection_tolerance, c.workers).value;
        std::cout << "r0=" << format_g6(r0) << "\n";
    }
    const FaultSearch m0 = find_m0(sim, r0, cfg.replications, cfg.bisection_tolerance, c.workers);
    std::cout << "m0=" << format_g6(m0.m0) << " mean_ttf=" << format_g6(m0.mean_ttf) << "\n";
    if (!c.out_dir.empty())
        emit_single_cell(c.out_dir, cfg, sim, r0, std::numeric_limits<double>::quiet_NaN(), m0.m0,
                         "find-m0", now_sec() - t0);
    return 0;
}

int cmd_boundary(const Common& c, double r1_given) {
    const double t0 = now_sec();
    const ExperimentConfig cfg = load(c);
    const std::string out_dir = c.out_dir.empty() ? "." : c.out_dir;
    ensure_writable_dir(out_dir);
    const SimConfig sim = cell_config(cfg);
    double r0 = std::numeric_limits<double>::quiet_NaN();
    double r1 = r1_given;
    if (!(r1 > 0.0)) {
        r0 = find_r0(sim, cfg.replications, cfg.bisection_tolerance, c.workers).value;
        r1 = find_r1(sim, cfg.replications, cfg.bisection_tolerance, c.workers, r0).value;
        std::cout << "r0=" << format_g6(r0) << " r1=" << format_g6(r1) << "\n";
    }
    const auto points = trace_boundary(sim, r1, cfg.ray_angles, cfg.replications,
                                       cfg.bisection_tolerance, c.workers);
    write_boundary_csv((fs::path(out_dir) / "boundary.csv").string(), points);
    write_manifest((fs::path(out_dir) / "manifest.txt").string(), cfg, "boundary", now_sec() - t0,
                   {{"master", cfg.base.seed}, {"cell", sim.seed}});
    std::size_t nb = 0;
    for (const auto& p : points)
        nb += p.label == "boundary";
    std::cout << "boundary points: " << nb << " (of " << points.size() << " rows)\n";
    return 0;
}

int cmd_sweep(const Common& c) {
    const double t0 = now_sec();
    const ExperimentConfig cfg = load(c);
    const std::string out_dir = c.out_dir.empty() ? "." : c.out_dir;
    ensure_writable_dir(out_dir);
    const SweepResult res = sweep(cfg, c.workers);
    write_cells_csv((fs::path(out_dir) / "cells.csv").string(), res.cells);
    if (!res.p0_rows.empty())
        write_p0_csv((fs::path(out_dir) / "p0_sweep.csv").string(), res.p0_rows);
    std::vector<std::pair<std::string, std::uint64_t>> seeds{{"master", cfg.base.seed}};
    std::vector<std::string> notes;
    for (const auto& cell : res.cells) {
        const std::string tag =
            "d=" + format_g6(cell.density) + " C=" + std::to_string(cell.capacity);
        seeds.emplace_back("cell " + tag, cell.seed_base);
        if (!cell.note.empty())
            notes.push_back(tag + ": " + cell.note);
    }
    write_manifest((fs::path(out_dir) / "manifest.txt").string(), cfg, "sweep", now_sec() - t0,
                   seeds, notes);
    for (const auto& cell : res.cells)
        if (!cell.ok)
            std::cerr << "cell d=" << format_g6(cell.density) << " C=" << cell.capacity
                      << " failed: " << cell.note << "\n";
    std::cout << "cells: " << res.cells.size() << "\n";
    return 0;
}

int cmd_fit(const Common& c, const std::string& in_dir) {
    const std::string in = in_dir.empty() ? (c.out_dir.empty() ? "." : c.out_dir) : in_dir;
    const std::string out = c.out_dir.empty() ? in : c.out_dir;
    ensure_writable_dir(out);
    const auto cells = read_cells_csv((fs::path(in) / "cells.csv").string());
    std::vector<PhasePoint> boundary;
    if (fs::exists(fs::path(in) / "boundary.csv"))
        boundary = read_boundary_csv((fs::path(in) / "boundary.csv").string());
    const auto fits = compute_fits(cells, boundary);
    write_fits_csv((fs::path(out) / "fits.csv").string(), fits);
    std::cout << "fits: " << fits.size() << "\n";
    return 0;
}

int cmd_plot_data(const Common& c, const std::string& in_dir) {
    const std::string in = in_dir.empty() ? (c.out_dir.empty() ? "." : c.out_dir) : in_dir;
    const std::string out = c.out_dir.empty() ? in : c.out_dir;
    const auto cells = read_cells_csv((fs::path(in) / "cells.csv").string());
    if (cells.empty()) {
        ensure_writable_dir(out);
        std::cerr << "warning: empty cells.csv, nothing to plot\n";
        return 0;
    }
    const auto fits = read_fits_csv((fs::path(in) / "fits.csv").string());
    write_plot_data(out, cells, fits);
    std::cout << "plot data written to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transaction-network resilience simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common c_run, c_r0, c_r1, c_m0, c_bnd, c_sweep, c_fit, c_plot;
    std::string trace_path, edges_path, in_dir_fit, in_dir_plot;
    bool audit = false;
    double r0_given = -1.0, r0_for_m0 = -1.0, r1_given = -1.0;

    auto* run_once = app.add_subcommand("run-once", "single simulation run");
    add_common(run_once, c_run);
    run_once->add_option("--trace", trace_path, "write the event trace to this file");
    run_once->add_option("--export-edges", edges_path, "write the edge list to this file");
    run_once->add_flag("--audit", audit, "check conservation invariants at every event");

    auto* r0cmd = app.add_subcommand("find-r0", "largest abort-free injection rate");
    add_common(r0cmd, c_r0);

    auto* r1cmd = app.add_subcommand("find-r1", "largest choke-free injection rate");
    add_common(r1cmd, c_r1);
    r1cmd->add_option("--r0", r0_given, "known choke-free rate to start the bracket");

    auto* m0cmd = app.add_subcommand("find-m0", "smallest choking fault fraction at r0");
    add_common(m0cmd, c_m0);
    m0cmd->add_option("--r0", r0_for_m0, "injection rate to hold (computed when omitted)");

    auto* bndcmd = app.add_subcommand("boundary", "trace the resistive/dielectric boundary");
    add_common(bndcmd, c_bnd);
    bndcmd->add_option("--r1", r1_given, "known r1 (computed when omitted)");

    auto* sweepcmd = app.add_subcommand("sweep", "full (C, d) grid");
    add_common(sweepcmd, c_sweep);

    auto* fitcmd = app.add_subcommand("fit", "fit scaling laws from sweep output");
    add_common(fitcmd, c_fit);
    fitcmd->add_option("--in", in_dir_fit, "directory holding cells.csv (and boundary.csv)");

    auto* plotcmd = app.add_subcommand("plot-data", "emit gnuplot-ready figure data");
    add_common(plotcmd, c_plot);
    plotcmd->add_option("--in", in_dir_plot, "directory holding cells.csv and fits.csv");

    try {
        app.parse(argc, argv);
        if (run_once->parsed())
            return cmd_run_once(c_run, trace_path, edges_path, audit);
        if (r0cmd->parsed())
            return cmd_find_rate(c_r0, false, -1.0);
        if (r1cmd->parsed())
            return cmd_find_rate(c_r1, true, r0_given);
        if (m0cmd->parsed())
            return cmd_find_m0(c_m0, r0_for_m0);
        if (bndcmd->parsed())
            return cmd_boundary(c_bnd, r1_given);
        if (sweepcmd->parsed())
            return cmd_sweep(c_sweep);
        if (fitcmd->parsed())
            return cmd_fit(c_fit, in_dir_fit);
        if (plotcmd->parsed())
            return cmd_plot_data(c_plot, in_dir_plot);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // config/usage errors -> 1
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
