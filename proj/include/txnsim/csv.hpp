#pragma once

#include <string>
#include <vector>

#include "txnsim/config.hpp"
#include "txnsim/experiments.hpp"
#include "txnsim/fitting.hpp"

namespace txnsim {

// One fits.csv row; `family` is power_law, erf, boundary or equivalence
// (for the equivalence family A holds the intercept and beta the slope).
struct FitRow {
    std::string family;
    std::string domain_tag;
    double A = 0.0;
    double beta = 0.0;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double rmse = 0.0;
    std::uint32_t n_points = 0;
};

// Fails fast (before any simulation) when the directory cannot be written.
void ensure_writable_dir(const std::string& dir);

std::string format_g6(double x);

// All writers emit a header row, 6-significant-digit numbers, '\n' endings,
// and deterministic row order.
void write_cells_csv(const std::string& path, std::vector<CellResult> rows);
void write_p0_csv(const std::string& path, std::vector<P0Row> rows);
void write_boundary_csv(const std::string& path, std::vector<PhasePoint> rows);
void write_fits_csv(const std::string& path, std::vector<FitRow> rows);

std::vector<CellResult> read_cells_csv(const std::string& path);
std::vector<PhasePoint> read_boundary_csv(const std::string& path);
std::vector<FitRow> read_fits_csv(const std::string& path);

// Derives every fit family available from sweep output: per-density power
// laws for r0 and r1, the erf family for m0(C), the m0(rho0) boundary-form
// family, per-(C,d) traced-boundary fits, and the dense-network equivalence
// slope (densities above 0.02).
std::vector<FitRow> compute_fits(const std::vector<CellResult>& cells,
                                 const std::vector<PhasePoint>& boundary);

// Gnuplot-ready data for the three fitted figures: measured points next to
// 200-sample fitted curves, plus the unit-square diagonal reference.
void write_plot_data(const std::string& outdir, const std::vector<CellResult>& cells,
                     const std::vector<FitRow>& fits);

// Manifest: resolved config (itself valid config syntax) plus '#' comments
// for version, command line, derived seeds, wall time, and per-cell notes
// (flags such as r0_zero or abort_threshold_zero_aborts).
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::string& command, double wall_sec,
                    const std::vector<std::pair<std::string, std::uint64_t>>& seeds,
                    const std::vector<std::string>& notes = {});

}  // namespace txnsim
