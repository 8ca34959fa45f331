#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "txnsim/config.hpp"
#include "txnsim/engine.hpp"

namespace txnsim {

struct RunJob {
    SimConfig cfg;
    bool direct_fault = false;
    double fault_fraction = 0.0;
};

// Executes independent runs on up to `workers` threads; results are indexed
// by job position, so output never depends on scheduling.
std::vector<RunMetrics> run_batch(const std::vector<RunJob>& jobs, unsigned workers);

// Deterministic seed expansion: master seed -> per-cell base -> per-replication.
std::uint64_t cell_seed(std::uint64_t master, double density, std::uint32_t capacity);
std::uint64_t replication_seed(std::uint64_t seed_base, std::uint32_t rep);

struct RateSearch {
    double value = 0.0;       // largest rate verified good, to tolerance
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    bool zero_flag = false;   // even the smallest probed rate failed
    bool threshold_reinterpreted = false;  // some probe injected < 1/abort_threshold
    std::uint32_t probes = 0;
};

// Largest rate whose replications all classify superconductive. The probe
// replications reuse one seed set across rates, so the bisection predicate is
// stable near the transition.
RateSearch find_r0(const SimConfig& cell, std::uint32_t replications, double tol, unsigned workers,
                   double hi_hint = 0.0);

// Largest rate with no choking replication. `lo_start` may carry a rate
// already verified choke-free under the same seeds (typically r0).
RateSearch find_r1(const SimConfig& cell, std::uint32_t replications, double tol, unsigned workers,
                   double lo_start = 0.0, double hi_hint = 0.0);

struct FaultSearch {
    double m0 = 1.0;          // mean realized fault fraction over the choking replications
    double mean_ttf = 0.0;    // T_f at the flip probe
    double bracket_lo = 0.0;  // in target-fraction coordinates
    double bracket_hi = 1.0;
    std::uint32_t probes = 0;
};

// Bisects the expected fault fraction (driven through T_f) for the
// resistive-to-dielectric flip at injection rate r0.
FaultSearch find_m0(const SimConfig& cell, double r0, std::uint32_t replications, double tol,
                    unsigned workers);

struct PhasePoint {
    double rho = 0.0;
    double m = 0.0;
    std::string label;  // superconductive|resistive|dielectric|boundary|censored
    std::uint32_t capacity = 0;
    double density = 0.0;
    std::uint64_t seed = 0;
};

// Rays from the origin of the (rho, m) unit square; per ray, bisects the flip
// to dielectric and emits every probed point plus the boundary (or censored)
// marker. Faults use the direct-fraction mode so the m coordinate is exact.
std::vector<PhasePoint> trace_boundary(const SimConfig& cell, double r1,
                                       const std::vector<double>& angles_deg,
                                       std::uint32_t replications, double tol, unsigned workers);

struct CellResult {
    double density = 0.0;
    std::uint32_t capacity = 0;
    std::uint64_t seed_base = 0;
    std::uint32_t replications = 0;
    double r0 = 0.0, r1 = 0.0, rho0 = 0.0, m0 = 0.0;
    bool ok = true;
    std::string note;
};

struct P0Row {
    double density = 0.0;
    std::uint32_t capacity = 0;
    double p0 = 0.0;
    double r1 = 0.0;
};

struct SweepResult {
    std::vector<CellResult> cells;
    std::vector<P0Row> p0_rows;
};

// Full (d, C) grid: r0, r1, rho0, m0 per cell plus the optional p0 sub-sweep.
// Individual cell failures are recorded in the row note and the sweep continues.
SweepResult sweep(const ExperimentConfig& cfg, unsigned workers);

}  // namespace txnsim
