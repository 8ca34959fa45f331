#include "txnsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace txnsim {

namespace {

constexpr double kRateFloor = 1e-6;  // rates below this count as zero

struct ProbeOutcome {
    bool all_superconductive = true;
    bool any_dielectric = false;
    std::uint32_t dielectric = 0;
    double fault_fraction_sum = 0.0;     // over dielectric replications
    bool threshold_reinterpreted = false;
};

ProbeOutcome probe(const SimConfig& cell, double rate, double mean_ttf, bool direct_fault,
                   double fault_fraction, std::uint32_t replications, unsigned workers) {
    std::vector<RunJob> jobs(replications);
    for (std::uint32_t rep = 0; rep < replications; ++rep) {
        RunJob& j = jobs[rep];
        j.cfg = cell;
        j.cfg.inject_rate = rate;
        j.cfg.mean_ttf = mean_ttf;
        j.cfg.seed = replication_seed(cell.seed, rep);
        j.direct_fault = direct_fault;
        j.fault_fraction = fault_fraction;
    }
    const auto metrics = run_batch(jobs, workers);
    ProbeOutcome out;
    for (const RunMetrics& m : metrics) {
        out.all_superconductive &= m.phase == Phase::Superconductive;
        if (m.phase == Phase::Dielectric) {
            out.any_dielectric = true;
            ++out.dielectric;
            out.fault_fraction_sum += m.fault_fraction();
        }
        if (m.injected > 0 &&
            static_cast<double>(m.injected) * cell.abort_threshold < 1.0)
            out.threshold_reinterpreted = true;
    }
    return out;
}

double default_hi(const SimConfig& cell) {
    // No network survives demand beyond its aggregate service capacity;
    // twice that is a safely-choking bracket end.
    return 2.0 * static_cast<double>(cell.n_nodes) * static_cast<double>(cell.capacity) /
           cell.txn_len_mean;
}

}  // namespace

std::vector<RunMetrics> run_batch(const std::vector<RunJob>& jobs, unsigned workers) {
    std::vector<RunMetrics> out(jobs.size());
    if (jobs.empty())
        return out;
    const unsigned n = std::max(1u, std::min<unsigned>(workers, jobs.size()));
    if (n == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            RunOptions opts;
            opts.direct_fault_fraction = jobs[i].direct_fault;
            opts.fault_fraction = jobs[i].fault_fraction;
            out[i] = run_simulation(jobs[i].cfg, opts);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size())
                return;
            try {
                RunOptions opts;
                opts.direct_fault_fraction = jobs[i].direct_fault;
                opts.fault_fraction = jobs[i].fault_fraction;
                out[i] = run_simulation(jobs[i].cfg, opts);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
    return out;
}

std::uint64_t cell_seed(std::uint64_t master, double density, std::uint32_t capacity) {
    return mix64(mix64(master ^ std::bit_cast<std::uint64_t>(density)) ^ capacity);
}

std::uint64_t replication_seed(std::uint64_t seed_base, std::uint32_t rep) {
    return mix64(seed_base ^ mix64(rep + 1));
}

RateSearch find_r0(const SimConfig& cell, std::uint32_t replications, double tol, unsigned workers,
                   double hi_hint) {
    RateSearch res;
    auto good = [&](double r) {
        const ProbeOutcome o = probe(cell, r, std::numeric_limits<double>::infinity(), false, 0.0,
                                     replications, workers);
        ++res.probes;
        res.threshold_reinterpreted |= o.threshold_reinterpreted;
        return o.all_superconductive;
    };
    double lo = 0.0;  // zero rate injects nothing: vacuously superconductive
    double hi = hi_hint > 0.0 ? hi_hint : default_hi(cell);
    for (int i = 0; i < 64 && good(hi); ++i) {
        lo = hi;
        hi *= 2.0;
    }
    while ((hi - lo) > tol * hi && hi > kRateFloor) {
        const double mid = 0.5 * (lo + hi);
        if (good(mid))
            lo = mid;
        else
            hi = mid;
    }
    res.value = lo;
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.zero_flag = lo <= kRateFloor;
    if (res.zero_flag)
        res.value = 0.0;
    return res;
}

RateSearch find_r1(const SimConfig& cell, std::uint32_t replications, double tol, unsigned workers,
                   double lo_start, double hi_hint) {
    RateSearch res;
    auto good = [&](double r) {
        const ProbeOutcome o = probe(cell, r, std::numeric_limits<double>::infinity(), false, 0.0,
                                     replications, workers);
        ++res.probes;
        res.threshold_reinterpreted |= o.threshold_reinterpreted;
        return !o.any_dielectric;
    };
    double lo = std::max(0.0, lo_start);  // caller vouches: verified choke-free under these seeds
    double hi = hi_hint > 0.0 ? hi_hint : default_hi(cell);
    for (int i = 0; i < 64 && hi > lo && good(hi); ++i) {
        lo = hi;
        hi *= 2.0;
    }
    while ((hi - lo) > tol * hi && hi > kRateFloor) {
        const double mid = 0.5 * (lo + hi);
        if (good(mid))
            lo = mid;
        else
            hi = mid;
    }
    res.value = lo;
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.zero_flag = lo <= kRateFloor;
    if (res.zero_flag)
        res.value = 0.0;
    return res;
}

FaultSearch find_m0(const SimConfig& cell, double r0, std::uint32_t replications, double tol,
                    unsigned workers) {
    FaultSearch res;
    SimConfig cfg = cell;
    cfg.inject_rate = r0;
    // Target fraction -> T_f such that E[fraction faulted by S] equals it.
    auto ttf_for = [&](double frac) {
        if (frac >= 1.0)
            return cell.duration / 30.0;  // effectively all nodes fault
        return -cell.duration / std::log1p(-frac);
    };
    double last_m = 1.0, last_ttf = ttf_for(1.0);
    auto chokes = [&](double frac) {
        const double ttf = ttf_for(frac);
        const ProbeOutcome o = probe(cfg, r0, ttf, false, 0.0, replications, workers);
        ++res.probes;
        if (2 * o.dielectric > replications) {
            last_m = o.dielectric ? o.fault_fraction_sum / o.dielectric : frac;
            last_ttf = ttf;
            return true;
        }
        return false;
    };
    double lo = 0.0, hi = 1.0;
    if (!chokes(1.0))
        throw std::runtime_error("find_m0: network survives all nodes faulting (model inconsistency)");
    while ((hi - lo) > tol * std::max(hi, 0.01)) {
        const double mid = 0.5 * (lo + hi);
        if (chokes(mid))
            hi = mid;
        else
            lo = mid;
        if (hi < 1e-5)
            throw std::runtime_error("find_m0: network chokes at r0 with nearly zero faults");
    }
    res.m0 = last_m;
    res.mean_ttf = last_ttf;
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    return res;
}

std::vector<PhasePoint> trace_boundary(const SimConfig& cell, double r1,
                                       const std::vector<double>& angles_deg,
                                       std::uint32_t replications, double tol, unsigned workers) {
    std::vector<PhasePoint> out;
    constexpr double kPi = 3.14159265358979323846;
    for (double deg : angles_deg) {
        double dx = std::cos(deg * kPi / 180.0);
        double dy = std::sin(deg * kPi / 180.0);
        if (std::abs(dx) < 1e-12) dx = 0.0;
        if (std::abs(dy) < 1e-12) dy = 0.0;
        double s_max = std::numeric_limits<double>::infinity();
        if (dx > 1e-12)
            s_max = std::min(s_max, 1.0 / dx);
        if (dy > 1e-12)
            s_max = std::min(s_max, 1.0 / dy);
        auto point = [&](double s) {
            return std::pair<double, double>{std::min(1.0, s * dx), std::min(1.0, s * dy)};
        };
        auto dielectric = [&](double s) {
            const auto [rho, m] = point(s);
            const ProbeOutcome o = probe(cell, rho * r1, std::numeric_limits<double>::infinity(),
                                         true, m, replications, workers);
            const bool choked = 2 * o.dielectric > replications;
            PhasePoint p;
            p.rho = rho;
            p.m = m;
            p.capacity = cell.capacity;
            p.density = cell.density;
            p.seed = cell.seed;
            if (choked)
                p.label = "dielectric";
            else if (o.all_superconductive)
                p.label = "superconductive";
            else
                p.label = "resistive";
            out.push_back(p);
            return choked;
        };
        PhasePoint mark;
        mark.capacity = cell.capacity;
        mark.density = cell.density;
        mark.seed = cell.seed;
        if (!dielectric(s_max)) {
            // Never flips inside the unit square along this ray.
            const auto [rho, m] = point(s_max);
            mark.rho = rho;
            mark.m = m;
            mark.label = "censored";
            out.push_back(mark);
            continue;
        }
        double lo = 0.0, hi = s_max;
        while ((hi - lo) > tol * hi) {
            const double mid = 0.5 * (lo + hi);
            if (dielectric(mid))
                hi = mid;
            else
                lo = mid;
        }
        const auto [rho, m] = point(0.5 * (lo + hi));
        mark.rho = rho;
        mark.m = m;
        mark.label = "boundary";
        out.push_back(mark);
    }
    return out;
}

SweepResult sweep(const ExperimentConfig& cfg, unsigned workers) {
    cfg.validate();
    struct Cell {
        double d;
        std::uint32_t c;
    };
    std::vector<Cell> cells;
    auto densities = cfg.densities;
    std::sort(densities.begin(), densities.end());
    auto capacities = cfg.capacities;
    std::sort(capacities.begin(), capacities.end());
    for (double d : densities)
        for (std::uint32_t c : capacities)
            cells.push_back({d, c});

    SweepResult result;
    result.cells.resize(cells.size());
    std::vector<std::vector<P0Row>> p0_rows(cells.size());

    const unsigned inner = std::max(1u, std::min<unsigned>(workers, cfg.replications));
    const unsigned outer = std::max(1u, workers / inner);

    std::atomic<std::size_t> next{0};
    auto run_cell = [&](std::size_t i) {
        const Cell cell = cells[i];
        CellResult& row = result.cells[i];
        row.density = cell.d;
        row.capacity = cell.c;
        row.replications = cfg.replications;
        row.seed_base = cell_seed(cfg.base.seed, cell.d, cell.c);
        SimConfig sim = cfg.base;
        sim.density = cell.d;
        sim.capacity = cell.c;
        sim.seed = row.seed_base;
        sim.mean_ttf = std::numeric_limits<double>::infinity();
        try {
            sim.validate();
            const RateSearch r0 =
                find_r0(sim, cfg.replications, cfg.bisection_tolerance, inner);
            const RateSearch r1 = find_r1(sim, cfg.replications, cfg.bisection_tolerance, inner,
                                          r0.value);
            row.r0 = r0.value;
            row.r1 = r1.value;
            row.rho0 = r1.value > 0.0 ? r0.value / r1.value : 0.0;
            if (r0.zero_flag)
                row.note += "r0_zero;";
            if (r0.threshold_reinterpreted)
                row.note += "abort_threshold_zero_aborts;";
            const FaultSearch m0 =
                find_m0(sim, r0.value, cfg.replications, cfg.bisection_tolerance, inner);
            row.m0 = m0.m0;
            for (double p0 : cfg.p0_values) {
                SimConfig v = sim;
                v.cascade_prob = p0;
                const RateSearch rp =
                    find_r1(v, cfg.replications, cfg.bisection_tolerance, inner);
                p0_rows[i].push_back(P0Row{cell.d, cell.c, p0, rp.value});
            }
        } catch (const std::exception& e) {
            row.ok = false;
            row.note += e.what();
            row.r0 = row.r1 = row.rho0 = row.m0 = std::numeric_limits<double>::quiet_NaN();
        }
    };
    if (outer == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            run_cell(i);
    } else {
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size())
                    return;
                run_cell(i);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < outer; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& rows : p0_rows)
        for (auto& r : rows)
            result.p0_rows.push_back(r);
    return result;
}

}  // namespace txnsim
