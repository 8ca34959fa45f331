#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "txnsim/csv.hpp"
#include "txnsim/engine.hpp"
#include "txnsim/experiments.hpp"
#include "txnsim/fitting.hpp"
#include "txnsim/node.hpp"
#include "txnsim/version.hpp"

namespace py = pybind11;
using namespace txnsim;

namespace {

py::dict metrics_dict(const RunMetrics& m) {
    py::dict d;
    d["injected"] = m.injected;
    d["committed"] = m.committed;
    d["aborted_node_death"] = m.aborted[0];
    d["aborted_no_alive_neighbor"] = m.aborted[1];
    d["aborted_timeout"] = m.aborted[2];
    d["aborted_cascade"] = m.aborted[3];
    d["in_flight_at_end"] = m.in_flight_at_end;
    d["nodes_dead_overload"] = m.nodes_dead_overload;
    d["nodes_dead_fault"] = m.nodes_dead_fault;
    d["choke_time"] = m.choke_time ? py::object(py::float_(*m.choke_time)) : py::none();
    d["phase"] = to_string(m.phase);
    d["abort_fraction"] = m.abort_fraction();
    d["fault_fraction"] = m.fault_fraction();
    d["end_time"] = m.end_time;
    return d;
}

py::dict fit_dict(const FitResult& f) {
    py::dict d;
    d["family"] = to_string(f.family);
    d["A"] = f.A;
    d["beta"] = f.beta;
    d["alpha"] = f.alpha;
    d["rmse"] = f.rmse;
    d["n_points"] = f.n_points;
    d["converged"] = f.converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "transaction-network resilience simulator";
    m.attr("__version__") = kVersion;

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("n_nodes", &SimConfig::n_nodes)
        .def_readwrite("capacity", &SimConfig::capacity)
        .def_readwrite("density", &SimConfig::density)
        .def_readwrite("duration", &SimConfig::duration)
        .def_readwrite("inject_rate", &SimConfig::inject_rate)
        .def_readwrite("mean_ttf", &SimConfig::mean_ttf)
        .def_readwrite("cascade_prob", &SimConfig::cascade_prob)
        .def_readwrite("dep_window", &SimConfig::dep_window)
        .def_readwrite("ttl", &SimConfig::ttl)
        .def_readwrite("txn_len_mean", &SimConfig::txn_len_mean)
        .def_readwrite("txn_len_sd", &SimConfig::txn_len_sd)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("abort_threshold", &SimConfig::abort_threshold)
        .def("validate", &SimConfig::validate);

    m.def(
        "run_once",
        [](const SimConfig& cfg, bool trace, bool audit, bool direct_fault, double fault_fraction) {
            RunOptions opts;
            std::string tr;
            if (trace)
                opts.trace = &tr;
            opts.audit = audit;
            opts.direct_fault_fraction = direct_fault;
            opts.fault_fraction = fault_fraction;
            RunMetrics metrics;
            {
                py::gil_scoped_release release;
                metrics = run_simulation(cfg, opts);
            }
            py::dict d = metrics_dict(metrics);
            if (trace)
                d["trace"] = tr;
            return d;
        },
        py::arg("config"), py::arg("trace") = false, py::arg("audit") = false,
        py::arg("direct_fault") = false, py::arg("fault_fraction") = 0.0,
        "Run one simulation and return its metrics.");

    m.def(
        "edge_list",
        [](std::uint32_t n, double d, std::uint64_t seed) {
            RngStream rng(seed, "topology");
            const Network net = generate_er(n, d, rng);
            std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
            edges.reserve(net.edge_count);
            for (std::uint32_t v = 0; v < n; ++v)
                for (std::uint32_t t : net.out_neighbors(v))
                    edges.emplace_back(v, t);
            return edges;
        },
        py::arg("n"), py::arg("density"), py::arg("seed"),
        "Directed Erdos-Renyi edge list for (n, density, seed).");

    m.def(
        "cell_seed", &cell_seed, py::arg("master"), py::arg("density"), py::arg("capacity"),
        "Per-cell seed base derived from the master seed.");

    m.def(
        "find_r0",
        [](const SimConfig& cell, std::uint32_t replications, double tolerance, unsigned workers) {
            py::gil_scoped_release release;
            const RateSearch r = find_r0(cell, replications, tolerance, workers);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["value"] = r.value;
            d["bracket"] = py::make_tuple(r.bracket_lo, r.bracket_hi);
            d["zero_flag"] = r.zero_flag;
            d["threshold_reinterpreted"] = r.threshold_reinterpreted;
            d["probes"] = r.probes;
            return d;
        },
        py::arg("config"), py::arg("replications") = 5, py::arg("tolerance") = 0.05,
        py::arg("workers") = 2, "Largest abort-free injection rate.");

    m.def(
        "find_r1",
        [](const SimConfig& cell, std::uint32_t replications, double tolerance, unsigned workers,
           double lo_start) {
            py::gil_scoped_release release;
            const RateSearch r = find_r1(cell, replications, tolerance, workers, lo_start);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["value"] = r.value;
            d["bracket"] = py::make_tuple(r.bracket_lo, r.bracket_hi);
            d["zero_flag"] = r.zero_flag;
            d["probes"] = r.probes;
            return d;
        },
        py::arg("config"), py::arg("replications") = 5, py::arg("tolerance") = 0.05,
        py::arg("workers") = 2, py::arg("lo_start") = 0.0,
        "Largest choke-free injection rate.");

    m.def(
        "find_m0",
        [](const SimConfig& cell, double r0, std::uint32_t replications, double tolerance,
           unsigned workers) {
            py::gil_scoped_release release;
            const FaultSearch f = find_m0(cell, r0, replications, tolerance, workers);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["m0"] = f.m0;
            d["mean_ttf"] = f.mean_ttf;
            d["bracket"] = py::make_tuple(f.bracket_lo, f.bracket_hi);
            d["probes"] = f.probes;
            return d;
        },
        py::arg("config"), py::arg("r0"), py::arg("replications") = 5, py::arg("tolerance") = 0.05,
        py::arg("workers") = 2, "Smallest choking fault fraction at rate r0.");

    m.def(
        "trace_boundary",
        [](const SimConfig& cell, double r1, const std::vector<double>& angles,
           std::uint32_t replications, double tolerance, unsigned workers) {
            std::vector<PhasePoint> pts;
            {
                py::gil_scoped_release release;
                pts = trace_boundary(cell, r1, angles, replications, tolerance, workers);
            }
            py::list out;
            for (const auto& p : pts) {
                py::dict d;
                d["rho"] = p.rho;
                d["m"] = p.m;
                d["label"] = p.label;
                out.append(d);
            }
            return out;
        },
        py::arg("config"), py::arg("r1"), py::arg("angles"), py::arg("replications") = 5,
        py::arg("tolerance") = 0.05, py::arg("workers") = 2,
        "Probe rays across the (rho, m) unit square and locate the dielectric flip.");

    m.def(
        "fit_power_law", [](const Points& pts) { return fit_dict(fit_power_law(pts)); },
        py::arg("points"), "Fit r = A*(C-2)^beta to (C, r) points.");
    m.def(
        "fit_erf", [](const Points& pts) { return fit_dict(fit_erf(pts)); }, py::arg("points"),
        "Fit the erf capacity law to (C, m0) points.");
    m.def(
        "fit_boundary", [](const Points& pts) { return fit_dict(fit_boundary(pts)); },
        py::arg("points"), "Fit m = 1 - A*rho^beta to (rho, m) points.");
    m.def(
        "equivalence_slope",
        [](const Points& pts) {
            const SlopeFit s = equivalence_slope(pts);
            py::dict d;
            d["slope"] = s.slope;
            d["intercept"] = s.intercept;
            d["rmse"] = s.rmse;
            d["n_points"] = s.n_points;
            return d;
        },
        py::arg("points"), "OLS slope of m0 against rho0.");
}
