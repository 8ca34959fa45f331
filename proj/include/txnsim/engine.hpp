#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "txnsim/config.hpp"
#include "txnsim/topology.hpp"

namespace txnsim {

enum class AbortCause : std::uint8_t { NodeDeath = 0, NoAliveNeighbor = 1, Timeout = 2, Cascade = 3 };
enum class Phase : std::uint8_t { Superconductive, Resistive, Dielectric };

const char* to_string(AbortCause c);
const char* to_string(Phase p);

// Counters of one finished run. Conservation holds by construction:
// injected == committed + sum(aborted) + in_flight_at_end.
struct RunMetrics {
    std::uint64_t injected = 0;
    std::uint64_t committed = 0;
    std::uint64_t aborted[4] = {0, 0, 0, 0};  // indexed by AbortCause
    std::uint64_t in_flight_at_end = 0;
    std::uint32_t nodes_dead_overload = 0;
    std::uint32_t nodes_dead_fault = 0;
    std::uint32_t max_node_load = 0;  // peak concurrent load seen at any node
    std::uint32_t n_nodes = 0;
    std::optional<double> choke_time;  // set when the last alive node died
    Phase phase = Phase::Superconductive;
    double end_time = 0.0;
    std::uint64_t events_scheduled = 0;
    std::uint64_t events_consumed = 0;
    std::uint64_t events_pending_at_end = 0;

    std::uint64_t total_aborted() const {
        return aborted[0] + aborted[1] + aborted[2] + aborted[3];
    }
    double abort_fraction() const {
        return injected == 0 ? 0.0 : static_cast<double>(total_aborted()) / static_cast<double>(injected);
    }
    // Fraction of nodes disabled by internal faults (overload deaths are
    // reported separately and not included).
    double fault_fraction() const {
        return n_nodes == 0 ? 0.0 : static_cast<double>(nodes_dead_fault) / static_cast<double>(n_nodes);
    }
    // Deterministic key=value serialization; byte-identical across replays.
    std::string to_text() const;
};

// Dielectric if the network choked during the run; else superconductive when
// the aborted fraction stays below the threshold (vacuously for zero
// injections), else resistive.
Phase classify_phase(const RunMetrics& m, double abort_threshold);

// Test seam: pinned injections/faults instead of the stochastic streams.
struct ScriptedInject {
    double time;
    std::uint32_t node;
    std::uint32_t length;
};
struct ScriptedFault {
    double time;
    std::uint32_t node;
};
struct Script {
    std::vector<ScriptedInject> injections;
    std::vector<ScriptedFault> faults;
};

struct RunOptions {
    const Network* net = nullptr;      // pre-built topology; generated from cfg when null
    const Script* script = nullptr;    // overrides stochastic injection and fault plans
    std::string* trace = nullptr;      // event trace sink ("t,kind,txn,node,detail" lines)
    bool audit = false;                // invariant sweep at every event boundary
    bool direct_fault_fraction = false;
    double fault_fraction = 0.0;       // used when direct_fault_fraction is set
};

RunMetrics run_simulation(const SimConfig& cfg, const RunOptions& opts = {});

}  // namespace txnsim
