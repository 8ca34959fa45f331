#pragma once

#include <cstdint>
#include <string>

#include "txnsim/config.hpp"
#include "txnsim/topology.hpp"

namespace txnsim::reference {

// Brute-force reference simulator used as the oracle for trace equivalence.
// It shares only the RNG substreams and the Network input with the engine;
// all simulation state lives in naive structures (linear-scan event list,
// id-keyed master map, global encounter log) and every rule is coded directly
// from the model description.
struct Result {
    std::string trace;
    std::uint64_t injected = 0;
    std::uint64_t committed = 0;
    std::uint64_t aborted[4] = {0, 0, 0, 0};
    std::uint64_t in_flight_at_end = 0;
    std::uint32_t dead_overload = 0;
    std::uint32_t dead_fault = 0;
};

Result run(const SimConfig& cfg, const Network& net);

}  // namespace txnsim::reference
