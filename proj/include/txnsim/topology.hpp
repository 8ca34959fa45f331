#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "txnsim/des.hpp"

namespace txnsim {

// Directed Erdos-Renyi graph over n identical nodes, G(n, M) construction
// with M = round(d*n*(n-1)) distinct ordered non-loop pairs. Immutable after
// generation; node death is runtime state, never edge removal. Adjacency is
// CSR with each out/in list sorted ascending.
struct Network {
    std::uint32_t n_nodes = 0;
    double density = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t edge_count = 0;

    std::vector<std::uint32_t> out_offsets;  // size n+1
    std::vector<std::uint32_t> out_targets;  // size edge_count
    std::vector<std::uint32_t> in_offsets;   // size n+1
    std::vector<std::uint32_t> in_sources;   // size edge_count

    std::span<const std::uint32_t> out_neighbors(std::uint32_t v) const {
        return {out_targets.data() + out_offsets[v], out_targets.data() + out_offsets[v + 1]};
    }
    std::span<const std::uint32_t> in_neighbors(std::uint32_t v) const {
        return {in_sources.data() + in_offsets[v], in_sources.data() + in_offsets[v + 1]};
    }
    std::uint32_t out_degree(std::uint32_t v) const { return out_offsets[v + 1] - out_offsets[v]; }
    std::uint32_t in_degree(std::uint32_t v) const { return in_offsets[v + 1] - in_offsets[v]; }
};

// Samples exactly round(d*n*(n-1)) distinct directed edges uniformly among
// all ordered non-loop pairs. Rejects configurations with zero edges.
Network generate_er(std::uint32_t n, double d, RngStream& rng);

// Builds a Network from an explicit edge list (used by tests and scripted runs).
Network network_from_edges(std::uint32_t n, double d, std::uint64_t seed,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

// Text export: header "# n=<N> d=<d> seed=<seed>" then one "src,dst" line per edge.
void export_edge_list(const Network& net, std::ostream& os);

}  // namespace txnsim
