#include "txnsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace txnsim {

namespace {

// Pair index k in [0, n*(n-1)) decodes to the k-th ordered non-loop pair.
inline std::pair<std::uint32_t, std::uint32_t> decode_pair(std::uint64_t k, std::uint32_t n) {
    const std::uint32_t src = static_cast<std::uint32_t>(k / (n - 1));
    const std::uint32_t r = static_cast<std::uint32_t>(k % (n - 1));
    return {src, r >= src ? r + 1 : r};
}

Network build_csr(std::uint32_t n, double d, std::uint64_t seed,
                  std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    Network net;
    net.n_nodes = n;
    net.density = d;
    net.seed = seed;
    net.edge_count = edges.size();

    net.out_offsets.assign(n + 1, 0);
    net.in_offsets.assign(n + 1, 0);
    for (const auto& [s, t] : edges) {
        ++net.out_offsets[s + 1];
        ++net.in_offsets[t + 1];
    }
    for (std::uint32_t v = 0; v < n; ++v) {
        net.out_offsets[v + 1] += net.out_offsets[v];
        net.in_offsets[v + 1] += net.in_offsets[v];
    }
    net.out_targets.resize(edges.size());
    net.in_sources.resize(edges.size());
    std::vector<std::uint32_t> opos(net.out_offsets.begin(), net.out_offsets.end() - 1);
    std::vector<std::uint32_t> ipos(net.in_offsets.begin(), net.in_offsets.end() - 1);
    for (const auto& [s, t] : edges) {
        net.out_targets[opos[s]++] = t;
        net.in_sources[ipos[t]++] = s;
    }
    // Canonical per-node order: ascending neighbor id.
    for (std::uint32_t v = 0; v < n; ++v) {
        std::sort(net.out_targets.begin() + net.out_offsets[v],
                  net.out_targets.begin() + net.out_offsets[v + 1]);
        std::sort(net.in_sources.begin() + net.in_offsets[v],
                  net.in_sources.begin() + net.in_offsets[v + 1]);
    }
    return net;
}

}  // namespace

Network generate_er(std::uint32_t n, double d, RngStream& rng) {
    if (n < 2)
        throw std::invalid_argument("generate_er: need n >= 2");
    if (!(d > 0.0) || d > 1.0)
        throw std::invalid_argument("generate_er: need 0 < d <= 1");
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1);
    const std::uint64_t m = static_cast<std::uint64_t>(
        std::llround(d * static_cast<double>(n) * static_cast<double>(n - 1)));
    if (m < 1)
        throw std::invalid_argument("generate_er: d*n*(n-1) rounds to zero edges");
    if (m > total)
        throw std::invalid_argument("generate_er: edge count exceeds n*(n-1)");

    // Partial Fisher-Yates over the pair-index space: first m entries are a
    // uniform m-subset of all ordered non-loop pairs.
    std::vector<std::uint32_t> pairs(total);
    for (std::uint64_t k = 0; k < total; ++k)
        pairs[k] = static_cast<std::uint32_t>(k);
    for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint64_t j = i + rng.uniform_below(total - i);
        std::swap(pairs[i], pairs[j]);
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    edges.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i)
        edges.push_back(decode_pair(pairs[i], n));
    return build_csr(n, d, 0, edges);
}

Network network_from_edges(std::uint32_t n, double d, std::uint64_t seed,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    for (const auto& [s, t] : edges) {
        if (s >= n || t >= n)
            throw std::invalid_argument("network_from_edges: node id out of range");
        if (s == t)
            throw std::invalid_argument("network_from_edges: loop-back edge");
    }
    auto copy = edges;
    return build_csr(n, d, seed, copy);
}

void export_edge_list(const Network& net, std::ostream& os) {
    char header[96];
    std::snprintf(header, sizeof header, "# n=%u d=%.6g seed=%llu\n", net.n_nodes, net.density,
                  static_cast<unsigned long long>(net.seed));
    os << header;
    for (std::uint32_t v = 0; v < net.n_nodes; ++v)
        for (std::uint32_t t : net.out_neighbors(v))
            os << v << ',' << t << '\n';
}

}  // namespace txnsim
