#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "txnsim/des.hpp"
#include "txnsim/topology.hpp"

namespace txnsim {

constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

enum class NodeStatus : std::uint8_t { Alive, DisabledOverload, DisabledFault };

// Per-node runtime state: load counting, overload shutdown, internal faults.
// Status never leaves a disabled state and disabled nodes carry zero load.
class NodeTable {
public:
    enum class Admit : std::uint8_t { Admitted, OverloadShutdown };

    NodeTable(const Network& net, std::uint32_t capacity)
        : net_(net),
          capacity_(capacity),
          status_(net.n_nodes, NodeStatus::Alive),
          load_(net.n_nodes, 0),
          alive_out_(net.n_nodes, 0),
          alive_count_(net.n_nodes),
          bit_(net.n_nodes + 1, 0) {
        for (std::uint32_t v = 0; v < net.n_nodes; ++v) {
            alive_out_[v] = net.out_degree(v);
            bit_add(v + 1, 1);
        }
    }

    // An admission that would make load reach C is fatal: the node shuts down
    // and the caller must abort the arriving subtransaction and all residents.
    Admit admit_subtxn(std::uint32_t v) {
        if (status_[v] != NodeStatus::Alive)
            throw std::logic_error("admit_subtxn on a disabled node (routing bug)");
        if (load_[v] + 1 >= capacity_) {
            disable(v, NodeStatus::DisabledOverload);
            max_load_ = std::max(max_load_, capacity_);  // the fatal contact
            return Admit::OverloadShutdown;
        }
        ++load_[v];
        max_load_ = std::max(max_load_, load_[v]);
        return Admit::Admitted;
    }

    void release_subtxn(std::uint32_t v) {
        if (status_[v] != NodeStatus::Alive)
            throw std::logic_error("release_subtxn on a disabled node (accounting bug)");
        if (load_[v] == 0)
            throw std::logic_error("release_subtxn underflow (accounting bug)");
        --load_[v];
    }

    // Returns true when the fault disables an alive node; a fault on an
    // already-disabled node is a no-op.
    bool apply_fault(std::uint32_t v) {
        if (status_[v] != NodeStatus::Alive)
            return false;
        disable(v, NodeStatus::DisabledFault);
        return true;
    }

    NodeStatus status(std::uint32_t v) const { return status_[v]; }
    bool is_alive(std::uint32_t v) const { return status_[v] == NodeStatus::Alive; }
    std::uint32_t load(std::uint32_t v) const { return load_[v]; }
    std::uint32_t capacity() const { return capacity_; }
    std::uint32_t alive_count() const { return alive_count_; }
    std::uint32_t alive_out_degree(std::uint32_t v) const { return alive_out_[v]; }
    std::uint32_t dead_overload() const { return dead_overload_; }
    std::uint32_t dead_fault() const { return dead_fault_; }
    std::uint32_t max_load_seen() const { return max_load_; }

    // The k-th smallest alive node id for uniform k: canonical, so an
    // independent reimplementation reproduces the same picks.
    std::uint32_t pick_alive_uniform(RngStream& rng) const {
        const auto k = static_cast<std::uint32_t>(rng.uniform_below(alive_count_));
        return bit_select(k + 1);
    }

    std::uint64_t total_load() const {
        std::uint64_t s = 0;
        for (std::uint32_t l : load_) s += l;
        return s;
    }

private:
    void disable(std::uint32_t v, NodeStatus cause) {
        status_[v] = cause;
        load_[v] = 0;
        if (cause == NodeStatus::DisabledOverload)
            ++dead_overload_;
        else
            ++dead_fault_;
        --alive_count_;
        bit_add(v + 1, -1);
        for (std::uint32_t u : net_.in_neighbors(v))
            --alive_out_[u];
    }

    void bit_add(std::uint32_t i, int delta) {
        for (; i < bit_.size(); i += i & (~i + 1))
            bit_[i] = static_cast<std::uint32_t>(static_cast<int>(bit_[i]) + delta);
    }

    // Smallest node id whose alive-prefix count reaches k (1-based).
    std::uint32_t bit_select(std::uint32_t k) const {
        std::uint32_t pos = 0;
        std::uint32_t mask = 1;
        while (mask * 2 < bit_.size())
            mask *= 2;
        for (; mask != 0; mask /= 2) {
            const std::uint32_t next = pos + mask;
            if (next < bit_.size() && bit_[next] < k) {
                pos = next;
                k -= bit_[next];
            }
        }
        return pos;  // bit_ is 1-based, so this is the 0-based node id
    }

    const Network& net_;
    std::uint32_t capacity_;
    std::vector<NodeStatus> status_;
    std::vector<std::uint32_t> load_;
    std::vector<std::uint32_t> alive_out_;  // count of alive out-neighbors
    std::uint32_t alive_count_;
    std::vector<std::uint32_t> bit_;        // Fenwick tree of alive flags, 1-based
    std::uint32_t dead_overload_ = 0;
    std::uint32_t dead_fault_ = 0;
    std::uint32_t max_load_ = 0;
};

// Uniform draw over the alive out-neighbors of `current`; kNoNode when all
// out-neighbors are disabled or out-degree is zero. Uses rejection sampling
// while at least a quarter of the neighbors are alive, otherwise one draw
// over a scan of the alive ones. Both paths are deterministic given the
// stream state.
inline std::uint32_t route_next(const Network& net, const NodeTable& nodes, std::uint32_t current,
                                RngStream& rng, std::vector<std::uint32_t>& scratch) {
    const auto nbrs = net.out_neighbors(current);
    const std::uint32_t alive_deg = nodes.alive_out_degree(current);
    if (alive_deg == 0)
        return kNoNode;
    if (static_cast<std::uint64_t>(alive_deg) * 4 >= nbrs.size()) {
        for (;;) {
            const std::uint32_t cand = nbrs[rng.uniform_below(nbrs.size())];
            if (nodes.is_alive(cand))
                return cand;
        }
    }
    scratch.clear();
    for (std::uint32_t u : nbrs)
        if (nodes.is_alive(u))
            scratch.push_back(u);
    return scratch[rng.uniform_below(scratch.size())];
}

inline std::uint32_t route_next(const Network& net, const NodeTable& nodes, std::uint32_t current,
                                RngStream& rng) {
    std::vector<std::uint32_t> scratch;
    return route_next(net, nodes, current, rng, scratch);
}

// One scheduled internal fault per node, delay drawn from Exp(mean_ttf).
// Delays beyond the horizon are kept in the plan but never fire.
inline std::vector<double> build_fault_plan(std::uint32_t n, double mean_ttf, RngStream& rng) {
    std::vector<double> delays(n, std::numeric_limits<double>::infinity());
    if (std::isinf(mean_ttf))
        return delays;
    for (std::uint32_t v = 0; v < n; ++v)
        delays[v] = rng.exponential(mean_ttf);
    return delays;
}

// Direct-fraction mode: exactly ceil(frac*n) distinct nodes fault at
// exponential delays conditioned to land inside the run.
inline std::vector<std::pair<std::uint32_t, double>> build_fault_plan_fraction(std::uint32_t n,
                                                                               double frac,
                                                                               double horizon,
                                                                               RngStream& rng) {
    std::vector<std::pair<std::uint32_t, double>> plan;
    const std::uint64_t k = static_cast<std::uint64_t>(std::ceil(frac * static_cast<double>(n)));
    if (k == 0)
        return plan;
    std::vector<std::uint32_t> perm(n);
    for (std::uint32_t v = 0; v < n; ++v) perm[v] = v;
    plan.reserve(k);
    for (std::uint64_t i = 0; i < k && i < n; ++i) {
        const std::uint64_t j = i + rng.uniform_below(n - i);
        std::swap(perm[i], perm[j]);
        plan.emplace_back(perm[i], rng.truncated_exponential(horizon / 2.0, horizon));
    }
    return plan;
}

}  // namespace txnsim
