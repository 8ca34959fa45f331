#include <doctest.h>

#include <cmath>
#include <set>

#include "txnsim/node.hpp"

using namespace txnsim;

namespace {
Network complete(std::uint32_t n) {
    RngStream rng(1, "topology");
    return generate_er(n, 1.0, rng);
}
}  // namespace

TEST_CASE("admission below capacity increments load") {
    const Network net = complete(4);
    NodeTable nodes(net, 4);
    CHECK(nodes.admit_subtxn(0) == NodeTable::Admit::Admitted);
    CHECK(nodes.admit_subtxn(0) == NodeTable::Admit::Admitted);
    CHECK(nodes.load(0) == 2);
    CHECK(nodes.admit_subtxn(0) == NodeTable::Admit::Admitted);
    CHECK(nodes.load(0) == 3);
}

TEST_CASE("an admission that reaches capacity shuts the node down") {
    const Network net = complete(4);
    NodeTable nodes(net, 4);
    for (int i = 0; i < 3; ++i) nodes.admit_subtxn(0);
    CHECK(nodes.admit_subtxn(0) == NodeTable::Admit::OverloadShutdown);
    CHECK(nodes.status(0) == NodeStatus::DisabledOverload);
    CHECK(nodes.load(0) == 0);
    CHECK(nodes.alive_count() == 3);
    CHECK(nodes.dead_overload() == 1);
    // disabled state is terminal
    CHECK_THROWS_AS(nodes.admit_subtxn(0), std::logic_error);
}

TEST_CASE("C=2 nodes cannot host two concurrent subtransactions") {
    const Network net = complete(3);
    NodeTable nodes(net, 2);
    CHECK(nodes.admit_subtxn(1) == NodeTable::Admit::Admitted);
    CHECK(nodes.admit_subtxn(1) == NodeTable::Admit::OverloadShutdown);
}

TEST_CASE("release decrements and underflow is a logic error") {
    const Network net = complete(4);
    NodeTable nodes(net, 6);
    nodes.admit_subtxn(2);
    nodes.admit_subtxn(2);
    nodes.admit_subtxn(2);
    nodes.release_subtxn(2);
    CHECK(nodes.load(2) == 2);
    nodes.release_subtxn(2);
    nodes.admit_subtxn(2);
    CHECK(nodes.load(2) == 2);  // release then admit nets out
    nodes.release_subtxn(2);
    nodes.release_subtxn(2);
    CHECK_THROWS_AS(nodes.release_subtxn(2), std::logic_error);
}

TEST_CASE("faults disable alive nodes once and never restart them") {
    const Network net = complete(5);
    NodeTable nodes(net, 3);
    nodes.admit_subtxn(1);
    CHECK(nodes.apply_fault(1));
    CHECK(nodes.status(1) == NodeStatus::DisabledFault);
    CHECK(nodes.load(1) == 0);
    CHECK_FALSE(nodes.apply_fault(1));  // no-op on a dead node
    // fault after overload death is also a no-op
    nodes.admit_subtxn(2);
    nodes.admit_subtxn(2);
    CHECK(nodes.admit_subtxn(2) == NodeTable::Admit::OverloadShutdown);
    CHECK_FALSE(nodes.apply_fault(2));
    CHECK(nodes.status(2) == NodeStatus::DisabledOverload);
    CHECK(nodes.dead_fault() == 1);
    CHECK(nodes.dead_overload() == 1);
}

TEST_CASE("alive out-degree tracking follows neighbor deaths") {
    const Network net = complete(4);
    NodeTable nodes(net, 3);
    CHECK(nodes.alive_out_degree(0) == 3);
    nodes.apply_fault(2);
    CHECK(nodes.alive_out_degree(0) == 2);
    nodes.apply_fault(3);
    nodes.apply_fault(1);
    CHECK(nodes.alive_out_degree(0) == 0);
    CHECK(nodes.alive_count() == 1);
}

TEST_CASE("routing draws uniformly over alive out-neighbors") {
    const Network net = complete(4);
    NodeTable nodes(net, 4);
    RngStream rng(17, "routing");
    int counts[4] = {0, 0, 0, 0};
    const int trials = 100000;
    for (int i = 0; i < trials; ++i)
        ++counts[route_next(net, nodes, 0, rng)];
    CHECK(counts[0] == 0);
    for (int v = 1; v < 4; ++v)
        CHECK(std::abs(counts[v] / static_cast<double>(trials) - 1.0 / 3.0) < 0.01);
}

TEST_CASE("routing filters disabled neighbors and reports dead ends") {
    const Network net = complete(6);
    NodeTable nodes(net, 4);
    nodes.apply_fault(1);
    nodes.apply_fault(2);
    RngStream rng(29, "routing");
    for (int i = 0; i < 20000; ++i) {
        const std::uint32_t v = route_next(net, nodes, 0, rng);
        CHECK(v != 1);
        CHECK(v != 2);
        CHECK(v != 0);
    }
    nodes.apply_fault(3);
    nodes.apply_fault(4);
    nodes.apply_fault(5);
    CHECK(route_next(net, nodes, 0, rng) == kNoNode);
}

TEST_CASE("zero out-degree routes to a dead end") {
    const Network net = network_from_edges(3, 0.5, 1, {{0, 1}, {1, 0}, {0, 2}});
    NodeTable nodes(net, 4);
    RngStream rng(5, "routing");
    CHECK(route_next(net, nodes, 2, rng) == kNoNode);
}

TEST_CASE("fault plan delays follow Exp(T_f)") {
    RngStream rng(31, "faults");
    const auto delays = build_fault_plan(1600, 1000.0, rng);
    double sum = 0.0;
    for (double d : delays) sum += d;
    CHECK(std::abs(sum / 1600.0 - 1000.0) < 50.0);
}

TEST_CASE("infinite T_f schedules no faults") {
    RngStream rng(31, "faults");
    const auto delays = build_fault_plan(100, std::numeric_limits<double>::infinity(), rng);
    for (double d : delays)
        CHECK(std::isinf(d));
}

TEST_CASE("direct-fraction plan picks exactly ceil(m*N) distinct nodes inside the run") {
    RngStream rng(37, "faults");
    const auto plan = build_fault_plan_fraction(200, 0.33, 5000.0, rng);
    CHECK(plan.size() == 66);
    std::set<std::uint32_t> ids;
    for (const auto& [node, delay] : plan) {
        ids.insert(node);
        CHECK(delay >= 0.0);
        CHECK(delay < 5000.0);
    }
    CHECK(ids.size() == plan.size());
    CHECK(build_fault_plan_fraction(200, 0.0, 5000.0, rng).empty());
    CHECK(build_fault_plan_fraction(200, 1.0, 5000.0, rng).size() == 200);
}
