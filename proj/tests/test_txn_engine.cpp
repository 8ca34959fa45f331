#include <doctest.h>

#include <cmath>
#include <string>

#include "txnsim/engine.hpp"
#include "txnsim/node.hpp"

using namespace txnsim;

namespace {

SimConfig tiny(std::uint32_t n, double d, std::uint32_t cap) {
    SimConfig cfg;
    cfg.n_nodes = n;
    cfg.density = d;
    cfg.capacity = cap;
    cfg.duration = 100.0;
    cfg.inject_rate = 0.0;
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("zero injection rate injects nothing") {
    SimConfig cfg = tiny(10, 1.0, 4);
    cfg.duration = 5000.0;
    const RunMetrics m = run_simulation(cfg);
    CHECK(m.injected == 0);
    CHECK(m.phase == Phase::Superconductive);  // vacuous
}

TEST_CASE("a single-hop master commits after exactly one tau0") {
    SimConfig cfg = tiny(4, 1.0, 4);
    Script script;
    script.injections.push_back({2.5, 0, 1});
    RunOptions opts;
    opts.script = &script;
    std::string trace;
    opts.trace = &trace;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.injected == 1);
    CHECK(m.committed == 1);
    CHECK(trace.find("3.5,complete,1,0,done=1") != std::string::npos);
    CHECK(trace.find("3.5,commit,1,0,") != std::string::npos);
}

TEST_CASE("with unit service and zero hop delay an L-hop master commits at inject+L") {
    SimConfig cfg = tiny(6, 1.0, 6);
    Script script;
    script.injections.push_back({0.0, 3, 10});
    RunOptions opts;
    opts.script = &script;
    std::string trace;
    opts.trace = &trace;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.committed == 1);
    CHECK(trace.find("10,commit,1,") != std::string::npos);
}

TEST_CASE("a master longer than the TTL aborts by timeout at the deadline") {
    SimConfig cfg = tiny(6, 1.0, 6);
    Script script;
    script.injections.push_back({0.0, 0, 61});  // unreachable via N(10,4); forced here
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    std::string trace;
    opts.trace = &trace;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.aborted[static_cast<int>(AbortCause::Timeout)] == 1);
    CHECK(trace.find("60,abort,1,") != std::string::npos);
    CHECK(m.committed == 0);
}

TEST_CASE("the same forced length drawn via sd=0 also times out") {
    SimConfig cfg = tiny(6, 1.0, 6);
    cfg.inject_rate = 0.001;
    cfg.duration = 3000.0;
    cfg.txn_len_mean = 61.0;
    cfg.txn_len_sd = 0.0;
    const RunMetrics m = run_simulation(cfg);
    CHECK(m.committed == 0);
    CHECK(m.aborted[static_cast<int>(AbortCause::Timeout)] + m.in_flight_at_end == m.injected);
}

TEST_CASE("overload shutdown aborts the arriving master and all residents") {
    // Three masters pinned to node 0 with C=3: the third admission kills it.
    SimConfig cfg = tiny(4, 1.0, 3);
    Script script;
    script.injections.push_back({0.0, 0, 5});
    script.injections.push_back({0.2, 0, 5});
    script.injections.push_back({0.4, 0, 5});
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    std::string trace;
    opts.trace = &trace;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.nodes_dead_overload == 1);
    CHECK(m.aborted[static_cast<int>(AbortCause::NodeDeath)] == 3);
    CHECK(trace.find("0.40000000000000002,node_death,,0,overload") != std::string::npos);
}

TEST_CASE("an internal fault aborts residents and later faults are no-ops") {
    SimConfig cfg = tiny(4, 1.0, 8);
    Script script;
    script.injections.push_back({0.0, 2, 40});
    script.injections.push_back({0.1, 2, 40});
    script.injections.push_back({0.2, 2, 40});
    script.faults.push_back({0.5, 2});
    script.faults.push_back({0.7, 2});
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.nodes_dead_fault == 1);
    CHECK(m.aborted[static_cast<int>(AbortCause::NodeDeath)] == 3);
}

TEST_CASE("all neighbors disabled aborts the master at its next hop") {
    // 0 and 1 form a 2-cycle; kill 1 while the master serves at 0.
    SimConfig cfg = tiny(2, 1.0, 8);
    Script script;
    script.injections.push_back({0.0, 0, 5});
    script.faults.push_back({0.5, 1});
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.aborted[static_cast<int>(AbortCause::NoAliveNeighbor)] == 1);
}

TEST_CASE("p0=0 never cascades") {
    SimConfig cfg = tiny(2, 1.0, 8);
    cfg.cascade_prob = 0.0;
    Script script;
    script.injections.push_back({0.0, 0, 8});
    script.injections.push_back({0.3, 0, 1});  // crosses paths with the first at node 0
    script.faults.push_back({0.5, 1});         // kills the first master's next hop
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.aborted[static_cast<int>(AbortCause::Cascade)] == 0);
}

TEST_CASE("p0=1 is full contagion across crossed paths") {
    SimConfig cfg = tiny(2, 1.0, 8);
    cfg.cascade_prob = 1.0;
    Script script;
    script.injections.push_back({0.0, 0, 8});   // master 1
    script.injections.push_back({0.3, 0, 9});   // master 2, overlaps 1 at node 0
    script.faults.push_back({0.5, 1});          // node 1 dies; master 1 dead-ends at t=1
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    std::string trace;
    opts.trace = &trace;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.aborted[static_cast<int>(AbortCause::NoAliveNeighbor)] == 1);
    CHECK(m.aborted[static_cast<int>(AbortCause::Cascade)] == 1);
    CHECK(m.committed == 0);
}

TEST_CASE("cascade probability is honored over scripted replays") {
    // Master 2 commits at t=1.3 unless the dead-ended master 1 cascades into
    // it at t=1.0; the encounter at node 0 spans [0.3, 1.0).
    int cascaded = 0;
    const int replays = 10000;
    for (int i = 0; i < replays; ++i) {
        SimConfig cfg = tiny(2, 1.0, 8);
        cfg.cascade_prob = 0.5;
        cfg.seed = 1000 + i;
        Script script;
        script.injections.push_back({0.0, 0, 8});
        script.injections.push_back({0.3, 0, 1});
        script.faults.push_back({0.5, 1});
        RunOptions opts;
        opts.script = &script;
        const RunMetrics m = run_simulation(cfg, opts);
        const std::uint64_t c = m.aborted[static_cast<int>(AbortCause::Cascade)];
        REQUIRE(c <= 1);
        REQUIRE(m.aborted[static_cast<int>(AbortCause::NoAliveNeighbor)] == 1);
        cascaded += static_cast<int>(c);
    }
    CHECK(std::abs(cascaded / static_cast<double>(replays) - 0.5) < 0.015);
}

TEST_CASE("encounters older than the window never cascade") {
    SimConfig cfg = tiny(2, 1.0, 8);
    cfg.cascade_prob = 1.0;
    cfg.ttl = 200.0;  // keep master 1 alive long enough
    Script script;
    script.injections.push_back({0.0, 0, 40});   // master 1 ping-pongs 0,1,0,1,...
    script.injections.push_back({0.3, 0, 1});    // master 2 overlaps at node 0, commits at 1.3
    script.injections.push_back({14.3, 0, 1});   // master 3 overlaps master 1 at t=14.3
    script.faults.push_back({25.5, 1});          // master 1 dead-ends at t=26
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    // Encounter at 14.3 is 11.7 tau0 before the abort: outside the 10 tau0 window.
    CHECK(m.aborted[static_cast<int>(AbortCause::Cascade)] == 0);
    CHECK(m.committed == 2);
}

TEST_CASE("committed masters are final and never cascade") {
    SimConfig cfg = tiny(2, 1.0, 8);
    cfg.cascade_prob = 1.0;
    Script script;
    script.injections.push_back({0.0, 0, 8});
    script.injections.push_back({0.3, 0, 1});  // commits at 1.3, before the abort at 6.0
    script.faults.push_back({5.5, 1});
    RunOptions opts;
    opts.script = &script;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.committed == 1);
    CHECK(m.aborted[static_cast<int>(AbortCause::Cascade)] == 0);
    CHECK(m.committed + m.total_aborted() + m.in_flight_at_end == m.injected);
}

TEST_CASE("network choke classifies dielectric and stops work") {
    SimConfig cfg = tiny(3, 1.0, 2);  // C=2: any concurrency kills a node
    cfg.inject_rate = 5.0;
    cfg.duration = 1000.0;
    cfg.seed = 7;
    RunOptions opts;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    REQUIRE(m.choke_time.has_value());
    CHECK(m.phase == Phase::Dielectric);
    CHECK(*m.choke_time <= 1000.0);
    CHECK(m.in_flight_at_end == 0);
    CHECK(m.committed + m.total_aborted() == m.injected);
}

TEST_CASE("no abort sources means superconductive at any rate") {
    SimConfig cfg = tiny(20, 1.0, 1000000);  // effectively infinite capacity
    cfg.inject_rate = 50.0;
    cfg.duration = 200.0;
    cfg.cascade_prob = 0.5;
    RunOptions opts;
    opts.audit = true;
    const RunMetrics m = run_simulation(cfg, opts);
    CHECK(m.injected > 5000);
    CHECK(m.total_aborted() == 0);
    CHECK(m.phase == Phase::Superconductive);
}

TEST_CASE("replaying a config yields bit-identical metrics and trace") {
    SimConfig cfg = tiny(30, 0.4, 3);
    cfg.inject_rate = 2.0;
    cfg.duration = 500.0;
    cfg.mean_ttf = 2000.0;
    std::string t1, t2;
    RunOptions o1, o2;
    o1.trace = &t1;
    o2.trace = &t2;
    const RunMetrics m1 = run_simulation(cfg, o1);
    const RunMetrics m2 = run_simulation(cfg, o2);
    CHECK(m1.to_text() == m2.to_text());
    CHECK(t1 == t2);
    CHECK_FALSE(t1.empty());
}

TEST_CASE("injection count matches the Poisson rate over a full day") {
    SimConfig cfg = tiny(100, 0.5, 1000000);
    cfg.inject_rate = 5.0;
    cfg.duration = 84600.0;
    const RunMetrics m = run_simulation(cfg);
    CHECK(std::abs(static_cast<double>(m.injected) - 423000.0) < 3.0 * std::sqrt(423000.0));
}

TEST_CASE("all nodes faulting at zero traffic is dielectric") {
    SimConfig cfg = tiny(50, 0.3, 4);
    cfg.inject_rate = 0.0;
    cfg.duration = 5000.0;
    RunOptions opts;
    opts.direct_fault_fraction = true;
    opts.fault_fraction = 1.0;
    const RunMetrics m = run_simulation(cfg, opts);
    REQUIRE(m.choke_time.has_value());
    CHECK(m.phase == Phase::Dielectric);
    CHECK(m.nodes_dead_fault == 50);
    // while anything short of every node stays non-dielectric at zero traffic
    opts.fault_fraction = 0.9;
    const RunMetrics partial = run_simulation(cfg, opts);
    CHECK(partial.phase != Phase::Dielectric);
    CHECK(partial.nodes_dead_fault == 45);
}

TEST_CASE("phase classification follows the abort-fraction threshold") {
    RunMetrics m;
    m.injected = 1000000;
    m.committed = 1000000;
    CHECK(classify_phase(m, 1e-6) == Phase::Superconductive);
    m.aborted[0] = 137;
    m.committed -= 137;
    CHECK(classify_phase(m, 1e-6) == Phase::Resistive);  // 1.37e-4 > 1e-6
    m.choke_time = 40000.0;
    CHECK(classify_phase(m, 1e-6) == Phase::Dielectric);
}

TEST_CASE("conservation and load audits hold across randomized configs") {
    RngStream rng(99, "cfg");
    for (int i = 0; i < 12; ++i) {
        SimConfig cfg;
        cfg.n_nodes = 10 + static_cast<std::uint32_t>(rng.uniform_below(90));
        cfg.density = 0.1 + 0.9 * rng.u01();
        cfg.capacity = 2 + static_cast<std::uint32_t>(rng.uniform_below(6));
        cfg.duration = 200.0 + 400.0 * rng.u01();
        cfg.inject_rate = 0.5 + 4.0 * rng.u01();
        cfg.mean_ttf = rng.u01() < 0.5 ? 800.0 : std::numeric_limits<double>::infinity();
        cfg.cascade_prob = rng.u01() < 0.5 ? 0.0 : 0.3;
        cfg.seed = 10000 + i;
        RunOptions opts;
        opts.audit = true;  // throws on any boundary violation
        const RunMetrics m = run_simulation(cfg, opts);
        CHECK(m.injected == m.committed + m.total_aborted() + m.in_flight_at_end);
        CHECK(m.events_scheduled == m.events_consumed + m.events_pending_at_end);
    }
}
