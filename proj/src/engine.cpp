#include "txnsim/engine.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <deque>

#include "txnsim/des.hpp"
#include "txnsim/node.hpp"

namespace txnsim {

const char* to_string(AbortCause c) {
    switch (c) {
        case AbortCause::NodeDeath: return "node_death";
        case AbortCause::NoAliveNeighbor: return "no_alive_neighbor";
        case AbortCause::Timeout: return "timeout";
        case AbortCause::Cascade: return "cascade";
    }
    return "?";
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Superconductive: return "superconductive";
        case Phase::Resistive: return "resistive";
        case Phase::Dielectric: return "dielectric";
    }
    return "?";
}

Phase classify_phase(const RunMetrics& m, double abort_threshold) {
    if (m.choke_time.has_value())
        return Phase::Dielectric;
    if (m.injected == 0)
        return Phase::Superconductive;  // vacuous
    return m.abort_fraction() < abort_threshold ? Phase::Superconductive : Phase::Resistive;
}

std::string RunMetrics::to_text() const {
    char buf[1024];
    char choke[40];
    if (choke_time.has_value())
        std::snprintf(choke, sizeof choke, "%.17g", *choke_time);
    else
        std::snprintf(choke, sizeof choke, "none");
    std::snprintf(buf, sizeof buf,
                  "injected=%" PRIu64 "\ncommitted=%" PRIu64 "\naborted_node_death=%" PRIu64
                  "\naborted_no_alive_neighbor=%" PRIu64 "\naborted_timeout=%" PRIu64
                  "\naborted_cascade=%" PRIu64 "\nin_flight_at_end=%" PRIu64
                  "\nnodes_dead_overload=%u\nnodes_dead_fault=%u\nmax_node_load=%u\nn_nodes=%u\nchoke_time=%s\nphase=%s\n"
                  "end_time=%.17g\nevents_scheduled=%" PRIu64 "\nevents_consumed=%" PRIu64
                  "\nevents_pending_at_end=%" PRIu64 "\n",
                  injected, committed, aborted[0], aborted[1], aborted[2], aborted[3],
                  in_flight_at_end, nodes_dead_overload, nodes_dead_fault, max_node_load, n_nodes, choke,
                  to_string(phase), end_time, events_scheduled, events_consumed,
                  events_pending_at_end);
    return buf;
}

namespace {

enum class TxnStatus : std::uint8_t { Running, Committed, Aborted };

struct TrailEnt {
    double start = 0.0;
    std::uint32_t node = 0;
};

struct Master {
    std::uint64_t id = 0;
    double injected_at = 0.0;
    double deadline = 0.0;
    std::uint32_t length = 0;
    std::uint32_t completed = 0;
    std::uint32_t node = kNoNode;  // in-service node, kNoNode between hops
    std::uint32_t last_node = kNoNode;
    std::uint32_t gen = 0;
    TxnStatus status = TxnStatus::Running;
    // Circular trail of recent service starts, sized to the dependency window.
    std::vector<TrailEnt> trail;
    std::uint32_t trail_head = 0;
    std::uint32_t trail_len = 0;
};

struct RingRec {
    double start = 0.0;
    std::uint32_t slot = 0;
    std::uint32_t gen = 0;
};

struct PartnerRec {
    double enc_time;
    std::uint32_t slot;
    std::uint32_t gen;
    std::uint64_t id;
};

class Run {
public:
    Run(const SimConfig& cfg, const RunOptions& opts)
        : cfg_(cfg),
          opts_(opts),
          inject_rng_(cfg.seed, "inject"),
          routing_rng_(cfg.seed, "routing"),
          faults_rng_(cfg.seed, "faults"),
          cascade_rng_(cfg.seed, "cascade") {
        cfg_.validate();
        if (opts.net) {
            if (opts.net->n_nodes != cfg.n_nodes)
                throw std::logic_error("RunOptions.net node count does not match config");
            net_ = opts.net;
        } else {
            RngStream topo(cfg.seed, "topology");
            owned_net_ = generate_er(cfg.n_nodes, cfg.density, topo);
            owned_net_.seed = cfg.seed;
            net_ = &owned_net_;
        }
        nodes_.emplace(*net_, cfg.capacity);
        residency_.resize(cfg.n_nodes);
        track_encounters_ = cfg.cascade_prob > 0.0;
        if (track_encounters_) {
            rings_.resize(cfg.n_nodes);
            trail_cap_ = static_cast<std::uint32_t>(std::ceil(cfg.dep_window)) + 2;
        }
    }

    RunMetrics go() {
        schedule_initial();
        if (opts_.audit)
            audit();
        for (;;) {
            auto ev = queue_.next();
            if (!ev)
                break;
            if (ev->kind == EventKind::EndOfRun) {
                trace_line(ev->time, "end", nullptr, kNoNode, "");
                break;
            }
            switch (ev->kind) {
                case EventKind::Inject: handle_inject(*ev); break;
                case EventKind::SubTxnComplete: handle_complete(*ev); break;
                case EventKind::NodeFault: handle_fault(*ev); break;
                default: break;
            }
            if (opts_.audit)
                audit();
            if (choked_)
                break;
        }
        RunMetrics m;
        m.injected = injected_;
        m.committed = committed_;
        for (int i = 0; i < 4; ++i) m.aborted[i] = aborted_[i];
        m.in_flight_at_end = running_;
        m.nodes_dead_overload = nodes_->dead_overload();
        m.nodes_dead_fault = nodes_->dead_fault();
        m.max_node_load = nodes_->max_load_seen();
        m.n_nodes = cfg_.n_nodes;
        if (choked_)
            m.choke_time = choke_time_;
        m.end_time = queue_.clock();
        m.events_scheduled = queue_.scheduled_count();
        m.events_consumed = queue_.consumed_count();
        m.events_pending_at_end = queue_.pending();
        m.phase = classify_phase(m, cfg_.abort_threshold);
        return m;
    }

private:
    void schedule_initial() {
        queue_.schedule(cfg_.duration, EventKind::EndOfRun);
        if (opts_.script) {
            for (std::uint32_t i = 0; i < opts_.script->faults.size(); ++i)
                queue_.schedule(opts_.script->faults[i].time, EventKind::NodeFault,
                                opts_.script->faults[i].node);
            for (std::uint32_t i = 0; i < opts_.script->injections.size(); ++i)
                queue_.schedule(opts_.script->injections[i].time, EventKind::Inject, i + 1);
            return;
        }
        if (opts_.direct_fault_fraction) {
            for (const auto& [node, delay] :
                 build_fault_plan_fraction(cfg_.n_nodes, opts_.fault_fraction, cfg_.duration, faults_rng_))
                queue_.schedule(delay, EventKind::NodeFault, node);
        } else if (!std::isinf(cfg_.mean_ttf)) {
            const auto delays = build_fault_plan(cfg_.n_nodes, cfg_.mean_ttf, faults_rng_);
            for (std::uint32_t v = 0; v < cfg_.n_nodes; ++v)
                if (delays[v] <= cfg_.duration)
                    queue_.schedule(delays[v], EventKind::NodeFault, v);
        }
        if (cfg_.inject_rate > 0.0)
            queue_.schedule(inject_rng_.exponential(1.0 / cfg_.inject_rate), EventKind::Inject);
    }

    void handle_inject(const Event& ev) {
        std::uint32_t src;
        std::uint32_t len;
        if (ev.a > 0) {  // scripted
            const auto& s = opts_.script->injections[ev.a - 1];
            if (!nodes_->is_alive(s.node))
                return;
            src = s.node;
            len = s.length;
        } else {
            if (nodes_->alive_count() == 0)
                return;  // choked network: injection stops
            queue_.schedule(ev.time + inject_rng_.exponential(1.0 / cfg_.inject_rate),
                            EventKind::Inject);
            src = nodes_->pick_alive_uniform(inject_rng_);
            len = inject_rng_.positive_discrete_normal(cfg_.txn_len_mean, cfg_.txn_len_sd);
        }
        const std::uint32_t slot = alloc_master();
        Master& m = masters_[slot];
        m.id = next_id_++;
        m.injected_at = ev.time;
        m.deadline = ev.time + cfg_.ttl;
        m.length = len;
        ++injected_;
        ++running_;
        trace_line(ev.time, "inject", &m.id, src, "L=%u", len);
        start_subtxn(slot, src, ev.time);
    }

    void start_subtxn(std::uint32_t slot, std::uint32_t node, double now) {
        Master& m = masters_[slot];
        m.last_node = node;
        if (nodes_->admit_subtxn(node) == NodeTable::Admit::OverloadShutdown) {
            on_node_death(node, "overload", now);
            abort_master(slot, AbortCause::NodeDeath, now);  // the arriving subtransaction
            abort_victims(now);
            return;
        }
        m.node = node;
        residency_[node].push_back(slot);
        if (track_encounters_) {
            trail_push(m, node, now);
            auto& ring = rings_[node];
            const double cutoff = now - cfg_.dep_window - 1.0;
            while (!ring.empty() && ring.front().start <= cutoff)
                ring.pop_front();
            ring.push_back(RingRec{now, slot, m.gen});
        }
        trace_line(now, "start", &m.id, node, "hop=%u", m.completed + 1);
        queue_.schedule(now + 1.0, EventKind::SubTxnComplete, slot, m.gen);
    }

    void handle_complete(const Event& ev) {
        const std::uint32_t slot = ev.a;
        Master& m = masters_[slot];
        if (m.gen != ev.b || m.status != TxnStatus::Running)
            return;  // master aborted mid-service; stale completion
        const std::uint32_t node = m.node;
        nodes_->release_subtxn(node);
        residency_remove(node, slot);
        m.node = kNoNode;
        ++m.completed;
        trace_line(ev.time, "complete", &m.id, node, "done=%u", m.completed);
        if (m.completed == m.length) {
            m.status = TxnStatus::Committed;
            ++committed_;
            --running_;
            trace_line(ev.time, "commit", &m.id, node, "");
            free_master(slot);
        } else if (ev.time >= m.deadline) {
            abort_master(slot, AbortCause::Timeout, ev.time);
        } else {
            const std::uint32_t nxt = route_next(*net_, *nodes_, node, routing_rng_, route_scratch_);
            if (nxt == kNoNode)
                abort_master(slot, AbortCause::NoAliveNeighbor, ev.time);
            else
                start_subtxn(slot, nxt, ev.time);
        }
    }

    void handle_fault(const Event& ev) {
        const std::uint32_t node = ev.a;
        if (!nodes_->apply_fault(node))
            return;  // already disabled
        on_node_death(node, "fault", ev.time);
        abort_victims(ev.time);
    }

    // Common bookkeeping once NodeTable has flipped the node to a disabled
    // state: snapshot residents (their load is already zeroed), detect choke.
    void on_node_death(std::uint32_t node, const char* why, double now) {
        trace_line(now, "node_death", nullptr, node, "%s", why);
        victims_.clear();
        victims_.swap(residency_[node]);
        // Canonical abort order: ascending txn id (resident list order is an
        // implementation detail).
        std::sort(victims_.begin(), victims_.end(), [this](std::uint32_t x, std::uint32_t y) {
            return masters_[x].id < masters_[y].id;
        });
        for (std::uint32_t v : victims_)
            masters_[v].node = kNoNode;
        if (nodes_->alive_count() == 0) {
            choked_ = true;
            choke_time_ = now;
            trace_line(now, "choke", nullptr, kNoNode, "");
        }
    }

    void abort_victims(double now) {
        // victims_ may be repopulated reentrantly only via another node death,
        // which cannot happen inside abort_master (no admissions there).
        victims_local_.swap(victims_);
        for (std::uint32_t v : victims_local_)
            abort_master(v, AbortCause::NodeDeath, now);
        victims_local_.clear();
    }

    void abort_master(std::uint32_t slot, AbortCause cause, double now) {
        Master& m = masters_[slot];
        if (m.status != TxnStatus::Running)
            return;
        m.status = TxnStatus::Aborted;
        ++aborted_[static_cast<int>(cause)];
        --running_;
        trace_line(now, "abort", &m.id, m.last_node, "%s", to_string(cause));
        if (m.node != kNoNode) {  // mid-service at an alive node: reclaim the slot
            nodes_->release_subtxn(m.node);
            residency_remove(m.node, slot);
            m.node = kNoNode;
        }
        if (track_encounters_)
            cascade_from(slot, now);
        free_master(slot);
    }

    // Every distinct partner whose service interval overlapped ours at the
    // same node within (now - T, now] rolls back independently with
    // probability p0; an aborted partner recurses with its own round.
    void cascade_from(std::uint32_t slot, double now) {
        const Master& m = masters_[slot];
        const double window_cutoff = now - cfg_.dep_window;
        const double stale_cutoff = window_cutoff - 1.0;
        auto& cands = cascade_scratch_;
        const std::size_t base = cands.size();  // recursion-safe: operate on our tail only
        const std::uint32_t start_idx = (m.trail_head + trail_cap_ - m.trail_len) % trail_cap_;
        for (std::uint32_t k = 0; k < m.trail_len; ++k) {
            const TrailEnt& te = m.trail[(start_idx + k) % trail_cap_];
            if (te.start <= stale_cutoff)
                continue;
            for (const RingRec& rec : rings_[te.node]) {
                if (rec.start >= te.start + 1.0)
                    break;  // ring is start-ordered; no further overlap possible
                if (rec.start <= te.start - 1.0)
                    continue;  // ended before we started
                if (rec.slot == slot && rec.gen == m.gen)
                    continue;  // our own service record
                const double enc = std::max(rec.start, te.start);
                if (enc > window_cutoff)
                    cands.push_back(PartnerRec{enc, rec.slot, rec.gen, 0});
            }
        }
        // Distinct partners, earliest encounter first; ties broken by txn id.
        auto first = cands.begin() + static_cast<std::ptrdiff_t>(base);
        std::sort(first, cands.end(), [](const PartnerRec& x, const PartnerRec& y) {
            if (x.slot != y.slot) return x.slot < y.slot;
            if (x.gen != y.gen) return x.gen < y.gen;
            return x.enc_time < y.enc_time;
        });
        cands.erase(std::unique(first, cands.end(),
                                [](const PartnerRec& x, const PartnerRec& y) {
                                    return x.slot == y.slot && x.gen == y.gen;
                                }),
                    cands.end());
        std::size_t keep = base;
        for (std::size_t i = base; i < cands.size(); ++i) {
            const Master& p = masters_[cands[i].slot];
            if (p.gen == cands[i].gen && p.status == TxnStatus::Running) {
                cands[keep] = cands[i];
                cands[keep].id = p.id;
                ++keep;
            }
        }
        cands.resize(keep);
        first = cands.begin() + static_cast<std::ptrdiff_t>(base);
        std::sort(first, cands.end(), [](const PartnerRec& x, const PartnerRec& y) {
            if (x.enc_time != y.enc_time) return x.enc_time < y.enc_time;
            return x.id < y.id;
        });
        for (std::size_t i = base; i < cands.size(); ++i) {
            const PartnerRec pr = cands[i];  // by value: recursion may grow the vector
            const Master& p = masters_[pr.slot];
            if (p.gen != pr.gen || p.status != TxnStatus::Running)
                continue;  // already terminated by a deeper cascade; no draw
            if (cascade_rng_.u01() < cfg_.cascade_prob)
                abort_master(pr.slot, AbortCause::Cascade, now);
        }
        cands.resize(base);
    }

    std::uint32_t alloc_master() {
        std::uint32_t slot;
        if (free_slots_.empty()) {
            slot = static_cast<std::uint32_t>(masters_.size());
            masters_.emplace_back();
            if (track_encounters_)
                masters_[slot].trail.resize(trail_cap_);
        } else {
            slot = free_slots_.back();
            free_slots_.pop_back();
            ++masters_[slot].gen;
        }
        Master& m = masters_[slot];
        m.completed = 0;
        m.node = kNoNode;
        m.last_node = kNoNode;
        m.status = TxnStatus::Running;
        m.trail_head = 0;
        m.trail_len = 0;
        return slot;
    }

    void free_master(std::uint32_t slot) { free_slots_.push_back(slot); }

    void trail_push(Master& m, std::uint32_t node, double now) {
        m.trail[m.trail_head] = TrailEnt{now, node};
        m.trail_head = (m.trail_head + 1) % trail_cap_;
        if (m.trail_len < trail_cap_)
            ++m.trail_len;
    }

    void residency_remove(std::uint32_t node, std::uint32_t slot) {
        auto& r = residency_[node];
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] == slot) {
                r[i] = r.back();
                r.pop_back();
                return;
            }
        }
        throw std::logic_error("residency_remove: slot not resident (accounting bug)");
    }

    template <typename... Args>
    void trace_line(double t, const char* kind, const std::uint64_t* txn, std::uint32_t node,
                    const char* fmt, Args... args) {
        if (!opts_.trace)
            return;
        char buf[160];
        int n = std::snprintf(buf, sizeof buf, "%.17g,%s,", t, kind);
        if (txn)
            n += std::snprintf(buf + n, sizeof buf - n, "%" PRIu64, *txn);
        n += std::snprintf(buf + n, sizeof buf - n, ",");
        if (node != kNoNode)
            n += std::snprintf(buf + n, sizeof buf - n, "%u", node);
        n += std::snprintf(buf + n, sizeof buf - n, ",");
        n += std::snprintf(buf + n, sizeof buf - n, fmt, args...);
        buf[n++] = '\n';
        opts_.trace->append(buf, static_cast<std::size_t>(n));
    }

    void trace_line(double t, const char* kind, const std::uint64_t* txn, std::uint32_t node,
                    const char* lit) {
        trace_line(t, kind, txn, node, "%s", lit);
    }

    void audit() const {
        if (nodes_->total_load() != running_)
            throw std::logic_error("audit: sum of node loads != running subtransactions");
        for (std::uint32_t v = 0; v < cfg_.n_nodes; ++v)
            if (nodes_->is_alive(v) && nodes_->load(v) >= cfg_.capacity)
                throw std::logic_error("audit: alive node at or above capacity");
        if (injected_ != committed_ + aborted_[0] + aborted_[1] + aborted_[2] + aborted_[3] + running_)
            throw std::logic_error("audit: transaction conservation violated");
    }

    SimConfig cfg_;
    RunOptions opts_;
    RngStream inject_rng_;
    RngStream routing_rng_;
    RngStream faults_rng_;
    RngStream cascade_rng_;

    Network owned_net_;
    const Network* net_ = nullptr;
    std::optional<NodeTable> nodes_;
    EventQueue queue_;

    std::vector<Master> masters_;
    std::vector<std::uint32_t> free_slots_;
    std::vector<std::vector<std::uint32_t>> residency_;
    std::vector<std::deque<RingRec>> rings_;
    std::vector<std::uint32_t> victims_;
    std::vector<std::uint32_t> victims_local_;
    std::vector<std::uint32_t> route_scratch_;
    std::vector<PartnerRec> cascade_scratch_;

    bool track_encounters_ = false;
    std::uint32_t trail_cap_ = 0;
    std::uint64_t next_id_ = 1;
    std::uint64_t injected_ = 0;
    std::uint64_t committed_ = 0;
    std::uint64_t aborted_[4] = {0, 0, 0, 0};
    std::uint64_t running_ = 0;
    bool choked_ = false;
    double choke_time_ = 0.0;
};

}  // namespace

RunMetrics run_simulation(const SimConfig& cfg, const RunOptions& opts) {
    Run run(cfg, opts);
    return run.go();
}

}  // namespace txnsim
