#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace txnsim {

// Virtual time is measured in tau0 units (tau0 == 1).
enum class EventKind : std::uint8_t { Inject, SubTxnComplete, NodeFault, EndOfRun };

struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;  // insertion counter; breaks time ties deterministically
    EventKind kind = EventKind::Inject;
    std::uint32_t a = 0;    // kind-specific payload (node id, txn slot, script index)
    std::uint32_t b = 0;    // kind-specific payload (txn generation)
};

// Min-heap on (time, seq) with a monotone virtual clock.
class EventQueue {
public:
    // Returns the event's seq as a handle. Scheduling into the past is a
    // simulator logic bug, not a recoverable condition.
    std::uint64_t schedule(double time, EventKind kind, std::uint32_t a = 0, std::uint32_t b = 0) {
        if (time < clock_)
            throw std::logic_error("EventQueue::schedule: event time precedes clock");
        Event ev{time, next_seq_++, kind, a, b};
        heap_.push_back(ev);
        std::push_heap(heap_.begin(), heap_.end(), After{});
        return ev.seq;
    }

    // Pops the earliest event and advances the clock; empty queue is a normal return.
    std::optional<Event> next() {
        if (heap_.empty())
            return std::nullopt;
        std::pop_heap(heap_.begin(), heap_.end(), After{});
        Event ev = heap_.back();
        heap_.pop_back();
        clock_ = ev.time;
        ++consumed_;
        return ev;
    }

    double clock() const { return clock_; }
    std::size_t pending() const { return heap_.size(); }
    std::uint64_t scheduled_count() const { return next_seq_; }
    std::uint64_t consumed_count() const { return consumed_; }
    void reserve(std::size_t n) { heap_.reserve(n); }

private:
    struct After {
        bool operator()(const Event& x, const Event& y) const {
            if (x.time != y.time) return x.time > y.time;
            return x.seq > y.seq;
        }
    };
    std::vector<Event> heap_;
    double clock_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t consumed_ = 0;
};

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

// splitmix64 finalizer; also the seed-derivation mixer used throughout.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return mix64(master ^ fnv1a64(label));
}

// Labeled substream of a master seed. Distinct labels give statistically
// independent sequences; the same (seed, label) always reproduces the same
// sequence. All distribution transforms are explicit so that draws are
// bit-reproducible across standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::string_view label)
        : gen_(derive_seed(master_seed, label)) {}

    // 53-bit uniform in [0,1).
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0,n). Bias is O(2^-53), irrelevant at simulation scale.
    std::uint64_t uniform_below(std::uint64_t n) {
        auto k = static_cast<std::uint64_t>(u01() * static_cast<double>(n));
        return k >= n ? n - 1 : k;
    }

    double exponential(double mean) { return -mean * std::log1p(-u01()); }

    // Box-Muller; consumes exactly two uniforms, no caching.
    double normal(double mu, double sigma) {
        const double u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return mu + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Discrete normal rounded to nearest integer, redrawn until >= 1.
    std::uint32_t positive_discrete_normal(double mu, double sigma) {
        for (;;) {
            const double x = std::round(normal(mu, sigma));
            if (x >= 1.0)
                return static_cast<std::uint32_t>(x);
        }
    }

    // Exponential conditioned on [0, limit) via inverse CDF; single draw.
    double truncated_exponential(double mean, double limit) {
        const double cap = -std::expm1(-limit / mean);  // 1 - e^(-limit/mean)
        return -mean * std::log1p(-u01() * cap);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace txnsim
