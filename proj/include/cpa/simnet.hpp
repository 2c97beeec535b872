#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cpa/errors.hpp"
#include "cpa/ids.hpp"
#include "cpa/rng.hpp"

namespace cpa {

using Tick = std::int64_t;

struct NetConfig {
    /// Default drop probability for every directed link.
    double loss = 0.0;
    /// Ticks per hop.
    Tick delay = 1;
    std::uint64_t seed = 0;
};

template <class Payload>
struct Envelope {
    NodeId from;
    NodeId to;
    Payload payload;
    Tick send_tick = 0;
};

/// Deterministic message-passing substrate.
///
/// Every send draws one uniform from the seeded stream and is dropped when the
/// draw falls below the link's loss probability. Surviving envelopes are
/// delivered `delay` ticks later; envelopes due on the same tick come out in
/// enqueue order. There is no duplication and no corruption.
///
/// Payload must provide `kind_name(const Payload&)` (found by ADL) for tracing.
template <class Payload>
class SimNet {
public:
    explicit SimNet(NetConfig config = {}) : config_(config), rng_(CounterRng::stream(config.seed, {CounterRng::tag("simnet")})) {
        if (config_.delay < 1) throw DomainError("simnet delay must be at least one tick");
        check_probability(config_.loss);
    }

    void add_node(NodeId node) { nodes_.insert(node); }
    bool has_node(NodeId node) const { return nodes_.contains(node); }

    void set_link_loss(NodeId from, NodeId to, double p) {
        check_probability(p);
        link_loss_[{from, to}] = p;
    }

    /// Crash-stop: every link into or out of `node` drops everything. State held
    /// by the node itself is untouched, so it survives a later `restore`.
    void isolate(NodeId node) {
        for (NodeId other : nodes_) {
            if (other == node) continue;
            set_link_loss(node, other, 1.0);
            set_link_loss(other, node, 1.0);
        }
    }

    void restore(NodeId node) {
        for (auto it = link_loss_.begin(); it != link_loss_.end();) {
            if (it->first.first == node || it->first.second == node) it = link_loss_.erase(it);
            else ++it;
        }
    }

    double link_loss(NodeId from, NodeId to) const {
        auto it = link_loss_.find({from, to});
        return it == link_loss_.end() ? config_.loss : it->second;
    }

    /// Stamps the envelope with the current tick and queues or drops it.
    void send(Envelope<Payload> env) {
        if (!has_node(env.from)) throw RoutingError("unknown sender node " + std::to_string(env.from.value));
        if (!has_node(env.to)) throw RoutingError("unknown destination node " + std::to_string(env.to.value));
        env.send_tick = now_;
        ++sent_;
        const bool dropped = rng_.uniform01() < link_loss(env.from, env.to);
        if (dropped) {
            ++dropped_;
            trace(now_, env, true);
            return;
        }
        pending_.push_back({now_ + config_.delay, std::move(env)});
    }

    void send(NodeId from, NodeId to, Payload payload) { send(Envelope<Payload>{from, to, std::move(payload), now_}); }

    /// Advances one tick and returns the envelopes due by the new time.
    std::vector<Envelope<Payload>> step() {
        ++now_;
        std::vector<Envelope<Payload>> out;
        while (!pending_.empty() && pending_.front().first <= now_) {
            trace(now_, pending_.front().second, false);
            out.push_back(std::move(pending_.front().second));
            pending_.pop_front();
        }
        delivered_ += out.size();
        return out;
    }

    Tick now() const { return now_; }
    Tick delay() const { return config_.delay; }
    bool idle() const { return pending_.empty(); }
    std::size_t sent() const { return sent_; }
    std::size_t delivered() const { return delivered_; }
    std::size_t dropped() const { return dropped_; }

    /// One line per delivery or drop: tick, from, to, kind, dropped flag (tab separated).
    void set_trace(std::ostream* out) { trace_ = out; }

private:
    static void check_probability(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("loss probability must lie in [0, 1]");
    }

    void trace(Tick tick, const Envelope<Payload>& env, bool dropped) {
        if (!trace_) return;
        *trace_ << tick << '\t' << env.from.value << '\t' << env.to.value << '\t' << kind_name(env.payload) << '\t'
                << (dropped ? 1 : 0) << '\n';
    }

    NetConfig config_;
    CounterRng rng_;
    std::set<NodeId> nodes_;
    std::map<std::pair<NodeId, NodeId>, double> link_loss_;
    std::deque<std::pair<Tick, Envelope<Payload>>> pending_;
    Tick now_ = 0;
    std::size_t sent_ = 0;
    std::size_t delivered_ = 0;
    std::size_t dropped_ = 0;
    std::ostream* trace_ = nullptr;
};

}  // namespace cpa
