#include "cpa/consensus.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_map>

#include "cpa/errors.hpp"

namespace cpa {

std::string_view kind_name(const ConsensusMessage& msg) {
    static constexpr std::string_view names[] = {"prepare",  "promise",        "accept_request", "accepted",
                                                 "price_request", "price_proposal", "decided"};
    return names[msg.index()];
}

PrepareResult on_prepare(const AcceptorState& acc, const Prepare& msg) {
    if (acc.promised && msg.pn <= *acc.promised) return {acc, std::nullopt};
    AcceptorState next = acc;
    next.promised = msg.pn;
    return {next, Promise{msg.pn, acc.accepted}};
}

AcceptResult on_accept_request(const AcceptorState& acc, const AcceptRequest& msg) {
    if (acc.promised && msg.pn < *acc.promised) return {acc, std::nullopt};
    AcceptorState next = acc;
    next.promised = msg.pn;
    next.accepted = AcceptedPair{msg.pn, msg.value};
    return {next, Accepted{msg.pn, msg.value}};
}

Money choose_value(const std::map<NodeId, Promise>& promises, std::size_t acceptors, Money own) {
    if (promises.size() < quorum_size(acceptors)) throw ProtocolError("choose_value called without a quorum of promises");
    std::optional<AcceptedPair> best;
    for (const auto& [node, promise] : promises)
        if (promise.highest_accepted && (!best || promise.highest_accepted->pn > best->pn)) best = promise.highest_accepted;
    return best ? best->value : own;
}

Proposer::Proposer(std::uint32_t ordinal, std::size_t acceptors, Money value)
    : ordinal_(ordinal), acceptors_(acceptors), value_(value) {}

Prepare Proposer::start_round(std::uint32_t round) {
    ProposalNumber pn{round, ordinal_};
    if (phase_ != ProposerPhase::idle && pn <= current_) throw ProtocolError("proposal numbers must increase");
    if (phase_ == ProposerPhase::decided) throw ProtocolError("proposer already decided");
    current_ = pn;
    phase_ = ProposerPhase::preparing;
    promises_.clear();
    ++rounds_;
    return Prepare{pn};
}

std::optional<AcceptRequest> Proposer::on_promise(NodeId from, const Promise& promise) {
    if (phase_ != ProposerPhase::preparing || promise.pn != current_) return std::nullopt;
    promises_[from] = promise;
    if (promises_.size() < quorum_size(acceptors_)) return std::nullopt;
    phase_ = ProposerPhase::accepting;
    return AcceptRequest{current_, choose_value(promises_, acceptors_, value_)};
}

std::optional<AcceptedPair> Learner::on_accepted(NodeId from, const Accepted& msg) {
    auto& voters = votes_[msg.pn];
    const bool fresh = voters.insert(from).second;
    if (fresh && voters.size() == quorum_size(acceptors_)) return AcceptedPair{msg.pn, msg.value};
    return std::nullopt;
}

PriceProposalContext::PriceProposalContext(std::vector<Member> members) : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("a sub-coalition needs at least one member");
    for (const auto& m : members_)
        if (m.quantity <= 0) throw DomainError("member quantities must be positive");
    std::stable_sort(members_.begin(), members_.end(), [](const Member& a, const Member& b) { return a.cost < b.cost; });
}

Quantity PriceProposalContext::total_quantity() const {
    return std::accumulate(members_.begin(), members_.end(), Quantity{0},
                           [](Quantity acc, const Member& m) { return acc + m.quantity; });
}

CoalitionValue coalition_value(Money price, const PriceProposalContext& ctx) {
    if (price < ctx.floor()) throw DomainError("price below the coalition's cost floor");
    const Quantity q = ctx.total_quantity();
    if (q == 0) throw DomainError("total quantity is zero");
    Money internal;
    for (const auto& m : ctx.members()) internal += m.cost * m.quantity;
    Money total = price * q - internal;
    return {total, divide_round_half_up(total, q)};
}

PayoffDivision payoff_division(Money price, const PriceProposalContext& ctx) {
    PayoffDivision out;
    out.in_core = true;
    for (const auto& m : ctx.members()) {
        Money r = (price - m.cost) * m.quantity;
        out.in_core = out.in_core && r > Money{};
        out.rewards.push_back(r);
    }
    return out;
}

namespace {

struct Delivery {
    std::size_t from;
    std::size_t to;
    ConsensusMessage msg;
};

}  // namespace

ConsensusOutcome run_price_consensus(const PriceProposalContext& ctx, std::span<const Money> proposals,
                                     std::span<const NodeId> members, SimNet<ConsensusMessage>& net,
                                     const ConsensusOptions& options) {
    const std::size_t n = members.size();
    if (n == 0) throw DomainError("consensus needs at least one member");
    if (proposals.size() != n) throw DomainError("one price proposal per member is required");
    for (Money p : proposals)
        if (p < ctx.floor()) throw DomainError("price proposal " + p.to_string() + " below floor " + ctx.floor().to_string());
    if (options.proposers < 1 || options.proposers > n) throw DomainError("proposer count must lie in [1, members]");
    if (options.max_rounds < 1) throw DomainError("max_rounds must be positive");

    std::unordered_map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        net.add_node(members[i]);
        if (!index.emplace(members[i], i).second) throw DomainError("duplicate member node");
    }

    const std::size_t proposer_count = options.proposers;
    const std::size_t sent_before = net.sent();
    const Tick start = net.now();
    const Tick delay = net.delay();

    ConsensusOutcome out;
    out.learned.assign(n, std::nullopt);
    std::vector<AcceptorState> acceptors(n);
    std::vector<Proposer> proposers;
    std::vector<Learner> learners;
    for (std::size_t i = 0; i < proposer_count; ++i) {
        proposers.emplace_back(static_cast<std::uint32_t>(i), n, proposals[i]);
        learners.emplace_back(n);
    }
    std::vector<bool> announced(proposer_count, false);
    std::vector<Tick> next_start(proposer_count);
    std::vector<Tick> deadline(proposer_count, 0);
    for (std::size_t i = 0; i < proposer_count; ++i) next_start[i] = start + static_cast<Tick>(i);

    std::deque<Delivery> local;
    auto send = [&](std::size_t from, std::size_t to, ConsensusMessage msg) {
        if (from == to) local.push_back({from, to, std::move(msg)});
        else net.send(members[from], members[to], std::move(msg));
    };
    auto broadcast = [&](std::size_t from, const ConsensusMessage& msg, bool include_self) {
        for (std::size_t j = 0; j < n; ++j)
            if (j != from || include_self) send(from, j, msg);
    };

    auto learn = [&](std::size_t who, Money value) {
        if (out.learned[who] && *out.learned[who] != value) out.conflicting_learn = true;
        if (!out.learned[who]) out.learned[who] = value;
        if (who < proposer_count) proposers[who].mark_decided();
    };

    // Leader-side proposal collection.
    std::vector<Money> gathered{proposals[0]};
    bool gathering = options.gather_proposals && n > 1;
    Tick gather_deadline = start + 2 * delay;
    if (gathering) {
        broadcast(0, PriceRequest{ctx.floor()}, false);
        next_start[0] = gather_deadline;
    }
    auto finish_gathering = [&] {
        gathering = false;
        std::sort(gathered.begin(), gathered.end());
        Money median = gathered[(gathered.size() - 1) / 2];
        proposers[0] = Proposer(0, n, median);
        next_start[0] = net.now();
    };

    auto handle = [&](const Delivery& d) {
        const std::size_t to = d.to;
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, Prepare>) {
                    auto r = on_prepare(acceptors[to], m);
                    acceptors[to] = r.state;
                    if (r.reply) send(to, d.from, *r.reply);
                } else if constexpr (std::is_same_v<T, Promise>) {
                    if (to >= proposer_count) return;
                    if (auto req = proposers[to].on_promise(members[d.from], m)) {
                        out.proposed.push_back(req->value);
                        broadcast(to, *req, true);
                    }
                } else if constexpr (std::is_same_v<T, AcceptRequest>) {
                    auto r = on_accept_request(acceptors[to], m);
                    acceptors[to] = r.state;
                    if (r.reply)
                        for (std::size_t l = 0; l < proposer_count; ++l) send(to, l, *r.reply);
                } else if constexpr (std::is_same_v<T, Accepted>) {
                    if (to >= proposer_count) return;
                    if (auto pair = learners[to].on_accepted(members[d.from], m)) {
                        learn(to, pair->value);
                        if (!announced[to]) {
                            announced[to] = true;
                            broadcast(to, Decided{pair->pn, pair->value}, false);
                        }
                    }
                } else if constexpr (std::is_same_v<T, Decided>) {
                    learn(to, m.value);
                } else if constexpr (std::is_same_v<T, PriceRequest>) {
                    send(to, d.from, PriceProposal{proposals[to]});
                } else if constexpr (std::is_same_v<T, PriceProposal>) {
                    if (to == 0 && gathering) {
                        gathered.push_back(m.price);
                        if (gathered.size() == n) finish_gathering();
                    }
                }
            },
            d.msg);
    };
    auto drain = [&] {
        while (!local.empty()) {
            Delivery d = std::move(local.front());
            local.pop_front();
            handle(d);
        }
    };

    // Prepare -> promise -> accept -> accepted takes four hops; stagger by ordinal.
    auto timeout_for = [&](std::size_t i) { return 4 * delay + 1 + static_cast<Tick>(i); };
    const Tick horizon = start + 2 * delay + static_cast<Tick>(options.max_rounds) * (timeout_for(proposer_count) + 1) + 8;

    while (true) {
        if (gathering && net.now() >= gather_deadline) finish_gathering();
        for (std::size_t i = 0; i < proposer_count; ++i) {
            auto& p = proposers[i];
            if (p.phase() == ProposerPhase::decided || (i == 0 && gathering)) continue;
            if (p.phase() != ProposerPhase::idle && net.now() < deadline[i]) continue;
            if (net.now() < next_start[i] || p.rounds_started() >= options.max_rounds) continue;
            broadcast(i, p.start_round(p.rounds_started() + 1), true);
            deadline[i] = net.now() + timeout_for(i);
        }
        drain();

        const bool quiet = net.idle() && local.empty();
        if (quiet && out.learned[0]) break;
        bool exhausted = !gathering;
        for (std::size_t i = 0; i < proposer_count; ++i) {
            const auto& p = proposers[i];
            exhausted = exhausted && (p.phase() == ProposerPhase::decided ||
                                      (p.rounds_started() >= options.max_rounds && net.now() >= deadline[i]));
        }
        if (quiet && exhausted) break;
        if (net.now() > horizon) break;

        for (auto& env : net.step()) {
            handle({index.at(env.from), index.at(env.to), std::move(env.payload)});
            drain();
        }
    }

    out.messages = net.sent() - sent_before;
    out.rounds = proposers[0].rounds_started();
    out.decided = out.learned[0].has_value();
    if (out.decided) out.price = *out.learned[0];
    return out;
}

nlohmann::json decision_record(CoalitionId coalition, const ConsensusOutcome& outcome) {
    nlohmann::json j = {{"coalition_id", coalition.value},
                        {"price", outcome.decided ? nlohmann::json(outcome.price.micros) : nlohmann::json(nullptr)},
                        {"rounds", outcome.rounds},
                        {"messages", outcome.messages},
                        {"decided", outcome.decided}};
    return j;
}

}  // namespace cpa
