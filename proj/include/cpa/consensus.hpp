#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpa/ids.hpp"
#include "cpa/money.hpp"
#include "cpa/simnet.hpp"

namespace cpa {

/// Globally unique without coordination: (round, proposer ordinal), ordered lexicographically.
struct ProposalNumber {
    std::uint32_t round = 0;
    std::uint32_t node = 0;

    constexpr auto operator<=>(const ProposalNumber&) const = default;
};

struct AcceptedPair {
    ProposalNumber pn;
    Money value;

    bool operator==(const AcceptedPair&) const = default;
};

struct Prepare {
    ProposalNumber pn;
};

struct Promise {
    ProposalNumber pn;
    std::optional<AcceptedPair> highest_accepted;

    bool operator==(const Promise&) const = default;
};

struct AcceptRequest {
    ProposalNumber pn;
    Money value;
};

struct Accepted {
    ProposalNumber pn;
    Money value;

    bool operator==(const Accepted&) const = default;
};

// Price negotiation around the Paxos core: the leader announces the cost floor
// and collects proposals, and a proposer that learns a value announces it.
struct PriceRequest {
    Money floor;
};

struct PriceProposal {
    Money price;
};

struct Decided {
    ProposalNumber pn;
    Money value;
};

using PaxosMessage = std::variant<Prepare, Promise, AcceptRequest, Accepted>;
using ConsensusMessage = std::variant<Prepare, Promise, AcceptRequest, Accepted, PriceRequest, PriceProposal, Decided>;

std::string_view kind_name(const ConsensusMessage& msg);

/// What an acceptor must keep across crashes.
struct AcceptorState {
    std::optional<ProposalNumber> promised;
    std::optional<AcceptedPair> accepted;

    bool operator==(const AcceptorState&) const = default;
};

struct PrepareResult {
    AcceptorState state;
    std::optional<Promise> reply;
};

struct AcceptResult {
    AcceptorState state;
    std::optional<Accepted> reply;
};

/// Promise iff the request outranks every prepare answered so far; otherwise stay silent.
PrepareResult on_prepare(const AcceptorState& acc, const Prepare& msg);

/// Accept iff pn >= the promised number (or nothing was promised).
AcceptResult on_accept_request(const AcceptorState& acc, const AcceptRequest& msg);

inline std::size_t quorum_size(std::size_t acceptors) { return acceptors / 2 + 1; }

/// Value for the accept request: the value of the highest-numbered accepted
/// pair reported in the promises, else `own`. Throws ProtocolError without a quorum.
Money choose_value(const std::map<NodeId, Promise>& promises, std::size_t acceptors, Money own);

enum class ProposerPhase { idle, preparing, accepting, decided };

/// One proposer's view of its current round. The phase only moves forward within
/// a round; `start_round` with a strictly higher number opens a fresh one.
class Proposer {
public:
    Proposer(std::uint32_t ordinal, std::size_t acceptors, Money value);

    Prepare start_round(std::uint32_t round);
    /// Returns the accept request once a quorum of promises for the current round is in.
    std::optional<AcceptRequest> on_promise(NodeId from, const Promise& promise);
    void mark_decided() { phase_ = ProposerPhase::decided; }

    ProposerPhase phase() const { return phase_; }
    ProposalNumber current() const { return current_; }
    Money value() const { return value_; }
    std::uint32_t rounds_started() const { return rounds_; }

private:
    std::uint32_t ordinal_;
    std::size_t acceptors_;
    Money value_;
    ProposalNumber current_{};
    ProposerPhase phase_ = ProposerPhase::idle;
    std::map<NodeId, Promise> promises_;
    std::uint32_t rounds_ = 0;
};

/// Counts Accepted messages per proposal number; learns on a quorum.
class Learner {
public:
    explicit Learner(std::size_t acceptors) : acceptors_(acceptors) {}

    std::optional<AcceptedPair> on_accepted(NodeId from, const Accepted& msg);

private:
    std::size_t acceptors_;
    std::map<ProposalNumber, std::set<NodeId>> votes_;
};

/// Member quantities and internal costs of one sub-coalition, sorted by cost.
class PriceProposalContext {
public:
    struct Member {
        Quantity quantity;
        Money cost;
    };

    /// Sorts by cost ascending; throws DomainError on empty input or non-positive quantities.
    explicit PriceProposalContext(std::vector<Member> members);

    std::span<const Member> members() const { return members_; }
    Money floor() const { return members_.back().cost; }
    Quantity total_quantity() const;

private:
    std::vector<Member> members_;
};

struct CoalitionValue {
    Money total;     // V_k
    Money per_unit;  // v_k, rounded half up to the micro grid
};

/// Coalition value and value per unit of service at price p. Throws DomainError
/// when p is below the floor or the total quantity is zero.
CoalitionValue coalition_value(Money price, const PriceProposalContext& ctx);

struct PayoffDivision {
    std::vector<Money> rewards;  // in cost order
    bool in_core = false;        // every reward strictly positive
};

PayoffDivision payoff_division(Money price, const PriceProposalContext& ctx);

struct ConsensusOptions {
    /// Members 0..proposers-1 compete; member 0 is the distinguished leader.
    std::size_t proposers = 1;
    std::uint32_t max_rounds = 8;
    /// Leader announces the floor and collects member proposals before Paxos.
    bool gather_proposals = true;
};

struct ConsensusOutcome {
    bool decided = false;
    Money price;
    std::size_t messages = 0;
    std::uint32_t rounds = 0;
    /// Value learned by each member (same order as `members`), if any.
    std::vector<std::optional<Money>> learned;
    /// Values put into accept requests by any proposer.
    std::vector<Money> proposed;
    /// Set when some member learned two different values.
    bool conflicting_learn = false;
};

/// Runs one single-decree instance among `members` over `net`.
///
/// `proposals[i]` is member i's price; proposals below ctx.floor() are rejected
/// with DomainError before anything is sent. The leader proposes the lower median
/// of the proposals it collected, other proposers their own price. A proposer
/// that has not learned a value after its round timeout retries with round+1, up
/// to max_rounds. The outcome is decided iff the leader learned a value.
ConsensusOutcome run_price_consensus(const PriceProposalContext& ctx, std::span<const Money> proposals,
                                     std::span<const NodeId> members, SimNet<ConsensusMessage>& net,
                                     const ConsensusOptions& options = {});

/// Decision record: {coalition_id, price, rounds, messages, decided}.
nlohmann::json decision_record(CoalitionId coalition, const ConsensusOutcome& outcome);

}  // namespace cpa
