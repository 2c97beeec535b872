#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpa/model.hpp"

namespace cpa {

// ---------------------------------------------------------------------------
// Auction instance

/// A coalition's offer of one service over a run of consecutive slots.
struct Offer {
    CoalitionId coalition;
    ServiceId service;
    int start = 0;
    int length = 1;
    Quantity capacity = 0;
    Money ask;

    bool operator==(const Offer&) const = default;
};

/// One service of a client's package request: `quantity` vCPUs in every slot of
/// [start, start + length), at most `cap` per vCPU per slot.
struct ServiceRequest {
    ServiceId service;
    int start = 0;
    int length = 1;
    Quantity quantity = 0;
    Money cap;

    bool covers(int slot) const { return start <= slot && slot < start + length; }
    bool operator==(const ServiceRequest&) const = default;
};

struct ClientRequest {
    ClientId client;
    std::vector<ServiceRequest> services;

    bool operator==(const ClientRequest&) const = default;
};

using ServiceSlot = std::pair<ServiceId, int>;

struct AuctionScenario {
    int kappa = 50;
    Money increment = Money::from_micros(50'000);
    std::vector<Offer> offers;
    std::vector<ClientRequest> clients;
    /// Clients taking part in each (service, slot) clock market. When absent,
    /// every client requesting the service in that slot takes part.
    std::optional<std::map<ServiceSlot, std::vector<ClientId>>> clock_bidders;

    bool operator==(const AuctionScenario&) const = default;
};

struct AuctionOptions {
    /// Count every supplier's capacity at every clock price instead of only
    /// suppliers whose ask the price has reached.
    bool literal_capacity_eq = false;
    FinalRoundObjective objective = FinalRoundObjective::coverage_first;
    /// Fraction of overbid revenue reported as a penalty; never charged.
    double overbid_penalty_rate = 0.0;
};

/// Per-slot view of the offers, one bundle per (coalition, slot).
std::vector<AdvertisedBundle> advertise(std::span<const Offer> offers);

/// Per-slot view of a client's request.
std::vector<ReservationBundle> reservation_bundles(const ClientRequest& request);

std::vector<std::string> validate(const AuctionScenario& scenario);

// ---------------------------------------------------------------------------
// Clock phase

struct ClockDemand {
    ClientId client;
    Quantity quantity = 0;
    Money cap;
};

struct ClockSupply {
    CoalitionId coalition;
    Quantity quantity = 0;
    Money ask;
};

struct ClockState {
    ServiceId service;
    int slot = 0;
    Money current_price;
    std::vector<ClockDemand> active_demands;
    std::vector<ClockSupply> supplies;
};

struct ClockCommitment {
    ClientId client;
    ServiceId service;
    int slot = 0;
    Quantity quantity = 0;
    Money committed_price;

    bool operator==(const ClockCommitment&) const = default;
};

/// Lowest ask among the suppliers. Throws NoMarketError when there are none.
Money starting_price(std::span<const ClockSupply> supplies);

struct ClockAggregates {
    Quantity capacity = 0;
    Quantity demand = 0;
};

/// Capacity offered at the current price (suppliers with ask <= price, or all of
/// them when `literal`) and demand of the clients whose cap the price has not passed.
ClockAggregates clock_aggregates(const ClockState& state, bool literal = false);

struct ClockTick {
    Money price;
    Quantity capacity = 0;
    Quantity demand = 0;
};

struct ClockMarketResult {
    std::vector<ClockCommitment> commitments;
    std::vector<ClockTick> ticks;
};

/// One (service, slot) market: starts at the lowest ask and raises the price by
/// `increment` while demand exceeds capacity, dropping clients whose cap is
/// passed. Every client still active at the end commits at the final price.
ClockMarketResult run_clock_market(ServiceId service, int slot, std::vector<ClockDemand> demands,
                                   std::vector<ClockSupply> supplies, Money increment, bool literal = false);

struct AuctionTrace;

/// Every (service, slot) market of the scenario, merged in (service, slot) order.
std::vector<ClockCommitment> run_clock_phase(const AuctionScenario& scenario, const AuctionOptions& options = {},
                                             AuctionTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Proxy phase

struct RunOffer {
    CoalitionId coalition;
    ServiceId service;
    int start = 0;
    int length = 1;
    Quantity capacity = 0;
    Money ask;

    int end() const { return start + length; }
    bool operator==(const RunOffer&) const = default;
};

/// Maximal runs of consecutive slots with identical quantity and ask, per
/// (coalition, service); sorted by length descending, then (service, start, coalition).
std::vector<RunOffer> build_runs(std::span<const AdvertisedBundle> bundles);

/// A client's bid for one run.
struct RunBid {
    ClientId client;
    int requested_length = 1;
    Quantity quantity = 0;
    Money price_per_slot;

    Money revenue() const { return price_per_slot * quantity * requested_length; }
};

/// Index of the best matching bid: the run has the requested length or one slot
/// more, its capacity covers the quantity, and the price reaches the ask. Among
/// those, the largest revenue wins; ties go to the smaller client id.
std::optional<std::size_t> match_run(const RunOffer& run, std::span<const RunBid> bids);

/// The `round`-th lowest of the committed prices (1-based), clamped to the highest.
/// Throws ProtocolError when there are none.
Money run_price(std::span<const Money> committed_prices, int round);

/// Same, over the client's commitments that fall on the run's service and slots.
Money run_price(const RunOffer& run, std::span<const ClockCommitment> commitments, ClientId client, int round);

struct ProvisionalWin {
    std::size_t id = 0;
    ClientId client;
    RunOffer run;
    /// Slots the client reserves: [slot_start, slot_start + length) inside the run.
    int slot_start = 0;
    int length = 1;
    Quantity quantity = 0;
    Money price_per_slot;
    int round = 1;

    Money revenue() const { return price_per_slot * quantity * length; }
    bool operator==(const ProvisionalWin&) const = default;
};

struct PreliminaryResult {
    std::vector<ProvisionalWin> wins;
    /// Runs that ended the preliminary rounds without a winner.
    std::vector<RunOffer> residual;
    /// Lengths of the runs in the order they were auctioned.
    std::vector<int> auctioned_lengths;
};

/// Runs are auctioned longest first. A matched run becomes a provisional win and
/// the coalition's remaining runs of that service leave the auction; an
/// unmatched run longer than one slot is split into its prefix and its last
/// slot, and both re-enter. The round index of a run is the longest initial run
/// of its service minus its length, plus one.
PreliminaryResult preliminary_rounds(std::span<const RunOffer> runs, std::span<const ClientRequest> requests,
                                     std::span<const ClockCommitment> commitments, AuctionTrace* trace = nullptr);

struct ClientPackage {
    ClientId client;
    std::vector<std::size_t> wins;  // ids, ascending
    Money cost;
    /// Requested (service, slot) cells covered by the package.
    int covered = 0;

    bool operator==(const ClientPackage&) const = default;
};

struct AuctionOutcome {
    std::vector<RunOffer> offered;
    std::vector<ProvisionalWin> wins;
    std::vector<ClientPackage> packages;  // clients with a non-empty package, by client id
    std::vector<std::size_t> overbid;     // ids of wins left out of every package
    std::vector<ClientId> unsatisfied;    // clients with an empty package
    Money overbid_penalty;

    bool operator==(const AuctionOutcome&) const = default;
};

/// Picks each client's package among its provisional wins. Per requested
/// service, the chosen wins are pairwise slot-disjoint and maximize (covered
/// requested cells, revenue) or (revenue, covered) for revenue_first; ties go
/// to the lexicographically smallest id set.
AuctionOutcome final_round(std::span<const ProvisionalWin> wins, std::span<const ClientRequest> requests,
                           std::span<const RunOffer> offered, const AuctionOptions& options = {},
                           AuctionTrace* trace = nullptr);

struct SpotCapacity {
    CoalitionId coalition;
    ServiceId service;
    Quantity quantity = 0;
    Money ask;

    bool operator==(const SpotCapacity&) const = default;
};

/// Offered minus sold capacity in `slot`, per (coalition, service), at the ask.
std::vector<SpotCapacity> spot_pool(const AuctionOutcome& outcome, int slot);

/// Quantity sold per (coalition, service, slot) by the packaged wins.
std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> sold_capacity(const AuctionOutcome& outcome);

/// The whole stage B pipeline.
AuctionOutcome run_auction(const AuctionScenario& scenario, const AuctionOptions& options = {},
                           AuctionTrace* trace = nullptr);

/// JSON-lines record of an auction: clock ticks, provisional wins, final selections.
struct AuctionTrace {
    static constexpr int kSchemaVersion = 1;
    std::vector<nlohmann::json> records;

    void add(nlohmann::json record);
    std::string to_jsonl() const;
};

void to_json(nlohmann::json& j, const Offer& o);
void from_json(const nlohmann::json& j, Offer& o);
void to_json(nlohmann::json& j, const ServiceRequest& r);
void from_json(const nlohmann::json& j, ServiceRequest& r);
void to_json(nlohmann::json& j, const ClientRequest& r);
void from_json(const nlohmann::json& j, ClientRequest& r);
void to_json(nlohmann::json& j, const AuctionScenario& s);
void from_json(const nlohmann::json& j, AuctionScenario& s);
void to_json(nlohmann::json& j, const RunOffer& r);
void from_json(const nlohmann::json& j, RunOffer& r);
void to_json(nlohmann::json& j, const ClockCommitment& c);
void from_json(const nlohmann::json& j, ClockCommitment& c);
void to_json(nlohmann::json& j, const ProvisionalWin& w);
void from_json(const nlohmann::json& j, ProvisionalWin& w);
void to_json(nlohmann::json& j, const ClientPackage& p);
void from_json(const nlohmann::json& j, ClientPackage& p);
void to_json(nlohmann::json& j, const AuctionOutcome& o);
void from_json(const nlohmann::json& j, AuctionOutcome& o);

}  // namespace cpa
