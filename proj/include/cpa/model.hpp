#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpa/ids.hpp"
#include "cpa/money.hpp"

namespace cpa {

/// Ordinal of an allocation slot within an auction window of kappa slots.
struct SlotIndex {
    int value = 0;

    constexpr auto operator<=>(const SlotIndex&) const = default;
};

/// A service described by (attribute, value) pairs; attribute 0 is conventionally
/// the coalition size / vCPU count.
struct ServiceType {
    ServiceId service;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> attributes;

    bool operator==(const ServiceType&) const = default;
};

/// What a server reports to its rack leader before coalition formation.
struct Server {
    ServerId server_id;
    RackId rack_id;
    bool available = true;
    /// size k -> total value earned in successful coalitions of k servers.
    std::map<int, Money> value_history;
    /// size k -> one bit per slot of the history window.
    std::map<int, std::vector<bool>> participation;

    bool operator==(const Server&) const = default;
};

struct ServiceDemand {
    ServiceId service;
    Quantity quantity = 0;

    bool operator==(const ServiceDemand&) const = default;
};

/// Services one client wants in one slot.
struct ReservationBundle {
    ClientId client;
    SlotIndex slot;
    std::vector<ServiceDemand> demands;

    bool operator==(const ReservationBundle&) const = default;
};

struct ServiceOffer {
    ServiceId service;
    Quantity quantity = 0;
    Money ask;

    bool operator==(const ServiceOffer&) const = default;
};

/// Services one coalition offers in one slot, at its consensus price.
struct AdvertisedBundle {
    CoalitionId coalition;
    SlotIndex slot;
    std::vector<ServiceOffer> offers;

    bool operator==(const AdvertisedBundle&) const = default;
};

/// A client's reservations across slots.
struct Package {
    ClientId client;
    std::vector<ReservationBundle> parts;

    bool operator==(const Package&) const = default;
};

template <class T>
struct Interval {
    T lo{};
    T hi{};

    bool operator==(const Interval&) const = default;
    bool contains(const T& x) const { return lo <= x && x <= hi; }
};

using IntRange = Interval<std::int64_t>;
using MoneyRange = Interval<Money>;

enum class FinalRoundObjective { coverage_first, revenue_first };

/// Everything needed to sample and run a scenario. Defaults reproduce the
/// evaluation setting (kappa = 50, n and m in [200, 250], ...).
struct ScenarioConfig {
    IntRange coalitions{200, 250};
    IntRange clients{200, 250};
    IntRange services{10, 20};
    IntRange bidders_per_service_slot{0, 4};
    IntRange capacity{60, 90};
    IntRange services_per_coalition{1, 1};
    IntRange offered_run_length{1, 50};
    IntRange services_per_package{1, 3};
    IntRange requested_run_length{1, 50};
    int kappa = 50;
    Money price_increment = Money::from_micros(50'000);
    MoneyRange price_cap{Money::from_units(2), Money::from_units(6)};
    int history_window = 20;
    std::uint64_t seed = 1;

    // Parameters the evaluation leaves open.
    IntRange request_quantity{40, 90};
    MoneyRange server_cost{Money::from_units(2), Money::from_micros(2'200'000)};
    MoneyRange markup{Money::from_micros(10'000), Money::from_micros(200'000)};
    int rack_size = 48;
    Quantity server_capacity = 100;
    double availability = 0.8;
    int bootstrap_coalition_size = 4;
    int consensus_max_rounds = 8;
    double loss = 0.0;
    bool literal_capacity_eq = false;
    FinalRoundObjective final_round_objective = FinalRoundObjective::coverage_first;
    double overbid_penalty_rate = 0.0;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Returns the violated invariants; empty means the config is usable.
std::vector<std::string> validate_scenario(const ScenarioConfig& config);

// Per-type invariant checks; each returns the list of violations.
std::vector<std::string> validate(const ServiceType& s);
std::vector<std::string> validate(const SlotIndex& s, int kappa);
std::vector<std::string> validate(const Server& s, int window);
std::vector<std::string> validate(const ReservationBundle& b, int kappa);
std::vector<std::string> validate(const AdvertisedBundle& b, int kappa);
std::vector<std::string> validate(const Package& p, int kappa);

/// Parses a config document. Unknown keys and malformed intervals throw FormatError.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::string& path);

void to_json(nlohmann::json& j, const Money& m);
void from_json(const nlohmann::json& j, Money& m);
void to_json(nlohmann::json& j, const SlotIndex& s);
void from_json(const nlohmann::json& j, SlotIndex& s);
void to_json(nlohmann::json& j, const ServiceType& s);
void from_json(const nlohmann::json& j, ServiceType& s);
void to_json(nlohmann::json& j, const Server& s);
void from_json(const nlohmann::json& j, Server& s);
void to_json(nlohmann::json& j, const ServiceDemand& d);
void from_json(const nlohmann::json& j, ServiceDemand& d);
void to_json(nlohmann::json& j, const ReservationBundle& b);
void from_json(const nlohmann::json& j, ReservationBundle& b);
void to_json(nlohmann::json& j, const ServiceOffer& o);
void from_json(const nlohmann::json& j, ServiceOffer& o);
void to_json(nlohmann::json& j, const AdvertisedBundle& b);
void from_json(const nlohmann::json& j, AdvertisedBundle& b);
void to_json(nlohmann::json& j, const Package& p);
void from_json(const nlohmann::json& j, Package& p);
void to_json(nlohmann::json& j, const ScenarioConfig& c);
void from_json(const nlohmann::json& j, ScenarioConfig& c);

template <class Tag>
void to_json(nlohmann::json& j, const Id<Tag>& id) { j = id.value; }
template <class Tag>
void from_json(const nlohmann::json& j, Id<Tag>& id) { id.value = j.get<std::uint32_t>(); }

}  // namespace cpa
