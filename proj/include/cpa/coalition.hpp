#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "cpa/model.hpp"

namespace cpa {

using BigInt = boost::multiprecision::cpp_int;

/// Number of ways to partition n agents into k non-empty coalitions.
/// Throws DomainError when k > n or either argument is negative.
BigInt stirling_second_kind(int n, int k);

/// Number of coalition structures over n agents; bell_number(0) == 1.
BigInt bell_number(int n);

/// One line of the PCS list: `multiplicity` coalitions of `size` servers were
/// successful in the history window, worth `avg_value` on average.
struct PcsEntry {
    int size = 0;
    int multiplicity = 0;
    Money avg_value;

    int servers() const { return size * multiplicity; }
    bool operator==(const PcsEntry&) const = default;
};

struct CoalitionStructure {
    /// Indices into the PCS list the structure was drawn from, ascending.
    std::vector<std::size_t> selected;
    /// Copies of the selected entries, in the same order.
    std::vector<PcsEntry> entries;
    Money total_value;
    int server_count = 0;
    /// True for the predetermined structure used without (usable) history.
    bool bootstrap = false;

    bool operator==(const CoalitionStructure&) const = default;
};

struct FeasibleStructures {
    std::vector<CoalitionStructure> structures;
    bool truncated = false;
};

struct HistoryAggregate {
    int available = 0;
    std::vector<PcsEntry> pcs;
};

struct Coalition {
    int size = 0;
    std::vector<ServerId> members;
    ServerId leader;

    bool operator==(const Coalition&) const = default;
};

struct CoalitionAssignment {
    std::vector<Coalition> coalitions;
};

/// Rack-leader aggregation of the servers' reports.
///
/// Only available servers contribute. For each size k the participation bits are
/// summed and divided by k, giving the number of successful size-k coalition
/// occurrences; avg_value is the summed value divided by that count (round half
/// up). Entries with zero multiplicity or zero value, and sizes larger than the
/// number of available servers, are dropped. The result is sorted by (size,
/// multiplicity). Throws FormatError when bit vectors differ in length.
HistoryAggregate aggregate_history(std::span<const Server> reports);

/// Every subset of entries (each taken whole) whose server counts sum exactly to
/// `available`, in lexicographic order of index sets. Stops after `cap`
/// structures and sets `truncated` if more exist.
FeasibleStructures enumerate_feasible(std::span<const PcsEntry> pcs, int available, std::size_t cap);

/// The feasible structure of maximum total value; ties go to the lexicographically
/// smallest index set. Exact DP over (list position, servers still uncovered).
/// Throws InfeasibleError when nothing covers `available` exactly.
CoalitionStructure optimal_structure(std::span<const PcsEntry> pcs, int available);

/// Equal coalitions of `coalition_size`, the remainder as singletons.
CoalitionStructure bootstrap_structure(int available, int coalition_size);

/// Fills coalitions with the available servers and elects leaders.
///
/// Coalitions are filled entry by entry in descending avg_value (list order on
/// ties); each coalition of size k takes the k remaining servers with the largest
/// value_history[k], smaller server id first on ties. The leader of a coalition
/// is the member with the largest total value over all sizes, smaller id on ties.
/// Throws InvariantError when the structure does not cover the available servers.
CoalitionAssignment assign_and_elect(const CoalitionStructure& structure, std::span<const Server> servers);

/// Total value over all sizes, the leader-election score.
Money total_value(const Server& s);

void to_json(nlohmann::json& j, const PcsEntry& e);
void from_json(const nlohmann::json& j, PcsEntry& e);
void to_json(nlohmann::json& j, const CoalitionStructure& s);
void to_json(nlohmann::json& j, const Coalition& c);

}  // namespace cpa
