#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpa/auction.hpp"

namespace cpa {

/// Effectiveness indices of one auction. Per-slot vectors have kappa entries;
/// an entry is absent when its denominator is zero.
struct MetricsReport {
    std::vector<std::optional<double>> customer_satisfaction;
    std::vector<std::optional<double>> service_mismatch;
    std::vector<std::optional<double>> service_success;
    std::vector<std::optional<double>> capacity_allocation;
    std::vector<std::optional<double>> temporal_fragmentation;
    std::vector<std::optional<double>> spot_opportunity;
    std::optional<double> overbidding_factor;
    std::optional<double> additional_profit;

    bool operator==(const MetricsReport&) const = default;
};

/// Names of the per-slot indices, in column order.
const std::vector<std::string>& per_slot_metric_names();
/// Names of the per-auction indices, in column order.
const std::vector<std::string>& scalar_metric_names();

const std::vector<std::optional<double>>& per_slot_values(const MetricsReport& r, const std::string& name);
std::optional<double> scalar_value(const MetricsReport& r, const std::string& name);

/// Per slot j:
///  customer_satisfaction  clients requesting something in j with at least one
///                         requested (service, j) cell in their package / clients requesting in j
///  service_mismatch       service types requested in j but not offered in j / types requested in j
///  service_success        service types offered in j with a sale in j / types offered in j
///  capacity_allocation    1 - sold vCPUs in j / offered vCPUs in j
///  temporal_fragmentation (client, service) sales covering j whose sold slots are not
///                         one consecutive block / sales covering j
///  spot_opportunity       (coalition, service) offers in j with unsold capacity / offers in j
/// Per auction:
///  overbidding_factor     offered (coalition, service, slot) cells held by a provisional
///                         win that no package kept / offered cells
///  additional_profit      sum of (price - ask) * quantity * slots / sum of ask * quantity * slots
///                         over packaged wins
MetricsReport compute_indices(const AuctionOutcome& outcome, const AuctionScenario& scenario);

struct MetricSummary {
    double mean = 0.0;
    /// Half-width of the 95% Student-t interval over the batch means.
    double half_width = 0.0;
    /// Batches that contributed a mean.
    std::size_t batches = 0;

    bool operator==(const MetricSummary&) const = default;
};

/// Mean and 95% half-width of a sample of batch means. Throws
/// InsufficientDataError with fewer than two values.
MetricSummary t_interval(std::span<const double> batch_means);

/// Run-level value of a per-slot index: the mean over the slots where it is present.
std::optional<double> slot_average(const std::vector<std::optional<double>>& values);

struct BatchStats {
    std::size_t batches = 0;
    std::size_t runs_per_batch = 0;
    /// Per metric (per-slot indices averaged over slots first); absent when fewer
    /// than two batches have a value.
    std::map<std::string, std::optional<MetricSummary>> overall;
    /// Per per-slot metric and slot.
    std::map<std::string, std::vector<std::optional<MetricSummary>>> per_slot;
};

/// `reports[b][r]` is run r of batch b. Each batch mean averages the runs where
/// the value is present; batches without any value are left out. Throws
/// InsufficientDataError when B < 2 and DomainError on ragged input.
BatchStats batch_statistics(const std::vector<std::vector<MetricsReport>>& reports);

/// metric,mean,half_width,batches,runs_per_batch; absent values as empty cells.
void write_summary_csv(std::ostream& out, const BatchStats& stats);

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

}  // namespace cpa
