#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cpa/auction.hpp"
#include "cpa/coalition.hpp"
#include "cpa/consensus.hpp"
#include "cpa/metrics.hpp"
#include "cpa/model.hpp"
#include "cpa/rng.hpp"

namespace cpa {

/// Draws one auction window: offers (coalition ids 0..n-1, asks left at zero
/// for price consensus to fill in), client requests and clock-market bidders.
AuctionScenario sample_scenario(const ScenarioConfig& config, CounterRng& rng);

/// Auction options implied by a config.
AuctionOptions auction_options(const ScenarioConfig& config);

struct WindowRecord {
    int window = 0;
    /// One structure per rack that contributed coalitions, in rack order.
    std::vector<CoalitionStructure> structures;
    std::vector<nlohmann::json> decisions;
    AuctionScenario scenario;
    AuctionOutcome outcome;
    MetricsReport metrics;

    bool operator==(const WindowRecord&) const = default;
};

struct RunRecord {
    std::size_t batch = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    /// FNV-1a of the canonical JSON of every window's auction scenario, as hex.
    std::string digest;
    std::vector<WindowRecord> windows;
    /// Coalitions that could not agree on a price and sat the window out.
    std::vector<std::string> log;
    /// Auction trace as JSON lines, filled only when tracing.
    std::string trace_jsonl;

    bool operator==(const RunRecord&) const = default;
};

/// Seed of run (batch, run) under a master seed.
std::uint64_t run_seed(std::uint64_t master, std::size_t batch, std::size_t run);

/// Runs `windows` consecutive auction windows with coalition-history feedback.
///
/// Window 1 (and every rack without usable history) uses the bootstrap
/// structure. Later windows aggregate the servers' history, pick the optimal
/// structure, assign servers and elect leaders. Each coalition agrees on its ask
/// by price consensus; coalitions that time out do not offer. After the auction,
/// every packaged win's revenue is credited equally to the members of the selling
/// coalition. Throws InvariantError if an outcome breaks capacity conservation.
RunRecord run_two_stage(const ScenarioConfig& config, std::uint64_t seed, int windows, bool trace = false);

std::string scenario_digest(const std::vector<AuctionScenario>& scenarios);

struct BatchOptions {
    int windows = 1;
    /// 0 picks the hardware concurrency.
    unsigned threads = 0;
    bool trace = false;
    /// Called once per finished run, possibly from several threads at once.
    std::function<void(const RunRecord&)> on_record;
};

struct BatchResult {
    /// reports[b][r][w]: metrics of window w of run r of batch b.
    std::vector<std::vector<std::vector<MetricsReport>>> reports;
    /// Statistics over the last window of every run.
    BatchStats stats;
};

/// B x R independent runs seeded from config.seed; results are gathered by
/// (batch, run), so the thread count never changes them.
BatchResult run_batches(const ScenarioConfig& config, std::size_t batches, std::size_t runs, const BatchOptions& options);

/// batch,run,window,slot followed by the per-slot indices; absent values as empty cells.
void write_per_slot_csv(std::ostream& out, const BatchResult& result);

nlohmann::json record_json(const RunRecord& record, bool full);

}  // namespace cpa
