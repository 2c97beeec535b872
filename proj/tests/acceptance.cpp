// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "cpa/coalition.hpp"
#include "cpa/consensus.hpp"
#include "cpa/errors.hpp"
#include "cpa/harness.hpp"

using namespace cpa;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(int number, const std::string& title, double limit_seconds, const std::function<Verdict()>& body) {
    auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit_seconds > 0 && secs > limit_seconds) {
        v.pass = false;
        v.detail += " (time limit exceeded)";
    }
    if (!v.pass) ++failures;
    std::printf("%s criterion %d: %s [%.2f s] %s\n", v.pass ? "PASS" : "FAIL", number, title.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

Verdict combinatorics() {
    const std::vector<std::pair<int, std::vector<int>>> rows = {
        {4, {1, 7, 6, 1}}, {5, {1, 15, 25, 10, 1}}, {6, {1, 31, 90, 65, 15, 1}}};
    for (const auto& [n, expected] : rows)
        for (int k = 1; k <= n; ++k)
            if (stirling_second_kind(n, k) != expected[static_cast<std::size_t>(k - 1)])
                return {false, "S(" + std::to_string(n) + "," + std::to_string(k) + ") mismatch"};
    const std::string digits = stirling_second_kind(40, 14).str();
    const std::string quoted = "35859872255621803491428554";
    if (digits.size() != 35 || digits.compare(0, quoted.size(), quoted) != 0) {
        std::size_t agree = 0;
        while (agree < quoted.size() && digits[agree] == quoted[agree]) ++agree;
        return {false, "S(40,14) = " + digits + " agrees with the quoted 3.5859872255621803491428554E+34 on " +
                           std::to_string(agree) + " of " + std::to_string(quoted.size()) + " digits"};
    }
    return {true, "S(40,14) = " + digits};
}

Verdict structure_oracle() {
    auto rng = CounterRng::stream(2, {CounterRng::tag("acceptance"), CounterRng::tag("structures")});
    int mismatches = 0, feasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<PcsEntry> pcs;
        const auto entries = rng.uniform_int(1, 12);
        for (std::int64_t i = 0; i < entries; ++i)
            pcs.push_back({static_cast<int>(rng.uniform_int(1, 8)), static_cast<int>(rng.uniform_int(1, 4)),
                           Money::from_micros(rng.uniform_int(1, 50) * 10'000'000)});
        int available = 0;
        if (rng.bernoulli(0.7)) {
            for (const auto& e : pcs)
                if (rng.bernoulli(0.5) && available + e.servers() <= 48) available += e.servers();
        } else {
            available = static_cast<int>(rng.uniform_int(1, 48));
        }

        auto all = enumerate_feasible(pcs, available, 1u << 20);
        std::optional<CoalitionStructure> best;
        for (const auto& s : all.structures)
            if (!best || s.total_value > best->total_value) best = s;
        std::optional<CoalitionStructure> got;
        try {
            got = optimal_structure(pcs, available);
        } catch (const InfeasibleError&) {
        }
        if (best) ++feasible;
        if (all.truncated || best.has_value() != got.has_value() ||
            (best && (best->selected != got->selected || best->total_value != got->total_value)))
            ++mismatches;
    }

    // Worked example: singletons {g} worth 751 beat the triple {a,c,d} worth 615.
    std::vector<PcsEntry> example{{3, 1, Money::from_units(615)}, {1, 1, Money::from_units(751)}};
    auto pick = optimal_structure(example, 1);
    const bool example_ok = pick.selected == std::vector<std::size_t>{1} && pick.total_value == Money::from_units(751) &&
                            optimal_structure(example, 3).total_value == Money::from_units(615);

    return {mismatches == 0 && example_ok, std::to_string(mismatches) + " mismatches over 500 lists (" +
                                               std::to_string(feasible) + " feasible); worked example " +
                                               (example_ok ? "ok" : "wrong")};
}

Verdict paxos_safety() {
    const double losses[] = {0.0, 0.1, 0.3, 0.5};
    int agreement = 0, validity = 0, bound_checked = 0, bound_violations = 0, decided = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        auto rng = CounterRng::stream(seed, {CounterRng::tag("acceptance"), CounterRng::tag("paxos")});
        const auto n = static_cast<std::size_t>(rng.uniform_int(3, 9));
        const auto proposers = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const double loss = losses[seed % 4];
        std::vector<PriceProposalContext::Member> members;
        std::vector<NodeId> nodes;
        for (std::size_t i = 0; i < n; ++i) {
            members.push_back({rng.uniform_int(1, 30), Money::from_micros(rng.uniform_int(1'000'000, 2'000'000))});
            nodes.push_back(NodeId{static_cast<std::uint32_t>(i)});
        }
        PriceProposalContext ctx(members);
        std::vector<Money> proposals;
        for (std::size_t i = 0; i < n; ++i) proposals.push_back(ctx.floor() + Money::from_micros(rng.uniform_int(0, 1'000'000)));

        SimNet<ConsensusMessage> net({loss, 1, rng.next()});
        ConsensusOptions opt;
        opt.proposers = proposers;
        auto out = run_price_consensus(ctx, proposals, nodes, net, opt);

        std::set<Money> learned;
        for (const auto& l : out.learned)
            if (l) learned.insert(*l);
        if (out.conflicting_learn || learned.size() > 1 || (out.decided && *learned.begin() != out.price)) ++agreement;
        for (Money v : learned)
            if (std::find(proposals.begin(), proposals.end(), v) == proposals.end()) ++validity;
        decided += out.decided;
        if (loss == 0.0 && proposers == 1) {
            ++bound_checked;
            if (!out.decided || out.messages > 8 * (n - 1)) ++bound_violations;
        }
    }
    return {agreement == 0 && validity == 0 && bound_violations == 0 && bound_checked > 0,
            std::to_string(agreement) + " agreement / " + std::to_string(validity) + " validity violations; " +
                std::to_string(bound_violations) + " of " + std::to_string(bound_checked) +
                " failure-free runs over the message bound; " + std::to_string(decided) + "/1000 decided"};
}

Verdict payoff_algebra() {
    auto rng = CounterRng::stream(4, {CounterRng::tag("acceptance"), CounterRng::tag("payoff")});
    int failures_here = 0;
    for (int trial = 0; trial < 10'000; ++trial) {
        std::vector<PriceProposalContext::Member> members;
        for (std::int64_t i = 0, n = rng.uniform_int(1, 10); i < n; ++i)
            members.push_back({rng.uniform_int(1, 100), Money::from_micros(rng.uniform_int(0, 5'000'000))});
        PriceProposalContext ctx(members);
        const Money p = ctx.floor() + Money::from_micros(rng.bernoulli(0.1) ? 0 : rng.uniform_int(1, 5'000'000));
        auto div = payoff_division(p, ctx);
        Money sum;
        bool positive = true;
        for (Money r : div.rewards) {
            sum += r;
            positive = positive && r > Money{};
        }
        if (sum != coalition_value(p, ctx).total) ++failures_here;
        if (p > ctx.floor() && !positive) ++failures_here;
    }
    return {failures_here == 0, std::to_string(failures_here) + " failures over 10000 instances"};
}

Verdict auction_conservation() {
    ScenarioConfig config;
    int violations = 0, replay_diffs = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto rng = CounterRng::stream(seed, {CounterRng::tag("acceptance"), CounterRng::tag("auction")});
        auto s = sample_scenario(config, rng);
        for (auto& o : s.offers) o.ask = Money::from_micros(rng.uniform_int(2'000'000, 2'400'000));
        auto once = [&] {
            AuctionTrace trace;
            auto out = run_auction(s, auction_options(config), &trace);
            return std::pair{out, nlohmann::json(out).dump() + trace.to_jsonl()};
        };
        auto [out, bytes] = once();
        if (once().second != bytes) ++replay_diffs;

        std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> offered;
        for (const auto& o : s.offers)
            for (int j = o.start; j < o.start + o.length; ++j) offered[{o.coalition, o.service, j}] += o.capacity;
        auto sold = sold_capacity(out);
        std::size_t cells = 0;
        for (int j = 0; j < s.kappa; ++j)
            for (const auto& spot : spot_pool(out, j)) {
                ++cells;
                auto key = std::tuple{spot.coalition, spot.service, j};
                auto it = sold.find(key);
                if ((it == sold.end() ? 0 : it->second) + spot.quantity != offered.at(key)) ++violations;
            }
        if (cells != offered.size()) ++violations;
    }
    return {violations == 0 && replay_diffs == 0,
            std::to_string(violations) + " conservation violations, " + std::to_string(replay_diffs) + " replay differences over 200 scenarios"};
}

Verdict clock_hand_trace() {
    auto r = run_clock_market(ServiceId{0}, 0,
                              {{ClientId{1}, 100, Money::from_units(5)}, {ClientId{2}, 50, Money::from_units(3)}},
                              {{CoalitionId{1}, 60, Money::from_units(2)}, {CoalitionId{2}, 70, Money::from_units(3)}},
                              Money::from_units(1));
    std::ostringstream path;
    for (const auto& t : r.ticks) path << "p=" << t.price.to_string() << " C=" << t.capacity << " D=" << t.demand << "; ";
    const bool ok = r.ticks.size() == 3 && r.ticks[0].capacity == 60 && r.ticks[0].demand == 150 &&
                    r.ticks[1].capacity == 130 && r.ticks[1].demand == 150 && r.ticks[2].price == Money::from_units(4) &&
                    r.ticks[2].demand == 100 && r.commitments.size() == 1 && r.commitments[0].client == ClientId{1} &&
                    r.commitments[0].quantity == 100 && r.commitments[0].committed_price == Money::from_units(4);
    return {ok, path.str()};
}

Verdict full_scale() {
    ScenarioConfig config;
    config.seed = 2024;
    BatchOptions options;
    options.windows = 1;
    auto result = run_batches(config, 25, 200, options);
    const auto& stats = result.stats;

    const auto& success = stats.per_slot.at("service_success");
    int above = 0, considered = 0;
    for (std::size_t j = 10; j < success.size(); ++j) {
        ++considered;
        if (success[j] && success[j]->mean > 0.7) ++above;
    }
    const bool success_ok = 2 * above > considered;

    const auto& alloc = stats.overall.at("capacity_allocation");
    const bool alloc_ok = alloc && alloc->mean >= 0.3 && alloc->mean <= 0.7;

    const auto& over = stats.overall.at("overbidding_factor");
    std::string detail = "success > 0.7 in " + std::to_string(above) + "/" + std::to_string(considered) +
                         " slots from slot 10; capacity allocation " +
                         (alloc ? fmt(alloc->mean) + " +- " + fmt(alloc->half_width) : std::string("n/a")) +
                         "; overbidding factor " +
                         (over ? fmt(100 * over->mean, 2) + "% +- " + fmt(100 * over->half_width, 2) + "%" : std::string("n/a")) +
                         " (reference 64% +- 2.93%, not graded)";
    for (const auto& name : {"customer_satisfaction", "service_mismatch", "temporal_fragmentation", "spot_opportunity",
                             "additional_profit"}) {
        const auto& s = stats.overall.at(name);
        detail += std::string("; ") + name + " " + (s ? fmt(s->mean) : std::string("n/a"));
    }
    return {success_ok && alloc_ok, detail};
}

Verdict recomputation() {
    ScenarioConfig config;
    config.seed = 77;
    int mismatches = 0, windows = 0;
    for (std::size_t run = 0; run < 50; ++run) {
        auto record = run_two_stage(config, run_seed(config.seed, 0, run), run % 5 == 0 ? 2 : 1);
        auto exported = nlohmann::json::parse(record_json(record, true).dump());
        for (std::size_t w = 0; w < record.windows.size(); ++w) {
            ++windows;
            const auto& jw = exported.at("windows").at(w);
            auto recomputed = compute_indices(jw.at("outcome").get<AuctionOutcome>(), jw.at("scenario").get<AuctionScenario>());
            if (recomputed != record.windows[w].metrics) ++mismatches;
            if (jw.at("metrics").get<MetricsReport>() != record.windows[w].metrics) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over " + std::to_string(windows) + " windows of 50 runs"};
}

}  // namespace

int main() {
    criterion(1, "Stirling numbers exact", 1.0, combinatorics);
    criterion(2, "optimal structure equals brute-force argmax", 10.0, structure_oracle);
    criterion(3, "Paxos safety sweep", 30.0, paxos_safety);
    criterion(4, "payoff algebra", 0.0, payoff_algebra);
    criterion(5, "auction conservation and determinism", 60.0, auction_conservation);
    criterion(6, "clock-phase hand trace", 0.0, clock_hand_trace);
    criterion(7, "qualitative reproduction at full scale", 600.0, full_scale);
    criterion(8, "metrics recomputed from exported JSON", 0.0, recomputation);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
