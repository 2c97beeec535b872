#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "cpa/auction.hpp"
#include "cpa/errors.hpp"
#include "cpa/rng.hpp"

using namespace cpa;

namespace {

Money units(std::int64_t u) { return Money::from_units(u); }
Money dec(double d) { return Money::from_decimal(d); }

RunOffer run_of(std::uint32_t coalition, std::uint32_t service, int start, int length, Quantity cap, Money ask) {
    return {CoalitionId{coalition}, ServiceId{service}, start, length, cap, ask};
}

ClientRequest request_of(std::uint32_t client, std::uint32_t service, int start, int length, Quantity q, Money cap) {
    return {ClientId{client}, {{ServiceId{service}, start, length, q, cap}}};
}

ClockCommitment commit(std::uint32_t client, std::uint32_t service, int slot, Quantity q, Money price) {
    return {ClientId{client}, ServiceId{service}, slot, q, price};
}

AuctionScenario random_scenario(CounterRng& rng) {
    AuctionScenario s;
    s.kappa = 8;
    s.increment = dec(0.25);
    const auto coalitions = rng.uniform_int(1, 5);
    const auto services = rng.uniform_int(1, 3);
    for (std::int64_t c = 0; c < coalitions; ++c) {
        for (std::int64_t v = 0; v < services; ++v) {
            if (rng.bernoulli(0.3)) continue;
            const int len = static_cast<int>(rng.uniform_int(1, s.kappa));
            const int start = static_cast<int>(rng.uniform_int(0, s.kappa - len));
            s.offers.push_back({CoalitionId{static_cast<std::uint32_t>(c)}, ServiceId{static_cast<std::uint32_t>(v)}, start,
                                len, rng.uniform_int(20, 60), Money::from_micros(rng.uniform_int(1'000'000, 3'000'000))});
        }
    }
    const auto clients = rng.uniform_int(1, 6);
    for (std::int64_t k = 0; k < clients; ++k) {
        ClientRequest r{ClientId{static_cast<std::uint32_t>(k)}, {}};
        for (std::int64_t v = 0; v < services; ++v) {
            if (rng.bernoulli(0.4)) continue;
            const int len = static_cast<int>(rng.uniform_int(1, 4));
            const int start = static_cast<int>(rng.uniform_int(0, s.kappa - len));
            r.services.push_back({ServiceId{static_cast<std::uint32_t>(v)}, start, len, rng.uniform_int(5, 40),
                                  Money::from_micros(rng.uniform_int(1'500'000, 5'000'000))});
        }
        if (!r.services.empty()) s.clients.push_back(r);
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Clock phase

TEST(Clock, StartingPriceIsLowestAsk) {
    std::vector<ClockSupply> s{{CoalitionId{1}, 60, units(2)}, {CoalitionId{2}, 70, units(3)}};
    EXPECT_EQ(starting_price(s), units(2));
    EXPECT_THROW(starting_price({}), NoMarketError);
}

TEST(Clock, AggregatesCountOnlyReachedAsks) {
    ClockState st{ServiceId{1}, 0, units(2), {}, {{CoalitionId{1}, 60, units(2)}, {CoalitionId{2}, 70, units(3)}}};
    EXPECT_EQ(clock_aggregates(st).capacity, 60);
    EXPECT_EQ(clock_aggregates(st, true).capacity, 130);
    st.current_price = units(3);
    EXPECT_EQ(clock_aggregates(st).capacity, 130);
    st.active_demands = {{ClientId{1}, 40, units(5)}, {ClientId{2}, 60, units(5)}, {ClientId{3}, 99, units(1)}};
    EXPECT_EQ(clock_aggregates(st).demand, 100);
}

TEST(Clock, HandTraceStopsWhenDemandFits) {
    auto r = run_clock_market(ServiceId{1}, 4, {{ClientId{1}, 100, units(5)}, {ClientId{2}, 80, dec(3.5)}},
                              {{CoalitionId{1}, 60, units(2)}, {CoalitionId{2}, 70, units(3)}}, dec(0.5));
    std::vector<std::int64_t> prices;
    for (const auto& t : r.ticks) prices.push_back(t.price.micros);
    EXPECT_EQ(prices, (std::vector<std::int64_t>{2'000'000, 2'500'000, 3'000'000, 3'500'000, 4'000'000}));
    EXPECT_EQ(r.ticks[2].capacity, 130);
    EXPECT_EQ(r.ticks[3].demand, 180);
    EXPECT_EQ(r.ticks.back().demand, 100);
    ASSERT_EQ(r.commitments.size(), 1u);
    EXPECT_EQ(r.commitments[0], commit(1, 1, 4, 100, units(4)));
}

TEST(Clock, UnitIncrementTrace) {
    auto r = run_clock_market(ServiceId{0}, 0, {{ClientId{1}, 100, units(5)}, {ClientId{2}, 50, units(3)}},
                              {{CoalitionId{1}, 60, units(2)}, {CoalitionId{2}, 70, units(3)}}, units(1));
    ASSERT_EQ(r.ticks.size(), 3u);
    EXPECT_EQ(r.ticks[0].demand, 150);
    EXPECT_EQ(r.ticks[1].capacity, 130);
    EXPECT_EQ(r.ticks[2].demand, 100);
    EXPECT_EQ(r.commitments, (std::vector<ClockCommitment>{commit(1, 0, 0, 100, units(4))}));
}

TEST(Clock, MatchesStepOracle) {
    auto rng = CounterRng::stream(5, {CounterRng::tag("clock")});
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ClockDemand> demands;
        std::vector<ClockSupply> supplies;
        for (std::uint32_t i = 0, n = static_cast<std::uint32_t>(rng.uniform_int(0, 5)); i < n; ++i)
            demands.push_back({ClientId{i}, rng.uniform_int(1, 100), Money::from_micros(rng.uniform_int(0, 6'000'000))});
        for (std::uint32_t i = 0, n = static_cast<std::uint32_t>(rng.uniform_int(1, 4)); i < n; ++i)
            supplies.push_back({CoalitionId{i}, rng.uniform_int(1, 100), Money::from_micros(rng.uniform_int(0, 4'000'000))});
        const Money inc = Money::from_micros(rng.uniform_int(1, 4) * 250'000);
        const bool literal = rng.bernoulli(0.5);

        Money p = supplies[0].ask;
        for (const auto& s : supplies) p = std::min(p, s.ask);
        while (true) {
            Quantity cap = 0, dem = 0;
            for (const auto& s : supplies)
                if (literal || s.ask <= p) cap += s.quantity;
            for (const auto& d : demands)
                if (d.cap >= p) dem += d.quantity;
            if (dem <= cap) break;
            p += inc;
        }
        std::vector<ClockCommitment> expected;
        for (const auto& d : demands)
            if (d.cap >= p) expected.push_back({d.client, ServiceId{0}, 1, d.quantity, p});

        auto got = run_clock_market(ServiceId{0}, 1, demands, supplies, inc, literal);
        ASSERT_EQ(got.commitments, expected) << trial;
        ASSERT_EQ(got.ticks.back().price, p);
    }
}

TEST(Clock, PhaseUsesOnlyListedBidders) {
    AuctionScenario s;
    s.kappa = 4;
    s.increment = units(1);
    s.offers = {{CoalitionId{0}, ServiceId{0}, 0, 2, 50, units(1)}};
    s.clients = {request_of(0, 0, 0, 2, 10, units(9)), request_of(1, 0, 0, 2, 10, units(9))};
    EXPECT_EQ(run_clock_phase(s).size(), 4u);
    s.clock_bidders = std::map<ServiceSlot, std::vector<ClientId>>{{{ServiceId{0}, 1}, {ClientId{1}}}};
    auto c = run_clock_phase(s);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0], commit(1, 0, 1, 10, units(1)));
}

TEST(Clock, NonPositiveIncrementIsRejected) {
    EXPECT_THROW(run_clock_market(ServiceId{0}, 0, {}, {{CoalitionId{0}, 1, units(1)}}, Money{}), DomainError);
}

// ---------------------------------------------------------------------------
// Proxy phase

TEST(Proxy, BuildRunsSplitsGapsAndChanges) {
    std::vector<Offer> offers{{CoalitionId{1}, ServiceId{2}, 1, 3, 40, units(2)},
                              {CoalitionId{1}, ServiceId{2}, 7, 1, 40, units(2)},
                              {CoalitionId{2}, ServiceId{2}, 0, 2, 40, units(2)},
                              {CoalitionId{2}, ServiceId{2}, 2, 2, 30, units(2)}};
    auto runs = build_runs(advertise(offers));
    ASSERT_EQ(runs.size(), 4u);
    EXPECT_EQ(runs[0], run_of(1, 2, 1, 3, 40, units(2)));
    EXPECT_EQ(runs[1], run_of(2, 2, 0, 2, 40, units(2)));
    EXPECT_EQ(runs[2], run_of(2, 2, 2, 2, 30, units(2)));
    EXPECT_EQ(runs[3], run_of(1, 2, 7, 1, 40, units(2)));
}

TEST(Proxy, MatchRunRules) {
    auto run = run_of(1, 1, 0, 3, 50, units(2));
    std::vector<RunBid> bids{{ClientId{1}, 2, 40, units(3)}};
    EXPECT_EQ(match_run(run, bids), 0u);
    bids[0].requested_length = 1;
    EXPECT_FALSE(match_run(run, bids));
    bids[0] = {ClientId{1}, 3, 60, units(3)};
    EXPECT_FALSE(match_run(run, bids));
    bids[0] = {ClientId{1}, 3, 40, units(1)};
    EXPECT_FALSE(match_run(run, bids));
    bids = {{ClientId{1}, 3, 50, units(6)}, {ClientId{2}, 2, 40, Money::from_micros(10'500'000)}};
    EXPECT_EQ(bids[0].revenue(), units(900));
    EXPECT_EQ(bids[1].revenue(), units(840));
    EXPECT_EQ(match_run(run, bids), 0u);
    bids = {{ClientId{4}, 3, 10, units(3)}, {ClientId{2}, 3, 10, units(3)}};
    EXPECT_EQ(match_run(run, bids), 1u);
}

TEST(Proxy, RunPriceWalksUpWithRounds) {
    std::vector<Money> p{units(7), units(3), units(5)};
    EXPECT_EQ(run_price(p, 1), units(3));
    EXPECT_EQ(run_price(p, 2), units(5));
    std::vector<Money> two{units(3), units(5)};
    EXPECT_EQ(run_price(two, 4), units(5));
    EXPECT_THROW(run_price(std::vector<Money>{}, 1), ProtocolError);
    auto run = run_of(0, 1, 2, 2, 10, units(1));
    std::vector<ClockCommitment> c{commit(1, 1, 2, 5, units(4)), commit(1, 1, 3, 5, units(2)), commit(1, 1, 4, 5, units(1)),
                                   commit(2, 1, 2, 5, units(1)), commit(1, 2, 2, 5, units(1))};
    EXPECT_EQ(run_price(run, c, ClientId{1}, 1), units(2));
    EXPECT_EQ(run_price(run, c, ClientId{1}, 2), units(4));
    EXPECT_THROW(run_price(run, c, ClientId{3}, 1), ProtocolError);
}

TEST(Proxy, PreliminaryWinsMatchingRun) {
    std::vector<RunOffer> runs{run_of(0, 1, 3, 2, 50, units(2))};
    std::vector<ClientRequest> req{request_of(7, 1, 3, 2, 10, units(5))};
    std::vector<ClockCommitment> c{commit(7, 1, 3, 10, units(4)), commit(7, 1, 4, 10, dec(4.5))};
    auto r = preliminary_rounds(runs, req, c);
    ASSERT_EQ(r.wins.size(), 1u);
    const auto& w = r.wins[0];
    EXPECT_EQ(w.client, ClientId{7});
    EXPECT_EQ(w.slot_start, 3);
    EXPECT_EQ(w.length, 2);
    EXPECT_EQ(w.price_per_slot, units(4));
    EXPECT_EQ(w.round, 1);
    EXPECT_EQ(w.revenue(), units(80));
    EXPECT_TRUE(r.residual.empty());
}

TEST(Proxy, PreliminaryWithoutRequestsLeavesEverythingResidual) {
    std::vector<RunOffer> runs{run_of(0, 1, 0, 1, 50, units(2)), run_of(1, 1, 0, 1, 50, units(2))};
    auto r = preliminary_rounds(runs, {}, {});
    EXPECT_TRUE(r.wins.empty());
    EXPECT_EQ(r.residual.size(), 2u);
}

TEST(Proxy, UnmatchedRunIsSplitUntilASingleSlotWins) {
    std::vector<RunOffer> runs{run_of(0, 1, 0, 3, 50, units(2))};
    std::vector<ClientRequest> req{request_of(4, 1, 2, 1, 10, units(5))};
    std::vector<ClockCommitment> c{commit(4, 1, 2, 10, units(3))};
    AuctionTrace trace;
    auto r = preliminary_rounds(runs, req, c, &trace);
    EXPECT_EQ(r.auctioned_lengths, (std::vector<int>{3, 2, 1, 1, 1}));
    ASSERT_EQ(r.wins.size(), 1u);
    EXPECT_EQ(r.wins[0].run, run_of(0, 1, 2, 1, 50, units(2)));
    EXPECT_EQ(r.wins[0].round, 3);
    EXPECT_EQ(r.residual.size(), 2u);
    ASSERT_EQ(trace.records.size(), 1u);
    EXPECT_EQ(trace.records[0]["type"], "provisional_win");
    EXPECT_EQ(trace.records[0]["v"], 1);
}

TEST(Proxy, LongerRunPlacesWinOnRequestedSlots) {
    std::vector<RunOffer> runs{run_of(0, 1, 4, 3, 50, units(2))};
    std::vector<ClientRequest> req{request_of(1, 1, 5, 2, 10, units(5))};
    std::vector<ClockCommitment> c{commit(1, 1, 5, 10, units(3)), commit(1, 1, 6, 10, units(3))};
    auto r = preliminary_rounds(runs, req, c);
    ASSERT_EQ(r.wins.size(), 1u);
    EXPECT_EQ(r.wins[0].slot_start, 5);
    EXPECT_EQ(r.wins[0].length, 2);
}

TEST(Proxy, CoalitionServiceWinsAtMostOnce) {
    std::vector<RunOffer> runs{run_of(0, 1, 0, 2, 50, units(1)), run_of(0, 1, 3, 1, 50, units(1))};
    std::vector<ClientRequest> req{request_of(1, 1, 0, 2, 10, units(5)), request_of(2, 1, 3, 1, 10, units(5))};
    std::vector<ClockCommitment> c{commit(1, 1, 0, 10, units(2)), commit(1, 1, 1, 10, units(2)), commit(2, 1, 3, 10, units(2))};
    auto r = preliminary_rounds(runs, req, c);
    ASSERT_EQ(r.wins.size(), 1u);
    EXPECT_EQ(r.wins[0].client, ClientId{1});
    ASSERT_EQ(r.residual.size(), 1u);
    EXPECT_EQ(r.residual[0].start, 3);
}

TEST(Proxy, FinalRoundKeepsOneOfTwoClashingWins) {
    std::vector<RunOffer> offered{run_of(0, 1, 0, 1, 50, units(1)), run_of(1, 1, 0, 1, 50, units(1))};
    std::vector<ClientRequest> req{request_of(1, 1, 0, 1, 5, units(5))};
    std::vector<ClockCommitment> c{commit(1, 1, 0, 5, units(2))};
    auto pre = preliminary_rounds(offered, req, c);
    ASSERT_EQ(pre.wins.size(), 2u);
    AuctionOptions opt;
    opt.overbid_penalty_rate = 0.5;
    auto out = final_round(pre.wins, req, offered, opt);
    ASSERT_EQ(out.packages.size(), 1u);
    EXPECT_EQ(out.packages[0].wins, (std::vector<std::size_t>{0}));
    EXPECT_EQ(out.packages[0].cost, units(10));
    EXPECT_EQ(out.packages[0].covered, 1);
    EXPECT_EQ(out.overbid, (std::vector<std::size_t>{1}));
    EXPECT_EQ(out.overbid_penalty, units(5));
    EXPECT_TRUE(out.unsatisfied.empty());
}

TEST(Proxy, FinalRoundReportsUnsatisfiedClients) {
    std::vector<ClientRequest> req{request_of(3, 1, 0, 1, 5, units(5)), request_of(1, 1, 0, 1, 5, units(5))};
    auto out = final_round({}, req, {});
    EXPECT_TRUE(out.packages.empty());
    EXPECT_EQ(out.unsatisfied, (std::vector<ClientId>{ClientId{1}, ClientId{3}}));
}

TEST(Proxy, FinalRoundMatchesBruteForce) {
    auto rng = CounterRng::stream(11, {CounterRng::tag("final")});
    for (int trial = 0; trial < 400; ++trial) {
        const int k = static_cast<int>(rng.uniform_int(0, 9));
        const auto objective = rng.bernoulli(0.5) ? FinalRoundObjective::coverage_first : FinalRoundObjective::revenue_first;
        ServiceRequest sreq{ServiceId{0}, static_cast<int>(rng.uniform_int(0, 4)), static_cast<int>(rng.uniform_int(1, 5)), 10,
                            units(9)};
        std::vector<ClientRequest> req{{ClientId{0}, {sreq}}};
        std::vector<ProvisionalWin> wins;
        for (int i = 0; i < k; ++i) {
            const int len = static_cast<int>(rng.uniform_int(1, 3));
            const int start = static_cast<int>(rng.uniform_int(0, 8 - len));
            wins.push_back({static_cast<std::size_t>(i), ClientId{0}, run_of(static_cast<std::uint32_t>(i), 0, start, len, 50, units(1)),
                            start, len, rng.uniform_int(1, 3), Money::from_micros(rng.uniform_int(1, 4) * 1'000'000), 1});
        }

        auto cover = [&](const ProvisionalWin& w) {
            return std::max(0, std::min(w.slot_start + w.length, sreq.start + sreq.length) - std::max(w.slot_start, sreq.start));
        };
        std::vector<std::size_t> best_ids;
        std::pair<std::int64_t, std::int64_t> best{-1, -1};
        for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
            std::vector<bool> used(16, false);
            bool ok = true;
            std::int64_t covered = 0, revenue = 0;
            std::vector<std::size_t> ids;
            for (int i = 0; i < k && ok; ++i) {
                if (!(mask >> i & 1)) continue;
                for (int j = wins[i].slot_start; j < wins[i].slot_start + wins[i].length; ++j) {
                    if (used[j]) ok = false;
                    used[j] = true;
                }
                covered += cover(wins[i]);
                revenue += wins[i].revenue().micros;
                ids.push_back(static_cast<std::size_t>(i));
            }
            if (!ok) continue;
            auto score = objective == FinalRoundObjective::coverage_first ? std::pair{covered, revenue} : std::pair{revenue, covered};
            if (score > best || (score == best && ids < best_ids)) {
                best = score;
                best_ids = ids;
            }
        }

        AuctionOptions opt;
        opt.objective = objective;
        auto out = final_round(wins, req, {}, opt);
        if (best_ids.empty()) {
            ASSERT_TRUE(out.packages.empty()) << trial;
            continue;
        }
        ASSERT_EQ(out.packages.size(), 1u) << trial;
        ASSERT_EQ(out.packages[0].wins, best_ids) << trial;
        EXPECT_EQ(out.packages[0].wins.size() + out.overbid.size(), wins.size());
    }
}

TEST(Proxy, SpotPoolHoldsUnsoldCapacity) {
    AuctionOutcome o;
    o.offered = {run_of(0, 1, 0, 2, 90, units(2))};
    o.wins = {{0, ClientId{1}, o.offered[0], 0, 1, 60, units(3), 1}};
    o.packages = {{ClientId{1}, {0}, units(180), 1}};
    auto s0 = spot_pool(o, 0);
    ASSERT_EQ(s0.size(), 1u);
    EXPECT_EQ(s0[0].quantity, 30);
    EXPECT_EQ(s0[0].ask, units(2));
    EXPECT_EQ(spot_pool(o, 1)[0].quantity, 90);
    EXPECT_TRUE(spot_pool(o, 2).empty());
    o.wins[0].quantity = 100;
    EXPECT_THROW(spot_pool(o, 0), InvariantError);
}

// ---------------------------------------------------------------------------
// Whole auction

TEST(Auction, ValidateFindsBrokenScenarios) {
    AuctionScenario s;
    s.kappa = 4;
    s.offers = {{CoalitionId{0}, ServiceId{0}, 0, 2, 10, units(1)}, {CoalitionId{0}, ServiceId{0}, 1, 2, 10, units(1)}};
    EXPECT_FALSE(validate(s).empty());
    s.offers.pop_back();
    EXPECT_TRUE(validate(s).empty());
    s.offers[0].length = 5;
    EXPECT_FALSE(validate(s).empty());
    EXPECT_THROW(run_auction(s), DomainError);
    s.offers[0].length = 2;
    s.clients = {request_of(0, 0, 0, 1, 0, units(1))};
    EXPECT_FALSE(validate(s).empty());
}

TEST(Auction, AdvertiseAndReservationBundles) {
    std::vector<Offer> offers{{CoalitionId{0}, ServiceId{2}, 0, 2, 10, units(1)}, {CoalitionId{0}, ServiceId{1}, 1, 1, 5, units(2)}};
    auto b = advertise(offers);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[1].slot, SlotIndex{1});
    ASSERT_EQ(b[1].offers.size(), 2u);
    EXPECT_EQ(b[1].offers[0].service, ServiceId{1});
    auto r = reservation_bundles({ClientId{3}, {{ServiceId{1}, 2, 2, 7, units(1)}}});
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].slot, SlotIndex{2});
    EXPECT_EQ(r[1].demands[0].quantity, 7);
}

TEST(Auction, RandomScenariosConserveCapacity) {
    auto rng = CounterRng::stream(21, {CounterRng::tag("auction")});
    for (int trial = 0; trial < 300; ++trial) {
        auto s = random_scenario(rng);
        ASSERT_TRUE(validate(s).empty());
        auto out = run_auction(s);
        std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> offered;
        for (const auto& o : s.offers)
            for (int j = o.start; j < o.start + o.length; ++j) offered[{o.coalition, o.service, j}] += o.capacity;
        auto sold = sold_capacity(out);
        for (const auto& [key, q] : sold) {
            ASSERT_TRUE(offered.contains(key)) << trial;
            ASSERT_LE(q, offered.at(key)) << trial;
        }
        for (int j = 0; j < s.kappa; ++j)
            for (const auto& spot : spot_pool(out, j)) {
                auto key = std::tuple{spot.coalition, spot.service, j};
                auto it = sold.find(key);
                ASSERT_EQ((it == sold.end() ? 0 : it->second) + spot.quantity, offered.at(key)) << trial;
            }
        for (const auto& w : out.wins) {
            ASSERT_GE(w.price_per_slot, w.run.ask);
            ASSERT_GE(w.slot_start, w.run.start);
            ASSERT_LE(w.slot_start + w.length, w.run.end());
        }
    }
}

TEST(Auction, IsDeterministicAndTraced) {
    auto rng = CounterRng::stream(3, {CounterRng::tag("auction")});
    for (int trial = 0; trial < 20; ++trial) {
        auto s = random_scenario(rng);
        AuctionTrace t1, t2;
        EXPECT_EQ(run_auction(s, {}, &t1), run_auction(s, {}, &t2));
        EXPECT_EQ(t1.to_jsonl(), t2.to_jsonl());
        for (const auto& rec : t1.records) EXPECT_EQ(rec["v"], AuctionTrace::kSchemaVersion);
    }
}

TEST(Auction, JsonRoundTrip) {
    auto rng = CounterRng::stream(8, {CounterRng::tag("auction")});
    for (int trial = 0; trial < 30; ++trial) {
        auto s = random_scenario(rng);
        if (trial % 2) s.clock_bidders = std::map<ServiceSlot, std::vector<ClientId>>{{{ServiceId{0}, 1}, {ClientId{0}}}};
        nlohmann::json js = s;
        EXPECT_EQ(js.get<AuctionScenario>(), s);
        auto out = run_auction(s);
        nlohmann::json jo = out;
        EXPECT_EQ(jo.get<AuctionOutcome>(), out);
        EXPECT_EQ(nlohmann::json(jo.get<AuctionOutcome>()).dump(), jo.dump());
    }
}
