#include <algorithm>

#include "cpa/auction.hpp"
#include "cpa/errors.hpp"

namespace cpa {

Money starting_price(std::span<const ClockSupply> supplies) {
    if (supplies.empty()) throw NoMarketError("no coalition supplies this service in this slot");
    return std::min_element(supplies.begin(), supplies.end(),
                            [](const ClockSupply& a, const ClockSupply& b) { return a.ask < b.ask; })
        ->ask;
}

ClockAggregates clock_aggregates(const ClockState& state, bool literal) {
    ClockAggregates agg;
    for (const auto& s : state.supplies)
        if (literal || s.ask <= state.current_price) agg.capacity += s.quantity;
    for (const auto& d : state.active_demands)
        if (d.cap >= state.current_price) agg.demand += d.quantity;
    return agg;
}

ClockMarketResult run_clock_market(ServiceId service, int slot, std::vector<ClockDemand> demands,
                                   std::vector<ClockSupply> supplies, Money increment, bool literal) {
    if (increment <= Money{}) throw DomainError("price increment must be positive");
    ClockState state{service, slot, starting_price(supplies), std::move(demands), std::move(supplies)};
    auto drop_priced_out = [&] {
        std::erase_if(state.active_demands, [&](const ClockDemand& d) { return d.cap < state.current_price; });
    };
    drop_priced_out();

    ClockMarketResult out;
    while (true) {
        auto agg = clock_aggregates(state, literal);
        out.ticks.push_back({state.current_price, agg.capacity, agg.demand});
        if (agg.demand <= agg.capacity) break;
        state.current_price += increment;
        drop_priced_out();
    }
    for (const auto& d : state.active_demands)
        out.commitments.push_back({d.client, service, slot, d.quantity, state.current_price});
    std::sort(out.commitments.begin(), out.commitments.end(),
              [](const ClockCommitment& a, const ClockCommitment& b) { return a.client < b.client; });
    return out;
}

std::vector<ClockCommitment> run_clock_phase(const AuctionScenario& scenario, const AuctionOptions& options,
                                             AuctionTrace* trace) {
    std::map<ServiceSlot, std::vector<ClockSupply>> supply;
    for (const auto& o : scenario.offers)
        for (int j = o.start; j < o.start + o.length; ++j)
            supply[{o.service, j}].push_back({o.coalition, o.capacity, o.ask});

    std::map<ServiceSlot, std::vector<ClockDemand>> demand;
    for (const auto& c : scenario.clients)
        for (const auto& r : c.services)
            for (int j = r.start; j < r.start + r.length; ++j) {
                if (scenario.clock_bidders) {
                    auto it = scenario.clock_bidders->find({r.service, j});
                    if (it == scenario.clock_bidders->end() ||
                        std::find(it->second.begin(), it->second.end(), c.client) == it->second.end())
                        continue;
                }
                demand[{r.service, j}].push_back({c.client, r.quantity, r.cap});
            }

    std::vector<ClockCommitment> out;
    for (auto& [key, demands] : demand) {
        auto sit = supply.find(key);
        if (sit == supply.end()) continue;
        auto market = run_clock_market(key.first, key.second, std::move(demands), sit->second, scenario.increment,
                                       options.literal_capacity_eq);
        if (trace) {
            for (std::size_t t = 0; t < market.ticks.size(); ++t)
                trace->add({{"type", "clock_tick"},
                            {"service", key.first.value},
                            {"slot", key.second},
                            {"tick", t},
                            {"price", market.ticks[t].price.micros},
                            {"capacity", market.ticks[t].capacity},
                            {"demand", market.ticks[t].demand}});
        }
        out.insert(out.end(), market.commitments.begin(), market.commitments.end());
    }
    return out;
}

}  // namespace cpa
