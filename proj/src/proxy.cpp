#include <algorithm>
#include <cmath>
#include <set>

#include "cpa/auction.hpp"
#include "cpa/errors.hpp"

namespace cpa {

namespace {

struct RunOrder {
    bool operator()(const RunOffer& a, const RunOffer& b) const {
        if (a.length != b.length) return a.length > b.length;
        return std::tie(a.service, a.start, a.coalition) < std::tie(b.service, b.start, b.coalition);
    }
};

struct Score {
    std::int64_t primary = 0;
    std::int64_t secondary = 0;

    auto operator<=>(const Score&) const = default;
    Score operator+(const Score& o) const { return {primary + o.primary, secondary + o.secondary}; }
};

int overlap(int a_start, int a_len, int b_start, int b_len) {
    int lo = std::max(a_start, b_start);
    int hi = std::min(a_start + a_len, b_start + b_len);
    return std::max(0, hi - lo);
}

}  // namespace

std::vector<RunOffer> build_runs(std::span<const AdvertisedBundle> bundles) {
    struct Cell {
        int slot;
        Quantity quantity;
        Money ask;
    };
    std::map<std::pair<CoalitionId, ServiceId>, std::vector<Cell>> cells;
    for (const auto& b : bundles)
        for (const auto& o : b.offers) cells[{b.coalition, o.service}].push_back({b.slot.value, o.quantity, o.ask});

    std::vector<RunOffer> runs;
    for (auto& [key, list] : cells) {
        std::sort(list.begin(), list.end(), [](const Cell& a, const Cell& b) { return a.slot < b.slot; });
        for (std::size_t i = 0; i < list.size();) {
            std::size_t j = i + 1;
            while (j < list.size() && list[j].slot == list[j - 1].slot + 1 && list[j].quantity == list[i].quantity &&
                   list[j].ask == list[i].ask)
                ++j;
            runs.push_back({key.first, key.second, list[i].slot, static_cast<int>(j - i), list[i].quantity, list[i].ask});
            i = j;
        }
    }
    std::sort(runs.begin(), runs.end(), RunOrder{});
    return runs;
}

std::optional<std::size_t> match_run(const RunOffer& run, std::span<const RunBid> bids) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        const auto& b = bids[i];
        const int slack = run.length - b.requested_length;
        if (b.requested_length < 1 || slack < 0 || slack > 1) continue;
        if (b.quantity > run.capacity || b.quantity <= 0) continue;
        if (b.price_per_slot < run.ask) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& cur = bids[*best];
        if (b.revenue() > cur.revenue() || (b.revenue() == cur.revenue() && b.client < cur.client)) best = i;
    }
    return best;
}

Money run_price(std::span<const Money> committed_prices, int round) {
    if (committed_prices.empty()) throw ProtocolError("bidder holds no commitment on the run");
    if (round < 1) throw DomainError("rounds are numbered from 1");
    std::vector<Money> sorted(committed_prices.begin(), committed_prices.end());
    std::sort(sorted.begin(), sorted.end());
    auto idx = std::min<std::size_t>(static_cast<std::size_t>(round) - 1, sorted.size() - 1);
    return sorted[idx];
}

Money run_price(const RunOffer& run, std::span<const ClockCommitment> commitments, ClientId client, int round) {
    std::vector<Money> prices;
    for (const auto& c : commitments)
        if (c.client == client && c.service == run.service && c.slot >= run.start && c.slot < run.end())
            prices.push_back(c.committed_price);
    return run_price(prices, round);
}

PreliminaryResult preliminary_rounds(std::span<const RunOffer> runs, std::span<const ClientRequest> requests,
                                     std::span<const ClockCommitment> commitments, AuctionTrace* trace) {
    // (client, service) -> commitments sorted by slot.
    std::map<std::pair<ClientId, ServiceId>, std::vector<std::pair<int, Money>>> committed;
    for (const auto& c : commitments) committed[{c.client, c.service}].emplace_back(c.slot, c.committed_price);
    for (auto& [key, list] : committed) std::sort(list.begin(), list.end());

    struct Candidate {
        ClientId client;
        const ServiceRequest* request;
        const std::vector<std::pair<int, Money>>* committed;
    };
    std::map<ServiceId, std::vector<Candidate>> by_service;
    for (const auto& c : requests)
        for (const auto& r : c.services) {
            auto it = committed.find({c.client, r.service});
            if (it != committed.end()) by_service[r.service].push_back({c.client, &r, &it->second});
        }

    std::map<ServiceId, int> longest;
    for (const auto& r : runs) longest[r.service] = std::max(longest[r.service], r.length);

    std::set<RunOffer, RunOrder> queue(runs.begin(), runs.end());
    std::set<std::pair<CoalitionId, ServiceId>> won;
    PreliminaryResult out;
    std::vector<RunBid> bids;
    std::vector<const Candidate*> bidders;
    std::vector<Money> prices;

    while (!queue.empty()) {
        RunOffer run = *queue.begin();
        queue.erase(queue.begin());
        if (won.contains({run.coalition, run.service})) {
            out.residual.push_back(run);
            continue;
        }
        out.auctioned_lengths.push_back(run.length);
        const int round = longest[run.service] - run.length + 1;

        bids.clear();
        bidders.clear();
        if (auto it = by_service.find(run.service); it != by_service.end()) {
            for (const auto& cand : it->second) {
                const int slack = run.length - cand.request->length;
                if (slack < 0 || slack > 1) continue;
                prices.clear();
                auto lo = std::lower_bound(cand.committed->begin(), cand.committed->end(), std::pair{run.start, Money{INT64_MIN}});
                for (auto p = lo; p != cand.committed->end() && p->first < run.end(); ++p) prices.push_back(p->second);
                if (prices.empty()) continue;
                bids.push_back({cand.client, cand.request->length, cand.request->quantity, run_price(prices, round)});
                bidders.push_back(&cand);
            }
        }

        if (auto best = match_run(run, bids)) {
            const auto& bid = bids[*best];
            const ServiceRequest& req = *bidders[*best]->request;
            int slot_start = run.start;
            if (run.length > bid.requested_length &&
                overlap(run.start + 1, bid.requested_length, req.start, req.length) >
                    overlap(run.start, bid.requested_length, req.start, req.length))
                slot_start = run.start + 1;
            ProvisionalWin win{out.wins.size(), bid.client, run,           slot_start,
                               bid.requested_length, bid.quantity, bid.price_per_slot, round};
            if (trace)
                trace->add({{"type", "provisional_win"},
                            {"win", win.id},
                            {"client", win.client.value},
                            {"coalition", run.coalition.value},
                            {"service", run.service.value},
                            {"run_start", run.start},
                            {"run_length", run.length},
                            {"slot_start", win.slot_start},
                            {"length", win.length},
                            {"quantity", win.quantity},
                            {"price_per_slot", win.price_per_slot.micros},
                            {"round", round}});
            out.wins.push_back(win);
            won.insert({run.coalition, run.service});
        } else if (run.length > 1) {
            RunOffer prefix = run;
            prefix.length -= 1;
            RunOffer last = run;
            last.start = run.end() - 1;
            last.length = 1;
            queue.insert(prefix);
            queue.insert(last);
        } else {
            out.residual.push_back(run);
        }
    }
    return out;
}

AuctionOutcome final_round(std::span<const ProvisionalWin> wins, std::span<const ClientRequest> requests,
                           std::span<const RunOffer> offered, const AuctionOptions& options, AuctionTrace* trace) {
    AuctionOutcome out;
    out.offered.assign(offered.begin(), offered.end());
    out.wins.assign(wins.begin(), wins.end());

    std::map<std::pair<ClientId, ServiceId>, std::vector<const ProvisionalWin*>> grouped;
    for (const auto& w : wins) grouped[{w.client, w.run.service}].push_back(&w);
    for (auto& [key, list] : grouped)
        std::sort(list.begin(), list.end(), [](const ProvisionalWin* a, const ProvisionalWin* b) { return a->id < b->id; });

    std::vector<const ClientRequest*> clients;
    for (const auto& c : requests) clients.push_back(&c);
    std::sort(clients.begin(), clients.end(), [](const ClientRequest* a, const ClientRequest* b) { return a->client < b->client; });

    std::set<std::size_t> selected;
    for (const ClientRequest* client : clients) {
        ClientPackage package{client->client, {}, Money{}, 0};
        for (const auto& req : client->services) {
            auto it = grouped.find({client->client, req.service});
            if (it == grouped.end()) continue;
            const auto& cands = it->second;

            auto score_of = [&](int covered, Money revenue) {
                if (options.objective == FinalRoundObjective::coverage_first) return Score{covered, revenue.micros};
                return Score{revenue.micros, covered};
            };

            std::vector<Score> gain(cands.size());
            for (std::size_t k = 0; k < cands.size(); ++k)
                gain[k] = score_of(overlap(cands[k]->slot_start, cands[k]->length, req.start, req.length),
                                   cands[k]->revenue());
            auto clashes = [&](std::size_t k, const std::vector<std::size_t>& chosen) {
                for (auto c : chosen)
                    if (overlap(cands[c]->slot_start, cands[c]->length, cands[k]->slot_start, cands[k]->length) > 0)
                        return true;
                return false;
            };

            std::vector<std::size_t> current, best_set;
            std::optional<Score> best_score;
            // Depth-first over pairwise-disjoint subsets in lexicographic order. A
            // later subset only replaces the best on a strictly higher score, so the
            // lexicographically smallest optimum is kept; branches whose bound cannot
            // beat the best are skipped.
            auto visit = [&](auto&& self, std::size_t from, Score score) -> void {
                if (!best_score || score > *best_score) {
                    best_score = score;
                    best_set = current;
                }
                Score bound = score;
                for (std::size_t k = from; k < cands.size(); ++k)
                    if (!clashes(k, current)) bound = bound + gain[k];
                if (bound <= *best_score) return;
                for (std::size_t k = from; k < cands.size(); ++k) {
                    if (clashes(k, current)) continue;
                    current.push_back(k);
                    self(self, k + 1, score + gain[k]);
                    current.pop_back();
                }
            };
            visit(visit, 0, Score{});

            for (auto k : best_set) {
                const auto* w = cands[k];
                package.wins.push_back(w->id);
                package.cost += w->revenue();
                package.covered += overlap(w->slot_start, w->length, req.start, req.length);
                selected.insert(w->id);
            }
        }
        std::sort(package.wins.begin(), package.wins.end());
        if (trace)
            trace->add({{"type", "final_selection"},
                        {"client", package.client.value},
                        {"wins", package.wins},
                        {"cost", package.cost.micros},
                        {"covered", package.covered}});
        if (package.wins.empty()) out.unsatisfied.push_back(client->client);
        else out.packages.push_back(std::move(package));
    }

    Money overbid_revenue;
    for (const auto& w : wins)
        if (!selected.contains(w.id)) {
            out.overbid.push_back(w.id);
            overbid_revenue += w.revenue();
        }
    std::sort(out.overbid.begin(), out.overbid.end());
    out.overbid_penalty =
        Money::from_micros(std::llround(static_cast<double>(overbid_revenue.micros) * options.overbid_penalty_rate));
    return out;
}

std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> sold_capacity(const AuctionOutcome& outcome) {
    std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> sold;
    for (const auto& p : outcome.packages)
        for (auto id : p.wins) {
            const auto& w = outcome.wins.at(id);
            for (int j = w.slot_start; j < w.slot_start + w.length; ++j) sold[{w.run.coalition, w.run.service, j}] += w.quantity;
        }
    return sold;
}

std::vector<SpotCapacity> spot_pool(const AuctionOutcome& outcome, int slot) {
    std::map<std::pair<CoalitionId, ServiceId>, SpotCapacity> pool;
    for (const auto& r : outcome.offered) {
        if (slot < r.start || slot >= r.end()) continue;
        auto& cell = pool[{r.coalition, r.service}];
        cell.coalition = r.coalition;
        cell.service = r.service;
        cell.ask = r.ask;
        cell.quantity += r.capacity;
    }
    for (const auto& p : outcome.packages)
        for (auto id : p.wins) {
            const auto& w = outcome.wins.at(id);
            if (slot < w.slot_start || slot >= w.slot_start + w.length) continue;
            auto it = pool.find({w.run.coalition, w.run.service});
            if (it == pool.end()) throw InvariantError("sold capacity in a slot that was never offered");
            it->second.quantity -= w.quantity;
            if (it->second.quantity < 0) throw InvariantError("capacity sold more than once");
        }
    std::vector<SpotCapacity> out;
    for (auto& [key, cell] : pool) out.push_back(cell);
    return out;
}

}  // namespace cpa
