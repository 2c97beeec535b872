#include "cpa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <deque>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "cpa/errors.hpp"
#include "cpa/simnet.hpp"

namespace cpa {

namespace {

Money uniform_money(CounterRng& rng, const MoneyRange& r) {
    return Money::from_micros(rng.uniform_int(r.lo.micros, r.hi.micros));
}

std::int64_t uniform_in(CounterRng& rng, const IntRange& r, std::int64_t lo_clamp, std::int64_t hi_clamp) {
    auto lo = std::clamp(r.lo, lo_clamp, hi_clamp);
    auto hi = std::clamp(r.hi, lo_clamp, hi_clamp);
    return rng.uniform_int(lo, hi);
}

struct ServerState {
    ServerId id;
    Money cost;
    // size -> ring over the last `history_window` auction windows, oldest first.
    std::map<int, std::deque<Money>> values;
    std::map<int, std::deque<bool>> bits;
};

struct Rack {
    RackId id;
    std::vector<ServerState> servers;
};

Server report(const ServerState& s, RackId rack, bool available) {
    Server out;
    out.server_id = s.id;
    out.rack_id = rack;
    out.available = available;
    for (const auto& [k, ring] : s.values) {
        Money sum;
        for (Money v : ring) sum += v;
        out.value_history[k] = sum;
    }
    for (const auto& [k, ring] : s.bits) out.participation[k] = std::vector<bool>(ring.begin(), ring.end());
    return out;
}

CoalitionStructure choose_structure(const std::vector<Server>& reports, int available, const ScenarioConfig& config) {
    auto agg = aggregate_history(reports);
    if (agg.pcs.empty()) return bootstrap_structure(available, config.bootstrap_coalition_size);
    // Singletons of zero value let the history entries be combined with servers
    // that have no usable record.
    std::vector<PcsEntry> pcs = agg.pcs;
    for (int i = 0; i < available; ++i) pcs.push_back({1, 1, Money{}});
    try {
        return optimal_structure(pcs, available);
    } catch (const InfeasibleError&) {
        return bootstrap_structure(available, config.bootstrap_coalition_size);
    }
}

void check_conservation(const AuctionOutcome& outcome, int kappa) {
    auto sold = sold_capacity(outcome);
    std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> offered;
    for (const auto& r : outcome.offered)
        for (int j = r.start; j < r.end(); ++j) offered[{r.coalition, r.service, j}] += r.capacity;
    for (int j = 0; j < kappa; ++j)
        for (const auto& spot : spot_pool(outcome, j)) {
            auto key = std::tuple{spot.coalition, spot.service, j};
            auto it = sold.find(key);
            const Quantity s = it == sold.end() ? 0 : it->second;
            if (s + spot.quantity != offered.at(key)) throw InvariantError("sold + spot != offered");
        }
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::string number_cell(const std::optional<double>& v) {
    if (!v) return {};
    return nlohmann::json(*v).dump();
}

}  // namespace

AuctionOptions auction_options(const ScenarioConfig& config) {
    AuctionOptions o;
    o.literal_capacity_eq = config.literal_capacity_eq;
    o.objective = config.final_round_objective;
    o.overbid_penalty_rate = config.overbid_penalty_rate;
    return o;
}

AuctionScenario sample_scenario(const ScenarioConfig& config, CounterRng& rng) {
    const int kappa = config.kappa;
    AuctionScenario s;
    s.kappa = kappa;
    s.increment = config.price_increment;

    const auto n = rng.uniform_int(config.coalitions.lo, config.coalitions.hi);
    const auto m = rng.uniform_int(config.clients.lo, config.clients.hi);
    const auto nu = rng.uniform_int(config.services.lo, config.services.hi);

    std::vector<std::uint32_t> service_ids(static_cast<std::size_t>(nu));
    for (std::uint32_t i = 0; i < service_ids.size(); ++i) service_ids[i] = i;

    for (std::int64_t c = 0; c < n; ++c) {
        auto count = uniform_in(rng, config.services_per_coalition, 1, nu);
        auto ids = service_ids;
        shuffle(ids.begin(), ids.end(), rng);
        for (std::int64_t i = 0; i < count; ++i) {
            Offer o;
            o.coalition = CoalitionId{static_cast<std::uint32_t>(c)};
            o.service = ServiceId{ids[static_cast<std::size_t>(i)]};
            o.length = static_cast<int>(uniform_in(rng, config.offered_run_length, 1, kappa));
            o.start = static_cast<int>(rng.uniform_int(0, kappa - o.length));
            o.capacity = rng.uniform_int(config.capacity.lo, config.capacity.hi);
            s.offers.push_back(o);
        }
    }

    for (std::int64_t c = 0; c < m; ++c) {
        ClientRequest req;
        req.client = ClientId{static_cast<std::uint32_t>(c)};
        auto count = uniform_in(rng, config.services_per_package, 1, nu);
        auto ids = service_ids;
        shuffle(ids.begin(), ids.end(), rng);
        ids.resize(static_cast<std::size_t>(count));
        std::sort(ids.begin(), ids.end());
        for (auto id : ids) {
            ServiceRequest r;
            r.service = ServiceId{id};
            r.length = static_cast<int>(uniform_in(rng, config.requested_run_length, 1, kappa));
            r.start = static_cast<int>(rng.uniform_int(0, kappa - r.length));
            r.quantity = rng.uniform_int(config.request_quantity.lo, config.request_quantity.hi);
            r.cap = uniform_money(rng, config.price_cap);
            req.services.push_back(r);
        }
        s.clients.push_back(std::move(req));
    }

    std::map<ServiceSlot, std::vector<ClientId>> requesters;
    for (const auto& c : s.clients)
        for (const auto& r : c.services)
            for (int j = r.start; j < r.start + r.length; ++j) requesters[{r.service, j}].push_back(c.client);
    auto& bidders = s.clock_bidders.emplace();
    for (auto& [key, ids] : requesters) {
        auto b = static_cast<std::size_t>(rng.uniform_int(config.bidders_per_service_slot.lo, config.bidders_per_service_slot.hi));
        if (b < ids.size()) {
            shuffle(ids.begin(), ids.end(), rng);
            ids.resize(b);
            std::sort(ids.begin(), ids.end());
        }
        if (!ids.empty()) bidders[key] = ids;
    }
    return s;
}

std::uint64_t run_seed(std::uint64_t master, std::size_t batch, std::size_t run) {
    return CounterRng::stream(master, {CounterRng::tag("run"), batch, run}).next();
}

std::string scenario_digest(const std::vector<AuctionScenario>& scenarios) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : scenarios) {
        nlohmann::json j = s;
        for (unsigned char c : j.dump()) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    }
    return hex64(h);
}

RunRecord run_two_stage(const ScenarioConfig& config, std::uint64_t seed, int windows, bool trace) {
    if (windows < 1) throw DomainError("at least one window is required");
    if (auto errors = validate_scenario(config); !errors.empty()) throw ConfigError(errors.front());

    RunRecord record;
    record.seed = seed;
    const auto options = auction_options(config);
    const int w = config.history_window;
    std::vector<Rack> racks;
    std::vector<AuctionScenario> sampled;

    for (int window = 1; window <= windows; ++window) {
        const std::uint64_t wl = static_cast<std::uint64_t>(window);
        auto scen_rng = CounterRng::stream(seed, {CounterRng::tag("scenario"), wl});
        WindowRecord wr;
        wr.window = window;
        wr.scenario = sample_scenario(config, scen_rng);
        std::size_t n = 0;
        for (const auto& o : wr.scenario.offers) n = std::max<std::size_t>(n, o.coalition.value + 1);

        // Stage A: coalition formation, rack by rack until n coalitions exist.
        struct Formed {
            Coalition coalition;
            std::size_t rack;
        };
        std::vector<Formed> formed;
        for (std::size_t r = 0; formed.size() < n; ++r) {
            if (r == racks.size()) {
                auto cost_rng = CounterRng::stream(seed, {CounterRng::tag("rack"), r});
                Rack rack;
                rack.id = RackId{static_cast<std::uint32_t>(r)};
                for (int i = 0; i < config.rack_size; ++i)
                    rack.servers.push_back({ServerId{static_cast<std::uint32_t>(r * config.rack_size + i)},
                                            uniform_money(cost_rng, config.server_cost), {}, {}});
                racks.push_back(std::move(rack));
            }
            auto avail_rng = CounterRng::stream(seed, {CounterRng::tag("availability"), wl, r});
            std::vector<Server> reports;
            int available = 0;
            for (const auto& s : racks[r].servers) {
                bool up = avail_rng.bernoulli(config.availability);
                available += up;
                reports.push_back(report(s, racks[r].id, up));
            }
            if (available == 0) continue;
            auto structure = choose_structure(reports, available, config);
            auto assignment = assign_and_elect(structure, reports);
            wr.structures.push_back(structure);
            for (auto& c : assignment.coalitions) {
                if (formed.size() == n) break;
                formed.push_back({std::move(c), r});
            }
        }

        // Price consensus inside every coalition.
        std::map<std::uint32_t, Money> asks;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& f = formed[i];
            const auto& rack = racks[f.rack];
            auto cons_rng = CounterRng::stream(seed, {CounterRng::tag("consensus"), wl, i});
            Quantity capacity = 0;
            for (const auto& o : wr.scenario.offers)
                if (o.coalition.value == i) capacity = std::max(capacity, o.capacity);
            const auto k = static_cast<Quantity>(f.coalition.members.size());

            std::vector<PriceProposalContext::Member> members;
            std::vector<NodeId> nodes;
            std::vector<Money> costs;
            // Leader first so it drives the instance.
            std::vector<ServerId> order = f.coalition.members;
            std::stable_partition(order.begin(), order.end(), [&](ServerId s) { return s == f.coalition.leader; });
            for (std::size_t m = 0; m < order.size(); ++m) {
                const auto& state = rack.servers[order[m].value - rack.servers.front().id.value];
                Quantity q = capacity / k + (static_cast<Quantity>(m) < capacity % k ? 1 : 0);
                members.push_back({std::max<Quantity>(q, 1), state.cost});
                costs.push_back(state.cost);
                nodes.push_back(NodeId{order[m].value});
            }
            PriceProposalContext ctx(members);
            std::vector<Money> proposals;
            for (std::size_t m = 0; m < order.size(); ++m) proposals.push_back(ctx.floor() + uniform_money(cons_rng, config.markup));

            SimNet<ConsensusMessage> net({config.loss, 1, cons_rng.next()});
            ConsensusOptions copt;
            copt.max_rounds = static_cast<std::uint32_t>(config.consensus_max_rounds);
            auto outcome = run_price_consensus(ctx, proposals, nodes, net, copt);
            const CoalitionId cid{static_cast<std::uint32_t>(i)};
            auto decision = decision_record(cid, outcome);
            decision["size"] = f.coalition.members.size();
            decision["leader"] = f.coalition.leader.value;
            wr.decisions.push_back(decision);
            if (outcome.decided) {
                if (outcome.price < ctx.floor()) throw InvariantError("agreed price below the cost floor");
                asks[cid.value] = outcome.price;
            } else {
                record.log.push_back("window " + std::to_string(window) + ": coalition " + std::to_string(i) +
                                     " reached no price agreement and does not offer");
            }
        }
        std::erase_if(wr.scenario.offers, [&](const Offer& o) { return !asks.contains(o.coalition.value); });
        for (auto& o : wr.scenario.offers) o.ask = asks.at(o.coalition.value);

        // Stage B.
        AuctionTrace auction_trace;
        wr.outcome = run_auction(wr.scenario, options, trace ? &auction_trace : nullptr);
        check_conservation(wr.outcome, wr.scenario.kappa);
        wr.metrics = compute_indices(wr.outcome, wr.scenario);
        if (trace)
            for (auto& line : auction_trace.records) {
                line["window"] = window;
                record.trace_jsonl += line.dump();
                record.trace_jsonl += '\n';
            }

        // Feedback: credit each packaged win to the members of the selling coalition.
        std::map<std::uint32_t, Money> earned;
        for (const auto& p : wr.outcome.packages)
            for (auto id : p.wins) {
                const auto& win = wr.outcome.wins.at(id);
                earned[win.run.coalition.value] += win.revenue();
            }
        std::map<std::uint32_t, std::pair<int, Money>> credit;  // server -> (size, value)
        for (const auto& [cid, value] : earned) {
            const auto& c = formed[cid].coalition;
            const int k = static_cast<int>(c.members.size());
            Money share = divide_round_half_up(value, k);
            for (auto s : c.members) credit[s.value] = {k, share};
        }
        for (auto& rack : racks)
            for (auto& s : rack.servers) {
                auto it = credit.find(s.id.value);
                if (it != credit.end() && !s.values.contains(it->second.first)) {
                    s.values[it->second.first] = std::deque<Money>(static_cast<std::size_t>(w), Money{});
                    s.bits[it->second.first] = std::deque<bool>(static_cast<std::size_t>(w), false);
                }
                for (auto& [k, ring] : s.values) {
                    const bool hit = it != credit.end() && it->second.first == k;
                    ring.pop_front();
                    ring.push_back(hit ? it->second.second : Money{});
                    auto& bits = s.bits[k];
                    bits.pop_front();
                    bits.push_back(hit);
                }
            }

        sampled.push_back(wr.scenario);
        record.windows.push_back(std::move(wr));
    }
    record.digest = scenario_digest(sampled);
    return record;
}

BatchResult run_batches(const ScenarioConfig& config, std::size_t batches, std::size_t runs, const BatchOptions& options) {
    if (batches < 2) throw InsufficientDataError("at least two batches are required");
    if (runs < 1) throw DomainError("at least one run per batch is required");
    if (auto errors = validate_scenario(config); !errors.empty()) throw ConfigError(errors.front());

    const std::size_t total = batches * runs;
    std::vector<std::vector<MetricsReport>> per_run(total);
    std::vector<std::exception_ptr> errors(total);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                const std::size_t b = i / runs, r = i % runs;
                auto record = run_two_stage(config, run_seed(config.seed, b, r), options.windows, options.trace);
                record.batch = b;
                record.run = r;
                for (const auto& wr : record.windows) per_run[i].push_back(wr.metrics);
                if (options.on_record) options.on_record(record);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    BatchResult result;
    result.reports.resize(batches);
    std::vector<std::vector<MetricsReport>> last(batches);
    for (std::size_t i = 0; i < total; ++i) {
        last[i / runs].push_back(per_run[i].back());
        result.reports[i / runs].push_back(std::move(per_run[i]));
    }
    result.stats = batch_statistics(last);
    return result;
}

void write_per_slot_csv(std::ostream& out, const BatchResult& result) {
    out << "batch,run,window,slot";
    for (const auto& name : per_slot_metric_names()) out << ',' << name;
    out << '\n';
    for (std::size_t b = 0; b < result.reports.size(); ++b)
        for (std::size_t r = 0; r < result.reports[b].size(); ++r)
            for (std::size_t w = 0; w < result.reports[b][r].size(); ++w) {
                const auto& rep = result.reports[b][r][w];
                for (std::size_t j = 0; j < rep.customer_satisfaction.size(); ++j) {
                    out << b << ',' << r << ',' << w + 1 << ',' << j;
                    for (const auto& name : per_slot_metric_names()) out << ',' << number_cell(per_slot_values(rep, name)[j]);
                    out << '\n';
                }
            }
}

nlohmann::json record_json(const RunRecord& record, bool full) {
    nlohmann::json j = {{"batch", record.batch}, {"run", record.run}, {"seed", record.seed}, {"digest", record.digest}};
    auto& list = j["windows"] = nlohmann::json::array();
    for (const auto& wr : record.windows) {
        nlohmann::json w = {{"window", wr.window},
                            {"structures", wr.structures},
                            {"decisions", wr.decisions},
                            {"metrics", wr.metrics}};
        if (full) {
            w["scenario"] = wr.scenario;
            w["outcome"] = wr.outcome;
        }
        list.push_back(std::move(w));
    }
    j["log"] = record.log;
    return j;
}

}  // namespace cpa
