#include <algorithm>
#include <set>
#include <sstream>

#include "cpa/auction.hpp"
#include "cpa/errors.hpp"

namespace cpa {

std::vector<AdvertisedBundle> advertise(std::span<const Offer> offers) {
    std::map<std::pair<CoalitionId, int>, AdvertisedBundle> bundles;
    for (const auto& o : offers)
        for (int j = o.start; j < o.start + o.length; ++j) {
            auto& b = bundles[{o.coalition, j}];
            b.coalition = o.coalition;
            b.slot = SlotIndex{j};
            b.offers.push_back({o.service, o.capacity, o.ask});
        }
    std::vector<AdvertisedBundle> out;
    for (auto& [key, b] : bundles) {
        std::sort(b.offers.begin(), b.offers.end(),
                  [](const ServiceOffer& x, const ServiceOffer& y) { return x.service < y.service; });
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<ReservationBundle> reservation_bundles(const ClientRequest& request) {
    std::map<int, ReservationBundle> bundles;
    for (const auto& r : request.services)
        for (int j = r.start; j < r.start + r.length; ++j) {
            auto& b = bundles[j];
            b.client = request.client;
            b.slot = SlotIndex{j};
            b.demands.push_back({r.service, r.quantity});
        }
    std::vector<ReservationBundle> out;
    for (auto& [slot, b] : bundles) out.push_back(std::move(b));
    return out;
}

std::vector<std::string> validate(const AuctionScenario& s) {
    std::vector<std::string> errors;
    if (s.kappa < 1) errors.push_back("kappa >= 1");
    if (s.increment <= Money{}) errors.push_back("price increment > 0");
    auto in_window = [&](int start, int length) { return length >= 1 && start >= 0 && start + length <= s.kappa; };

    std::set<std::tuple<CoalitionId, ServiceId, int>> cells;
    for (const auto& o : s.offers) {
        const std::string who = "offer of coalition " + std::to_string(o.coalition.value);
        if (!in_window(o.start, o.length)) errors.push_back(who + ": slots outside the window");
        if (o.capacity <= 0) errors.push_back(who + ": capacity must be positive");
        if (o.ask < Money{}) errors.push_back(who + ": negative ask");
        for (int j = o.start; j < o.start + o.length && j - o.start <= s.kappa; ++j)
            if (!cells.insert({o.coalition, o.service, j}).second) {
                errors.push_back(who + ": overlapping offers for one service");
                break;
            }
    }

    std::set<ClientId> clients;
    for (const auto& c : s.clients) {
        const std::string who = "client " + std::to_string(c.client.value);
        if (!clients.insert(c.client).second) errors.push_back(who + ": duplicate client id");
        std::set<ServiceId> services;
        for (const auto& r : c.services) {
            if (!services.insert(r.service).second) errors.push_back(who + ": service requested twice");
            if (!in_window(r.start, r.length)) errors.push_back(who + ": slots outside the window");
            if (r.quantity <= 0) errors.push_back(who + ": quantity must be positive");
            if (r.cap < Money{}) errors.push_back(who + ": negative price cap");
        }
    }
    return errors;
}

AuctionOutcome run_auction(const AuctionScenario& scenario, const AuctionOptions& options, AuctionTrace* trace) {
    if (auto errors = validate(scenario); !errors.empty()) {
        std::string msg = "invalid auction scenario:";
        for (const auto& e : errors) msg += " " + e + ";";
        throw DomainError(msg);
    }
    auto commitments = run_clock_phase(scenario, options, trace);
    auto bundles = advertise(scenario.offers);
    auto runs = build_runs(bundles);
    auto prelim = preliminary_rounds(runs, scenario.clients, commitments, trace);
    return final_round(prelim.wins, scenario.clients, runs, options, trace);
}

void AuctionTrace::add(nlohmann::json record) {
    record["v"] = kSchemaVersion;
    records.push_back(std::move(record));
}

std::string AuctionTrace::to_jsonl() const {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

void to_json(nlohmann::json& j, const Offer& o) {
    j = {{"coalition", o.coalition}, {"service", o.service}, {"start", o.start},
         {"length", o.length},       {"capacity", o.capacity}, {"ask", o.ask}};
}
void from_json(const nlohmann::json& j, Offer& o) {
    j.at("coalition").get_to(o.coalition);
    j.at("service").get_to(o.service);
    j.at("start").get_to(o.start);
    j.at("length").get_to(o.length);
    j.at("capacity").get_to(o.capacity);
    j.at("ask").get_to(o.ask);
}

void to_json(nlohmann::json& j, const ServiceRequest& r) {
    j = {{"service", r.service}, {"start", r.start}, {"length", r.length}, {"quantity", r.quantity}, {"cap", r.cap}};
}
void from_json(const nlohmann::json& j, ServiceRequest& r) {
    j.at("service").get_to(r.service);
    j.at("start").get_to(r.start);
    j.at("length").get_to(r.length);
    j.at("quantity").get_to(r.quantity);
    j.at("cap").get_to(r.cap);
}

void to_json(nlohmann::json& j, const ClientRequest& r) { j = {{"client", r.client}, {"services", r.services}}; }
void from_json(const nlohmann::json& j, ClientRequest& r) {
    j.at("client").get_to(r.client);
    j.at("services").get_to(r.services);
}

void to_json(nlohmann::json& j, const AuctionScenario& s) {
    j = {{"kappa", s.kappa}, {"increment", s.increment}, {"offers", s.offers}, {"clients", s.clients}};
    if (s.clock_bidders) {
        auto& list = j["clock_bidders"] = nlohmann::json::array();
        for (const auto& [key, ids] : *s.clock_bidders)
            list.push_back({{"service", key.first}, {"slot", key.second}, {"clients", ids}});
    } else {
        j["clock_bidders"] = nullptr;
    }
}
void from_json(const nlohmann::json& j, AuctionScenario& s) {
    j.at("kappa").get_to(s.kappa);
    j.at("increment").get_to(s.increment);
    j.at("offers").get_to(s.offers);
    j.at("clients").get_to(s.clients);
    s.clock_bidders.reset();
    if (auto it = j.find("clock_bidders"); it != j.end() && !it->is_null()) {
        s.clock_bidders.emplace();
        for (const auto& e : *it)
            (*s.clock_bidders)[{e.at("service").get<ServiceId>(), e.at("slot").get<int>()}] =
                e.at("clients").get<std::vector<ClientId>>();
    }
}

void to_json(nlohmann::json& j, const RunOffer& r) {
    j = {{"coalition", r.coalition}, {"service", r.service}, {"start", r.start},
         {"length", r.length},       {"capacity", r.capacity}, {"ask", r.ask}};
}
void from_json(const nlohmann::json& j, RunOffer& r) {
    j.at("coalition").get_to(r.coalition);
    j.at("service").get_to(r.service);
    j.at("start").get_to(r.start);
    j.at("length").get_to(r.length);
    j.at("capacity").get_to(r.capacity);
    j.at("ask").get_to(r.ask);
}

void to_json(nlohmann::json& j, const ClockCommitment& c) {
    j = {{"client", c.client}, {"service", c.service}, {"slot", c.slot}, {"quantity", c.quantity}, {"price", c.committed_price}};
}
void from_json(const nlohmann::json& j, ClockCommitment& c) {
    j.at("client").get_to(c.client);
    j.at("service").get_to(c.service);
    j.at("slot").get_to(c.slot);
    j.at("quantity").get_to(c.quantity);
    j.at("price").get_to(c.committed_price);
}

void to_json(nlohmann::json& j, const ProvisionalWin& w) {
    j = {{"id", w.id},         {"client", w.client},     {"run", w.run},
         {"slot_start", w.slot_start}, {"length", w.length}, {"quantity", w.quantity},
         {"price_per_slot", w.price_per_slot}, {"round", w.round}};
}
void from_json(const nlohmann::json& j, ProvisionalWin& w) {
    j.at("id").get_to(w.id);
    j.at("client").get_to(w.client);
    j.at("run").get_to(w.run);
    j.at("slot_start").get_to(w.slot_start);
    j.at("length").get_to(w.length);
    j.at("quantity").get_to(w.quantity);
    j.at("price_per_slot").get_to(w.price_per_slot);
    j.at("round").get_to(w.round);
}

void to_json(nlohmann::json& j, const ClientPackage& p) {
    j = {{"client", p.client}, {"wins", p.wins}, {"cost", p.cost}, {"covered", p.covered}};
}
void from_json(const nlohmann::json& j, ClientPackage& p) {
    j.at("client").get_to(p.client);
    j.at("wins").get_to(p.wins);
    j.at("cost").get_to(p.cost);
    j.at("covered").get_to(p.covered);
}

void to_json(nlohmann::json& j, const AuctionOutcome& o) {
    j = {{"offered", o.offered},         {"wins", o.wins},
         {"packages", o.packages},       {"overbid", o.overbid},
         {"unsatisfied", o.unsatisfied}, {"overbid_penalty", o.overbid_penalty}};
}
void from_json(const nlohmann::json& j, AuctionOutcome& o) {
    j.at("offered").get_to(o.offered);
    j.at("wins").get_to(o.wins);
    j.at("packages").get_to(o.packages);
    j.at("overbid").get_to(o.overbid);
    j.at("unsatisfied").get_to(o.unsatisfied);
    j.at("overbid_penalty").get_to(o.overbid_penalty);
}

}  // namespace cpa
