#include "cpa/model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cpa/errors.hpp"

namespace cpa {

namespace {

void check_range(std::vector<std::string>& out, const std::string& name, const IntRange& r,
                 std::int64_t min_lo) {
    if (r.lo > r.hi) out.push_back("interval bounds inverted: " + name);
    if (r.lo < min_lo) out.push_back(name + " lower bound must be >= " + std::to_string(min_lo));
}

void check_range(std::vector<std::string>& out, const std::string& name, const MoneyRange& r) {
    if (r.lo > r.hi) out.push_back("interval bounds inverted: " + name);
    if (r.lo < Money{}) out.push_back(name + " must be non-negative");
}

}  // namespace

std::vector<std::string> validate_scenario(const ScenarioConfig& c) {
    std::vector<std::string> out;
    if (c.kappa < 1) out.push_back("kappa >= 1");
    if (c.price_increment <= Money{}) out.push_back("price_increment > 0");
    check_range(out, "coalitions", c.coalitions, 0);
    check_range(out, "clients", c.clients, 0);
    check_range(out, "services", c.services, 1);
    check_range(out, "bidders_per_service_slot", c.bidders_per_service_slot, 0);
    check_range(out, "capacity", c.capacity, 1);
    check_range(out, "services_per_coalition", c.services_per_coalition, 1);
    check_range(out, "offered_run_length", c.offered_run_length, 1);
    check_range(out, "services_per_package", c.services_per_package, 1);
    check_range(out, "requested_run_length", c.requested_run_length, 1);
    check_range(out, "request_quantity", c.request_quantity, 1);
    check_range(out, "price_cap", c.price_cap);
    check_range(out, "server_cost", c.server_cost);
    check_range(out, "markup", c.markup);
    if (c.kappa >= 1) {
        if (c.offered_run_length.hi > c.kappa) out.push_back("offered_run_length exceeds kappa");
        if (c.requested_run_length.hi > c.kappa) out.push_back("requested_run_length exceeds kappa");
    }
    if (c.capacity.hi > c.server_capacity * c.rack_size) out.push_back("capacity exceeds rack capacity");
    if (c.history_window < 1) out.push_back("history_window >= 1");
    if (c.rack_size < 1) out.push_back("rack_size >= 1");
    if (c.server_capacity < 1) out.push_back("server_capacity >= 1");
    if (c.bootstrap_coalition_size < 1) out.push_back("bootstrap_coalition_size >= 1");
    if (c.consensus_max_rounds < 1) out.push_back("consensus_max_rounds >= 1");
    if (!(c.availability >= 0.0 && c.availability <= 1.0)) out.push_back("availability in [0,1]");
    if (!(c.loss >= 0.0 && c.loss <= 1.0)) out.push_back("loss in [0,1]");
    if (!(c.overbid_penalty_rate >= 0.0)) out.push_back("overbid_penalty_rate >= 0");
    return out;
}

std::vector<std::string> validate(const ServiceType& s) {
    std::vector<std::string> out;
    if (s.attributes.empty()) out.push_back("service has no attributes");
    std::set<std::uint32_t> seen;
    for (const auto& [attr, value] : s.attributes)
        if (!seen.insert(attr).second) out.push_back("duplicate attribute id " + std::to_string(attr));
    return out;
}

std::vector<std::string> validate(const SlotIndex& s, int kappa) {
    if (s.value < 0 || s.value >= kappa) return {"slot " + std::to_string(s.value) + " outside [0, kappa)"};
    return {};
}

std::vector<std::string> validate(const Server& s, int window) {
    std::vector<std::string> out;
    for (const auto& [k, v] : s.value_history)
        if (v < Money{}) out.push_back("negative value for size " + std::to_string(k));
    for (const auto& [k, bits] : s.participation)
        if (static_cast<int>(bits.size()) != window)
            out.push_back("participation vector for size " + std::to_string(k) + " has wrong length");
    return out;
}

std::vector<std::string> validate(const ReservationBundle& b, int kappa) {
    auto out = validate(b.slot, kappa);
    std::set<ServiceId> seen;
    for (const auto& d : b.demands) {
        if (d.quantity <= 0) out.push_back("non-positive demand quantity");
        if (!seen.insert(d.service).second) out.push_back("service demanded twice in one slot");
    }
    return out;
}

std::vector<std::string> validate(const AdvertisedBundle& b, int kappa) {
    auto out = validate(b.slot, kappa);
    for (const auto& o : b.offers) {
        if (o.quantity <= 0) out.push_back("non-positive offered quantity");
        if (o.ask <= Money{}) out.push_back("non-positive ask price");
    }
    return out;
}

std::vector<std::string> validate(const Package& p, int kappa) {
    std::vector<std::string> out;
    std::set<int> slots;
    for (const auto& part : p.parts) {
        if (part.client != p.client) out.push_back("package part belongs to another client");
        if (!slots.insert(part.slot.value).second) out.push_back("package has two parts for one slot");
        auto sub = validate(part, kappa);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const Money& m) { j = m.micros; }
void from_json(const nlohmann::json& j, Money& m) { m.micros = j.get<std::int64_t>(); }

void to_json(nlohmann::json& j, const SlotIndex& s) { j = s.value; }
void from_json(const nlohmann::json& j, SlotIndex& s) { s.value = j.get<int>(); }

void to_json(nlohmann::json& j, const ServiceType& s) {
    j = {{"service", s.service}, {"attributes", nlohmann::json::array()}};
    for (const auto& [a, v] : s.attributes) j["attributes"].push_back({a, v});
}
void from_json(const nlohmann::json& j, ServiceType& s) {
    j.at("service").get_to(s.service);
    s.attributes.clear();
    for (const auto& p : j.at("attributes")) s.attributes.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>());
}

void to_json(nlohmann::json& j, const Server& s) {
    j = {{"server_id", s.server_id}, {"rack_id", s.rack_id}, {"available", s.available}};
    auto& values = j["value_history"] = nlohmann::json::array();
    for (const auto& [k, v] : s.value_history) values.push_back({k, v});
    auto& parts = j["participation"] = nlohmann::json::array();
    for (const auto& [k, bits] : s.participation) {
        std::string text;
        for (bool b : bits) text += b ? '1' : '0';
        parts.push_back({k, text});
    }
}
void from_json(const nlohmann::json& j, Server& s) {
    j.at("server_id").get_to(s.server_id);
    j.at("rack_id").get_to(s.rack_id);
    j.at("available").get_to(s.available);
    s.value_history.clear();
    for (const auto& p : j.at("value_history")) s.value_history[p.at(0).get<int>()] = p.at(1).get<Money>();
    s.participation.clear();
    for (const auto& p : j.at("participation")) {
        auto text = p.at(1).get<std::string>();
        std::vector<bool> bits;
        for (char c : text) {
            if (c != '0' && c != '1') throw FormatError("participation bits must be 0/1");
            bits.push_back(c == '1');
        }
        s.participation[p.at(0).get<int>()] = std::move(bits);
    }
}

void to_json(nlohmann::json& j, const ServiceDemand& d) { j = {d.service, d.quantity}; }
void from_json(const nlohmann::json& j, ServiceDemand& d) {
    j.at(0).get_to(d.service);
    j.at(1).get_to(d.quantity);
}

void to_json(nlohmann::json& j, const ReservationBundle& b) {
    j = {{"client", b.client}, {"slot", b.slot}, {"demands", b.demands}};
}
void from_json(const nlohmann::json& j, ReservationBundle& b) {
    j.at("client").get_to(b.client);
    j.at("slot").get_to(b.slot);
    j.at("demands").get_to(b.demands);
}

void to_json(nlohmann::json& j, const ServiceOffer& o) { j = {o.service, o.quantity, o.ask}; }
void from_json(const nlohmann::json& j, ServiceOffer& o) {
    j.at(0).get_to(o.service);
    j.at(1).get_to(o.quantity);
    j.at(2).get_to(o.ask);
}

void to_json(nlohmann::json& j, const AdvertisedBundle& b) {
    j = {{"coalition", b.coalition}, {"slot", b.slot}, {"offers", b.offers}};
}
void from_json(const nlohmann::json& j, AdvertisedBundle& b) {
    j.at("coalition").get_to(b.coalition);
    j.at("slot").get_to(b.slot);
    j.at("offers").get_to(b.offers);
}

void to_json(nlohmann::json& j, const Package& p) { j = {{"client", p.client}, {"parts", p.parts}}; }
void from_json(const nlohmann::json& j, Package& p) {
    j.at("client").get_to(p.client);
    j.at("parts").get_to(p.parts);
}

// Config documents quote prices in decimal units and intervals as 2-arrays.
namespace {

IntRange read_int_range(const nlohmann::json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw FormatError(key + ": expected a 2-element integer array");
    return {v[0].get<std::int64_t>(), v[1].get<std::int64_t>()};
}

Money read_money(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw FormatError(key + ": expected a number");
    return Money::from_decimal(v.get<double>());
}

MoneyRange read_money_range(const nlohmann::json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) throw FormatError(key + ": expected a 2-element array");
    return {read_money(v[0], key), read_money(v[1], key)};
}

nlohmann::json money_units(Money m) {
    if (m.micros % Money::kScale == 0) return m.micros / Money::kScale;
    return m.to_units();
}

template <class T>
T read_scalar(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(key + ": wrong type");
    }
}

}  // namespace

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
    auto ir = [](const IntRange& r) { return nlohmann::json::array({r.lo, r.hi}); };
    auto mr = [](const MoneyRange& r) { return nlohmann::json::array({money_units(r.lo), money_units(r.hi)}); };
    j = nlohmann::json::object();
    j["coalitions"] = ir(c.coalitions);
    j["clients"] = ir(c.clients);
    j["services"] = ir(c.services);
    j["bidders_per_service_slot"] = ir(c.bidders_per_service_slot);
    j["capacity"] = ir(c.capacity);
    j["services_per_coalition"] = ir(c.services_per_coalition);
    j["offered_run_length"] = ir(c.offered_run_length);
    j["services_per_package"] = ir(c.services_per_package);
    j["requested_run_length"] = ir(c.requested_run_length);
    j["kappa"] = c.kappa;
    j["price_increment"] = money_units(c.price_increment);
    j["price_cap"] = mr(c.price_cap);
    j["history_window"] = c.history_window;
    j["seed"] = c.seed;
    j["request_quantity"] = ir(c.request_quantity);
    j["server_cost"] = mr(c.server_cost);
    j["markup"] = mr(c.markup);
    j["rack_size"] = c.rack_size;
    j["server_capacity"] = c.server_capacity;
    j["availability"] = c.availability;
    j["bootstrap_coalition_size"] = c.bootstrap_coalition_size;
    j["consensus_max_rounds"] = c.consensus_max_rounds;
    j["loss"] = c.loss;
    j["literal_capacity_eq"] = c.literal_capacity_eq;
    j["final_round_objective"] =
        c.final_round_objective == FinalRoundObjective::coverage_first ? "coverage_first" : "revenue_first";
    j["overbid_penalty_rate"] = c.overbid_penalty_rate;
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) { c = parse_config(j); }

ScenarioConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw FormatError("config must be a JSON object");
    ScenarioConfig c;
    for (const auto& [key, v] : doc.items()) {
        if (key == "coalitions") c.coalitions = read_int_range(v, key);
        else if (key == "clients") c.clients = read_int_range(v, key);
        else if (key == "services") c.services = read_int_range(v, key);
        else if (key == "bidders_per_service_slot") c.bidders_per_service_slot = read_int_range(v, key);
        else if (key == "capacity") c.capacity = read_int_range(v, key);
        else if (key == "services_per_coalition") c.services_per_coalition = read_int_range(v, key);
        else if (key == "offered_run_length") c.offered_run_length = read_int_range(v, key);
        else if (key == "services_per_package") c.services_per_package = read_int_range(v, key);
        else if (key == "requested_run_length") c.requested_run_length = read_int_range(v, key);
        else if (key == "kappa") c.kappa = read_scalar<int>(v, key);
        else if (key == "price_increment") c.price_increment = read_money(v, key);
        else if (key == "price_cap") c.price_cap = read_money_range(v, key);
        else if (key == "history_window") c.history_window = read_scalar<int>(v, key);
        else if (key == "seed") c.seed = read_scalar<std::uint64_t>(v, key);
        else if (key == "request_quantity") c.request_quantity = read_int_range(v, key);
        else if (key == "server_cost") c.server_cost = read_money_range(v, key);
        else if (key == "markup") c.markup = read_money_range(v, key);
        else if (key == "rack_size") c.rack_size = read_scalar<int>(v, key);
        else if (key == "server_capacity") c.server_capacity = read_scalar<Quantity>(v, key);
        else if (key == "availability") c.availability = read_scalar<double>(v, key);
        else if (key == "bootstrap_coalition_size") c.bootstrap_coalition_size = read_scalar<int>(v, key);
        else if (key == "consensus_max_rounds") c.consensus_max_rounds = read_scalar<int>(v, key);
        else if (key == "loss") c.loss = read_scalar<double>(v, key);
        else if (key == "literal_capacity_eq") c.literal_capacity_eq = read_scalar<bool>(v, key);
        else if (key == "overbid_penalty_rate") c.overbid_penalty_rate = read_scalar<double>(v, key);
        else if (key == "final_round_objective") {
            auto s = read_scalar<std::string>(v, key);
            if (s == "coverage_first") c.final_round_objective = FinalRoundObjective::coverage_first;
            else if (s == "revenue_first") c.final_round_objective = FinalRoundObjective::revenue_first;
            else throw FormatError("final_round_objective: expected coverage_first or revenue_first");
        } else {
            throw FormatError("unknown config key: " + key);
        }
    }
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace cpa
