#include "cpa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "cpa/errors.hpp"

namespace cpa {

namespace {

std::optional<double> ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

bool contiguous(const std::set<int>& slots) {
    return slots.empty() || *slots.rbegin() - *slots.begin() + 1 == static_cast<int>(slots.size());
}

}  // namespace

const std::vector<std::string>& per_slot_metric_names() {
    static const std::vector<std::string> names = {"customer_satisfaction",  "service_mismatch",
                                                   "service_success",        "capacity_allocation",
                                                   "temporal_fragmentation", "spot_opportunity"};
    return names;
}

const std::vector<std::string>& scalar_metric_names() {
    static const std::vector<std::string> names = {"overbidding_factor", "additional_profit"};
    return names;
}

const std::vector<std::optional<double>>& per_slot_values(const MetricsReport& r, const std::string& name) {
    if (name == "customer_satisfaction") return r.customer_satisfaction;
    if (name == "service_mismatch") return r.service_mismatch;
    if (name == "service_success") return r.service_success;
    if (name == "capacity_allocation") return r.capacity_allocation;
    if (name == "temporal_fragmentation") return r.temporal_fragmentation;
    if (name == "spot_opportunity") return r.spot_opportunity;
    throw DomainError("unknown per-slot metric " + name);
}

std::optional<double> scalar_value(const MetricsReport& r, const std::string& name) {
    if (name == "overbidding_factor") return r.overbidding_factor;
    if (name == "additional_profit") return r.additional_profit;
    throw DomainError("unknown metric " + name);
}

MetricsReport compute_indices(const AuctionOutcome& outcome, const AuctionScenario& scenario) {
    const int kappa = scenario.kappa;
    MetricsReport r;

    std::vector<const ProvisionalWin*> packaged;
    std::set<std::size_t> packaged_ids;
    for (const auto& p : outcome.packages)
        for (auto id : p.wins) {
            packaged.push_back(&outcome.wins.at(id));
            packaged_ids.insert(id);
        }

    // Sold cells.
    std::map<std::tuple<CoalitionId, ServiceId, int>, Quantity> sold;
    std::map<std::pair<ClientId, ServiceId>, std::set<int>> sale_slots;
    std::set<std::tuple<ClientId, ServiceId, int>> client_cells;
    for (const auto* w : packaged)
        for (int j = w->slot_start; j < w->slot_start + w->length; ++j) {
            sold[{w->run.coalition, w->run.service, j}] += w->quantity;
            sale_slots[{w->client, w->run.service}].insert(j);
            client_cells.insert({w->client, w->run.service, j});
        }

    for (int j = 0; j < kappa; ++j) {
        // Offers in j.
        std::set<ServiceId> offered_types, sold_types;
        double offered_q = 0, sold_q = 0;
        int offers = 0, offers_with_spot = 0;
        for (const auto& run : outcome.offered) {
            if (j < run.start || j >= run.end()) continue;
            offered_types.insert(run.service);
            auto it = sold.find({run.coalition, run.service, j});
            const Quantity s = it == sold.end() ? 0 : it->second;
            offered_q += static_cast<double>(run.capacity);
            sold_q += static_cast<double>(s);
            if (s > 0) sold_types.insert(run.service);
            ++offers;
            if (run.capacity - s > 0) ++offers_with_spot;
        }

        // Requests in j.
        std::set<ServiceId> requested_types;
        int active = 0, satisfied = 0;
        for (const auto& c : scenario.clients) {
            bool requests = false, covered = false;
            for (const auto& s : c.services) {
                if (!s.covers(j)) continue;
                requests = true;
                requested_types.insert(s.service);
                covered = covered || client_cells.contains({c.client, s.service, j});
            }
            active += requests;
            satisfied += covered;
        }
        int mismatched = 0;
        for (auto t : requested_types) mismatched += !offered_types.contains(t);

        int sales = 0, fragmented = 0;
        for (const auto& [key, slots] : sale_slots) {
            if (!slots.contains(j)) continue;
            ++sales;
            fragmented += !contiguous(slots);
        }

        r.customer_satisfaction.push_back(ratio(satisfied, active));
        r.service_mismatch.push_back(ratio(mismatched, static_cast<double>(requested_types.size())));
        r.service_success.push_back(ratio(static_cast<double>(sold_types.size()), static_cast<double>(offered_types.size())));
        r.capacity_allocation.push_back(offered_q == 0 ? std::nullopt : std::optional<double>(1.0 - sold_q / offered_q));
        r.temporal_fragmentation.push_back(ratio(fragmented, sales));
        r.spot_opportunity.push_back(ratio(offers_with_spot, offers));
    }

    double offered_cells = 0;
    for (const auto& run : outcome.offered) offered_cells += run.length;
    std::set<std::tuple<CoalitionId, ServiceId, int>> overbid_cells;
    for (const auto& w : outcome.wins) {
        if (packaged_ids.contains(w.id)) continue;
        for (int j = w.slot_start; j < w.slot_start + w.length; ++j)
            if (!sold.contains({w.run.coalition, w.run.service, j})) overbid_cells.insert({w.run.coalition, w.run.service, j});
    }
    r.overbidding_factor = ratio(static_cast<double>(overbid_cells.size()), offered_cells);

    Money extra, base;
    for (const auto* w : packaged) {
        extra += (w->price_per_slot - w->run.ask) * w->quantity * w->length;
        base += w->run.ask * w->quantity * w->length;
    }
    r.additional_profit = ratio(static_cast<double>(extra.micros), static_cast<double>(base.micros));
    return r;
}

MetricSummary t_interval(std::span<const double> batch_means) {
    const std::size_t b = batch_means.size();
    if (b < 2) throw InsufficientDataError("a confidence interval needs at least two batches");
    double mean = 0;
    for (double x : batch_means) mean += x;
    mean /= static_cast<double>(b);
    double ss = 0;
    for (double x : batch_means) ss += (x - mean) * (x - mean);
    const double s = std::sqrt(ss / static_cast<double>(b - 1));
    boost::math::students_t dist(static_cast<double>(b - 1));
    const double t = boost::math::quantile(dist, 0.975);
    return {mean, t * s / std::sqrt(static_cast<double>(b)), b};
}

std::optional<double> slot_average(const std::vector<std::optional<double>>& values) {
    double sum = 0;
    int n = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / n;
}

BatchStats batch_statistics(const std::vector<std::vector<MetricsReport>>& reports) {
    if (reports.size() < 2) throw InsufficientDataError("batch statistics need at least two batches");
    const std::size_t runs = reports.front().size();
    if (runs == 0) throw DomainError("batches must hold at least one run");
    for (const auto& batch : reports)
        if (batch.size() != runs) throw DomainError("every batch must hold the same number of runs");

    BatchStats stats;
    stats.batches = reports.size();
    stats.runs_per_batch = runs;

    auto summarize = [&](auto&& value_of) -> std::optional<MetricSummary> {
        std::vector<double> means;
        for (const auto& batch : reports) {
            double sum = 0;
            int n = 0;
            for (const auto& rep : batch)
                if (auto v = value_of(rep)) {
                    sum += *v;
                    ++n;
                }
            if (n > 0) means.push_back(sum / n);
        }
        if (means.size() < 2) return std::nullopt;
        return t_interval(means);
    };

    std::size_t kappa = 0;
    for (const auto& batch : reports)
        for (const auto& rep : batch) kappa = std::max(kappa, rep.customer_satisfaction.size());

    for (const auto& name : per_slot_metric_names()) {
        stats.overall[name] = summarize([&](const MetricsReport& rep) { return slot_average(per_slot_values(rep, name)); });
        auto& slots = stats.per_slot[name];
        for (std::size_t j = 0; j < kappa; ++j)
            slots.push_back(summarize([&](const MetricsReport& rep) -> std::optional<double> {
                const auto& v = per_slot_values(rep, name);
                return j < v.size() ? v[j] : std::nullopt;
            }));
    }
    for (const auto& name : scalar_metric_names())
        stats.overall[name] = summarize([&](const MetricsReport& rep) { return scalar_value(rep, name); });
    return stats;
}

void write_summary_csv(std::ostream& out, const BatchStats& stats) {
    auto cell = [](double x) {
        nlohmann::json j = x;
        return j.dump();
    };
    out << "metric,mean,half_width,batches,runs_per_batch\n";
    auto row = [&](const std::string& name) {
        const auto& s = stats.overall.at(name);
        out << name << ',';
        if (s) out << cell(s->mean) << ',' << cell(s->half_width) << ',' << s->batches;
        else out << ",," << 0;
        out << ',' << stats.runs_per_batch << '\n';
    };
    for (const auto& name : per_slot_metric_names()) row(name);
    for (const auto& name : scalar_metric_names()) row(name);
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json::object();
    for (const auto& name : per_slot_metric_names()) {
        auto& arr = j[name] = nlohmann::json::array();
        for (const auto& v : per_slot_values(r, name)) arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    for (const auto& name : scalar_metric_names()) {
        auto v = scalar_value(r, name);
        j[name] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    }
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
    auto slots = [&](const std::string& name, std::vector<std::optional<double>>& out) {
        out.clear();
        for (const auto& v : j.at(name)) out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    };
    slots("customer_satisfaction", r.customer_satisfaction);
    slots("service_mismatch", r.service_mismatch);
    slots("service_success", r.service_success);
    slots("capacity_allocation", r.capacity_allocation);
    slots("temporal_fragmentation", r.temporal_fragmentation);
    slots("spot_opportunity", r.spot_opportunity);
    auto scalar = [&](const std::string& name) {
        const auto& v = j.at(name);
        return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    };
    r.overbidding_factor = scalar("overbidding_factor");
    r.additional_profit = scalar("additional_profit");
}

}  // namespace cpa
