#include "cpa/coalition.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>

#include "cpa/errors.hpp"

namespace cpa {

BigInt stirling_second_kind(int n, int k) {
    if (n < 0 || k < 0) throw DomainError("stirling_second_kind: negative argument");
    if (k > n) throw DomainError("stirling_second_kind: k > n");
    // Row-by-row recurrence S(i, j) = j S(i-1, j) + S(i-1, j-1).
    std::vector<BigInt> row(static_cast<std::size_t>(k) + 1, 0);
    row[0] = 1;
    for (int i = 1; i <= n; ++i) {
        for (int j = std::min(i, k); j >= 1; --j) row[j] = BigInt(j) * row[j] + row[j - 1];
        row[0] = 0;
    }
    return row[k];
}

BigInt bell_number(int n) {
    if (n < 0) throw DomainError("bell_number: negative argument");
    // Bell triangle.
    std::vector<BigInt> row{1};
    for (int i = 0; i < n; ++i) {
        std::vector<BigInt> next{row.back()};
        next.reserve(row.size() + 1);
        for (const auto& x : row) next.push_back(next.back() + x);
        row = std::move(next);
    }
    return row.front();
}

HistoryAggregate aggregate_history(std::span<const Server> reports) {
    HistoryAggregate out;
    std::optional<std::size_t> window;
    for (const auto& s : reports)
        for (const auto& [k, bits] : s.participation) {
            if (!window) window = bits.size();
            else if (*window != bits.size()) throw FormatError("participation vectors have inconsistent window lengths");
        }

    std::map<int, std::int64_t> bit_count;
    std::map<int, Money> value_sum;
    for (const auto& s : reports) {
        if (!s.available) continue;
        ++out.available;
        for (const auto& [k, bits] : s.participation) bit_count[k] += std::count(bits.begin(), bits.end(), true);
        for (const auto& [k, v] : s.value_history) value_sum[k] += v;
    }
    for (const auto& [k, bits] : bit_count) {
        if (k < 1 || k > out.available) continue;
        auto occurrences = bits / k;
        if (occurrences == 0) continue;
        Money avg = divide_round_half_up(value_sum[k], occurrences);
        if (avg <= Money{}) continue;
        out.pcs.push_back({k, static_cast<int>(occurrences), avg});
    }
    std::sort(out.pcs.begin(), out.pcs.end(), [](const PcsEntry& a, const PcsEntry& b) {
        return std::tie(a.size, a.multiplicity) < std::tie(b.size, b.multiplicity);
    });
    return out;
}

namespace {

CoalitionStructure make_structure(std::span<const PcsEntry> pcs, std::vector<std::size_t> selected) {
    CoalitionStructure s;
    for (auto i : selected) {
        s.entries.push_back(pcs[i]);
        s.total_value += pcs[i].avg_value;
        s.server_count += pcs[i].servers();
    }
    s.selected = std::move(selected);
    return s;
}

}  // namespace

FeasibleStructures enumerate_feasible(std::span<const PcsEntry> pcs, int available, std::size_t cap) {
    FeasibleStructures out;
    std::vector<std::size_t> current;
    // Depth-first in lexicographic order of index sets; returns false to abort.
    auto visit = [&](auto&& self, std::size_t from, int remaining) -> bool {
        if (remaining == 0) {
            if (out.structures.size() == cap) {
                out.truncated = true;
                return false;
            }
            out.structures.push_back(make_structure(pcs, current));
            return true;
        }
        for (std::size_t j = from; j < pcs.size(); ++j) {
            if (pcs[j].servers() > remaining || pcs[j].servers() <= 0) continue;
            current.push_back(j);
            bool go_on = self(self, j + 1, remaining - pcs[j].servers());
            current.pop_back();
            if (!go_on) return false;
        }
        return true;
    };
    if (available >= 0) visit(visit, 0, available);
    return out;
}

CoalitionStructure optimal_structure(std::span<const PcsEntry> pcs, int available) {
    if (available < 0) throw InfeasibleError("negative server count");
    const std::size_t n = pcs.size();
    const auto width = static_cast<std::size_t>(available) + 1;
    // best[i * width + r]: best value completing r servers using entries i.., if any.
    std::vector<std::optional<Money>> best((n + 1) * width);
    best[n * width + 0] = Money{};
    for (std::size_t i = n; i-- > 0;) {
        const int cost = pcs[i].servers();
        for (int r = 0; r <= available; ++r) {
            std::optional<Money> value = best[(i + 1) * width + r];
            if (cost > 0 && cost <= r) {
                if (const auto& rest = best[(i + 1) * width + (r - cost)]) {
                    Money take = *rest + pcs[i].avg_value;
                    if (!value || take >= *value) value = take;
                }
            }
            best[i * width + r] = value;
        }
    }
    if (!best[available]) throw InfeasibleError("no coalition structure covers the available servers exactly");

    // Walk forward, taking an entry whenever taking it is optimal (ties: the set
    // containing the smaller index is lexicographically smaller).
    std::vector<std::size_t> selected;
    int r = available;
    for (std::size_t i = 0; i < n && r > 0; ++i) {
        const int cost = pcs[i].servers();
        if (cost <= 0 || cost > r) continue;
        const auto& rest = best[(i + 1) * width + (r - cost)];
        if (rest && *rest + pcs[i].avg_value == *best[i * width + r]) {
            selected.push_back(i);
            r -= cost;
        }
    }
    if (r != 0) throw InvariantError("optimal_structure: reconstruction failed");
    return make_structure(pcs, std::move(selected));
}

CoalitionStructure bootstrap_structure(int available, int coalition_size) {
    if (coalition_size < 1) throw DomainError("bootstrap coalition size must be positive");
    CoalitionStructure s;
    s.bootstrap = true;
    const int full = available / coalition_size;
    const int rest = available % coalition_size;
    if (full > 0) s.entries.push_back({coalition_size, full, Money{}});
    if (rest > 0) s.entries.push_back({1, rest, Money{}});
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        s.selected.push_back(i);
        s.server_count += s.entries[i].servers();
    }
    return s;
}

Money total_value(const Server& s) {
    Money total;
    for (const auto& [k, v] : s.value_history) total += v;
    return total;
}

CoalitionAssignment assign_and_elect(const CoalitionStructure& structure, std::span<const Server> servers) {
    std::vector<const Server*> pool;
    for (const auto& s : servers)
        if (s.available) pool.push_back(&s);
    if (static_cast<int>(pool.size()) != structure.server_count)
        throw InvariantError("structure covers " + std::to_string(structure.server_count) + " servers but " +
                             std::to_string(pool.size()) + " are available");

    std::vector<std::size_t> order(structure.entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return structure.entries[a].avg_value > structure.entries[b].avg_value;
    });

    auto value_at = [](const Server& s, int k) {
        auto it = s.value_history.find(k);
        return it == s.value_history.end() ? Money{} : it->second;
    };

    CoalitionAssignment out;
    for (auto idx : order) {
        const auto& entry = structure.entries[idx];
        for (int c = 0; c < entry.multiplicity; ++c) {
            const int k = entry.size;
            std::partial_sort(pool.begin(), pool.begin() + k, pool.end(), [&](const Server* a, const Server* b) {
                Money va = value_at(*a, k), vb = value_at(*b, k);
                if (va != vb) return va > vb;
                return a->server_id < b->server_id;
            });
            Coalition coalition;
            coalition.size = k;
            const Server* leader = pool.front();
            for (int m = 0; m < k; ++m) {
                const Server* s = pool[m];
                coalition.members.push_back(s->server_id);
                Money tv = total_value(*s), tl = total_value(*leader);
                if (tv > tl || (tv == tl && s->server_id < leader->server_id)) leader = s;
            }
            coalition.leader = leader->server_id;
            pool.erase(pool.begin(), pool.begin() + k);
            out.coalitions.push_back(std::move(coalition));
        }
    }
    return out;
}

namespace {

nlohmann::json units_number(Money m) {
    if (m.micros % Money::kScale == 0) return m.micros / Money::kScale;
    return m.to_units();
}

}  // namespace

void to_json(nlohmann::json& j, const PcsEntry& e) {
    j = nlohmann::json::array({e.size, e.multiplicity, units_number(e.avg_value)});
}

void from_json(const nlohmann::json& j, PcsEntry& e) {
    if (!j.is_array() || j.size() != 3) throw FormatError("PCS entry must be an [n, m, v] triplet");
    e.size = j[0].get<int>();
    e.multiplicity = j[1].get<int>();
    e.avg_value = Money::from_decimal(j[2].get<double>());
}

void to_json(nlohmann::json& j, const CoalitionStructure& s) {
    j = {{"selected", s.selected},
         {"entries", s.entries},
         {"total_value", s.total_value},
         {"server_count", s.server_count},
         {"bootstrap", s.bootstrap}};
}

void to_json(nlohmann::json& j, const Coalition& c) {
    j = {{"size", c.size}, {"members", c.members}, {"leader", c.leader}};
}

}  // namespace cpa
