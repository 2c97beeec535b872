#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace cpa {

/// Integer identifier tagged by the entity it names, so a client id cannot be
/// passed where a coalition id is expected.
template <class Tag>
struct Id {
    std::uint32_t value = 0;

    constexpr auto operator<=>(const Id&) const = default;
};

using ClientId = Id<struct ClientTag>;
using CoalitionId = Id<struct CoalitionTag>;
using ServiceId = Id<struct ServiceTag>;
using ServerId = Id<struct ServerTag>;
using RackId = Id<struct RackTag>;
using NodeId = Id<struct NodeTag>;

}  // namespace cpa

template <class Tag>
struct std::hash<cpa::Id<Tag>> {
    std::size_t operator()(const cpa::Id<Tag>& id) const noexcept {
        return std::hash<std::uint32_t>{}(id.value);
    }
};
