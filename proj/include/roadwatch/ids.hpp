#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace roadwatch {

// Integer identifier tagged by the entity it names, so a sensor id cannot be
// passed where an edge id is expected.
template <class Tag>
struct Id {
  std::uint64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint64_t v) : value(v) {}

  friend constexpr auto operator<=>(const Id&, const Id&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value; }
};

using VertexId = Id<struct VertexTag>;
using EdgeId = Id<struct EdgeTag>;
using SensorId = Id<struct SensorTag>;

}  // namespace roadwatch

template <class Tag>
struct std::hash<roadwatch::Id<Tag>> {
  std::size_t operator()(const roadwatch::Id<Tag>& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
