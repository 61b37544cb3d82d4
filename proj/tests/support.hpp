#pragma once

// Shared fixtures for unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "roadwatch/network.hpp"
#include "roadwatch/rng.hpp"

namespace roadwatch::testing {

inline Edge edge(std::uint64_t id, std::uint64_t from, std::uint64_t to, double length, double freeflow,
                 std::optional<std::uint64_t> sensor = std::nullopt) {
  Edge e{EdgeId{id}, VertexId{from}, VertexId{to}, length, freeflow, std::nullopt};
  if (sensor) e.sensor = SensorId{*sensor};
  return e;
}

inline std::vector<Vertex> line_vertices(std::uint64_t count) {
  std::vector<Vertex> vs;
  for (std::uint64_t i = 1; i <= count; ++i) vs.push_back({VertexId{i}, 34.0 + 0.001 * static_cast<double>(i), -118.0});
  return vs;
}

// A=1, B=2, C=3, D=4. Upper route A->B->D runs over sensor 10 on A->B; the
// lower route A->C->D is unmonitored. At 20 m/s everywhere the upper route
// costs 100 s and the lower one 50 + lower_second_leg_m / 20.
inline RoadNetwork diamond(double lower_second_leg_m = 1100.0) {
  return RoadNetwork(line_vertices(4), {edge(1, 1, 2, 1000, 20, 10), edge(2, 2, 4, 1000, 20),
                                        edge(3, 1, 3, 1000, 20), edge(4, 3, 4, lower_second_leg_m, 20)});
}

// Random directed graph on vertices 1..n with integer-valued costs so that
// path sums are exact in floating point.
struct RandomGraph {
  RoadNetwork network;
  CostMap costs;
};

inline RandomGraph random_graph(Engine& eng, std::uint64_t n, std::uint64_t m, int max_cost = 20) {
  std::vector<Edge> edges;
  std::vector<double> costs;
  for (std::uint64_t i = 0; i < m; ++i) {
    const std::uint64_t u = 1 + uniform_index(eng, n);
    std::uint64_t v = 1 + uniform_index(eng, n);
    if (v == u) v = 1 + (v % n);
    if (v == u) continue;
    const double c = 1.0 + static_cast<double>(uniform_index(eng, static_cast<std::uint64_t>(max_cost)));
    edges.push_back(edge(i + 1, u, v, c * 10.0, 10.0));
    costs.push_back(c);
  }
  return {RoadNetwork(line_vertices(n), std::move(edges)), CostMap(std::move(costs))};
}

}  // namespace roadwatch::testing
