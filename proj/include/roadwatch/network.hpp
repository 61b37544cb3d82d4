#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "roadwatch/ids.hpp"

namespace roadwatch {

struct Vertex {
  VertexId id;
  double latitude = 0.0;   // degrees
  double longitude = 0.0;  // degrees
};

struct Edge {
  EdgeId id;
  VertexId from;
  VertexId to;
  double length_m = 0.0;
  double freeflow_mps = 0.0;
  std::optional<SensorId> sensor;
};

// Directed road graph. Immutable after construction; edges keep the order
// they were given in, and every per-edge vector in the toolkit (CostMap in
// particular) is aligned with that order.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  RoadNetwork(std::vector<Vertex> vertices, std::vector<Edge> edges);

  // Strict reader for the network file format; unknown fields are rejected.
  static RoadNetwork from_json(const nlohmann::json& doc);
  static RoadNetwork load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::span<const Vertex> vertices() const { return vertices_; }
  std::span<const Edge> edges() const { return edges_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  bool has_vertex(VertexId id) const { return vertex_index_.contains(id); }
  std::size_t vertex_index(VertexId id) const;
  std::optional<std::size_t> find_edge(EdgeId id) const;
  std::size_t edge_index(EdgeId id) const;

  // Edge indices leaving / entering a vertex (by vertex index).
  std::span<const std::size_t> out_edges(std::size_t vertex) const { return out_[vertex]; }
  std::span<const std::size_t> in_edges(std::size_t vertex) const { return in_[vertex]; }

  // All sensor ids in ascending order.
  const std::vector<SensorId>& sensors() const { return sensor_ids_; }
  bool has_sensor(SensorId id) const { return sensor_edge_.contains(id); }
  std::size_t sensor_edge_index(SensorId id) const;

  // Great-circle distance in meters between the midpoints of two sensors' edges.
  double sensor_distance_m(SensorId a, SensorId b) const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::unordered_map<VertexId, std::size_t> vertex_index_;
  std::unordered_map<EdgeId, std::size_t> edge_index_;
  std::unordered_map<SensorId, std::size_t> sensor_edge_;
  std::vector<SensorId> sensor_ids_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

double great_circle_m(double lat1, double lon1, double lat2, double lon2);

// Per-edge travel time in seconds, aligned with RoadNetwork::edges().
class CostMap {
 public:
  CostMap() = default;
  explicit CostMap(std::vector<double> seconds);

  std::size_t size() const { return seconds_.size(); }
  double operator[](std::size_t edge_index) const { return seconds_[edge_index]; }
  const std::vector<double>& values() const { return seconds_; }

  friend bool operator==(const CostMap&, const CostMap&) = default;

 private:
  std::vector<double> seconds_;
};

using SpeedMap = std::map<SensorId, double>;

struct SpeedClamp {
  double min_mps = 1.0;
  double max_freeflow_ratio = 1.5;
};

// Monitored edges: length / clamp(speed, min, ratio * freeflow), where speed
// is the substituted value if present, else the measurement. Unmonitored
// edges run at free-flow speed.
CostMap edge_costs(const RoadNetwork& network, const SpeedMap& speeds,
                   const SpeedMap& substitutions = {}, const SpeedClamp& clamp = {});

struct Query {
  VertexId origin;
  VertexId destination;
  friend auto operator<=>(const Query&, const Query&) = default;
};

struct Route {
  std::vector<EdgeId> path;
  double total_cost = 0.0;  // seconds
};

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

// Answers many queries against one cost map. Distances to each destination are
// computed once (Dijkstra on the reversed graph) and cached, so batches of
// queries sharing destinations stay cheap. Not thread-safe because of the cache.
class Router {
 public:
  Router(const RoadNetwork& network, CostMap costs);

  // Minimum-cost route; among equal-cost routes the one whose vertex sequence
  // is lexicographically smallest (by VertexId). Throws Unreachable.
  Route route(const Query& query);

  // Cost of the best route, kUnreachable if none.
  double distance(const Query& query);

  const CostMap& costs() const { return costs_; }

 private:
  const std::vector<double>& distances_to(std::size_t destination);

  const RoadNetwork* network_;
  CostMap costs_;
  std::unordered_map<std::size_t, std::vector<double>> to_destination_;
};

Route shortest_path(const RoadNetwork& network, const CostMap& costs, const Query& query);

// Floyd-Warshall over the whole vertex set; test oracle for shortest_path.
class DistanceTable {
 public:
  DistanceTable(std::vector<VertexId> order, std::vector<double> distances);
  double at(VertexId from, VertexId to) const;
  const std::vector<VertexId>& vertices() const { return order_; }

 private:
  std::vector<VertexId> order_;
  std::unordered_map<VertexId, std::size_t> index_;
  std::vector<double> distances_;
};

inline constexpr std::size_t kAllPairsVertexLimit = 500;

DistanceTable all_pairs_costs(const RoadNetwork& network, const CostMap& costs);

// Sum of per-edge costs along the route; 0 for an empty route.
double route_travel_time(const RoadNetwork& network, const Route& route, const CostMap& costs);

}  // namespace roadwatch
