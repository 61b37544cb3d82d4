#include "roadwatch/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>
#include <string>

#include "roadwatch/error.hpp"

namespace roadwatch {

namespace {

constexpr double kEarthRadiusM = 6371008.8;

std::string describe(const char* what, std::uint64_t id) {
  std::ostringstream os;
  os << what << ' ' << id;
  return os.str();
}

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
  if (!obj.is_object()) throw InvalidNetwork(std::string(where) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidNetwork(std::string(where) + ": unknown field '" + key + "'");
  }
}

template <class T>
T required(const nlohmann::json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) throw InvalidNetwork(std::string(where) + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidNetwork(std::string(where) + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

double great_circle_m(double lat1, double lon1, double lat2, double lon2) {
  const double to_rad = std::numbers::pi / 180.0;
  const double p1 = lat1 * to_rad;
  const double p2 = lat2 * to_rad;
  const double dp = (lat2 - lat1) * to_rad;
  const double dl = (lon2 - lon1) * to_rad;
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

RoadNetwork::RoadNetwork(std::vector<Vertex> vertices, std::vector<Edge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertex_index_.emplace(vertices_[i].id, i).second)
      throw InvalidNetwork(describe("duplicate vertex", vertices_[i].id.value));
  }
  out_.resize(vertices_.size());
  in_.resize(vertices_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (!edge_index_.emplace(e.id, i).second)
      throw InvalidNetwork(describe("duplicate edge", e.id.value));
    auto from = vertex_index_.find(e.from);
    auto to = vertex_index_.find(e.to);
    if (from == vertex_index_.end() || to == vertex_index_.end())
      throw InvalidNetwork(describe("edge endpoint is not a declared vertex: edge", e.id.value));
    if (!(e.length_m > 0.0) || !std::isfinite(e.length_m))
      throw InvalidNetwork(describe("non-positive length on edge", e.id.value));
    if (!(e.freeflow_mps > 0.0) || !std::isfinite(e.freeflow_mps))
      throw InvalidNetwork(describe("non-positive free-flow speed on edge", e.id.value));
    if (e.sensor) {
      if (!sensor_edge_.emplace(*e.sensor, i).second)
        throw InvalidNetwork(describe("sensor attached to more than one edge:", e.sensor->value));
      sensor_ids_.push_back(*e.sensor);
    }
    out_[from->second].push_back(i);
    in_[to->second].push_back(i);
  }
  std::sort(sensor_ids_.begin(), sensor_ids_.end());
}

RoadNetwork RoadNetwork::from_json(const nlohmann::json& doc) {
  reject_unknown_keys(doc, {"vertices", "edges"}, "network");
  if (!doc.contains("vertices") || !doc.at("vertices").is_array())
    throw InvalidNetwork("network: 'vertices' must be an array");
  if (!doc.contains("edges") || !doc.at("edges").is_array())
    throw InvalidNetwork("network: 'edges' must be an array");

  std::vector<Vertex> vertices;
  for (const auto& v : doc.at("vertices")) {
    reject_unknown_keys(v, {"id", "lat", "lon"}, "vertex");
    vertices.push_back({VertexId{required<std::uint64_t>(v, "id", "vertex")},
                        required<double>(v, "lat", "vertex"), required<double>(v, "lon", "vertex")});
  }
  std::vector<Edge> edges;
  for (const auto& e : doc.at("edges")) {
    reject_unknown_keys(e, {"id", "from", "to", "length_m", "freeflow_mps", "sensor_id"}, "edge");
    Edge edge{EdgeId{required<std::uint64_t>(e, "id", "edge")},
              VertexId{required<std::uint64_t>(e, "from", "edge")},
              VertexId{required<std::uint64_t>(e, "to", "edge")},
              required<double>(e, "length_m", "edge"),
              required<double>(e, "freeflow_mps", "edge"),
              std::nullopt};
    if (e.contains("sensor_id") && !e.at("sensor_id").is_null())
      edge.sensor = SensorId{required<std::uint64_t>(e, "sensor_id", "edge")};
    edges.push_back(edge);
  }
  return RoadNetwork(std::move(vertices), std::move(edges));
}

RoadNetwork RoadNetwork::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidNetwork("cannot open network file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidNetwork("network file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json RoadNetwork::to_json() const {
  nlohmann::json vs = nlohmann::json::array();
  for (const Vertex& v : vertices_)
    vs.push_back({{"id", v.id.value}, {"lat", v.latitude}, {"lon", v.longitude}});
  nlohmann::json es = nlohmann::json::array();
  for (const Edge& e : edges_) {
    nlohmann::json j{{"id", e.id.value},         {"from", e.from.value},
                     {"to", e.to.value},         {"length_m", e.length_m},
                     {"freeflow_mps", e.freeflow_mps}};
    if (e.sensor) j["sensor_id"] = e.sensor->value;
    es.push_back(std::move(j));
  }
  return {{"vertices", std::move(vs)}, {"edges", std::move(es)}};
}

std::size_t RoadNetwork::vertex_index(VertexId id) const {
  auto it = vertex_index_.find(id);
  if (it == vertex_index_.end()) throw InvalidNetwork(describe("unknown vertex", id.value));
  return it->second;
}

std::optional<std::size_t> RoadNetwork::find_edge(EdgeId id) const {
  auto it = edge_index_.find(id);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t RoadNetwork::edge_index(EdgeId id) const {
  auto idx = find_edge(id);
  if (!idx) throw InvalidNetwork(describe("unknown edge", id.value));
  return *idx;
}

std::size_t RoadNetwork::sensor_edge_index(SensorId id) const {
  auto it = sensor_edge_.find(id);
  if (it == sensor_edge_.end()) throw InvalidNetwork(describe("unknown sensor", id.value));
  return it->second;
}

double RoadNetwork::sensor_distance_m(SensorId a, SensorId b) const {
  auto midpoint = [this](SensorId s) {
    const Edge& e = edges_[sensor_edge_index(s)];
    const Vertex& u = vertices_[vertex_index_.at(e.from)];
    const Vertex& v = vertices_[vertex_index_.at(e.to)];
    return std::pair{(u.latitude + v.latitude) / 2.0, (u.longitude + v.longitude) / 2.0};
  };
  auto [lat1, lon1] = midpoint(a);
  auto [lat2, lon2] = midpoint(b);
  return great_circle_m(lat1, lon1, lat2, lon2);
}

CostMap::CostMap(std::vector<double> seconds) : seconds_(std::move(seconds)) {
  for (double c : seconds_) {
    if (!std::isfinite(c) || !(c > 0.0))
      throw MissingCost("cost map entries must be finite and positive");
  }
}

CostMap edge_costs(const RoadNetwork& network, const SpeedMap& speeds, const SpeedMap& substitutions,
                   const SpeedClamp& clamp) {
  for (const auto& [sensor, _] : substitutions) {
    if (!network.has_sensor(sensor))
      throw MissingMeasurement(describe("substitution for sensor not in network:", sensor.value));
  }
  std::vector<double> seconds;
  seconds.reserve(network.edge_count());
  for (const Edge& e : network.edges()) {
    if (!e.sensor) {
      seconds.push_back(e.length_m / e.freeflow_mps);
      continue;
    }
    double speed;
    if (auto sub = substitutions.find(*e.sensor); sub != substitutions.end()) {
      speed = sub->second;
    } else if (auto m = speeds.find(*e.sensor); m != speeds.end()) {
      speed = m->second;
    } else {
      throw MissingMeasurement(describe("no measurement for sensor", e.sensor->value));
    }
    if (std::isnan(speed)) throw MissingMeasurement(describe("NaN speed for sensor", e.sensor->value));
    const double hi = clamp.max_freeflow_ratio * e.freeflow_mps;
    seconds.push_back(e.length_m / std::clamp(speed, clamp.min_mps, hi));
  }
  return CostMap(std::move(seconds));
}

Router::Router(const RoadNetwork& network, CostMap costs) : network_(&network), costs_(std::move(costs)) {
  if (costs_.size() != network.edge_count())
    throw MissingCost("cost map does not cover every edge of the network");
}

const std::vector<double>& Router::distances_to(std::size_t destination) {
  if (auto it = to_destination_.find(destination); it != to_destination_.end()) return it->second;

  std::vector<double> dist(network_->vertex_count(), kUnreachable);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[destination] = 0.0;
  heap.emplace(0.0, destination);
  const auto edges = network_->edges();
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (std::size_t ei : network_->in_edges(v)) {
      const std::size_t u = network_->vertex_index(edges[ei].from);
      const double nd = costs_[ei] + d;
      if (nd < dist[u]) {
        dist[u] = nd;
        heap.emplace(nd, u);
      }
    }
  }
  return to_destination_.emplace(destination, std::move(dist)).first->second;
}

double Router::distance(const Query& query) {
  const std::size_t o = network_->vertex_index(query.origin);
  const std::size_t d = network_->vertex_index(query.destination);
  return distances_to(d)[o];
}

Route Router::route(const Query& query) {
  const std::size_t origin = network_->vertex_index(query.origin);
  const std::size_t dest = network_->vertex_index(query.destination);
  Route route;
  if (origin == dest) return route;

  const auto& dist = distances_to(dest);
  if (dist[origin] == kUnreachable) {
    std::ostringstream os;
    os << "no route from vertex " << query.origin << " to vertex " << query.destination;
    throw Unreachable(os.str());
  }

  // Walk forward choosing, at each vertex, the tight edge (one lying on some
  // shortest path) whose head has the smallest VertexId. Greedy choice of the
  // smallest next vertex yields the lexicographically smallest sequence.
  const auto edges = network_->edges();
  std::size_t at = origin;
  for (std::size_t steps = 0; at != dest; ++steps) {
    if (steps > network_->vertex_count()) throw Unreachable("route reconstruction did not terminate");
    const double here = dist[at];
    const double tol = 1e-9 * std::max(1.0, here);
    std::optional<std::size_t> best;
    for (std::size_t ei : network_->out_edges(at)) {
      const Edge& e = edges[ei];
      const double via = costs_[ei] + dist[network_->vertex_index(e.to)];
      if (!(via <= here + tol)) continue;
      if (!best) {
        best = ei;
        continue;
      }
      const Edge& b = edges[*best];
      const double best_via = costs_[*best] + dist[network_->vertex_index(b.to)];
      if (std::tie(e.to, via, e.id) < std::tie(b.to, best_via, b.id)) best = ei;
    }
    if (!best) throw Unreachable("route reconstruction found no tight edge");
    route.path.push_back(edges[*best].id);
    route.total_cost += costs_[*best];
    at = network_->vertex_index(edges[*best].to);
  }
  return route;
}

Route shortest_path(const RoadNetwork& network, const CostMap& costs, const Query& query) {
  Router router(network, costs);
  return router.route(query);
}

DistanceTable::DistanceTable(std::vector<VertexId> order, std::vector<double> distances)
    : order_(std::move(order)), distances_(std::move(distances)) {
  for (std::size_t i = 0; i < order_.size(); ++i) index_.emplace(order_[i], i);
}

double DistanceTable::at(VertexId from, VertexId to) const {
  return distances_[index_.at(from) * order_.size() + index_.at(to)];
}

DistanceTable all_pairs_costs(const RoadNetwork& network, const CostMap& costs) {
  const std::size_t n = network.vertex_count();
  if (n > kAllPairsVertexLimit) throw InvalidNetwork("all_pairs_costs is limited to 500 vertices");
  if (costs.size() != network.edge_count())
    throw MissingCost("cost map does not cover every edge of the network");

  std::vector<double> d(n * n, kUnreachable);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  const auto edges = network.edges();
  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    const std::size_t u = network.vertex_index(edges[ei].from);
    const std::size_t v = network.vertex_index(edges[ei].to);
    d[u * n + v] = std::min(d[u * n + v], costs[ei]);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = d[i * n + k];
      if (dik == kUnreachable) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double cand = dik + d[k * n + j];
        if (cand < d[i * n + j]) d[i * n + j] = cand;
      }
    }

  std::vector<VertexId> order;
  order.reserve(n);
  for (const Vertex& v : network.vertices()) order.push_back(v.id);
  return DistanceTable(std::move(order), std::move(d));
}

double route_travel_time(const RoadNetwork& network, const Route& route, const CostMap& costs) {
  double total = 0.0;
  for (EdgeId id : route.path) {
    auto idx = network.find_edge(id);
    if (!idx || *idx >= costs.size()) throw MissingCost(describe("no cost for edge", id.value));
    total += costs[*idx];
  }
  return total;
}

}  // namespace roadwatch
