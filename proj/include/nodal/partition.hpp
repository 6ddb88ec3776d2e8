#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "nodal/error.hpp"
#include "nodal/linalg.hpp"

namespace nodal {

enum class DomainKind { Circle, Rectangle, Torus };

inline const char* to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Circle: return "circle";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::Torus: return "torus";
  }
  return "unknown";
}

/// Model domain. A circle uses `length_x` as its circumference; rectangles and
/// flat tori are [0, length_x] x [0, length_y].
struct Domain {
  DomainKind kind = DomainKind::Rectangle;
  double length_x = 1.0;
  double length_y = 1.0;

  static Domain circle(double circumference) { return {DomainKind::Circle, circumference, 0.0}; }
  static Domain rectangle(double a, double b) { return {DomainKind::Rectangle, a, b}; }
  static Domain unit_square() { return {DomainKind::Rectangle, 1.0, 1.0}; }
  static Domain torus(double a, double b) { return {DomainKind::Torus, a, b}; }

  /// Length (circle) or area (two-dimensional domains).
  double measure() const {
    return kind == DomainKind::Circle ? length_x : length_x * length_y;
  }
};

struct Subdomain {
  int id = 0;
  double measure = 0.0;  // arc length or area
  std::string label;
};

/// One sample of an interface curve: arclength parameter and position.
struct PolylinePoint {
  double param = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// A connected component of the partition boundary shared by two subdomains.
/// `chi[s]` is nu . nu_j for subdomain `subdomains[s]`, with nu the chosen unit
/// normal on this component and nu_j that subdomain's outward normal.
struct Interface {
  int id = 0;
  std::array<int, 2> subdomains{0, 0};
  std::array<int, 2> chi{1, -1};
  std::vector<PolylinePoint> polyline;
};

struct Partition {
  Domain domain;
  std::vector<Subdomain> subdomains;
  std::vector<Interface> interfaces;

  int size() const { return static_cast<int>(subdomains.size()); }
};

/// Throws MalformedPartition when an invariant fails. `measure_tol` is the
/// relative tolerance on the subdomain measure budget (negative skips it).
inline void validate(const Partition& p, double measure_tol = 1e-12) {
  const int k = p.size();
  if (k == 0) throw Error(ErrorCode::MalformedPartition, "partition has no subdomains");
  for (int j = 0; j < k; ++j) {
    if (p.subdomains[j].id != j)
      throw Error(ErrorCode::MalformedPartition, "subdomain ids must be 0..k-1 in order");
    if (!(p.subdomains[j].measure > 0.0))
      throw Error(ErrorCode::MalformedPartition,
                  "subdomain " + std::to_string(j) + " has nonpositive measure");
  }
  for (std::size_t i = 0; i < p.interfaces.size(); ++i) {
    const Interface& f = p.interfaces[i];
    if (f.id != static_cast<int>(i))
      throw Error(ErrorCode::MalformedPartition, "interface ids must be 0..m-1 in order");
    const auto [s0, s1] = f.subdomains;
    if (s0 < 0 || s0 >= k || s1 < 0 || s1 >= k)
      throw Error(ErrorCode::MalformedPartition,
                  "interface " + std::to_string(i) + " references an unknown subdomain");
    if (s0 == s1)
      throw Error(ErrorCode::MalformedPartition,
                  "interface " + std::to_string(i) + " must separate two distinct subdomains");
    if (std::abs(f.chi[0]) != 1 || f.chi[0] != -f.chi[1])
      throw Error(ErrorCode::MalformedPartition,
                  "interface " + std::to_string(i) + " has inconsistent orientation signs");
  }
  if (measure_tol >= 0.0) {
    double total = 0.0;
    for (const auto& s : p.subdomains) total += s.measure;
    const double expected = p.domain.measure();
    if (std::abs(total - expected) > measure_tol * expected)
      throw Error(ErrorCode::MalformedPartition, "subdomain measures do not cover the domain");
  }
}

/// Multigraph over subdomain ids; one edge per interface component.
struct NeighborGraph {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;  // edge e comes from interface e
  std::vector<std::vector<int>> adjacency;  // neighbor ids, with repetition

  bool has_edge(int a, int b) const {
    for (const auto& [u, v] : edges)
      if ((u == a && v == b) || (u == b && v == a)) return true;
    return false;
  }
};

inline NeighborGraph build_neighbor_graph(const Partition& p) {
  validate(p, -1.0);
  NeighborGraph g;
  g.vertex_count = p.size();
  g.adjacency.assign(p.size(), {});
  for (const auto& f : p.interfaces) {
    g.edges.emplace_back(f.subdomains[0], f.subdomains[1]);
    g.adjacency[f.subdomains[0]].push_back(f.subdomains[1]);
    g.adjacency[f.subdomains[1]].push_back(f.subdomains[0]);
  }
  return g;
}

/// Two-coloring eta with eta(0) = +1 on each connected component, or nullopt
/// for a graph with an odd cycle.
inline std::optional<std::vector<int>> check_bipartite(const Partition& p) {
  const NeighborGraph g = build_neighbor_graph(p);
  std::vector<int> eta(g.vertex_count, 0);
  for (int start = 0; start < g.vertex_count; ++start) {
    if (eta[start] != 0) continue;
    eta[start] = 1;
    std::queue<int> frontier;
    frontier.push(start);
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      for (int v : g.adjacency[u]) {
        if (eta[v] == 0) {
          eta[v] = -eta[u];
          frontier.push(v);
        } else if (eta[v] == eta[u]) {
          return std::nullopt;
        }
      }
    }
  }
  return eta;
}

/// One (subdomain, interface) incidence with its sign chi = nu . nu_j.
struct ChiIncidence {
  int subdomain = 0;
  int interface = 0;
  int side = 0;
  int chi = 1;
};

struct ChiAssignment {
  std::vector<ChiIncidence> incidences;

  /// True when chi is constant on the boundary of every subdomain.
  bool constant_per_subdomain(int subdomain_count) const {
    std::vector<int> seen(subdomain_count, 0);
    for (const auto& inc : incidences) {
      if (seen[inc.subdomain] == 0) seen[inc.subdomain] = inc.chi;
      else if (seen[inc.subdomain] != inc.chi) return false;
    }
    return true;
  }
};

inline ChiAssignment chi_assignment(const Partition& p) {
  ChiAssignment out;
  for (const auto& f : p.interfaces)
    for (int s = 0; s < 2; ++s) out.incidences.push_back({f.subdomains[s], f.id, s, f.chi[s]});
  return out;
}

/// Orientation nu = eta_j nu_j on the boundary of each subdomain, which makes
/// every chi_j constant (equal to eta_j).
inline Partition orient_by_coloring(Partition p, const std::vector<int>& eta) {
  for (auto& f : p.interfaces) {
    f.chi = {eta.at(f.subdomains[0]), eta.at(f.subdomains[1])};
    if (f.chi[0] != -f.chi[1])
      throw Error(ErrorCode::InvalidArgument, "coloring does not separate interface neighbors");
  }
  return p;
}

/// Reverses the chosen normal on one interface component.
inline Partition flip_orientation(Partition p, int interface_id) {
  auto& f = p.interfaces.at(interface_id);
  f.chi = {-f.chi[0], -f.chi[1]};
  return p;
}

/// Quadrature nodes on the partition boundary. Each node sits on one interface
/// component; `weight` is its trapezoid (or counting) weight.
struct InterfaceNode {
  int interface = 0;
  double param = 0.0;
  double x = 0.0;
  double y = 0.0;
  double weight = 0.0;
};

struct InterfaceMesh {
  std::vector<InterfaceNode> nodes;

  int size() const { return static_cast<int>(nodes.size()); }

  Vector weights() const {
    Vector w(size());
    for (int i = 0; i < size(); ++i) w(i) = nodes[i].weight;
    return w;
  }

  double dot(const Vector& u, const Vector& v) const {
    double s = 0.0;
    for (int i = 0; i < size(); ++i) s += nodes[i].weight * u(i) * v(i);
    return s;
  }

  double norm(const Vector& u) const { return std::sqrt(dot(u, u)); }
};

/// Mesh whose nodes are exactly the polyline samples of every interface, with
/// uniform weight `spacing` (use 1 for point interfaces).
inline InterfaceMesh mesh_from_polylines(const Partition& p, double spacing) {
  InterfaceMesh mesh;
  for (const auto& f : p.interfaces)
    for (const auto& pt : f.polyline) mesh.nodes.push_back({f.id, pt.param, pt.x, pt.y, spacing});
  return mesh;
}

}  // namespace nodal
