#pragma once

#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nodal/criticality.hpp"
#include "nodal/dtn.hpp"
#include "nodal/error.hpp"
#include "nodal/linalg.hpp"
#include "nodal/partition.hpp"

// Five-point finite differences on rectangles (Dirichlet) and flat tori
// (periodic) with square cells. Unknown nodes of a rectangle are the interior
// nodes (i+1)h, (j+1)h; a torus uses every node ih, jh.

namespace nodal::grid {

struct Grid {
  DomainKind kind = DomainKind::Rectangle;
  double a = 1.0;
  double b = 1.0;
  double h = 0.1;
  int nx = 10;
  int ny = 10;

  bool periodic() const { return kind == DomainKind::Torus; }
  int cols() const { return periodic() ? nx : nx - 1; }
  int rows() const { return periodic() ? ny : ny - 1; }
  int size() const { return cols() * rows(); }
  int index(int i, int j) const { return j * cols() + i; }
  int col_of(int node) const { return node % cols(); }
  int row_of(int node) const { return node / cols(); }
  double x(int i) const { return periodic() ? i * h : (i + 1) * h; }
  double y(int j) const { return periodic() ? j * h : (j + 1) * h; }
  Domain domain() const { return periodic() ? Domain::torus(a, b) : Domain::rectangle(a, b); }

  /// Neighbor one step away, or -1 on the outer (Dirichlet) boundary.
  int neighbor(int node, int di, int dj) const {
    int i = col_of(node) + di;
    int j = row_of(node) + dj;
    if (periodic()) {
      i = (i % cols() + cols()) % cols();
      j = (j % rows() + rows()) % rows();
    } else if (i < 0 || i >= cols() || j < 0 || j >= rows()) {
      return -1;
    }
    return index(i, j);
  }
};

inline constexpr std::array<std::array<int, 2>, 4> kSteps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

inline Grid make_grid(const Domain& domain, double h) {
  if (domain.kind == DomainKind::Circle)
    throw Error(ErrorCode::UnsupportedGeometry, "grid backend handles rectangles and tori");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
  Grid g;
  g.kind = domain.kind;
  g.a = domain.length_x;
  g.b = domain.length_y;
  g.h = h;
  g.nx = static_cast<int>(std::lround(g.a / h));
  g.ny = static_cast<int>(std::lround(g.b / h));
  if (std::abs(g.a / g.nx - h) > 1e-12 * h || std::abs(g.b / g.ny - h) > 1e-12 * h)
    throw Error(ErrorCode::InvalidArgument, "side lengths must be integer multiples of h (square cells)");
  if (g.nx < 3 || g.ny < 3) throw Error(ErrorCode::InvalidArgument, "grid too coarse");
  return g;
}

/// -Delta_h on the unknown nodes.
inline SparseMatrix laplacian(const Grid& g) {
  std::vector<Triplet> t;
  t.reserve(5 * g.size());
  const double c = 1.0 / (g.h * g.h);
  for (int p = 0; p < g.size(); ++p) {
    t.emplace_back(p, p, 4.0 * c);
    for (const auto& s : kSteps) {
      const int q = g.neighbor(p, s[0], s[1]);
      if (q >= 0) t.emplace_back(p, q, -c);
    }
  }
  SparseMatrix a(g.size(), g.size());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

/// Eigenvalue of the discrete mode sin(m pi x/a) sin(n pi y/b) (rectangle) or
/// of the torus mode with wavenumbers (2 pi m/a, 2 pi n/b).
inline double discrete_mode_eigenvalue(const Grid& g, int m, int n) {
  const double f = g.periodic() ? 2.0 : 1.0;
  const double sx = std::sin(f * m * kPi * g.h / (2.0 * g.a));
  const double sy = std::sin(f * n * kPi * g.h / (2.0 * g.b));
  return 4.0 / (g.h * g.h) * (sx * sx + sy * sy);
}

/// Sampled profile of the same mode; torus modes use sin in x and cos in y.
inline Vector mode_profile(const Grid& g, int m, int n) {
  Vector v(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const double x = g.x(g.col_of(p)), y = g.y(g.row_of(p));
    v(p) = g.periodic() ? std::sin(2 * kPi * m * x / g.a) * std::cos(2 * kPi * n * y / g.b)
                        : std::sin(kPi * m * x / g.a) * std::sin(kPi * n * y / g.b);
  }
  return v;
}

struct DiscreteEigenpair {
  double value = 0.0;
  Vector vector;  // unit in the discrete L2 norm sum h^2 v^2
  double residual = 0.0;  // ||(-Delta_h - value) v|| / ||v||
};

inline double eigen_residual(const SparseMatrix& a, double value, const Vector& v) {
  return (a * v - value * v).norm() / v.norm();
}

inline std::vector<DiscreteEigenpair> eigensolve(const Grid& g, int count,
                                                 const SparseEigenOptions& opts = {}) {
  if (count < 1 || count > 40) throw Error(ErrorCode::InvalidArgument, "eigenpair count must be in 1..40");
  const SparseMatrix a = laplacian(g);
  const SparseEigenResult r = lowest_eigenpairs(a, count, opts);
  std::vector<DiscreteEigenpair> out;
  for (int k = 0; k < count; ++k) {
    DiscreteEigenpair e;
    e.value = r.values(k);
    e.vector = r.vectors.col(k) / g.h;
    e.residual = eigen_residual(a, e.value, e.vector);
    out.push_back(std::move(e));
  }
  return out;
}

/// A computed eigenvalue cluster and the member matching a prescribed mode.
struct ModeCluster {
  std::vector<DiscreteEigenpair> spectrum;  // everything computed, ascending
  int first = 0;                            // index of the first cluster member
  int size = 0;
  double tolerance = 0.0;
  DiscreteEigenpair selected;
};

/// Computes enough eigenpairs to contain the cluster around the mode (m, n) and
/// projects the mode's sampled profile onto the cluster span, which picks the
/// separable member out of a degenerate cluster.
inline ModeCluster select_mode(const Grid& g, int m, int n, double cluster_factor = 20.0,
                               const SparseEigenOptions& opts = {}) {
  const double target = discrete_mode_eigenvalue(g, m, n);
  ModeCluster c;
  c.tolerance = cluster_factor * g.h * g.h * std::max(target, 1.0);
  int count = 8;
  while (true) {
    count = std::min(count, std::min(40, g.size()));
    c.spectrum = eigensolve(g, count, opts);
    if (c.spectrum.back().value > target + 2.0 * c.tolerance || count == 40 || count == g.size()) break;
    count *= 2;
  }
  c.first = -1;
  for (int k = 0; k < static_cast<int>(c.spectrum.size()); ++k)
    if (std::abs(c.spectrum[k].value - target) <= c.tolerance) {
      if (c.first < 0) c.first = k;
      ++c.size;
    }
  if (c.first < 0 || c.spectrum.back().value <= target + c.tolerance)
    throw Error(ErrorCode::NonConvergence, "mode lies beyond the computable part of the spectrum");

  Matrix basis(g.size(), c.size);
  for (int k = 0; k < c.size; ++k)
    basis.col(k) = c.spectrum[c.first + k].vector * g.h;  // Euclidean-orthonormal
  const Vector profile = mode_profile(g, m, n);
  Vector v = basis * (basis.transpose() * profile);
  if (v.norm() < 1e-6 * profile.norm())
    throw Error(ErrorCode::NonConvergence, "mode profile is orthogonal to the computed cluster");
  v /= v.norm() * g.h;
  const SparseMatrix a = laplacian(g);
  const double value = v.dot(a * v) / v.squaredNorm();
  c.selected = {c.size == 1 ? c.spectrum[c.first].value : value, v, 0.0};
  c.selected.residual = eigen_residual(a, c.selected.value, v);
  return c;
}

// ---------------------------------------------------------------------------
// Nodal partitions with grid-aligned interfaces.

/// Grid data for one interface: its nodes in order along the line and, for
/// each side, the step pointing into that side's subdomain.
struct GridInterface {
  std::vector<int> nodes;
  int axis = 0;  // 0: line of constant x, 1: line of constant y
  std::array<std::array<int, 2>, 2> inward{};
};

struct NodalPartition {
  Grid grid;
  Partition partition;
  int nodal_count = 0;
  std::vector<int> component;  // per node: subdomain id, or -1 on Sigma
  std::vector<int> mesh_index;  // per node: index into the interface mesh, or -1
  std::vector<GridInterface> interfaces;
};

inline NodalPartition extract_nodal_partition(const Grid& g, const Vector& field) {
  if (field.size() != g.size()) throw Error(ErrorCode::InvalidArgument, "field does not match the grid");
  const double cut = 1e-8 * field.cwiseAbs().maxCoeff();
  if (!(cut > 0.0)) throw Error(ErrorCode::InvalidArgument, "field vanishes identically");
  auto is_zero = [&](int p) { return std::abs(field(p)) < cut; };
  auto sign = [&](int p) { return field(p) > 0 ? 1 : -1; };

  for (int p = 0; p < g.size(); ++p) {
    if (is_zero(p)) continue;
    for (const auto& s : kSteps) {
      const int q = g.neighbor(p, s[0], s[1]);
      if (q >= 0 && !is_zero(q) && sign(q) != sign(p))
        throw Error(ErrorCode::UnsupportedGeometry,
                    "nodal set is not grid-aligned; use the strip-mapped or separable backend");
    }
  }

  NodalPartition out;
  out.grid = g;
  out.component.assign(g.size(), -1);
  int count = 0;
  for (int start = 0; start < g.size(); ++start) {
    if (is_zero(start) || out.component[start] >= 0) continue;
    std::vector<int> stack{start};
    out.component[start] = count;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      for (const auto& s : kSteps) {
        const int q = g.neighbor(p, s[0], s[1]);
        if (q >= 0 && !is_zero(q) && out.component[q] < 0) {
          out.component[q] = count;
          stack.push_back(q);
        }
      }
    }
    ++count;
  }
  out.nodal_count = count;

  // Each zero node must separate exactly two components across one axis.
  std::vector<std::array<int, 2>> pair(g.size(), {-1, -1});
  std::vector<int> axis(g.size(), -1);
  for (int p = 0; p < g.size(); ++p) {
    if (!is_zero(p)) continue;
    std::vector<int> seen;
    for (const auto& s : kSteps) {
      const int q = g.neighbor(p, s[0], s[1]);
      if (q >= 0 && out.component[q] >= 0 &&
          std::find(seen.begin(), seen.end(), out.component[q]) == seen.end())
        seen.push_back(out.component[q]);
    }
    if (seen.size() != 2)
      throw Error(ErrorCode::UnsupportedGeometry,
                  "zero node at (" + std::to_string(g.col_of(p)) + ", " + std::to_string(g.row_of(p)) +
                      ") does not separate exactly two nodal domains");
    for (int ax = 0; ax < 2; ++ax) {
      const int q0 = g.neighbor(p, ax == 0 ? -1 : 0, ax == 0 ? 0 : -1);
      const int q1 = g.neighbor(p, ax == 0 ? 1 : 0, ax == 0 ? 0 : 1);
      if (q0 >= 0 && q1 >= 0 && out.component[q0] >= 0 && out.component[q1] >= 0 &&
          out.component[q0] != out.component[q1])
        axis[p] = ax;
    }
    if (axis[p] < 0)
      throw Error(ErrorCode::UnsupportedGeometry, "zero set is not a union of straight gridlines");
    pair[p] = {std::min(seen[0], seen[1]), std::max(seen[0], seen[1])};
  }

  // Interfaces: connected zero nodes with the same adjacent pair and axis.
  std::vector<int> owner(g.size(), -1);
  for (int start = 0; start < g.size(); ++start) {
    if (!is_zero(start) || owner[start] >= 0) continue;
    const int id = static_cast<int>(out.interfaces.size());
    GridInterface gi;
    gi.axis = axis[start];
    std::vector<int> stack{start};
    owner[start] = id;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      gi.nodes.push_back(p);
      for (const auto& s : kSteps) {
        const int q = g.neighbor(p, s[0], s[1]);
        if (q >= 0 && is_zero(q) && owner[q] < 0 && pair[q] == pair[start] && axis[q] == gi.axis) {
          owner[q] = id;
          stack.push_back(q);
        }
      }
    }
    const int line = gi.axis == 0 ? g.col_of(start) : g.row_of(start);
    for (int p : gi.nodes)
      if ((gi.axis == 0 ? g.col_of(p) : g.row_of(p)) != line)
        throw Error(ErrorCode::UnsupportedGeometry, "interface is not a straight gridline segment");
    std::sort(gi.nodes.begin(), gi.nodes.end(), [&](int p, int q) {
      return gi.axis == 0 ? g.row_of(p) < g.row_of(q) : g.col_of(p) < g.col_of(q);
    });
    // Side s faces subdomain pair[start][s].
    const int p0 = gi.nodes.front();
    for (int s = 0; s < 2; ++s)
      for (int dir : {-1, 1}) {
        const int di = gi.axis == 0 ? dir : 0, dj = gi.axis == 0 ? 0 : dir;
        const int q = g.neighbor(p0, di, dj);
        if (q >= 0 && out.component[q] == pair[start][s]) gi.inward[s] = {di, dj};
      }
    out.interfaces.push_back(std::move(gi));
  }

  // Dual-cell areas: zero-node cells split between their two sides, outer
  // boundary cells inherit the owner of their inward neighbor.
  std::vector<double> area(count, 0.0);
  auto credit = [&](int p, double w) {
    if (out.component[p] >= 0) {
      area[out.component[p]] += w;
    } else {
      area[pair[p][0]] += 0.5 * w;
      area[pair[p][1]] += 0.5 * w;
    }
  };
  const double cell = g.h * g.h;
  for (int p = 0; p < g.size(); ++p) credit(p, cell);
  if (!g.periodic()) {
    const int c = g.cols(), r = g.rows();
    for (int i = 0; i < c; ++i) {
      credit(g.index(i, 0), 0.5 * cell);
      credit(g.index(i, r - 1), 0.5 * cell);
    }
    for (int j = 0; j < r; ++j) {
      credit(g.index(0, j), 0.5 * cell);
      credit(g.index(c - 1, j), 0.5 * cell);
    }
    for (int p : {g.index(0, 0), g.index(c - 1, 0), g.index(0, r - 1), g.index(c - 1, r - 1)})
      credit(p, 0.25 * cell);
  }

  Partition& part = out.partition;
  part.domain = g.domain();
  for (int j = 0; j < count; ++j) part.subdomains.push_back({j, area[j], "nodal" + std::to_string(j)});
  out.mesh_index.assign(g.size(), -1);
  int mesh_counter = 0;
  for (std::size_t i = 0; i < out.interfaces.size(); ++i) {
    const GridInterface& gi = out.interfaces[i];
    Interface f;
    f.id = static_cast<int>(i);
    f.subdomains = pair[gi.nodes.front()];
    f.chi = {1, -1};
    for (int p : gi.nodes) {
      const double x = g.x(g.col_of(p)), y = g.y(g.row_of(p));
      f.polyline.push_back({gi.axis == 0 ? y : x, x, y});
      out.mesh_index[p] = mesh_counter++;
    }
    part.interfaces.push_back(std::move(f));
  }
  if (auto eta = check_bipartite(part)) part = orient_by_coloring(part, *eta);
  validate(part, 1e-10);
  return out;
}

inline NodalPartition extract_nodal_partition(const Grid& g, const DiscreteEigenpair& pair) {
  return extract_nodal_partition(g, pair.vector);
}

// ---------------------------------------------------------------------------
// Subdomain ground states, traces, weight.

struct GridSetup {
  NodalPartition nodal;
  double lambda = 0.0;
  std::vector<Vector> ground_states;  // full-grid vectors, unit discrete L2, positive
  std::vector<double> subdomain_lambda;
  InterfaceTraces traces;
  CoefficientFit coefficients;
  WeightRho rho;
  double criticality_tolerance = 0.0;

  const Grid& grid() const { return nodal.grid; }
  const Partition& partition() const { return nodal.partition; }
};

/// Nodes of subdomain j in increasing grid order.
inline std::vector<int> subdomain_nodes(const NodalPartition& np, int j) {
  std::vector<int> out;
  for (int p = 0; p < np.grid.size(); ++p)
    if (np.component[p] == j) out.push_back(p);
  return out;
}

/// Outward one-sided derivative at interface node p into side s, second order.
inline double outward_derivative(const NodalPartition& np, int interface, int side, int p,
                                 const Vector& u, double boundary_value) {
  const Grid& g = np.grid;
  const auto& d = np.interfaces[interface].inward[side];
  const int p1 = g.neighbor(p, d[0], d[1]);
  const int p2 = p1 >= 0 ? g.neighbor(p1, d[0], d[1]) : -1;
  const int j = np.partition.interfaces[interface].subdomains[side];
  if (p1 < 0 || p2 < 0 || np.component[p1] != j || np.component[p2] != j)
    throw Error(ErrorCode::UnsupportedGeometry, "subdomain is too thin for the one-sided stencil");
  return (3.0 * boundary_value - 4.0 * u(p1) + u(p2)) / (2.0 * g.h);
}

inline InterfaceTraces grid_traces(const NodalPartition& np, const std::vector<Vector>& psi) {
  InterfaceTraces t;
  t.mesh = mesh_from_polylines(np.partition, np.grid.h);
  for (std::size_t i = 0; i < np.interfaces.size(); ++i)
    for (int p : np.interfaces[i].nodes) {
      std::array<double, 2> d{};
      for (int s = 0; s < 2; ++s) {
        const int j = np.partition.interfaces[i].subdomains[s];
        d[s] = outward_derivative(np, static_cast<int>(i), s, p, psi[j], 0.0);
      }
      t.normal_derivative.push_back(d);
    }
  return t;
}

inline void finish_setup(GridSetup& s, double criticality_tolerance) {
  s.traces = grid_traces(s.nodal, s.ground_states);
  s.criticality_tolerance =
      criticality_tolerance > 0.0 ? criticality_tolerance : 50.0 * s.grid().h;
  if (s.nodal.partition.interfaces.empty()) {
    s.coefficients.a.values = Vector::Ones(1);
    return;
  }
  s.coefficients = solve_coefficients(s.nodal.partition, s.traces);
  s.rho = compute_rho(s.nodal.partition, s.coefficients.a, s.traces, s.criticality_tolerance);
}

/// Setup from an eigenvector: the restriction of |psi| to each nodal domain is
/// that domain's discrete Dirichlet ground state at the same eigenvalue.
inline GridSetup setup_from_eigenpair(const Grid& g, const DiscreteEigenpair& pair,
                                      double criticality_tolerance = 0.0) {
  GridSetup s;
  s.nodal = extract_nodal_partition(g, pair);
  s.lambda = pair.value;
  for (int j = 0; j < s.nodal.nodal_count; ++j) {
    Vector v = Vector::Zero(g.size());
    for (int p = 0; p < g.size(); ++p)
      if (s.nodal.component[p] == j) v(p) = std::abs(pair.vector(p));
    v /= v.norm() * g.h;
    s.ground_states.push_back(std::move(v));
    s.subdomain_lambda.push_back(pair.value);
  }
  finish_setup(s, criticality_tolerance);
  return s;
}

/// Restriction of -Delta_h to a subdomain with homogeneous data off it.
inline SparseMatrix subdomain_laplacian(const NodalPartition& np, const std::vector<int>& nodes,
                                        const std::vector<int>& local) {
  const Grid& g = np.grid;
  const double c = 1.0 / (g.h * g.h);
  std::vector<Triplet> t;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    t.emplace_back(k, k, 4.0 * c);
    for (const auto& s : kSteps) {
      const int q = g.neighbor(nodes[k], s[0], s[1]);
      if (q >= 0 && local[q] >= 0) t.emplace_back(k, local[q], -c);
    }
  }
  SparseMatrix a(nodes.size(), nodes.size());
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

/// Setup from an arbitrary sign field whose zero set is grid-aligned; each
/// subdomain's ground state comes from its own eigensolve. The partition must
/// be an equipartition to `equi_tol` relative.
inline GridSetup setup_from_field(const Grid& g, const Vector& field,
                                  double criticality_tolerance = 0.0, double equi_tol = 1e-8) {
  GridSetup s;
  s.nodal = extract_nodal_partition(g, field);
  std::vector<int> local(g.size(), -1);
  for (int j = 0; j < s.nodal.nodal_count; ++j) {
    const std::vector<int> nodes = subdomain_nodes(s.nodal, j);
    std::fill(local.begin(), local.end(), -1);
    for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<int>(k);
    const SparseEigenResult r = lowest_eigenpairs(subdomain_laplacian(s.nodal, nodes, local), 1);
    Vector v = Vector::Zero(g.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) v(nodes[k]) = r.vectors(k, 0);
    if (v.sum() < 0) v = -v;
    v /= v.norm() * g.h;
    s.ground_states.push_back(std::move(v));
    s.subdomain_lambda.push_back(r.values(0));
  }
  double lo = *std::min_element(s.subdomain_lambda.begin(), s.subdomain_lambda.end());
  double hi = *std::max_element(s.subdomain_lambda.begin(), s.subdomain_lambda.end());
  if (hi - lo > equi_tol * hi)
    throw Error(ErrorCode::InvalidArgument, "subdomain ground energies differ; not an equipartition");
  s.lambda = 0.0;
  for (double l : s.subdomain_lambda) s.lambda += l / s.subdomain_lambda.size();
  finish_setup(s, criticality_tolerance);
  return s;
}

/// Three vertical strips of the unit-height torus a x b: a non-bipartite
/// equipartition (the neighbor graph is a 3-cycle).
inline GridSetup torus_three_strips(double a, double b, double h) {
  const Grid g = make_grid(Domain::torus(a, b), h);
  if (g.nx % 3 != 0) throw Error(ErrorCode::InvalidArgument, "torus width must hold 3 equal strips");
  Vector field(g.size());
  for (int p = 0; p < g.size(); ++p) {
    const int i = g.col_of(p);
    field(p) = (i % (g.nx / 3) == 0) ? 0.0 : std::abs(std::sin(3 * kPi * g.x(i) / a));
  }
  return setup_from_field(g, field);
}

// ---------------------------------------------------------------------------
// Resonant Helmholtz solves and DtN assembly.

struct HelmholtzSolution {
  Vector u;                    // full grid: interior solution, chi f on the subdomain's interface nodes
  double defect = 0.0;         // |s| / ||rhs||, the unresolved psi-direction of the data
  double compatibility = 0.0;  // |<chi f, d_nu psi>| / (||f|| ||d_nu psi||) on the subdomain boundary
};

/// Factorizes the bordered system [A psi; psi^T 0] for one subdomain, where
/// A = -Delta_h - lambda on its nodes and psi its ground state.
class SubdomainSolver {
 public:
  SubdomainSolver(const GridSetup& setup, int j) : setup_(&setup), j_(j) {
    const NodalPartition& np = setup.nodal;
    const Grid& g = np.grid;
    nodes_ = subdomain_nodes(np, j);
    local_.assign(g.size(), -1);
    for (std::size_t k = 0; k < nodes_.size(); ++k) local_[nodes_[k]] = static_cast<int>(k);

    const int n = static_cast<int>(nodes_.size());
    psi_ = Vector(n);
    for (int k = 0; k < n; ++k) psi_(k) = setup.ground_states[j](nodes_[k]);
    psi_ /= psi_.norm();

    SparseMatrix a = subdomain_laplacian(np, nodes_, local_);
    std::vector<Triplet> t;
    for (int k = 0; k < a.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(a, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < n; ++k) {
      t.emplace_back(k, k, -setup.lambda);
      t.emplace_back(k, n, psi_(k));
      t.emplace_back(n, k, psi_(k));
    }
    SparseMatrix bordered(n + 1, n + 1);
    bordered.setFromTriplets(t.begin(), t.end());
    bordered.makeCompressed();
    lu_.compute(bordered);
    if (lu_.info() != Eigen::Success)
      throw Error(ErrorCode::NonConvergence, "bordered Helmholtz factorization failed");

    // Links from subdomain nodes to interface nodes (Dirichlet data).
    for (int k = 0; k < n; ++k)
      for (const auto& s : kSteps) {
        const int q = g.neighbor(nodes_[k], s[0], s[1]);
        if (q >= 0 && np.component[q] < 0) links_.push_back({k, np.mesh_index[q], chi_at(q)});
      }
  }

  int subdomain() const { return j_; }

  /// Solves for every column of F (interface-mesh data).
  std::vector<HelmholtzSolution> solve(const Matrix& f, double compat_factor = 50.0) const {
    const NodalPartition& np = setup_->nodal;
    const Grid& g = np.grid;
    const InterfaceMesh& mesh = setup_->traces.mesh;
    const int n = static_cast<int>(nodes_.size());
    const double c = 1.0 / (g.h * g.h);

    Matrix rhs = Matrix::Zero(n + 1, f.cols());
    for (const Link& l : links_) rhs.row(l.local) += (l.chi * c) * f.row(l.mesh);
    const Matrix sol = lu_.solve(rhs);

    std::vector<HelmholtzSolution> out(f.cols());
    for (Eigen::Index col = 0; col < f.cols(); ++col) {
      HelmholtzSolution& h = out[col];
      h.u = Vector::Zero(g.size());
      for (int k = 0; k < n; ++k) h.u(nodes_[k]) = sol(k, col);
      double num = 0.0, fnorm = 0.0, dnorm = 0.0;
      std::vector<bool> counted(mesh.size(), false);
      for (const Link& l : links_) {
        h.u(mesh_node(l.mesh)) = l.chi * f(l.mesh, col);
        num += l.chi * f(l.mesh, col) * psi_(l.local);
        dnorm += psi_(l.local) * psi_(l.local);
        if (!counted[l.mesh]) {
          fnorm += f(l.mesh, col) * f(l.mesh, col);
          counted[l.mesh] = true;
        }
      }
      const double rn = rhs.col(col).norm();
      h.defect = rn > 0.0 ? std::abs(sol(n, col)) / rn : 0.0;
      h.compatibility = (fnorm > 0.0 && dnorm > 0.0) ? std::abs(num) / std::sqrt(fnorm * dnorm) : 0.0;
      if (h.compatibility > compat_factor * g.h)
        throw Error(ErrorCode::IncompatibleData,
                    "boundary data violates the compatibility condition on subdomain " + std::to_string(j_));
    }
    return out;
  }

  HelmholtzSolution solve(const Vector& f, double compat_factor = 50.0) const {
    return solve(Matrix(f), compat_factor).front();
  }

  /// |sum u psi| relative to ||u|| ||psi|| over the subdomain nodes.
  double orthogonality(const HelmholtzSolution& s) const {
    Vector u(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) u(k) = s.u(nodes_[k]);
    const double un = u.norm();
    return un > 0.0 ? std::abs(u.dot(psi_)) / un : 0.0;
  }

  const std::vector<int>& nodes() const { return nodes_; }

 private:
  struct Link {
    int local;
    int mesh;
    int chi;
  };

  int chi_at(int grid_node) const {
    const NodalPartition& np = setup_->nodal;
    const int m = np.mesh_index[grid_node];
    const Interface& f = np.partition.interfaces[setup_->traces.mesh.nodes[m].interface];
    return f.subdomains[0] == j_ ? f.chi[0] : f.chi[1];
  }

  int mesh_node(int mesh) const {
    if (mesh_to_grid_.empty()) {
      const NodalPartition& np = setup_->nodal;
      mesh_to_grid_.assign(setup_->traces.mesh.size(), -1);
      for (int p = 0; p < np.grid.size(); ++p)
        if (np.mesh_index[p] >= 0) mesh_to_grid_[np.mesh_index[p]] = p;
    }
    return mesh_to_grid_[mesh];
  }

  const GridSetup* setup_;
  int j_;
  std::vector<int> nodes_;
  std::vector<int> local_;
  Vector psi_;
  Eigen::SparseLU<SparseMatrix> lu_;
  std::vector<Link> links_;
  mutable std::vector<int> mesh_to_grid_;
};

inline HelmholtzSolution helmholtz_solve(const GridSetup& setup, int subdomain, const Vector& f) {
  return SubdomainSolver(setup, subdomain).solve(f);
}

struct GridDtn {
  DtnOperator op;
  SubspaceBasis subspace;
  double max_defect = 0.0;
};

/// Columns: chi-weighted sums of one-sided outward derivatives of the subdomain
/// solutions for each S basis vector, projected onto S.
inline GridDtn assemble_dtn(const GridSetup& setup, const SubspaceBasis* basis = nullptr,
                            double asymmetry_factor = 100.0) {
  GridDtn out;
  out.subspace = basis ? *basis : subspace_S_basis(setup.partition(), setup.traces);
  const NodalPartition& np = setup.nodal;
  const InterfaceMesh& mesh = setup.traces.mesh;
  const Matrix& b = out.subspace.basis;
  Matrix jumps = Matrix::Zero(mesh.size(), b.cols());
  if (b.cols() > 0) {
    for (int j = 0; j < np.nodal_count; ++j) {
      const SubdomainSolver solver(setup, j);
      const std::vector<HelmholtzSolution> sols = solver.solve(b);
      for (Eigen::Index col = 0; col < b.cols(); ++col) {
        out.max_defect = std::max(out.max_defect, sols[col].defect);
        for (std::size_t i = 0; i < np.interfaces.size(); ++i) {
          const Interface& f = np.partition.interfaces[i];
          for (int s = 0; s < 2; ++s) {
            if (f.subdomains[s] != j) continue;
            for (int p : np.interfaces[i].nodes) {
              const int m = np.mesh_index[p];
              const double bv = f.chi[s] * b(m, col);
              jumps(m, col) += f.chi[s] * outward_derivative(np, static_cast<int>(i), s, p, sols[col].u, bv);
            }
          }
        }
      }
    }
  }
  out.op = finish_dtn(mesh, b, jumps);
  if (out.op.asymmetry > asymmetry_factor * np.grid.h)
    throw Error(ErrorCode::AssemblyInconsistency,
                "DtN asymmetry " + std::to_string(out.op.asymmetry) + " exceeds tolerance");
  return out;
}

}  // namespace nodal::grid
