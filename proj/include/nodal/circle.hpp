#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "nodal/criticality.hpp"
#include "nodal/dtn.hpp"
#include "nodal/error.hpp"
#include "nodal/partition.hpp"

// Closed-form k-partitions of a circle. Point i sits at arclength points[i];
// arc i runs from point i to point i+1 (mod k). Interface i is point i with
// side 0 = arc i-1 and side 1 = arc i. The reference normal at every point is
// the counterclockwise tangent; orientation[i] = -1 reverses it at point i.

namespace nodal::circle {

struct CirclePartition {
  double circumference = 2.0 * kPi;
  std::vector<double> points;  // ascending arclength positions in [0, L)

  int size() const { return static_cast<int>(points.size()); }

  std::vector<double> arc_lengths() const {
    std::vector<double> out(points.size());
    for (int i = 0; i < size(); ++i) {
      const double next = (i + 1 < size()) ? points[i + 1] : points[0] + circumference;
      out[i] = next - points[i];
    }
    return out;
  }

  bool is_equipartition(double tol = 1e-12) const {
    const auto arcs = arc_lengths();
    for (double a : arcs)
      if (std::abs(a - arcs[0]) > tol * circumference) return false;
    return true;
  }
};

inline CirclePartition equal_partition(double circumference, int k, double offset = 0.0) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "circle partitions need k >= 2");
  if (!(circumference > 0.0)) throw Error(ErrorCode::InvalidArgument, "circumference must be positive");
  CirclePartition p{circumference, {}};
  for (int i = 0; i < k; ++i) p.points.push_back(offset + circumference * i / k);
  return p;
}

/// Dirichlet ground state of an arc of length l: sqrt(2/l) sin(pi s / l).
struct ArcGroundState {
  double length = 0.0;
  double lambda1 = 0.0;
  double amplitude = 0.0;
  double outward_derivative = 0.0;  // same at both endpoints

  double value(double s) const { return amplitude * std::sin(kPi * s / length); }
};

inline ArcGroundState circle_ground_state(double arc) {
  if (!(arc > 0.0)) throw Error(ErrorCode::InvalidArgument, "arc length must be positive");
  ArcGroundState g;
  g.length = arc;
  g.lambda1 = (kPi / arc) * (kPi / arc);
  g.amplitude = std::sqrt(2.0 / arc);
  g.outward_derivative = -(kPi / arc) * g.amplitude;
  return g;
}

inline void check_orientation(const CirclePartition& cp, const std::vector<int>& orientation) {
  if (static_cast<int>(orientation.size()) != cp.size())
    throw Error(ErrorCode::InvalidArgument, "one orientation flag per point is required");
  for (int o : orientation)
    if (o != 1 && o != -1) throw Error(ErrorCode::InvalidArgument, "orientation flags must be +1 or -1");
}

inline Partition to_partition(const CirclePartition& cp, std::vector<int> orientation = {}) {
  const int k = cp.size();
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "circle partitions need k >= 2");
  if (orientation.empty()) orientation.assign(k, 1);
  check_orientation(cp, orientation);
  const double radius = cp.circumference / (2.0 * kPi);
  const auto arcs = cp.arc_lengths();

  Partition p;
  p.domain = Domain::circle(cp.circumference);
  for (int j = 0; j < k; ++j) p.subdomains.push_back({j, arcs[j], "arc" + std::to_string(j)});
  for (int i = 0; i < k; ++i) {
    Interface f;
    f.id = i;
    f.subdomains = {(i + k - 1) % k, i};
    // Arc i-1 ends here (outward normal = +tangent), arc i starts here (-tangent).
    f.chi = {orientation[i], -orientation[i]};
    const double theta = cp.points[i] / radius;
    f.polyline.push_back({0.0, radius * std::cos(theta), radius * std::sin(theta)});
    p.interfaces.push_back(f);
  }
  validate(p);
  return p;
}

inline InterfaceTraces circle_traces(const CirclePartition& cp, const Partition& p) {
  InterfaceTraces t;
  t.mesh = mesh_from_polylines(p, 1.0);
  const auto arcs = cp.arc_lengths();
  for (const auto& node : t.mesh.nodes) {
    const Interface& f = p.interfaces[node.interface];
    t.normal_derivative.push_back({circle_ground_state(arcs[f.subdomains[0]]).outward_derivative,
                                   circle_ground_state(arcs[f.subdomains[1]]).outward_derivative});
  }
  return t;
}

/// Resonant solve on one arc: u'' + lambda u = 0 with lambda = (pi/l)^2,
/// u(0) = left, u(l) = right, and int u psi = 0.
struct ArcSolution {
  double cos_coefficient = 0.0;
  double sin_coefficient = 0.0;
  double outward_left = 0.0;
  double outward_right = 0.0;
};

inline ArcSolution solve_arc(int arc_id, double length, double left, double right,
                             double tol = 1e-12) {
  const ArcGroundState g = circle_ground_state(length);
  // Compatibility: sum over both ends of u * d_nu psi must vanish.
  const double functional = g.outward_derivative * (left + right);
  if (std::abs(functional) > tol)
    throw Error(ErrorCode::IncompatibleData,
                "boundary data violates the compatibility condition on arc " + std::to_string(arc_id));
  // u = A cos(pi s/l) + B sin(pi s/l) satisfies u(l) = -A = right by compatibility.
  // Orthogonality to sin: A int cos sin + B int sin^2 = 0, and int_0^l cos sin = 0.
  ArcSolution u;
  u.cos_coefficient = left;
  const double cos_sin = 0.0;
  const double sin_sin = 0.5 * length;
  u.sin_coefficient = -left * cos_sin / sin_sin;
  const double k = kPi / length;
  u.outward_left = -k * u.sin_coefficient;   // -u'(0)
  u.outward_right = -k * u.sin_coefficient;  // u'(l), using sin(pi) = 0, cos(pi) = -1
  return u;
}

struct CircleDtn {
  Partition partition;
  InterfaceTraces traces;
  SubspaceBasis subspace;
  DtnOperator op;
};

inline CircleDtn circle_dtn(const CirclePartition& cp, const std::vector<int>& orientation = {}) {
  if (!cp.is_equipartition())
    throw Error(ErrorCode::InvalidArgument, "circle DtN requires equal arcs");
  CircleDtn out;
  out.partition = to_partition(cp, orientation);
  out.traces = circle_traces(cp, out.partition);
  out.subspace = subspace_S_basis(out.partition, out.traces);

  const int k = cp.size();
  const auto arcs = cp.arc_lengths();
  const Matrix& basis = out.subspace.basis;
  Matrix jumps = Matrix::Zero(k, basis.cols());
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    for (int arc = 0; arc < k; ++arc) {
      const int left_point = arc;
      const int right_point = (arc + 1) % k;
      const Interface& fl = out.partition.interfaces[left_point];
      const Interface& fr = out.partition.interfaces[right_point];
      const double left = fl.chi[1] * basis(left_point, c);
      const double right = fr.chi[0] * basis(right_point, c);
      const ArcSolution u = solve_arc(arc, arcs[arc], left, right);
      jumps(left_point, c) += fl.chi[1] * u.outward_left;
      jumps(right_point, c) += fr.chi[0] * u.outward_right;
    }
  }
  out.op = finish_dtn(out.traces.mesh, basis, jumps);
  return out;
}

struct TangentCheck {
  SubspaceBasis tangent;
  Vector rotation;          // phi of the rigid rotation, nu . (counterclockwise tangent)
  double alignment = 0.0;   // |cos| of the angle between the tangent basis and rotation
  bool matches = false;
};

/// The discrete tangent space should be exactly the rotation direction.
inline TangentCheck circle_tangent_check(const CirclePartition& cp,
                                         std::vector<int> orientation = {}) {
  if (!cp.is_equipartition())
    throw Error(ErrorCode::InvalidArgument, "tangent check requires equal arcs");
  if (orientation.empty()) orientation.assign(cp.size(), 1);
  const Partition p = to_partition(cp, orientation);
  const InterfaceTraces t = circle_traces(cp, p);
  TangentCheck out;
  out.tangent = tangent_basis(p, t);
  out.rotation = Vector(cp.size());
  for (int i = 0; i < cp.size(); ++i) out.rotation(i) = orientation[i];
  if (out.tangent.dimension() == 1) {
    const Vector b = out.tangent.basis.col(0);
    out.alignment = std::abs(b.dot(out.rotation)) / (b.norm() * out.rotation.norm());
  }
  out.matches = out.tangent.dimension() == 1 && std::abs(out.alignment - 1.0) < 1e-12;
  return out;
}

}  // namespace nodal::circle
