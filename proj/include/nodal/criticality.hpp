#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "nodal/error.hpp"
#include "nodal/linalg.hpp"
#include "nodal/partition.hpp"

namespace nodal {

/// One-sided outward normal derivatives d(psi_j)/d(nu_j) of the unit-normalized
/// subdomain ground states, sampled at every interface node. Entry s of a node
/// belongs to subdomain `interfaces[node.interface].subdomains[s]`.
struct InterfaceTraces {
  InterfaceMesh mesh;
  std::vector<std::array<double, 2>> normal_derivative;
};

/// Criticality coefficients a_j, one per subdomain, with sum a_j^2 = 1.
struct CoefficientVector {
  Vector values;

  double operator[](int j) const { return values(j); }
  int size() const { return static_cast<int>(values.size()); }
};

struct CoefficientFit {
  CoefficientVector a;
  double residual = 0.0;  // criticality residual, see criticality_residual()
};

inline void check_trace_shape(const Partition& p, const InterfaceTraces& t) {
  if (t.normal_derivative.size() != t.mesh.nodes.size())
    throw Error(ErrorCode::InvalidArgument, "trace array does not match the interface mesh");
  for (const auto& node : t.mesh.nodes)
    if (node.interface < 0 || node.interface >= static_cast<int>(p.interfaces.size()))
      throw Error(ErrorCode::InvalidArgument, "trace node references an unknown interface");
}

/// Max over interfaces of max_node |r - median(r)| / median(r), where r is the
/// two-sided ratio |a_0 t_0| / |a_1 t_1| at each node of that interface.
inline double criticality_residual(const Partition& p, const InterfaceTraces& t,
                                   const Vector& a) {
  std::vector<std::vector<double>> ratios(p.interfaces.size());
  for (std::size_t n = 0; n < t.mesh.nodes.size(); ++n) {
    const Interface& f = p.interfaces[t.mesh.nodes[n].interface];
    const double left = std::abs(a(f.subdomains[0]) * t.normal_derivative[n][0]);
    const double right = std::abs(a(f.subdomains[1]) * t.normal_derivative[n][1]);
    ratios[f.id].push_back(left / right);
  }
  double worst = 0.0;
  for (const auto& r : ratios) {
    if (r.empty()) continue;
    const double m = median(r);
    for (double v : r) worst = std::max(worst, std::abs(v - m) / m);
  }
  return worst;
}

/// Fits |a_i d_nu psi_i| = |a_j d_nu psi_j| across every interface node in the
/// log-linear least-squares sense, then normalizes to unit sum of squares.
/// Signs follow the bipartite coloring when one exists, otherwise all +1.
inline CoefficientFit solve_coefficients(const Partition& p, const InterfaceTraces& t) {
  validate(p, -1.0);
  check_trace_shape(p, t);
  const int k = p.size();

  double scale = 0.0;
  for (const auto& d : t.normal_derivative)
    scale = std::max({scale, std::abs(d[0]), std::abs(d[1])});
  for (std::size_t n = 0; n < t.normal_derivative.size(); ++n)
    for (int s = 0; s < 2; ++s)
      if (!(std::abs(t.normal_derivative[n][s]) > 1e-12 * scale))
        throw Error(ErrorCode::GenericityViolation,
                    "ground-state normal derivative vanishes at node " + std::to_string(n) +
                        " of interface " + std::to_string(t.mesh.nodes[n].interface));

  // Unknowns x_j = log|a_j|; one equation per node plus the gauge sum x_j = 0.
  const int rows = static_cast<int>(t.mesh.nodes.size()) + 1;
  Matrix m = Matrix::Zero(rows, k);
  Vector rhs = Vector::Zero(rows);
  for (std::size_t n = 0; n < t.mesh.nodes.size(); ++n) {
    const Interface& f = p.interfaces[t.mesh.nodes[n].interface];
    m(n, f.subdomains[0]) += 1.0;
    m(n, f.subdomains[1]) -= 1.0;
    rhs(n) = std::log(std::abs(t.normal_derivative[n][1])) -
             std::log(std::abs(t.normal_derivative[n][0]));
  }
  m.row(rows - 1).setOnes();
  const Vector x = m.colPivHouseholderQr().solve(rhs);

  Vector a = x.array().exp();
  a /= a.norm();
  if (const auto eta = check_bipartite(p))
    for (int j = 0; j < k; ++j) a(j) *= (*eta)[j];

  return {CoefficientVector{a}, criticality_residual(p, t, a)};
}

/// rho = |a_j d_nu psi_j| on the interface nodes.
struct WeightRho {
  Vector values;
  std::vector<bool> positive;
  double side_residual = 0.0;  // same metric as the criticality residual

  bool all_positive() const {
    for (bool b : positive)
      if (!b) return false;
    return true;
  }
};

inline WeightRho compute_rho(const Partition& p, const CoefficientVector& a,
                             const InterfaceTraces& t, double threshold = 1e-6) {
  check_trace_shape(p, t);
  WeightRho rho;
  rho.side_residual = criticality_residual(p, t, a.values);
  if (rho.side_residual > threshold)
    throw Error(ErrorCode::NotCritical, "one-sided weights disagree (residual " +
                                            std::to_string(rho.side_residual) + ")");
  const int n = t.mesh.size();
  rho.values.resize(n);
  rho.positive.resize(n);
  for (int i = 0; i < n; ++i) {
    const Interface& f = p.interfaces[t.mesh.nodes[i].interface];
    const double left = std::abs(a[f.subdomains[0]] * t.normal_derivative[i][0]);
    const double right = std::abs(a[f.subdomains[1]] * t.normal_derivative[i][1]);
    rho.values(i) = 0.5 * (left + right);
    rho.positive[i] = rho.values(i) > 0.0;
  }
  if (!rho.all_positive())
    throw Error(ErrorCode::GenericityViolation, "weight rho is not positive at every node");
  return rho;
}

/// Rows j: f -> sum over the boundary of subdomain j of w chi_j f (d_nu psi_j)^power.
/// power 1 gives the S constraints, power 2 the first-variation (tangent) ones.
inline Matrix interface_constraints(const Partition& p, const InterfaceTraces& t, int power) {
  check_trace_shape(p, t);
  Matrix c = Matrix::Zero(p.size(), t.mesh.size());
  for (int n = 0; n < t.mesh.size(); ++n) {
    const InterfaceNode& node = t.mesh.nodes[n];
    const Interface& f = p.interfaces[node.interface];
    for (int s = 0; s < 2; ++s)
      c(f.subdomains[s], n) +=
          node.weight * f.chi[s] * std::pow(t.normal_derivative[n][s], power);
  }
  return c;
}

/// Discrete S: interface data compatible with every resonant subdomain problem.
struct SubspaceBasis {
  Matrix basis;  // columns orthonormal in the discrete L2(Sigma) inner product
  Matrix constraints;
  int rank = 0;  // observed number of independent constraints

  int dimension() const { return static_cast<int>(basis.cols()); }
};

inline SubspaceBasis subspace_S_basis(const Partition& p, const InterfaceTraces& t) {
  SubspaceBasis out;
  out.constraints = interface_constraints(p, t, 1);
  NullSpace ns = weighted_null_space(out.constraints, t.mesh.weights());
  out.basis = std::move(ns.basis);
  out.rank = ns.rank;
  return out;
}

/// Discrete tangent directions: phi with vanishing first variation of every
/// subdomain energy. Orthonormal in L2_rho when `rho` is given, else in L2.
inline SubspaceBasis tangent_basis(const Partition& p, const InterfaceTraces& t,
                                   const Vector* rho = nullptr) {
  SubspaceBasis out;
  out.constraints = interface_constraints(p, t, 2);
  Vector w = t.mesh.weights();
  if (rho) w = w.cwiseProduct(rho->cwiseAbs2());
  NullSpace ns = weighted_null_space(out.constraints, w);
  out.basis = std::move(ns.basis);
  out.rank = ns.rank;
  return out;
}

/// Checks that multiplication by rho carries the tangent space onto S: equal
/// ranks and rho * F annihilated by the S constraints. Returns the worst
/// constraint value relative to the basis norm, or +inf on rank mismatch.
inline double rho_bijection_defect(const SubspaceBasis& s, const SubspaceBasis& f,
                                   const Vector& rho) {
  if (s.rank != f.rank || s.dimension() != f.dimension())
    return std::numeric_limits<double>::infinity();
  if (f.dimension() == 0) return 0.0;
  const Matrix image = rho.asDiagonal() * f.basis;
  const Matrix hit = s.constraints * image;
  return hit.cwiseAbs().maxCoeff() /
         std::max(1e-300, s.constraints.cwiseAbs().maxCoeff() * image.cwiseAbs().maxCoeff());
}

}  // namespace nodal
