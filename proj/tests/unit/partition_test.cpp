#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nodal/circle.hpp"
#include "nodal/criticality.hpp"
#include "nodal/partition.hpp"
#include "nodal/separable.hpp"

namespace {

using namespace nodal;

Partition strips(int k, int nodes_per_interface = 5) {
  return separable::strip_partition({k, 1, 1.0, 1.0}, nodes_per_interface + 1);
}

// Independent trace oracle: finite difference of the unit-normalized strip
// ground state sqrt(3) * 2 sin(3 pi x) sin(pi y) across x = 1/3.
double square31_trace(double y) {
  auto psi = [](double x, double y) { return std::sqrt(3.0) * 2.0 * std::sin(3 * kPi * x) * std::sin(kPi * y); };
  const double e = 1e-6;
  return (psi(1.0 / 3.0 + e, y) - psi(1.0 / 3.0 - e, y)) / (2 * e);
}

TEST(NeighborGraph, StripsFormAPath) {
  const NeighborGraph g = build_neighbor_graph(strips(3));
  EXPECT_EQ(g.edges.size(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(NeighborGraph, CircleArcsFormACycle) {
  const Partition p = circle::to_partition(circle::equal_partition(2 * kPi, 3));
  const NeighborGraph g = build_neighbor_graph(p);
  EXPECT_EQ(g.edges.size(), 3u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 2));
  EXPECT_TRUE(g.has_edge(2, 0));
}

TEST(NeighborGraph, SingleSubdomainIsEmpty) {
  const NeighborGraph g = build_neighbor_graph(strips(1));
  EXPECT_EQ(g.vertex_count, 1);
  EXPECT_TRUE(g.edges.empty());
}

TEST(NeighborGraph, RejectsMalformedInterfaces) {
  Partition p = strips(3);
  p.interfaces[0].subdomains = {1, 1};
  EXPECT_THROW(build_neighbor_graph(p), Error);
  p = strips(3);
  p.interfaces[1].subdomains = {1, 7};
  try {
    build_neighbor_graph(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedPartition);
  }
  p = strips(3);
  p.interfaces[0].chi = {1, 1};
  EXPECT_THROW(validate(p), Error);
  p = strips(3);
  p.subdomains[0].measure *= 1.5;
  EXPECT_THROW(validate(p), Error);
}

TEST(Bipartite, Examples) {
  const auto s = check_bipartite(strips(3));
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(*s, (std::vector<int>{1, -1, 1}));
  EXPECT_FALSE(check_bipartite(circle::to_partition(circle::equal_partition(2 * kPi, 3))).has_value());
  const auto c4 = check_bipartite(circle::to_partition(circle::equal_partition(2 * kPi, 4)));
  ASSERT_TRUE(c4.has_value());
  EXPECT_EQ(*c4, (std::vector<int>{1, -1, 1, -1}));
}

// A coloring exists iff some orientation makes every chi_j constant; checked
// over every orientation assignment for small partitions.
TEST(Bipartite, ColoringIffConstantChiOrientationExists) {
  std::vector<Partition> cases;
  for (int k = 1; k <= 4; ++k) cases.push_back(strips(k, 2));
  for (int k = 2; k <= 4; ++k) cases.push_back(circle::to_partition(circle::equal_partition(1.0, k)));
  for (const Partition& base : cases) {
    const int m = static_cast<int>(base.interfaces.size());
    bool some_constant = false;
    for (int mask = 0; mask < (1 << m); ++mask) {
      Partition p = base;
      for (int i = 0; i < m; ++i)
        if (mask & (1 << i)) p = flip_orientation(p, i);
      if (chi_assignment(p).constant_per_subdomain(p.size())) some_constant = true;
    }
    const auto eta = check_bipartite(base);
    EXPECT_EQ(eta.has_value(), some_constant) << "k = " << base.size();
    if (eta) {
      const Partition oriented = orient_by_coloring(base, *eta);
      EXPECT_TRUE(chi_assignment(oriented).constant_per_subdomain(base.size()));
      for (const auto& inc : chi_assignment(oriented).incidences) EXPECT_EQ(inc.chi, (*eta)[inc.subdomain]);
    }
  }
}

TEST(Bipartite, ChiAntisymmetry) {
  Partition p = circle::to_partition(circle::equal_partition(1.0, 4), {1, -1, -1, 1});
  for (const auto& f : p.interfaces) EXPECT_EQ(f.chi[0] * f.chi[1], -1);
}

TEST(Coefficients, Square31StripsMatchClosedForm) {
  const auto setup = separable::strip_setup({3, 1, 1.0, 1.0}, 40);
  for (std::size_t n = 0; n < setup.traces.mesh.nodes.size(); n += 7)
    EXPECT_NEAR(setup.traces.normal_derivative[n][0], square31_trace(setup.traces.mesh.nodes[n].y), 1e-5);
  const Vector& a = setup.coefficients.a.values;
  const double r = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(a(0), r, 1e-12);
  EXPECT_NEAR(a(1), -r, 1e-12);
  EXPECT_NEAR(a(2), r, 1e-12);
  EXPECT_LT(setup.coefficients.residual, 1e-10);
  EXPECT_NEAR(a.squaredNorm(), 1.0, 1e-12);
}

TEST(Coefficients, CircleThreePartition) {
  const auto cp = circle::equal_partition(2 * kPi, 3);
  const Partition p = circle::to_partition(cp);
  const CoefficientFit fit = solve_coefficients(p, circle::circle_traces(cp, p));
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(fit.a[j], 1.0 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(fit.residual, 0.0);
}

// Two strips; the right-hand traces on the upper half of the interface are
// doubled, so ratios are {1, 1/2} and the median 3/4.
TEST(Coefficients, MismatchedTracesGiveLargeResidual) {
  const auto setup = separable::strip_setup({2, 1, 1.0, 1.0}, 11);
  InterfaceTraces t = setup.traces;
  for (std::size_t n = 0; n < t.mesh.nodes.size(); ++n)
    if (t.mesh.nodes[n].y > 0.5) t.normal_derivative[n][1] *= 2.0;
  const CoefficientFit fit = solve_coefficients(setup.partition, t);
  EXPECT_GE(fit.residual, 0.33);
  EXPECT_THROW(compute_rho(setup.partition, fit.a, t), Error);
}

TEST(Coefficients, ScaleInvariance) {
  const auto cp = circle::CirclePartition{6.0, {0.0, 1.5, 3.5}};
  const Partition p = circle::to_partition(cp);
  InterfaceTraces t = circle::circle_traces(cp, p);
  const CoefficientFit base = solve_coefficients(p, t);
  for (double c : {1e-3, 0.7, 42.0}) {
    InterfaceTraces scaled = t;
    for (auto& d : scaled.normal_derivative) d = {c * d[0], c * d[1]};
    const CoefficientFit fit = solve_coefficients(p, scaled);
    EXPECT_LT((fit.a.values - base.a.values).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(fit.a.values.squaredNorm(), 1.0, 1e-12);
  }
}

TEST(Coefficients, VanishingTraceIsAGenericityViolation) {
  const auto setup = separable::strip_setup({3, 1, 1.0, 1.0}, 10);
  InterfaceTraces t = setup.traces;
  t.normal_derivative[3][1] = 0.0;
  try {
    solve_coefficients(setup.partition, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GenericityViolation);
  }
}

TEST(Rho, Square31IsProportionalToSinPiY) {
  const separable::ModeIndex mode{3, 1, 1.0, 1.0};
  const auto setup = separable::strip_setup(mode, 40);
  const double unit = separable::trace_amplitude(mode);
  for (std::size_t n = 0; n < setup.traces.mesh.nodes.size(); ++n) {
    const double y = setup.traces.mesh.nodes[n].y;
    // In units of the strip trace amplitude the weight is (1/sqrt 3) sin(pi y).
    EXPECT_NEAR(setup.rho.values(n) / unit, std::sin(kPi * y) / std::sqrt(3.0), 1e-12);
    if (std::abs(y - 0.5) < 1e-12) {
      EXPECT_NEAR(setup.rho.values(n) / unit, 1.0 / std::sqrt(3.0), 1e-12);
    }
  }
  EXPECT_TRUE(setup.rho.all_positive());
  EXPECT_DOUBLE_EQ(setup.rho.side_residual, setup.coefficients.residual);
}

TEST(Rho, CircleThreePartitionIsConstant) {
  const double len = 2 * kPi;
  const auto cp = circle::equal_partition(len, 3);
  const Partition p = circle::to_partition(cp);
  const InterfaceTraces t = circle::circle_traces(cp, p);
  const CoefficientFit fit = solve_coefficients(p, t);
  const WeightRho rho = compute_rho(p, fit.a, t);
  const double ell = len / 3;
  const double expected = (1.0 / std::sqrt(3.0)) * (kPi / ell) * std::sqrt(2.0 / ell);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(rho.values(i), expected, 1e-14);
}

TEST(SubspaceS, CircleFourIsConstant) {
  const auto cp = circle::equal_partition(2 * kPi, 4);
  const Partition p = circle::to_partition(cp);
  const SubspaceBasis s = subspace_S_basis(p, circle::circle_traces(cp, p));
  ASSERT_EQ(s.dimension(), 1);
  const Vector b = s.basis.col(0);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(b(i), b(0), 1e-14);
}

TEST(SubspaceS, Square31DimensionAndRank) {
  for (int nodes : {3, 5, 9, 20}) {
    const auto setup = separable::strip_setup({3, 1, 1.0, 1.0}, nodes + 1);
    const SubspaceBasis s = subspace_S_basis(setup.partition, setup.traces);
    EXPECT_EQ(s.dimension(), 2 * nodes - 2);
    // Rank oracle: singular values of the 3 x 2N constraint matrix.
    Eigen::JacobiSVD<Matrix> svd(s.constraints);
    const Vector sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0);
    EXPECT_EQ(rank, 2);
    EXPECT_EQ(s.rank, rank);
  }
}

TEST(SubspaceS, MembershipAndOrthonormality) {
  const auto setup = separable::strip_setup({3, 1, 1.0, 1.0}, 25);
  const SubspaceBasis s = subspace_S_basis(setup.partition, setup.traces);
  const Vector w = setup.traces.mesh.weights();
  const Matrix gram = s.basis.transpose() * w.asDiagonal() * s.basis;
  EXPECT_LT((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index c = 0; c < s.basis.cols(); ++c) {
    const double scale = s.constraints.cwiseAbs().maxCoeff() * s.basis.col(c).norm();
    EXPECT_LE((s.constraints * s.basis.col(c)).cwiseAbs().maxCoeff(), 1e-10 * scale);
  }
  // sin(2 pi y) on both interfaces lies in S.
  Vector f(setup.traces.mesh.size());
  for (int n = 0; n < f.size(); ++n) f(n) = std::sin(2 * kPi * setup.traces.mesh.nodes[n].y);
  EXPECT_LT((s.constraints * f).cwiseAbs().maxCoeff(), 1e-10 * s.constraints.cwiseAbs().maxCoeff());
  const Vector proj = s.basis * (s.basis.transpose() * w.asDiagonal() * f);
  EXPECT_LT((proj - f).norm(), 1e-10 * f.norm());
}

TEST(SubspaceS, RhoCarriesTangentSpaceOntoS) {
  const auto setup = separable::strip_setup({3, 1, 1.0, 1.0}, 17);
  const SubspaceBasis s = subspace_S_basis(setup.partition, setup.traces);
  const SubspaceBasis f = tangent_basis(setup.partition, setup.traces, &setup.rho.values);
  EXPECT_EQ(f.dimension(), s.dimension());
  EXPECT_LT(rho_bijection_defect(s, f, setup.rho.values), 1e-12);
}

}  // namespace
