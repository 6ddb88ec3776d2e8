#pragma once

#include "nodal/linalg.hpp"
#include "nodal/partition.hpp"

namespace nodal {

/// Two-sided Dirichlet-to-Neumann operator restricted to the discrete S.
/// `matrix` acts on coordinates in `basis`, whose columns are orthonormal in
/// the discrete L2(Sigma) inner product of `mesh`.
struct DtnOperator {
  InterfaceMesh mesh;
  Matrix basis;
  Matrix matrix;
  double asymmetry = 0.0;  // ||A - A^T|| / ||A|| before symmetrization

  int dimension() const { return static_cast<int>(matrix.rows()); }

  /// Lambda applied to node-space data (projected onto S first).
  Vector apply(const Vector& f) const {
    const Vector coords = basis.transpose() * mesh.weights().asDiagonal() * f;
    return basis * (matrix * coords);
  }

  /// The operator in node space: B A B^T W.
  Matrix node_matrix() const {
    return basis * matrix * basis.transpose() * mesh.weights().asDiagonal();
  }

  SymmetricEigen spectrum() const { return symmetric_eigen(matrix); }
};

/// Projects columns of two-sided derivative data onto the S basis and
/// symmetrizes, recording the asymmetry beforehand.
inline DtnOperator finish_dtn(InterfaceMesh mesh, Matrix basis, const Matrix& jumps) {
  DtnOperator op;
  op.matrix = basis.transpose() * mesh.weights().asDiagonal() * jumps;
  op.asymmetry = relative_asymmetry(op.matrix);
  op.matrix = 0.5 * (op.matrix + op.matrix.transpose());
  op.mesh = std::move(mesh);
  op.basis = std::move(basis);
  return op;
}

}  // namespace nodal
