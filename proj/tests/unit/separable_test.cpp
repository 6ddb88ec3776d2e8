#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nodal/separable.hpp"

namespace {

using namespace nodal;
using namespace nodal::separable;

// Brute-force oracle: finite differences for g'' + mu2 g = 0 on each strip of
// [0, a] with `cells` cells per strip, unit data at one interface, and
// second-order one-sided derivatives for the jump g'(x-) - g'(x+).
Matrix brute_force_block(const ModeIndex& mode, int q, int cells) {
  const int d = mode.m - 1;
  const double mu2 = mode.eigenvalue() - std::pow(q * kPi / mode.b, 2);
  const double h = mode.strip_width() / cells;
  Matrix out = Matrix::Zero(d, d);
  for (int col = 0; col < d; ++col) {
    std::vector<double> g(mode.m * cells + 1, 0.0);
    for (int strip = 0; strip < mode.m; ++strip) {
      const double left = (strip - 1 == col) ? 1.0 : 0.0;
      const double right = (strip == col) ? 1.0 : 0.0;
      // Thomas algorithm on interior nodes of the strip.
      const int n = cells - 1;
      std::vector<double> c(n), r(n);
      const double diag = 2.0 - mu2 * h * h;
      for (int i = 0; i < n; ++i) r[i] = (i == 0 ? left : 0.0) + (i == n - 1 ? right : 0.0);
      std::vector<double> cp(n), rp(n);
      cp[0] = -1.0 / diag;
      rp[0] = r[0] / diag;
      for (int i = 1; i < n; ++i) {
        const double m = diag + cp[i - 1];
        cp[i] = -1.0 / m;
        rp[i] = (r[i] + rp[i - 1]) / m;
      }
      std::vector<double> x(n);
      x[n - 1] = rp[n - 1];
      for (int i = n - 2; i >= 0; --i) x[i] = rp[i] - cp[i] * x[i + 1];
      const int base = strip * cells;
      g[base] = left;
      g[base + cells] = right;
      for (int i = 0; i < n; ++i) g[base + 1 + i] = x[i];
    }
    for (int row = 0; row < d; ++row) {
      const int k = (row + 1) * cells;
      const double dl = (3 * g[k] - 4 * g[k - 1] + g[k - 2]) / (2 * h);
      const double dr = (-3 * g[k] + 4 * g[k + 1] - g[k + 2]) / (2 * h);
      out(row, col) = dl - dr;
    }
  }
  return out;
}

const ModeIndex k31{3, 1, 1.0, 1.0};

TEST(ModeIndex, EigenvalueAndMultiplicity) {
  EXPECT_NEAR(k31.eigenvalue(), 10 * kPi * kPi, 1e-12);
  EXPECT_EQ(multiplicity(k31), 2);
  EXPECT_EQ(multiplicity({2, 1, 1.0, 1.0}), 2);
  EXPECT_EQ(multiplicity({1, 1, 1.0, 1.0}), 1);
  EXPECT_EQ(multiplicity({5, 5, 1.0, 1.0}), 3);  // 50 = 1 + 49 = 25 + 25
  EXPECT_EQ(multiplicity({3, 1, 1.0, 0.8}), 1);
}

TEST(Blocks, MatchBruteForceOracle) {
  for (const ModeIndex& mode : {k31, ModeIndex{2, 1, 1.0, 1.0}, ModeIndex{3, 1, 1.0, 0.8}, ModeIndex{4, 1, 1.0, 1.0}}) {
    for (int q = 2; q <= 6; ++q) {
      const TransmissionBlock blk = assemble_block(mode, q);
      const Matrix oracle = brute_force_block(mode, q, 3334);
      const double scale = std::max(1.0, oracle.cwiseAbs().maxCoeff());
      EXPECT_LT((blk.matrix - oracle).cwiseAbs().maxCoeff(), 1e-5 * scale) << "m=" << mode.m << " q=" << q;
    }
  }
}

// Values frozen from the brute-force oracle above (10^4 nodes).
TEST(Blocks, Square31FrozenSpectra) {
  const SymmetricEigen q2 = symmetric_eigen(assemble_block(k31, 2).matrix);
  EXPECT_LT(q2.values(0), 0.0);
  EXPECT_LT(q2.values(1), 0.0);
  EXPECT_NEAR(q2.values(0), -37.78931, 1e-4);
  EXPECT_NEAR(q2.values(1), -9.55419, 1e-4);
  const SymmetricEigen q3 = symmetric_eigen(assemble_block(k31, 3).matrix);
  EXPECT_NEAR(q3.values(0), 0.0, 1e-12);
  EXPECT_NEAR(q3.values(1), 7.25520, 1e-4);
  const SymmetricEigen q4 = symmetric_eigen(assemble_block(k31, 4).matrix);
  EXPECT_GT(q4.values(0), 0.0);
}

TEST(Blocks, Symmetry) {
  for (int q = 2; q <= 40; ++q) {
    const Matrix b = assemble_block({5, 1, 1.0, 1.0}, q).matrix;
    EXPECT_LE((b - b.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Blocks, EvanescentPositivity) {
  for (const ModeIndex& mode : {k31, ModeIndex{2, 1, 1.0, 1.0}, ModeIndex{3, 1, 1.0, 0.8}, ModeIndex{5, 1, 1.3, 1.0}}) {
    const int qmax = evanescent_cutoff(mode);
    for (int q = 1; q <= qmax + 5; ++q) {
      if (std::pow(q * kPi / mode.b, 2) <= mode.eigenvalue()) continue;
      EXPECT_GT(symmetric_eigen(assemble_block(mode, q).matrix).values(0), 0.0);
      EXPECT_TRUE(certified_positive(mode, q));
    }
  }
}

TEST(Blocks, ZeroModeFromPartnerMode) {
  for (int m : {2, 3, 4, 5}) {
    const ModeIndex mode{m, 1, 1.0, 1.0};
    const TransmissionBlock blk = assemble_block(mode, m);
    Vector v(m - 1);
    for (int i = 0; i < m - 1; ++i) v(i) = std::sin(kPi * (i + 1) / m);
    EXPECT_LE((blk.matrix * v).cwiseAbs().maxCoeff(), 1e-10) << "m = " << m;
  }
}

TEST(Blocks, ReflectionSymmetry) {
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  for (int q = 2; q <= 8; ++q) {
    const Matrix b = assemble_block(k31, q).matrix;
    EXPECT_LE((swap * b * swap - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Blocks, EntryPoints) {
  try {
    assemble_block(k31, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Resonance);
  }
  try {
    resonant_block(k31, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongEntryPoint);
  }
  EXPECT_EQ(resonant_block(k31, 1).dimension(), 0);
  EXPECT_EQ(resonant_block({2, 1, 1.0, 1.0}, 1).dimension(), 0);
  EXPECT_THROW(assemble_block({3, 2, 1.0, 1.0}, 2), Error);
}

// Rank oracle for the q = 1 sector: every strip forces g(left) + g(right) = 0.
TEST(Blocks, ResonantSectorRank) {
  for (int m : {2, 3, 4, 6}) {
    Matrix c = Matrix::Zero(m, m - 1);
    for (int j = 0; j < m; ++j) {
      if (j >= 1) c(j, j - 1) = 1;
      if (j <= m - 2) c(j, j) = 1;
    }
    Eigen::FullPivLU<Matrix> lu(c);
    EXPECT_EQ(resonant_block({m, 1, 1.0, 1.0}, 1).dimension(), (m - 1) - static_cast<int>(lu.rank()));
  }
}

TEST(Spectrum, Square31) {
  const SeparableSpectrum s = dtn_spectrum(k31, evanescent_cutoff(k31));
  EXPECT_EQ(s.negative, 2);
  EXPECT_EQ(s.zero, 1);
  ASSERT_GE(s.items.size(), 4u);
  EXPECT_EQ(s.items[0].q, 2);
  EXPECT_EQ(s.items[1].q, 2);
  EXPECT_EQ(s.items[2].q, 3);
  EXPECT_LE(std::abs(s.items[2].sigma), 1e-9);
  EXPECT_GT(s.items[3].sigma, 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(s.items[0].values(0), r, 1e-12);
  EXPECT_NEAR(s.items[0].values(1), r, 1e-12);
  EXPECT_NEAR(s.items[1].values(0), r, 1e-12);
  EXPECT_NEAR(s.items[1].values(1), -r, 1e-12);
  EXPECT_NEAR(s.items[2].values(0), r, 1e-12);
  EXPECT_NEAR(s.items[2].values(1), r, 1e-12);
  EXPECT_TRUE(s.tail_certified);
}

TEST(Spectrum, OtherModes) {
  const SeparableSpectrum s21 = dtn_spectrum({2, 1, 1.0, 1.0}, 10);
  EXPECT_EQ(s21.negative, 0);
  EXPECT_EQ(s21.zero, 1);
  const SeparableSpectrum s11 = dtn_spectrum({1, 1, 1.0, 1.0}, 10);
  EXPECT_TRUE(s11.items.empty());
  EXPECT_EQ(s11.negative + s11.zero, 0);
  const SeparableSpectrum r = dtn_spectrum({3, 1, 1.0, 0.8}, 10);
  EXPECT_EQ(r.negative, 2);
  EXPECT_EQ(r.zero, 0);
}

TEST(Spectrum, CutoffIsEnforced) {
  try {
    dtn_spectrum(k31, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientCutoff);
  }
}

TEST(Reconstruction, Square31Eigenfunctions) {
  const auto setup = strip_setup(k31, 64);
  const SeparableSpectrum s = dtn_spectrum(k31, 8);
  const Reconstruction r1 = reconstruct_eigenfunctions(s.items[0], setup);
  const Reconstruction r2 = reconstruct_eigenfunctions(s.items[1], setup);
  const Reconstruction r3 = reconstruct_eigenfunctions(s.items[2], setup);
  const auto& nodes = setup.traces.mesh.nodes;
  const double c1 = r1.phi(0) / (2 * std::cos(kPi * nodes[0].y));
  const double c3 = r3.phi(0) / (std::sin(3 * kPi * nodes[0].y) / std::sin(kPi * nodes[0].y));
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const double y = nodes[n].y;
    EXPECT_NEAR(r1.f(n) / r1.f(0), std::sin(2 * kPi * y) / std::sin(2 * kPi * nodes[0].y), 1e-10);
    EXPECT_NEAR(r1.phi(n), c1 * 2 * std::cos(kPi * y), 1e-10);
    const double side = nodes[n].interface == 0 ? 1.0 : -1.0;
    EXPECT_NEAR(r2.phi(n), side * c1 * 2 * std::cos(kPi * y), 1e-10);
    EXPECT_NEAR(r3.phi(n), c3 * std::sin(3 * kPi * y) / std::sin(kPi * y), 1e-10);
  }
}

TEST(SineData, TransformRoundTripAndChebyshev) {
  const int nodes = 31;
  Matrix samples(2, nodes);
  for (int j = 1; j <= nodes; ++j) {
    const double y = double(j) / (nodes + 1);
    samples(0, j - 1) = std::sin(2 * kPi * y) - 0.5 * std::sin(5 * kPi * y);
    samples(1, j - 1) = 3 * std::sin(4 * kPi * y);
  }
  const SineData d = sine_transform(k31, samples);
  EXPECT_NEAR(d.coefficients(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(d.coefficients(0, 4), -0.5, 1e-12);
  EXPECT_NEAR(d.coefficients(1, 3), 3.0, 1e-12);
  for (double y : {1e-9, 0.1, 0.5, 0.77, 1 - 1e-9}) {
    const double expect = (std::sin(2 * kPi * y) - 0.5 * std::sin(5 * kPi * y)) / std::sin(kPi * y);
    EXPECT_NEAR(d.over_sin(0, y), expect, 1e-6);
  }
  EXPECT_NEAR(d.over_sin(0, 0.0), 2.0 - 2.5, 1e-12);
}

// <Lambda f, f> from the blocks against direct trapezoid pairing of the
// block action on the single-q eigenfunction.
TEST(SineData, QuadraticFormOfEigenfunction) {
  const SeparableSpectrum s = dtn_spectrum(k31, 8);
  const SineData d = item_data(k31, s.items[0]);
  EXPECT_NEAR(d.quadratic_form(), s.items[0].sigma * d.norm_squared(), 1e-10);
  SineData bad{k31, Matrix::Zero(2, 3)};
  bad.coefficients(0, 0) = 1.0;
  EXPECT_THROW(bad.quadratic_form(), Error);
}

}  // namespace
