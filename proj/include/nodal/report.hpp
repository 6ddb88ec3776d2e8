#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nodal/criticality.hpp"
#include "nodal/dtn.hpp"
#include "nodal/error.hpp"
#include "nodal/linalg.hpp"

namespace nodal {

/// Label bookkeeping for an eigenvalue lambda*: ell is the smallest index k with
/// lambda_k = lambda*, nu the nodal count, delta = ell - nu.
struct ModeInfo {
  double lambda = 0.0;
  int multiplicity = 1;
  int label = 1;
  int nodal_count = 1;
  int deficiency = 0;
  double cluster_tolerance = 0.0;
  std::string source;
};

inline ModeInfo make_mode_info(double lambda, int below, int multiplicity, int nodal_count, double tol,
                               std::string source) {
  ModeInfo m;
  m.lambda = lambda;
  m.multiplicity = multiplicity;
  m.label = below + 1;
  m.nodal_count = nodal_count;
  m.deficiency = m.label - nodal_count;
  m.cluster_tolerance = tol;
  m.source = std::move(source);
  return m;
}

/// Labels from an ascending list of eigenvalues that extends past the cluster.
/// A value within (tol, 2 tol] of lambda* makes the clustering ambiguous.
inline ModeInfo mode_info_from_spectrum(const std::vector<double>& spectrum, double lambda, double tol,
                                        int nodal_count, const std::string& source) {
  int below = 0, cluster = 0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const double v = spectrum[i];
    const double d = std::abs(v - lambda);
    if (d > tol && d <= 2.0 * tol) {
      const int k = static_cast<int>(i) + 1;
      throw Error(ErrorCode::Ambiguity, "eigenvalue " + std::to_string(k) +
                                            " sits at the cluster edge; candidate labels " +
                                            std::to_string(below + 1) + " and " + std::to_string(k));
    }
    if (v < lambda - tol) ++below;
    else if (d <= tol) ++cluster;
  }
  if (cluster == 0) throw Error(ErrorCode::InvalidArgument, "lambda* is not in the supplied spectrum");
  if (spectrum.empty() || spectrum.back() <= lambda + tol)
    throw Error(ErrorCode::InvalidArgument, "spectrum must extend past the cluster");
  return make_mode_info(lambda, below, cluster, nodal_count, tol, source);
}

/// Rectangle a x b, mode (m, n): closed-form spectrum pi^2 (i^2/a^2 + j^2/b^2)
/// and nu = m n.
inline ModeInfo mode_info_rectangle(double a, double b, int m, int n, double rel_tol = 1e-6) {
  if (m < 1 || n < 1 || !(a > 0) || !(b > 0)) throw Error(ErrorCode::InvalidArgument, "bad rectangle mode");
  const double lambda = kPi * kPi * (double(m * m) / (a * a) + double(n * n) / (b * b));
  const double tol = rel_tol * lambda;
  const double top = lambda + 3.0 * tol;
  std::vector<double> spec;
  for (int i = 1; kPi * kPi * i * i / (a * a) <= top * 4; ++i)
    for (int j = 1; kPi * kPi * (double(i * i) / (a * a) + double(j * j) / (b * b)) <= top * 4; ++j)
      spec.push_back(kPi * kPi * (double(i * i) / (a * a) + double(j * j) / (b * b)));
  std::sort(spec.begin(), spec.end());
  return mode_info_from_spectrum(spec, lambda, tol, m * n, "rectangle closed form");
}

/// Circle of circumference L cut into k equal arcs: lambda* = (pi k / L)^2. The
/// circle spectrum is (2 pi n / L)^2, simple for n = 0 and double otherwise, so
/// only even k give an eigenvalue (whose eigenfunctions have k nodal arcs).
inline ModeInfo mode_info_circle(double circumference, int k, double rel_tol = 1e-12) {
  if (k % 2 != 0)
    throw Error(ErrorCode::UnsupportedGeometry,
                "odd k: lambda* is not a circle eigenvalue and the partition is not nodal");
  const double lambda = std::pow(kPi * k / circumference, 2);
  std::vector<double> spec{0.0};
  for (int n = 1; n <= k; ++n) {
    const double v = std::pow(2 * kPi * n / circumference, 2);
    spec.push_back(v);
    spec.push_back(v);
  }
  return mode_info_from_spectrum(spec, lambda, rel_tol * lambda, k, "circle closed form");
}

struct SpectralCounts {
  int negative = 0;
  int zero = 0;
  int dimension = 0;
  double threshold = 0.0;
  double zero_band_max = 0.0;   // largest |sigma| counted as zero
  double nearest_nonzero = 0.0; // smallest |sigma| above the threshold (inf if none)
  bool stable_at_half = true;   // same counts with threshold / 2
  std::vector<double> eigenvalues;  // ascending, at most `cap`
};

inline SpectralCounts count_spectrum(const Vector& values, double threshold, int cap = 20) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero threshold must be positive");
  SpectralCounts c;
  c.dimension = static_cast<int>(values.size());
  c.threshold = threshold;
  c.nearest_nonzero = std::numeric_limits<double>::infinity();
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  int neg_half = 0, zero_half = 0;
  for (double s : sorted) {
    if (s < -threshold) ++c.negative;
    else if (std::abs(s) <= threshold) {
      ++c.zero;
      c.zero_band_max = std::max(c.zero_band_max, std::abs(s));
    }
    if (std::abs(s) > threshold) c.nearest_nonzero = std::min(c.nearest_nonzero, std::abs(s));
    if (s < -threshold / 2) ++neg_half;
    else if (std::abs(s) <= threshold / 2) ++zero_half;
  }
  c.stable_at_half = neg_half == c.negative && zero_half == c.zero;
  for (int k = 0; k < std::min<int>(cap, sorted.size()); ++k) c.eigenvalues.push_back(sorted[k]);
  return c;
}

/// H = 2 rho^{-1} Lambda rho on the tangent space, written in a basis that is
/// orthonormal for the rho^2-weighted inner product.
struct HessianOperator {
  Matrix basis;   // node-space directions phi, orthonormal in L2_rho
  Matrix matrix;  // symmetric representation in `basis`
  Vector rho;
  DtnOperator dtn;

  /// H phi in node space.
  Vector apply(const Vector& phi) const {
    return 2.0 * rho.cwiseInverse().cwiseProduct(dtn.apply(rho.cwiseProduct(phi)));
  }
  SymmetricEigen spectrum() const { return symmetric_eigen(matrix); }
};

/// Uses `tangent` (an L2_rho-orthonormal basis of F) when given; otherwise
/// rho^{-1} times the S basis.
inline HessianOperator hessian_operator(const DtnOperator& dtn, const Vector& rho,
                                        const Matrix* tangent = nullptr) {
  if (rho.size() != dtn.mesh.size()) throw Error(ErrorCode::InvalidArgument, "weight does not match the mesh");
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho(i) > 0.0)) throw Error(ErrorCode::GenericityViolation, "weight is not positive at a DOF node");
  HessianOperator h;
  h.rho = rho;
  h.dtn = dtn;
  h.basis = tangent ? *tangent : Matrix(rho.cwiseInverse().asDiagonal() * dtn.basis);
  const Vector wr = dtn.mesh.weights().cwiseProduct(rho.cwiseAbs2());
  Matrix hb(h.basis.rows(), h.basis.cols());
  for (Eigen::Index c = 0; c < h.basis.cols(); ++c) hb.col(c) = h.apply(h.basis.col(c));
  h.matrix = h.basis.transpose() * wr.asDiagonal() * hb;
  h.matrix = 0.5 * (h.matrix + h.matrix.transpose());
  return h;
}

/// max |eig(H) - 2 eig(Lambda)| / max(1, max |2 eig(Lambda)|); +inf on size mismatch.
inline double hessian_similarity_defect(const HessianOperator& h) {
  const Vector eh = h.spectrum().values;
  const Vector el = 2.0 * h.dtn.spectrum().values;
  if (eh.size() != el.size()) return std::numeric_limits<double>::infinity();
  if (eh.size() == 0) return 0.0;
  return (eh - el).cwiseAbs().maxCoeff() / std::max(1.0, el.cwiseAbs().maxCoeff());
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct CheckEntry {
  std::string name;
  bool passed = true;
  bool asserted = true;  // unasserted entries are recorded but never fail the report
  std::string detail;
};

struct IdentityReport {
  std::vector<CheckEntry> entries;

  bool passed() const {
    for (const auto& e : entries)
      if (e.asserted && !e.passed) return false;
    return true;
  }
  void add(std::string name, bool ok, std::string detail, bool asserted = true) {
    entries.push_back({std::move(name), ok, asserted, std::move(detail)});
  }
};

/// Index and nullity identities for nodal (bipartite) partitions; non-bipartite
/// partitions get their counts recorded without assertions.
inline IdentityReport verify_identities(const SpectralCounts& counts, const std::optional<ModeInfo>& info,
                                        bool bipartite, std::optional<double> similarity_defect = {},
                                        double similarity_tol = 1e-10) {
  IdentityReport r;
  if (info) r.add("courant", info->deficiency >= 0, "delta = " + std::to_string(info->deficiency));
  if (bipartite && info) {
    r.add("index", counts.negative == info->deficiency,
          "n- = " + std::to_string(counts.negative) + ", delta = " + std::to_string(info->deficiency));
    r.add("nullity", counts.zero == info->multiplicity - 1,
          "n0 = " + std::to_string(counts.zero) + ", multiplicity - 1 = " + std::to_string(info->multiplicity - 1));
  } else {
    r.add("counts", true,
          "n- = " + std::to_string(counts.negative) + ", n0 = " + std::to_string(counts.zero) +
              (bipartite ? "" : " (non-bipartite: index relates to the partition defect, not asserted)"),
          false);
  }
  r.add("threshold-stability", counts.stable_at_half,
        "counts unchanged at threshold / 2; zero band max " + format_number(counts.zero_band_max) +
            ", nearest nonzero " + format_number(counts.nearest_nonzero));
  if (similarity_defect)
    r.add("hessian-similarity", *similarity_defect <= similarity_tol,
          "max |eig H - 2 eig Lambda| (relative) = " + format_number(*similarity_defect));
  return r;
}

/// Plain-text table: one line per check.
inline std::string format_table(const IdentityReport& r) {
  std::ostringstream os;
  std::size_t width = 8;
  for (const auto& e : r.entries) width = std::max(width, e.name.size());
  for (const auto& e : r.entries) {
    const char* status = !e.asserted ? "note" : (e.passed ? "pass" : "FAIL");
    os << std::left << std::setw(static_cast<int>(width) + 2) << e.name << std::setw(6) << status << e.detail
       << "\n";
  }
  return os.str();
}

}  // namespace nodal
