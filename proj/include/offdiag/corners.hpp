#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "offdiag/linalg.hpp"

namespace offdiag::corners {

/// D, an orthogonal projection P, and the four compressions of D onto
/// orthonormal bases of ran P and ran (I-P).
struct CornerDecomposition {
  ComplexMatrix d;
  ComplexMatrix p;
  ComplexMatrix ranp_basis; // n x r isometry
  ComplexMatrix ranq_basis; // n x (n-r) isometry
  ComplexMatrix d1, d2, d3, d4;
  RankResult p_rank;
};

struct CornerReport {
  RankResult rank2;
  RankResult rank3;
  double frob2 = 0.0;
  double frob3 = 0.0;
  double normality_defect = 0.0;
  double commutator_residual = 0.0;
};

CornerDecomposition decompose(const ComplexMatrix& d, const ComplexMatrix& p,
                              const ToleranceProfile& tol);

/// ||DD* - D*D||_F / max(1, ||D||_F^2); zero exactly when D is normal.
double normality_defect(const ComplexMatrix& d);

CornerReport corner_identity_check(const CornerDecomposition& dec, const ToleranceProfile& tol);

struct CrWitness {
  std::size_t trial = 0;
  ComplexMatrix p;
  RankResult rank2;
  RankResult rank3;
};

/// Outcome of sampling projections for a common-rank violation. A result
/// without a witness is evidence, not proof.
struct CrSampleResult {
  std::size_t trials_run = 0;
  std::size_t ambiguous_skipped = 0;
  std::optional<CrWitness> witness;

  bool violation_found() const { return witness.has_value(); }
};

CrSampleResult cr_sample_test(const ComplexMatrix& d, std::size_t trials, std::uint64_t seed,
                              const ToleranceProfile& tol,
                              const std::vector<ComplexMatrix>& priors = {});

enum class SpectrumShape { Line, Circle, Neither };

const char* to_string(SpectrumShape shape);

/// Line when the points are numerically collinear; else Circle when the
/// least-squares circle fits every point to fit_tol * spread; else Neither.
SpectrumShape spectrum_line_circle_classify(const std::vector<cdouble>& eigs,
                                            double fit_tol = 1e-8,
                                            const ToleranceProfile& tol = {});

/// rho(A, B) = rank(A - B), with certificate.
RankResult rank_distance(const ComplexMatrix& a, const ComplexMatrix& b,
                         const ToleranceProfile& tol);

struct DistanceBoundEntry {
  RankResult distance;
  long margin = 0; // distance.rank - floor(|k-j|/2)
};

struct DistanceBoundReport {
  std::size_t rank2 = 0;
  std::size_t rank3 = 0;
  std::size_t bound = 0;
  std::vector<DistanceBoundEntry> entries;

  bool all_met() const {
    for (const auto& e : entries)
      if (e.margin < 0) return false;
    return true;
  }
};

/// Checks rank(D - Y) >= floor(|k-j|/2) for comparators Y that carry a
/// checkable common-rank witness (normal + spectrum on a line or circle).
DistanceBoundReport cr_distance_bound_check(const ComplexMatrix& d, const ComplexMatrix& p,
                                            const std::vector<ComplexMatrix>& ys,
                                            const ToleranceProfile& tol);

} // namespace offdiag::corners
