#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "offdiag/chain.hpp"
#include "offdiag/linalg.hpp"

namespace offdiag::shift {

/// Finite section of a bilaterally indexed operator on basis e_{-T} .. e_T.
/// Indices with |n| > T - interior_margin are boundary artifacts of the
/// cutoff; exactness claims are made on interior entries only.
struct TruncatedOperator {
  int half_width = 1;
  int interior_margin = 1;
  ComplexMatrix matrix;

  std::size_t dim() const { return static_cast<std::size_t>(2 * half_width + 1); }
  std::size_t index_of(int n) const { return static_cast<std::size_t>(n + half_width); }
};

/// The exact quasiaffinity weights: alpha_n = 1/sqrt(1+4^-n),
/// beta_n = 2^-n/sqrt(1+4^-n), stored over -T..T. Both are computed in
/// overflow-free forms (4^|n| never materializes for the shrinking factor).
struct WeightedPair {
  int half_width = 1;
  std::vector<double> alpha;
  std::vector<double> beta;

  double alpha_at(int n) const { return alpha[static_cast<std::size_t>(n + half_width)]; }
  double beta_at(int n) const { return beta[static_cast<std::size_t>(n + half_width)]; }
};

double alpha_weight(int n);
double beta_weight(int n);
WeightedPair weighted_pair(int half_width);

/// U e_n = e_{n-1}; the boundary column e_{-T} maps to zero in the section.
TruncatedOperator truncated_bilateral_shift(int half_width);

/// A truncation-backed (D, P) pair with certified corner data. The normality
/// defect is split into the interior compression (the substantive claim) and
/// the full-matrix value that includes the cutoff rows.
struct ShiftModel {
  std::string label;
  ComplexMatrix d;
  ComplexMatrix p;
  std::vector<std::size_t> boundary;
  RankResult rank2;
  RankResult rank3;
  double interior_defect = 0.0;
  double full_defect = 0.0;
  bool rank2_grows_with_t = false; // "infinite" target realized as k = T
};

/// Case one: D = U ⊗ I_k, P = P_0 ⊗ I_k; ranks (0, k). k absent means the
/// infinite target, realized as k = T. k = 0 selects D = I.
ShiftModel build_case1(std::optional<std::size_t> k, int half_width,
                       const ToleranceProfile& tol);

/// Case two: D = (U+U*) ⊗ I_j ⊕ U ⊗ I_{k-j}, ranks (j, k); k absent means
/// the infinite target.
ShiftModel build_case2(std::size_t j, std::optional<std::size_t> k, int half_width,
                       const ToleranceProfile& tol);

/// Case three: D = [[I, I], [I, I]] on C^n ⊕ C^n, P = I ⊕ 0; ranks (n, n).
ShiftModel build_case3(std::size_t n, const ToleranceProfile& tol);

/// A = U + 2U* with the diagonal pair (M, N): the lower corner N A M - M A* N
/// vanishes identically while the upper corner M A N - N A* M is
/// skew-hermitian with trivial kernel in the full model.
struct QuasiaffinityTruncation {
  int half_width = 3;
  TruncatedOperator a;
  WeightedPair weights;
  ComplexMatrix lower; // N A M - M A* N
  ComplexMatrix upper; // M A N - N A* M
};

QuasiaffinityTruncation build_quasiaffinity(int half_width);

/// Closed form of the kernel recursion multiplier
/// x_{p+1}/x_{p-1} = -2 sqrt(1+4^-(p+1)) / sqrt(1+4^-(p-1)).
double kernel_recursion_oracle(long p);

/// The same multiplier assembled from the entries of the upper corner.
double matrix_recursion_ratio(const QuasiaffinityTruncation& t, int p);

/// Smallest singular value of the interior compression (drop rows/cols with
/// |n| > T - margin).
double interior_sigma_min(const ComplexMatrix& m, int half_width, int margin);
ComplexMatrix interior_compression(const ComplexMatrix& m, int half_width, int margin);

/// Injectivity certificate for the upper corner's interior section. The
/// section is taken over an even-length window: odd windows of a
/// zero-diagonal tridiagonal are singular outright (cutoff parity artifact).
/// By parity the section splits into two bidiagonal blocks, so sigma_min > 0
/// is certified by nonzero band entries alone, and its size is computed in
/// log2 domain since the true value underflows doubles once T grows (the
/// bands decay like 2^-|n|, the infinite operator is compact).
struct InteriorInjectivity {
  std::size_t dim = 0;
  bool nonsingular = false;
  double log2_sigma_min_lb = 0.0; // -log2 ||inv||_F over the worse block
  double log2_sigma_min_ub = 0.0; // -log2 max |inv entry|
  double sigma_min_direct = 0.0;  // plain SVD value; 0 when underflowed
};

InteriorInjectivity interior_injectivity(const QuasiaffinityTruncation& t);

struct FourBlockModel {
  ShiftModel base;
  InteriorInjectivity injectivity; // quasiaffinity proxy for D2's dense part
};

/// Four-block assembly around the quasiaffinity pair: rank D3 = j certified,
/// D2's injectivity reported through the interior sigma_min proxy.
FourBlockModel assemble_four_block(std::size_t j, int half_width, const ToleranceProfile& tol);

struct SixBlockModel {
  ShiftModel base;
  chain::DistinctnessReport eig_report;   // repeated eigenvalue = non-cyclicity witness
  std::size_t duplicated_block_dim = 0;   // each N copy; bounds the Krylov rank by n - 2L
};

/// Six-block assembly unitarily equivalent to N ⊕ N ⊕ M; never cyclic.
SixBlockModel assemble_six_block(std::size_t j, int half_width, const ToleranceProfile& tol);

struct HsSweepRow {
  int half_width = 0;
  double frob2 = 0.0;
  double frob3 = 0.0;
  double defect = 0.0;
};

/// K = diag(1/(|n|+1)): a compact normal model for the truncation sweeps.
ComplexMatrix diag_compact_model(int half_width);

/// Per-truncation Hilbert-Schmidt corner norms for a normal K against a Haar
/// projection of half dimension; the two norms must agree at every T.
std::vector<HsSweepRow> hs_corner_sweep(const std::function<ComplexMatrix(int)>& k_builder,
                                        std::uint64_t p_seed, const std::vector<int>& t_list,
                                        const ToleranceProfile& tol);

} // namespace offdiag::shift
