#pragma once

#include <cstdint>
#include <vector>

#include "offdiag/complex_matrix.hpp"
#include "offdiag/tolerance.hpp"

namespace offdiag {

/// Numerical rank with its certification data. A rank claim is "certified"
/// when the singular-value gap across the threshold is at least gap_factor.
struct RankResult {
  std::size_t rank = 0;
  double sigma_max = 0.0;
  double gap_ratio = 0.0; // +infinity when no singular value falls below the threshold
  bool ambiguous = false;

  bool certified() const { return !ambiguous; }
};

struct Svd {
  ComplexMatrix u;             // rows(a) x p, orthonormal columns (p = min(rows, cols))
  std::vector<double> sigma;   // descending, length p
  ComplexMatrix v;             // cols(a) x p (or cols x cols when full_v), a ~= u diag(sigma) v^H
};

struct HermitianEig {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // unitary, a = vectors diag(values) vectors^H
};

double frobenius_norm(const ComplexMatrix& a);
double operator_norm(const ComplexMatrix& a);
double max_entry_norm(const ComplexMatrix& a);

ComplexMatrix hadamard(const ComplexMatrix& x, const ComplexMatrix& y);

/// One-sided Jacobi SVD. High relative accuracy on the small singular values,
/// which is what the gap certificates live on. want_v enables right vectors.
Svd jacobi_svd(const ComplexMatrix& a, bool want_v = false);

RankResult numerical_rank(const ComplexMatrix& a, const ToleranceProfile& tol);
RankResult rank_from_singular_values(const std::vector<double>& sigma, std::size_t max_rank,
                                     const ToleranceProfile& tol);

/// Cyclic two-sided Jacobi for (numerically) hermitian input.
HermitianEig hermitian_eig(const ComplexMatrix& a, const ToleranceProfile& tol = {});

/// Eigenvalues of a general square complex matrix: Householder Hessenberg
/// reduction followed by shifted QR. Eigenvalues only.
std::vector<cdouble> general_eigenvalues(const ComplexMatrix& a);

/// Apply a real scalar function to a hermitian matrix through its
/// eigendecomposition.
ComplexMatrix hermitian_function(const HermitianEig& eig, double (*f)(double));

/// M = S N, N = (I + S^2)^(-1/2); the canonical commuting positive pair with
/// M^2 + N^2 = I and M N^{-1} = S.
struct MnFactorization {
  ComplexMatrix m;
  ComplexMatrix n;
  double s_min_eig = 0.0;
};
MnFactorization commuting_mn_factorization(const ComplexMatrix& s, const ToleranceProfile& tol = {});

/// Orthonormalize columns (modified Gram-Schmidt, two passes); columns whose
/// residual falls below drop_tol * initial scale are dropped.
ComplexMatrix orthonormalize_columns(const ComplexMatrix& a, double drop_tol = 1e-12);

/// Haar-distributed n x n unitary from a seeded Gaussian block.
ComplexMatrix haar_unitary(std::size_t n, std::uint64_t seed);

/// Rank-r orthogonal projection, Haar-invariant in distribution.
ComplexMatrix haar_random_projection(std::size_t n, std::size_t r, std::uint64_t seed);

/// Solve a x = b (a square, well-conditioned callers only) by partial-pivot LU.
ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& b);

} // namespace offdiag
