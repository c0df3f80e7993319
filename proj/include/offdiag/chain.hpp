#pragma once

#include <vector>

#include "offdiag/linalg.hpp"

namespace offdiag::chain {

/// Nested subspaces V_lowest ⊂ ... ⊂ V_highest with certified dimensions;
/// bases[i] is an isometry whose columns span V_{lowest_index + i}.
struct SubspaceChain {
  int lowest_index = 0;
  std::vector<ComplexMatrix> bases;
  std::vector<std::size_t> dims;

  int highest_index() const { return lowest_index + static_cast<int>(bases.size()) - 1; }
  const ComplexMatrix& basis_at(int k) const { return bases[static_cast<std::size_t>(k - lowest_index)]; }
};

struct CyclicityReport {
  ComplexMatrix x; // n x 1 unit vector
  RankResult krylov_rank;
  double eig_min_gap = 0.0;
  bool distinct = false;
  bool span_checked = false;
  double max_span_residual = 0.0;
};

struct DistinctnessReport {
  double min_gap = 0.0;
  double spread = 0.0;
  bool distinct = false;
};

/// D + (||D|| + 1) I; the chain steps are invariant under this shift.
std::pair<ComplexMatrix, cdouble> shift_to_invertible(const ComplexMatrix& d);

/// Upward V_{k+1} = V_k v D V_k, downward V_{k-1} = V_k ∩ D^{-1} V_k.
/// Every step is decided by a certified numerical rank; an uncertified step
/// flags the whole chain.
SubspaceChain build_chain(const ComplexMatrix& d, const ComplexMatrix& v0_basis,
                          std::size_t steps_up, std::size_t steps_down,
                          const ToleranceProfile& tol);

/// Takes the chain's one-dimensional member as the Krylov seed and certifies
/// rank n for the progressively orthonormalized Krylov matrix. Throws
/// NotCyclicWitness when the chain has no one-dimensional member or the rank
/// falls short.
CyclicityReport extract_cyclic_vector(const ComplexMatrix& d, const SubspaceChain& chain,
                                      const ToleranceProfile& tol);

DistinctnessReport distinct_eigenvalue_check(const ComplexMatrix& d, const ToleranceProfile& tol);

/// Certified rank of the progressively orthonormalized Krylov matrix
/// [x, D q_0, D q_1, ...] seeded at an arbitrary vector.
RankResult krylov_rank_from(const ComplexMatrix& d, const ComplexMatrix& x,
                            const ToleranceProfile& tol);

/// Per-step residuals ||(I - P_{j+1}) T basis_j||; forward-shifting holds when
/// all of them are negligible.
std::vector<double> verify_shifts_forward(const ComplexMatrix& t, const SubspaceChain& chain);

} // namespace offdiag::chain
