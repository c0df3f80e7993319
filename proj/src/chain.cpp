#include "offdiag/chain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "offdiag/kernels/kernels.hpp"

namespace offdiag::chain {

std::pair<ComplexMatrix, cdouble> shift_to_invertible(const ComplexMatrix& d) {
  if (!d.is_square()) fail(ErrorKind::ShapeError, "shift_to_invertible needs a square matrix");
  const double lambda = operator_norm(d) + 1.0;
  ComplexMatrix shifted = d + lambda * ComplexMatrix::identity(d.rows());
  return {std::move(shifted), cdouble(lambda, 0.0)};
}

namespace {

void require_isometry(const ComplexMatrix& b, const char* what) {
  if (b.cols() == 0) return;
  ComplexMatrix g = adjoint_times(b, b);
  if (frobenius_norm(g - ComplexMatrix::identity(b.cols())) > 1e-10)
    fail(ErrorKind::InvalidInput, std::string(what) + " is not an isometry");
}

// left singular vectors above the certified rank
ComplexMatrix range_basis(const Svd& svd, std::size_t rank) {
  ComplexMatrix b(svd.u.rows(), rank);
  for (std::size_t j = 0; j < rank; ++j)
    for (std::size_t i = 0; i < b.rows(); ++i) b(i, j) = svd.u(i, j);
  return b;
}

} // namespace

SubspaceChain build_chain(const ComplexMatrix& d, const ComplexMatrix& v0_basis,
                          std::size_t steps_up, std::size_t steps_down,
                          const ToleranceProfile& tol) {
  if (!d.is_square() || d.rows() != v0_basis.rows())
    fail(ErrorKind::ShapeError, "build_chain shape mismatch");
  require_isometry(v0_basis, "V0 basis");
  const std::size_t n = d.rows();
  {
    Svd svd = jacobi_svd(d);
    if (!(svd.sigma.back() > n * 1e-14 * std::max(svd.sigma.front(), 1e-300)))
      fail(ErrorKind::InvalidInput, "build_chain needs a certified invertible operator");
  }

  std::deque<ComplexMatrix> bases;
  bases.push_back(v0_basis);

  ComplexMatrix up = v0_basis;
  for (std::size_t step = 0; step < steps_up; ++step) {
    ComplexMatrix dv = d * up;
    ComplexMatrix stacked(n, up.cols() + dv.cols());
    stacked.set_block(0, 0, up);
    stacked.set_block(0, up.cols(), dv);
    Svd svd = jacobi_svd(stacked);
    RankResult rr = rank_from_singular_values(svd.sigma, std::min(n, stacked.cols()), tol);
    if (rr.ambiguous)
      fail(ErrorKind::AmbiguousChain,
           "upward step " + std::to_string(step + 1) + " has uncertified dimension (gap " +
               std::to_string(rr.gap_ratio) + ")");
    up = range_basis(svd, rr.rank);
    bases.push_back(up);
  }

  ComplexMatrix down = v0_basis;
  for (std::size_t step = 0; step < steps_down; ++step) {
    if (down.cols() == 0) {
      bases.push_front(ComplexMatrix(n, 0));
      continue;
    }
    ComplexMatrix pre = lu_solve(d, down); // D^{-1} V_k
    ComplexMatrix w = orthonormalize_columns(pre);
    // V ∩ W = ker [(I - P_V); (I - P_W)]
    ComplexMatrix pv = down * down.adjoint();
    ComplexMatrix pw = w * w.adjoint();
    ComplexMatrix stacked(2 * n, n);
    stacked.set_block(0, 0, ComplexMatrix::identity(n) - pv);
    stacked.set_block(n, 0, ComplexMatrix::identity(n) - pw);
    Svd svd = jacobi_svd(stacked, true);
    RankResult rr = rank_from_singular_values(svd.sigma, n, tol);
    if (rr.ambiguous)
      fail(ErrorKind::AmbiguousChain,
           "downward step " + std::to_string(step + 1) + " has uncertified dimension (gap " +
               std::to_string(rr.gap_ratio) + ")");
    const std::size_t kdim = n - rr.rank;
    ComplexMatrix next(n, kdim);
    for (std::size_t j = 0; j < kdim; ++j)
      for (std::size_t i = 0; i < n; ++i) next(i, j) = svd.v(i, rr.rank + j);
    down = std::move(next);
    bases.push_front(down);
  }

  SubspaceChain chain;
  chain.lowest_index = -static_cast<int>(steps_down);
  chain.bases.assign(bases.begin(), bases.end());
  for (const auto& b : chain.bases) chain.dims.push_back(b.cols());
  for (std::size_t i = 0; i + 1 < chain.dims.size(); ++i)
    if (chain.dims[i] > chain.dims[i + 1])
      fail(ErrorKind::AmbiguousChain, "chain dimensions are not monotone");
  return chain;
}

namespace {

// Progressive orthonormalization of the Krylov sequence. The raw Krylov
// matrix is exponentially ill-conditioned, and even bounded columns D q_j
// lose global rank numerically once the spectrum spreads; each step is
// therefore certified on its own via the rank of [Q | D q / ||D q||], whose
// singular values are perfectly scaled. The aggregate certificate carries the
// weakest step gap.
struct KrylovData {
  std::vector<std::vector<cdouble>> q; // accepted orthonormal Krylov basis
  RankResult rank;                     // rank = q.size(), gap = min step gap
};

KrylovData build_krylov(const ComplexMatrix& d, const ComplexMatrix& x,
                        const ToleranceProfile& tol) {
  const std::size_t n = d.rows();
  KrylovData data;
  data.rank.sigma_max = 1.0;
  data.rank.gap_ratio = std::numeric_limits<double>::infinity();
  {
    std::vector<cdouble> q0(n);
    for (std::size_t i = 0; i < n; ++i) q0[i] = x(i, 0);
    data.q.push_back(std::move(q0));
  }
  while (data.q.size() < n) {
    const std::size_t s = data.q.size();
    const auto& last = data.q.back();
    ComplexMatrix qlast(n, 1);
    for (std::size_t i = 0; i < n; ++i) qlast(i, 0) = last[i];
    ComplexMatrix cand = d * qlast;
    const double cn = frobenius_norm(cand);
    if (cn == 0.0) break; // D q = 0: the space is invariant
    ComplexMatrix stacked(n, s + 1);
    for (std::size_t c = 0; c < s; ++c)
      for (std::size_t i = 0; i < n; ++i) stacked(i, c) = data.q[c][i];
    for (std::size_t i = 0; i < n; ++i) stacked(i, s) = cand(i, 0) / cn;
    RankResult step = numerical_rank(stacked, tol);
    data.rank.gap_ratio = std::min(data.rank.gap_ratio, step.gap_ratio);
    if (step.ambiguous) {
      data.rank.ambiguous = true;
      break;
    }
    if (step.rank != s + 1) break; // certified stall: Krylov space is invariant
    std::vector<cdouble> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = cand(i, 0);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : data.q) {
        const cdouble coef = kernels::dot_conj(b.data(), v.data(), n);
        for (std::size_t i = 0; i < n; ++i) v[i] -= coef * b[i];
      }
    const double vn = std::sqrt(kernels::norm_sq(v.data(), n));
    if (vn == 0.0) break;
    for (std::size_t i = 0; i < n; ++i) v[i] /= vn;
    data.q.push_back(std::move(v));
  }
  data.rank.rank = data.q.size();
  return data;
}

} // namespace

RankResult krylov_rank_from(const ComplexMatrix& d, const ComplexMatrix& x,
                            const ToleranceProfile& tol) {
  if (!d.is_square() || x.rows() != d.rows() || x.cols() != 1)
    fail(ErrorKind::ShapeError, "krylov_rank_from needs a square D and a column vector");
  ComplexMatrix seed = x;
  const double xn = frobenius_norm(seed);
  if (xn == 0.0) fail(ErrorKind::InvalidInput, "zero Krylov seed");
  seed = (1.0 / xn) * seed;
  return build_krylov(d, seed, tol).rank;
}

CyclicityReport extract_cyclic_vector(const ComplexMatrix& d, const SubspaceChain& chain,
                                      const ToleranceProfile& tol) {
  const std::size_t n = d.rows();
  std::size_t idx1 = chain.dims.size();
  for (std::size_t i = 0; i < chain.dims.size(); ++i)
    if (chain.dims[i] == 1) { idx1 = i; break; }
  if (idx1 == chain.dims.size())
    fail(ErrorKind::NotCyclicWitness, "chain has no one-dimensional member to seed the Krylov "
                                      "sequence");

  CyclicityReport rep;
  rep.x = chain.bases[idx1].column(0);
  {
    const double xn = frobenius_norm(rep.x);
    if (xn == 0.0) fail(ErrorKind::NotCyclicWitness, "degenerate seed vector");
    rep.x = (1.0 / xn) * rep.x;
  }

  KrylovData kry = build_krylov(d, rep.x, tol);
  const auto& q = kry.q;
  rep.krylov_rank = kry.rank;

  DistinctnessReport dist = distinct_eigenvalue_check(d, tol);
  rep.eig_min_gap = dist.min_gap;
  rep.distinct = dist.distinct;

  // stepwise agreement span{x, ..., D^j x} = V_{idx1 + j} when the chain is a
  // strict +1 ladder from its one-dimensional member up to dimension n
  bool ladder = true;
  for (std::size_t i = idx1; i + 1 < chain.dims.size(); ++i)
    if (chain.dims[i + 1] != chain.dims[i] + 1) { ladder = false; break; }
  ladder = ladder && chain.dims.back() == n;
  if (ladder) {
    rep.span_checked = true;
    for (std::size_t j = 0; idx1 + j < chain.dims.size(); ++j) {
      if (j + 1 > q.size()) break;
      const ComplexMatrix& b = chain.bases[idx1 + j];
      ComplexMatrix qj(n, j + 1);
      for (std::size_t col = 0; col <= j; ++col)
        for (std::size_t i = 0; i < n; ++i) qj(i, col) = q[col][i];
      ComplexMatrix resid = qj - b * adjoint_times(b, qj);
      rep.max_span_residual = std::max(rep.max_span_residual, operator_norm(resid));
    }
  }

  if (rep.krylov_rank.ambiguous || rep.krylov_rank.rank != n)
    fail(ErrorKind::NotCyclicWitness,
         "Krylov rank " + std::to_string(rep.krylov_rank.rank) + " of " + std::to_string(n) +
             (rep.krylov_rank.ambiguous ? " (ambiguous)" : "") + "; no cyclic witness");
  return rep;
}

DistinctnessReport distinct_eigenvalue_check(const ComplexMatrix& d, const ToleranceProfile& tol) {
  std::vector<cdouble> eigs = general_eigenvalues(d);
  DistinctnessReport rep;
  const std::size_t n = eigs.size();
  if (n < 2) {
    rep.min_gap = std::numeric_limits<double>::infinity();
    rep.distinct = true;
    return rep;
  }
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(eigs[i] - eigs[j]);
      rep.min_gap = std::min(rep.min_gap, gap);
      rep.spread = std::max(rep.spread, gap);
    }
  rep.distinct = rep.spread > 0.0 && rep.min_gap > tol.eig_distinct_rel_tol * rep.spread;
  return rep;
}

std::vector<double> verify_shifts_forward(const ComplexMatrix& t, const SubspaceChain& chain) {
  std::vector<double> residuals;
  for (std::size_t i = 0; i + 1 < chain.bases.size(); ++i) {
    const ComplexMatrix& bj = chain.bases[i];
    const ComplexMatrix& bj1 = chain.bases[i + 1];
    if (bj.cols() == 0) {
      residuals.push_back(0.0);
      continue;
    }
    ComplexMatrix tb = t * bj;
    ComplexMatrix resid = tb - bj1 * adjoint_times(bj1, tb);
    residuals.push_back(operator_norm(resid));
  }
  return residuals;
}

} // namespace offdiag::chain
