#include "offdiag/corners.hpp"

#include <algorithm>
#include <cmath>

#include "offdiag/rng.hpp"

namespace offdiag::corners {

namespace {

// A projection written with exact 0/1 diagonal entries admits exact
// coordinate bases; structurally zero corners then certify with sigma_max = 0
// instead of basis-noise ranks.
bool exact_diagonal_01(const ComplexMatrix& p, std::vector<std::size_t>& ones,
                       std::vector<std::size_t>& zeros) {
  const std::size_t n = p.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const cdouble v = p(i, j);
      if (i != j) {
        if (v != cdouble(0.0, 0.0)) return false;
      } else if (v == cdouble(1.0, 0.0)) {
        ones.push_back(i);
      } else if (v == cdouble(0.0, 0.0)) {
        zeros.push_back(i);
      } else {
        return false;
      }
    }
  return true;
}

ComplexMatrix coordinate_basis(std::size_t n, const std::vector<std::size_t>& idx) {
  ComplexMatrix b(n, idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) b(idx[j], j) = cdouble(1.0, 0.0);
  return b;
}

ComplexMatrix pick_rows_cols(const ComplexMatrix& d, const std::vector<std::size_t>& rows,
                             const std::vector<std::size_t>& cols) {
  ComplexMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = d(rows[i], cols[j]);
  return out;
}

} // namespace

CornerDecomposition decompose(const ComplexMatrix& d, const ComplexMatrix& p,
                              const ToleranceProfile& tol) {
  d.require_finite("decompose operator");
  p.require_finite("decompose projection");
  if (!d.is_square()) fail(ErrorKind::ShapeError, "decompose needs a square operator");
  if (p.rows() != d.rows() || !p.is_square())
    fail(ErrorKind::ShapeError, "projection shape does not match operator");
  const std::size_t n = d.rows();

  const double pscale = std::max(1.0, frobenius_norm(p));
  if (frobenius_norm(p * p - p) > 1e-10 * pscale || frobenius_norm(p - p.adjoint()) > 1e-10 * pscale)
    fail(ErrorKind::NotAProjection, "P fails P^2 = P = P* at 1e-10");

  CornerDecomposition dec;
  dec.d = d;
  dec.p = p;

  std::vector<std::size_t> ones, zeros;
  if (exact_diagonal_01(p, ones, zeros)) {
    dec.ranp_basis = coordinate_basis(n, ones);
    dec.ranq_basis = coordinate_basis(n, zeros);
    dec.p_rank.rank = ones.size();
    dec.p_rank.sigma_max = ones.empty() ? 0.0 : 1.0;
    dec.p_rank.gap_ratio = std::numeric_limits<double>::infinity();
    dec.p_rank.ambiguous = false;
    dec.d1 = pick_rows_cols(d, ones, ones);
    dec.d2 = pick_rows_cols(d, ones, zeros);
    dec.d3 = pick_rows_cols(d, zeros, ones);
    dec.d4 = pick_rows_cols(d, zeros, zeros);
    return dec;
  }

  dec.p_rank = numerical_rank(p, tol);
  if (dec.p_rank.ambiguous)
    fail(ErrorKind::AmbiguousRank, "projection rank is not certified (gap_ratio " +
                                       std::to_string(dec.p_rank.gap_ratio) + ")");

  HermitianEig eig = hermitian_eig(p, tol);
  std::size_t near_one = 0;
  for (double v : eig.values)
    if (v > 0.5) ++near_one;
  if (near_one != dec.p_rank.rank)
    fail(ErrorKind::AmbiguousRank, "projection spectral split disagrees with certified rank");

  const std::size_t r = dec.p_rank.rank;
  // eigenvalues ascend: the trailing r vectors span ran P
  dec.ranp_basis = ComplexMatrix(n, r);
  dec.ranq_basis = ComplexMatrix(n, n - r);
  for (std::size_t j = 0; j < n; ++j) {
    const bool in_p = j >= n - r;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_p)
        dec.ranp_basis(i, j - (n - r)) = eig.vectors(i, j);
      else
        dec.ranq_basis(i, j) = eig.vectors(i, j);
    }
  }
  ComplexMatrix dp = d * dec.ranp_basis;
  ComplexMatrix dq = d * dec.ranq_basis;
  dec.d1 = adjoint_times(dec.ranp_basis, dp);
  dec.d2 = adjoint_times(dec.ranp_basis, dq);
  dec.d3 = adjoint_times(dec.ranq_basis, dp);
  dec.d4 = adjoint_times(dec.ranq_basis, dq);
  return dec;
}

double normality_defect(const ComplexMatrix& d) {
  d.require_finite("normality_defect input");
  if (!d.is_square()) fail(ErrorKind::ShapeError, "normality_defect needs a square matrix");
  ComplexMatrix da = d.adjoint();
  const double fn = frobenius_norm(d);
  return frobenius_norm(d * da - da * d) / std::max(1.0, fn * fn);
}

CornerReport corner_identity_check(const CornerDecomposition& dec, const ToleranceProfile& tol) {
  CornerReport rep;
  rep.normality_defect = normality_defect(dec.d);
  if (rep.normality_defect > tol.normality_rel_tol)
    fail(ErrorKind::NotNormal,
         "operator is not normal: defect " + std::to_string(rep.normality_defect));
  rep.frob2 = frobenius_norm(dec.d2);
  rep.frob3 = frobenius_norm(dec.d3);
  rep.rank2 = numerical_rank(dec.d2, tol);
  rep.rank3 = numerical_rank(dec.d3, tol);
  ComplexMatrix d1a = dec.d1.adjoint();
  ComplexMatrix lhs = d1a * dec.d1 - dec.d1 * d1a;
  ComplexMatrix rhs = dec.d2 * dec.d2.adjoint() - adjoint_times(dec.d3, dec.d3);
  rep.commutator_residual = frobenius_norm(lhs - rhs);
  return rep;
}

CrSampleResult cr_sample_test(const ComplexMatrix& d, std::size_t trials, std::uint64_t seed,
                              const ToleranceProfile& tol,
                              const std::vector<ComplexMatrix>& priors) {
  d.require_finite("cr_sample_test input");
  if (!d.is_square() || d.rows() < 2)
    fail(ErrorKind::ShapeError, "cr_sample_test needs a square matrix of dimension >= 2");
  const std::size_t n = d.rows();
  CrSampleResult res;
  for (std::size_t t = 0; t < trials; ++t) {
    ComplexMatrix p;
    if (t < priors.size()) {
      p = priors[t];
    } else {
      const std::size_t r = 1 + (t - priors.size()) % (n - 1);
      p = haar_random_projection(n, r, derive_seed(seed, t));
    }
    ++res.trials_run;
    try {
      CornerDecomposition dec = decompose(d, p, tol);
      RankResult r2 = numerical_rank(dec.d2, tol);
      RankResult r3 = numerical_rank(dec.d3, tol);
      if (r2.ambiguous || r3.ambiguous) {
        ++res.ambiguous_skipped;
        continue;
      }
      if (r2.rank != r3.rank) {
        res.witness = CrWitness{t, std::move(p), r2, r3};
        return res;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::AmbiguousRank) {
        ++res.ambiguous_skipped;
        continue;
      }
      throw;
    }
  }
  return res;
}

const char* to_string(SpectrumShape shape) {
  switch (shape) {
    case SpectrumShape::Line: return "Line";
    case SpectrumShape::Circle: return "Circle";
    case SpectrumShape::Neither: return "Neither";
  }
  return "?";
}

SpectrumShape spectrum_line_circle_classify(const std::vector<cdouble>& eigs, double fit_tol,
                                            const ToleranceProfile& tol) {
  if (eigs.empty()) fail(ErrorKind::InvalidInput, "empty spectrum");
  const std::size_t n = eigs.size();
  double spread = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) spread = std::max(spread, std::abs(eigs[i] - eigs[j]));
  if (spread == 0.0) return SpectrumShape::Line; // all points coincide

  ComplexMatrix diffs(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    diffs(i, 0) = cdouble(eigs[i].real() - eigs[0].real(), 0.0);
    diffs(i, 1) = cdouble(eigs[i].imag() - eigs[0].imag(), 0.0);
  }
  if (numerical_rank(diffs, tol).rank <= 1) return SpectrumShape::Line;

  // least-squares circle: |z|^2 = 2 Re(c) x + 2 Im(c) y + (rho^2 - |c|^2)
  ComplexMatrix a(n, 3);
  ComplexMatrix b(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = cdouble(2.0 * eigs[i].real(), 0.0);
    a(i, 1) = cdouble(2.0 * eigs[i].imag(), 0.0);
    a(i, 2) = cdouble(1.0, 0.0);
    b(i, 0) = cdouble(std::norm(eigs[i]), 0.0);
  }
  Svd svd = jacobi_svd(a, true);
  ComplexMatrix utb = adjoint_times(svd.u, b);
  ComplexMatrix coef(3, 1);
  for (std::size_t k = 0; k < 3; ++k) {
    if (svd.sigma[k] > 1e-14 * svd.sigma[0])
      coef = coef + (utb(k, 0) / svd.sigma[k]) * svd.v.column(k);
  }
  const cdouble center(coef(0, 0).real(), coef(1, 0).real());
  const double rho_sq = coef(2, 0).real() + std::norm(center);
  if (!(rho_sq > 0.0)) return SpectrumShape::Neither;
  const double rho = std::sqrt(rho_sq);
  double max_resid = 0.0;
  for (const auto& z : eigs) max_resid = std::max(max_resid, std::abs(std::abs(z - center) - rho));
  return max_resid <= fit_tol * spread ? SpectrumShape::Circle : SpectrumShape::Neither;
}

RankResult rank_distance(const ComplexMatrix& a, const ComplexMatrix& b,
                         const ToleranceProfile& tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::ShapeError, "rank_distance shape mismatch");
  return numerical_rank(a - b, tol);
}

DistanceBoundReport cr_distance_bound_check(const ComplexMatrix& d, const ComplexMatrix& p,
                                            const std::vector<ComplexMatrix>& ys,
                                            const ToleranceProfile& tol) {
  CornerDecomposition dec = decompose(d, p, tol);
  RankResult r2 = numerical_rank(dec.d2, tol);
  RankResult r3 = numerical_rank(dec.d3, tol);
  if (r2.ambiguous || r3.ambiguous)
    fail(ErrorKind::AmbiguousRank, "corner ranks of D are not certified");

  DistanceBoundReport rep;
  rep.rank2 = r2.rank;
  rep.rank3 = r3.rank;
  const std::size_t diff = rep.rank2 > rep.rank3 ? rep.rank2 - rep.rank3 : rep.rank3 - rep.rank2;
  rep.bound = diff / 2;

  for (const auto& y : ys) {
    if (y.rows() != d.rows() || y.cols() != d.cols())
      fail(ErrorKind::ShapeError, "comparator shape mismatch");
    if (normality_defect(y) > tol.normality_rel_tol)
      fail(ErrorKind::InvalidComparator, "comparator is not normal at tolerance");
    SpectrumShape shape = spectrum_line_circle_classify(general_eigenvalues(y), 1e-8, tol);
    if (shape == SpectrumShape::Neither)
      fail(ErrorKind::InvalidComparator, "comparator spectrum is neither a line nor a circle");
    DistanceBoundEntry entry;
    entry.distance = rank_distance(d, y, tol);
    entry.margin = static_cast<long>(entry.distance.rank) - static_cast<long>(rep.bound);
    rep.entries.push_back(std::move(entry));
  }
  return rep;
}

} // namespace offdiag::corners
