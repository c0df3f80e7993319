#include "offdiag/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "offdiag/kernels/kernels.hpp"
#include "offdiag/rng.hpp"

namespace offdiag {

namespace {
constexpr double kEps = 2.220446049250313e-16;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

double frobenius_norm(const ComplexMatrix& a) {
  return std::sqrt(kernels::norm_sq(a.data(), a.size()));
}

double max_entry_norm(const ComplexMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

ComplexMatrix hadamard(const ComplexMatrix& x, const ComplexMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    fail(ErrorKind::ShapeError, "hadamard shape mismatch");
  ComplexMatrix out(x.rows(), x.cols());
  kernels::hadamard(x.data(), y.data(), out.data(), x.size());
  return out;
}

// ---------------------------------------------------------------------------
// One-sided Jacobi SVD.
//
// Works on W = A^H so that the columns of A being orthogonalized are
// contiguous rows; the inner loops are the dot_conj / rot2 kernels. For a
// column pair (i, j) with Gram data alpha = |a_i|^2, beta = |a_j|^2,
// gamma = a_i^H a_j, the rotation below zeroes the new cross term; phases are
// carried in the complex rotation parameter handed to rot2.
// ---------------------------------------------------------------------------

namespace {

struct Rrqr {
  ComplexMatrix q1;              // p x q, orthonormal columns
  ComplexMatrix r;               // q x q upper triangular
  std::vector<std::size_t> perm; // b[:,k] = a[:,perm[k]]
};

// Householder QR with column pivoting (norms recomputed exactly; sizes here
// are small enough that the O(pq^2) recompute is irrelevant).
Rrqr rrqr(const ComplexMatrix& a) {
  const std::size_t p = a.rows(), q = a.cols();
  ComplexMatrix b = a;
  Rrqr out;
  out.perm.resize(q);
  std::iota(out.perm.begin(), out.perm.end(), 0);
  std::vector<std::vector<cdouble>> vs(q);
  std::vector<double> betas(q, 0.0);

  for (std::size_t k = 0; k < q; ++k) {
    std::size_t best = k;
    double bestn = -1.0;
    for (std::size_t j = k; j < q; ++j) {
      double nj = 0.0;
      for (std::size_t i = k; i < p; ++i) nj += std::norm(b(i, j));
      if (nj > bestn) { bestn = nj; best = j; }
    }
    if (best != k) {
      for (std::size_t i = 0; i < p; ++i) std::swap(b(i, k), b(i, best));
      std::swap(out.perm[k], out.perm[best]);
    }
    if (bestn == 0.0) continue;
    const double xnorm = std::sqrt(bestn);
    const cdouble x0 = b(k, k);
    const double ax0 = std::abs(x0);
    const cdouble phase = ax0 > 0.0 ? x0 / ax0 : cdouble(1.0, 0.0);
    const cdouble alpha = -phase * xnorm;
    std::vector<cdouble> v(p - k);
    v[0] = x0 - alpha;
    for (std::size_t i = k + 1; i < p; ++i) v[i - k] = b(i, k);
    double vnorm2 = 0.0;
    for (const auto& z : v) vnorm2 += std::norm(z);
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    for (std::size_t j = k + 1; j < q; ++j) {
      cdouble acc(0.0, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) acc += std::conj(v[i]) * b(k + i, j);
      acc *= beta;
      for (std::size_t i = 0; i < v.size(); ++i) b(k + i, j) -= v[i] * acc;
    }
    b(k, k) = alpha;
    for (std::size_t i = k + 1; i < p; ++i) b(i, k) = cdouble(0.0, 0.0);
    vs[k] = std::move(v);
    betas[k] = beta;
  }

  out.r = ComplexMatrix(q, q);
  for (std::size_t i = 0; i < q; ++i)
    for (std::size_t j = i; j < q; ++j) out.r(i, j) = b(i, j);

  out.q1 = ComplexMatrix(p, q);
  for (std::size_t j = 0; j < q; ++j) out.q1(j, j) = cdouble(1.0, 0.0);
  for (std::size_t kk = q; kk-- > 0;) {
    if (betas[kk] == 0.0) continue;
    const auto& v = vs[kk];
    for (std::size_t j = 0; j < q; ++j) {
      cdouble acc(0.0, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) acc += std::conj(v[i]) * out.q1(kk + i, j);
      acc *= betas[kk];
      for (std::size_t i = 0; i < v.size(); ++i) out.q1(kk + i, j) -= v[i] * acc;
    }
  }
  return out;
}

// One-sided Jacobi on X presented as w = X^H (rows of w are the conjugated
// columns of X); rotates vh alongside. Returns final squared column norms.
// A sweep whose largest rotation tangent is below 3e-14 cannot move any
// singular value materially, so it also counts as converged.
std::vector<double> jacobi_core(ComplexMatrix& w, ComplexMatrix& vh) {
  const std::size_t q = w.rows(), p = w.cols();
  std::vector<double> colsq(q);
  for (std::size_t i = 0; i < q; ++i) colsq[i] = kernels::norm_sq(w.row(i), p);
  const double conv = 1e-14; // below rounding noise of the Gram dot
  const int max_sweeps = 60;
  bool converged = q < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool clean = true;
    double max_tangent = 0.0;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        const double alpha = colsq[i], beta = colsq[j];
        if (alpha == 0.0 || beta == 0.0) continue;
        const cdouble d = kernels::dot_conj(w.row(i), w.row(j), p); // = conj(x_i^H x_j)
        const double g = std::abs(d);
        if (g <= conv * std::sqrt(alpha) * std::sqrt(beta)) continue;
        clean = false;
        const double tau = (beta - alpha) / (2.0 * g);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        max_tangent = std::max(max_tangent, std::abs(t));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const cdouble sigma = cdouble(-s, 0.0) * (d / g); // rot2's complex parameter
        kernels::rot2(w.row(i), w.row(j), p, c, sigma);
        kernels::rot2(vh.row(i), vh.row(j), vh.cols(), c, sigma);
        colsq[i] = kernels::norm_sq(w.row(i), p);
        colsq[j] = kernels::norm_sq(w.row(j), p);
      }
    }
    converged = clean || max_tangent <= 3e-14;
  }
  if (!converged) fail(ErrorKind::NumericalFailure, "jacobi_svd did not converge");
  return colsq;
}

} // namespace

// Preconditioned one-sided Jacobi: column-pivoted QR first, then Jacobi on
// R^H. The pivoted R is graded row-wise, which is what keeps Jacobi both
// convergent and accurate on matrices with wide column-scale spreads.
Svd jacobi_svd(const ComplexMatrix& a, bool want_v) {
  const std::size_t p = a.rows(), q = a.cols();
  if (p < q) {
    Svd t = jacobi_svd(a.adjoint(), true);
    Svd out;
    out.u = std::move(t.v);
    out.u = out.u.columns(0, p); // only min-dim columns are meaningful
    out.sigma = std::move(t.sigma);
    out.v = std::move(t.u);
    if (!want_v) out.v = ComplexMatrix();
    return out;
  }

  Svd out;
  if (q == 0 || p == 0) {
    out.u = ComplexMatrix(p, 0);
    out.v = ComplexMatrix(q, q);
    return out;
  }

  Rrqr qr = rrqr(a);
  ComplexMatrix w = std::move(qr.r); // core works on X = R^H via the buffer X^H = R
  ComplexMatrix vh = ComplexMatrix::identity(q);
  std::vector<double> colsq = jacobi_core(w, vh);

  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sig(q);
  for (std::size_t i = 0; i < q; ++i) sig[i] = std::sqrt(colsq[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

  // X = R^H = U_x S V_x^H with V_x accumulated in vh (unitary even on null
  // directions), U_x from normalized w rows. Then R = V_x S U_x^H and
  // A = (Q1 V_x) S (Perm U_x)^H; exact-null U_x columns are completed so V
  // keeps spanning the kernel.
  out.sigma.resize(q);
  ComplexMatrix ul(q, q);
  for (std::size_t k = 0; k < q; ++k) {
    const std::size_t src = order[k];
    out.sigma[k] = sig[src];
    const cdouble* vr = vh.row(src);
    for (std::size_t r = 0; r < q; ++r) ul(r, k) = std::conj(vr[r]);
  }
  out.u = qr.q1 * ul;
  if (want_v) {
    ComplexMatrix ux(q, q);
    std::vector<std::size_t> null_cols;
    for (std::size_t k = 0; k < q; ++k) {
      const std::size_t src = order[k];
      if (sig[src] > 0.0) {
        const cdouble* wr = w.row(src);
        for (std::size_t r = 0; r < q; ++r) ux(r, k) = std::conj(wr[r]) / sig[src];
      } else {
        null_cols.push_back(k);
      }
    }
    // complete exactly-null directions against the rest
    std::size_t seed = 0;
    for (std::size_t k : null_cols) {
      for (; seed < q; ++seed) {
        std::vector<cdouble> v(q, cdouble(0.0, 0.0));
        v[seed] = cdouble(1.0, 0.0);
        for (int pass = 0; pass < 2; ++pass)
          for (std::size_t c = 0; c < q; ++c) {
            cdouble coef(0.0, 0.0);
            for (std::size_t r = 0; r < q; ++r) coef += std::conj(ux(r, c)) * v[r];
            for (std::size_t r = 0; r < q; ++r) v[r] -= coef * ux(r, c);
          }
        double vn = 0.0;
        for (const auto& z : v) vn += std::norm(z);
        vn = std::sqrt(vn);
        if (vn > 0.5) {
          for (std::size_t r = 0; r < q; ++r) ux(r, k) = v[r] / vn;
          ++seed;
          break;
        }
      }
    }
    out.v = ComplexMatrix(q, q);
    for (std::size_t k = 0; k < q; ++k)
      for (std::size_t r = 0; r < q; ++r) out.v(qr.perm[r], k) = ux(r, k);
  }
  return out;
}

RankResult rank_from_singular_values(const std::vector<double>& sigma, std::size_t max_rank,
                                     const ToleranceProfile& tol) {
  tol.validate();
  RankResult res;
  res.sigma_max = sigma.empty() ? 0.0 : sigma.front();
  if (res.sigma_max == 0.0) {
    res.rank = 0;
    res.gap_ratio = kInf;
    res.ambiguous = false;
    return res;
  }
  const double thresh = tol.rank_rel_tol * res.sigma_max;
  std::size_t r = 0;
  while (r < sigma.size() && sigma[r] > thresh) ++r;
  res.rank = std::min(r, max_rank);
  if (r >= sigma.size() || sigma[r] == 0.0)
    res.gap_ratio = kInf;
  else
    res.gap_ratio = sigma[r - 1] / sigma[r]; // r >= 1 here since sigma[0] > thresh
  res.ambiguous = res.gap_ratio < tol.gap_factor;
  return res;
}

RankResult numerical_rank(const ComplexMatrix& a, const ToleranceProfile& tol) {
  a.require_finite("numerical_rank input");
  if (a.empty()) {
    RankResult res;
    res.gap_ratio = kInf;
    return res;
  }
  Svd svd = jacobi_svd(a);
  return rank_from_singular_values(svd.sigma, std::min(a.rows(), a.cols()), tol);
}

double operator_norm(const ComplexMatrix& a) {
  a.require_finite("operator_norm input");
  if (a.empty()) return 0.0;
  return jacobi_svd(a).sigma.front();
}

// ---------------------------------------------------------------------------
// Cyclic two-sided Jacobi for hermitian matrices.
// ---------------------------------------------------------------------------

HermitianEig hermitian_eig(const ComplexMatrix& a, const ToleranceProfile& tol) {
  a.require_finite("hermitian_eig input");
  if (!a.is_square()) fail(ErrorKind::ShapeError, "hermitian_eig needs a square matrix");
  const std::size_t n = a.rows();
  const double anorm = frobenius_norm(a);
  {
    ComplexMatrix defect = a - a.adjoint();
    if (frobenius_norm(defect) > tol.normality_rel_tol * std::max(anorm, 1e-300) && anorm > 0.0)
      fail(ErrorKind::NotHermitian, "input is not hermitian at tolerance");
  }

  ComplexMatrix h = cdouble(0.5, 0.0) * (a + a.adjoint());
  ComplexMatrix u = ComplexMatrix::identity(n);

  const int max_sweeps = 60;
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cdouble hpq = h(p, q);
        const double g = std::abs(hpq);
        const double app = h(p, p).real(), aqq = h(q, q).real();
        if (g <= 1e-16 * (std::abs(app) + std::abs(aqq)) || g < 1e-300) continue;
        converged = false;
        const double tau = (aqq - app) / (2.0 * g);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        const cdouble phase = hpq / g;
        const cdouble sig = s * phase; // J = [[c, sig], [-conj(sig), c]] on coords (p, q)
        // columns p, q: col_p' = c col_p - conj(sig) col_q ; col_q' = sig col_p + c col_q
        for (std::size_t r = 0; r < n; ++r) {
          const cdouble xp = h(r, p), xq = h(r, q);
          h(r, p) = c * xp - std::conj(sig) * xq;
          h(r, q) = sig * xp + c * xq;
          const cdouble up = u(r, p), uq = u(r, q);
          u(r, p) = c * up - std::conj(sig) * uq;
          u(r, q) = sig * up + c * uq;
        }
        // rows p, q: row_p' = c row_p - sig row_q ; row_q' = conj(sig) row_p + c row_q
        for (std::size_t col = 0; col < n; ++col) {
          const cdouble xp = h(p, col), xq = h(q, col);
          h(p, col) = c * xp - sig * xq;
          h(q, col) = std::conj(sig) * xp + c * xq;
        }
        h(p, q) = cdouble(0.0, 0.0);
        h(q, p) = cdouble(0.0, 0.0);
      }
    }
  }
  if (!converged) fail(ErrorKind::NumericalFailure, "hermitian_eig did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = h(i, i).real();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return vals[x] < vals[y]; });

  HermitianEig out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = vals[order[k]];
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = u(r, order[k]);
  }
  return out;
}

ComplexMatrix hermitian_function(const HermitianEig& eig, double (*f)(double)) {
  const std::size_t n = eig.values.size();
  ComplexMatrix scaled(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const cdouble fj(f(eig.values[j]), 0.0);
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) = eig.vectors(i, j) * fj;
  }
  return scaled * eig.vectors.adjoint();
}

MnFactorization commuting_mn_factorization(const ComplexMatrix& s, const ToleranceProfile& tol) {
  HermitianEig eig = hermitian_eig(s, tol);
  const double lmin = eig.values.empty() ? 0.0 : eig.values.front();
  const double lmax = eig.values.empty() ? 0.0 : eig.values.back();
  if (!(lmin > 1e-12 * std::max(1.0, std::abs(lmax))))
    fail(ErrorKind::NotPositiveDefinite,
         "min eigenvalue " + std::to_string(lmin) + " is not positive at tolerance");
  MnFactorization out;
  out.s_min_eig = lmin;
  out.n = hermitian_function(eig, +[](double x) { return 1.0 / std::sqrt(1.0 + x * x); });
  out.m = s * out.n;
  return out;
}

// ---------------------------------------------------------------------------
// Hessenberg + shifted QR eigenvalues (values only).
// ---------------------------------------------------------------------------

namespace {

void hessenberg_reduce(ComplexMatrix& h) {
  const std::size_t n = h.rows();
  if (n < 3) return;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    // Householder on column k, rows k+1..n-1.
    double scale = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) scale += std::norm(h(i, k));
    if (scale == 0.0) continue;
    const double xnorm = std::sqrt(scale);
    cdouble x0 = h(k + 1, k);
    const double ax0 = std::abs(x0);
    const cdouble phase = ax0 > 0.0 ? x0 / ax0 : cdouble(1.0, 0.0);
    const cdouble alpha = -phase * xnorm;
    std::vector<cdouble> v(n - k - 1);
    v[0] = x0 - alpha;
    for (std::size_t i = k + 2; i < n; ++i) v[i - k - 1] = h(i, k);
    double vnorm2 = 0.0;
    for (const auto& z : v) vnorm2 += std::norm(z);
    if (vnorm2 == 0.0) continue;
    const double beta = 2.0 / vnorm2;
    // H <- (I - beta v v^H) H
    for (std::size_t col = k; col < n; ++col) {
      cdouble acc(0.0, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) acc += std::conj(v[i]) * h(k + 1 + i, col);
      acc *= beta;
      for (std::size_t i = 0; i < v.size(); ++i) h(k + 1 + i, col) -= v[i] * acc;
    }
    // H <- H (I - beta v v^H)
    for (std::size_t r = 0; r < n; ++r) {
      cdouble acc(0.0, 0.0);
      for (std::size_t i = 0; i < v.size(); ++i) acc += h(r, k + 1 + i) * v[i];
      acc *= beta;
      for (std::size_t i = 0; i < v.size(); ++i) h(r, k + 1 + i) -= acc * std::conj(v[i]);
    }
    h(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = cdouble(0.0, 0.0);
  }
}

std::pair<cdouble, cdouble> eig2x2(cdouble a, cdouble b, cdouble c, cdouble d) {
  const cdouble tr = a + d;
  const cdouble disc = std::sqrt((a - d) * (a - d) * 0.25 + b * c);
  const cdouble half = (a + d) * 0.5;
  cdouble l1 = half + disc, l2 = half - disc;
  // rebalance the smaller root through the determinant when possible
  const cdouble det = a * d - b * c;
  if (std::abs(l1) > std::abs(l2) && std::abs(l1) > 0.0) l2 = det / l1;
  else if (std::abs(l2) > 0.0) l1 = det / l2;
  (void)tr;
  return {l1, l2};
}

} // namespace

std::vector<cdouble> general_eigenvalues(const ComplexMatrix& a) {
  a.require_finite("general_eigenvalues input");
  if (!a.is_square()) fail(ErrorKind::ShapeError, "general_eigenvalues needs a square matrix");
  const std::size_t n = a.rows();
  std::vector<cdouble> eigs;
  eigs.reserve(n);
  if (n == 0) return eigs;
  if (n == 1) return {a(0, 0)};

  ComplexMatrix h = a;
  hessenberg_reduce(h);

  const double hnorm = std::max(frobenius_norm(h), 1e-300);
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  int iter_since_deflation = 0;
  long total_iters = 0;
  const long max_total = 60 * static_cast<long>(n);
  std::vector<double> cs(n);
  std::vector<cdouble> sn(n);

  while (hi >= 0) {
    if (++total_iters > max_total)
      fail(ErrorKind::NumericalFailure, "QR eigenvalue iteration did not converge");
    // deflation scan
    std::ptrdiff_t lo = hi;
    while (lo > 0) {
      const double sub = std::abs(h(lo, lo - 1));
      const double diag = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
      if (sub <= kEps * std::max(diag, 1e-3 * kEps * hnorm)) {
        h(lo, lo - 1) = cdouble(0.0, 0.0);
        break;
      }
      --lo;
    }
    if (lo == hi) {
      eigs.push_back(h(hi, hi));
      --hi;
      iter_since_deflation = 0;
      continue;
    }
    if (lo == hi - 1) {
      auto [l1, l2] = eig2x2(h(lo, lo), h(lo, hi), h(hi, lo), h(hi, hi));
      eigs.push_back(l1);
      eigs.push_back(l2);
      hi -= 2;
      iter_since_deflation = 0;
      continue;
    }

    // Wilkinson shift from the trailing 2x2 of the active block.
    cdouble mu;
    {
      auto [l1, l2] = eig2x2(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi));
      mu = std::abs(l1 - h(hi, hi)) < std::abs(l2 - h(hi, hi)) ? l1 : l2;
    }
    if (++iter_since_deflation % 12 == 0)
      mu = h(hi, hi) + cdouble(std::abs(h(hi, hi - 1).real()) + std::abs(h(hi, hi - 1).imag()), 0.0);

    // explicit single-shift QR sweep on [lo, hi]
    for (std::ptrdiff_t k = lo; k <= hi; ++k) h(k, k) -= mu;
    for (std::ptrdiff_t k = lo; k < hi; ++k) {
      const cdouble f = h(k, k);
      const cdouble g = h(k + 1, k);
      const double fa = std::abs(f), ga = std::abs(g);
      double c;
      cdouble s;
      if (ga == 0.0) { c = 1.0; s = cdouble(0.0, 0.0); }
      else if (fa == 0.0) { c = 0.0; s = cdouble(1.0, 0.0); }
      else {
        const double r = std::hypot(fa, ga);
        c = fa / r;
        s = (f / fa) * std::conj(g) / r;
      }
      cs[k] = c;
      sn[k] = s;
      for (std::ptrdiff_t col = k; col <= hi; ++col) {
        const cdouble xp = h(k, col), xq = h(k + 1, col);
        h(k, col) = c * xp + s * xq;
        h(k + 1, col) = -std::conj(s) * xp + c * xq;
      }
    }
    for (std::ptrdiff_t k = lo; k < hi; ++k) {
      const double c = cs[k];
      const cdouble s = sn[k];
      const std::ptrdiff_t rmax = std::min(hi, k + 2);
      for (std::ptrdiff_t r = lo; r <= rmax; ++r) {
        const cdouble xp = h(r, k), xq = h(r, k + 1);
        h(r, k) = c * xp + std::conj(s) * xq;
        h(r, k + 1) = -s * xp + c * xq;
      }
    }
    for (std::ptrdiff_t k = lo; k <= hi; ++k) h(k, k) += mu;
  }
  return eigs;
}

// ---------------------------------------------------------------------------

ComplexMatrix orthonormalize_columns(const ComplexMatrix& a, double drop_tol) {
  const std::size_t n = a.rows(), m = a.cols();
  double scale = 0.0;
  std::vector<ComplexMatrix> kept;
  std::vector<std::vector<cdouble>> basis;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<cdouble> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a(i, j);
    scale = std::max(scale, std::sqrt(kernels::norm_sq(v.data(), n)));
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        const cdouble coef = kernels::dot_conj(b.data(), v.data(), n);
        for (std::size_t i = 0; i < n; ++i) v[i] -= coef * b[i];
      }
    }
    const double vn = std::sqrt(kernels::norm_sq(v.data(), n));
    if (vn > drop_tol * std::max(scale, 1e-300)) {
      for (std::size_t i = 0; i < n; ++i) v[i] /= vn;
      basis.push_back(std::move(v));
    }
  }
  ComplexMatrix q(n, basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) q(i, j) = basis[j][i];
  return q;
}

ComplexMatrix haar_unitary(std::size_t n, std::uint64_t seed) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    SeededRng rng(derive_seed(seed, 0x9a41u + attempt));
    ComplexMatrix g = rng.gaussian_matrix(n, n);
    ComplexMatrix q = orthonormalize_columns(g);
    if (q.cols() == n) return q;
  }
  fail(ErrorKind::NumericalFailure, "haar_unitary: degenerate Gaussian sample");
}

ComplexMatrix haar_random_projection(std::size_t n, std::size_t r, std::uint64_t seed) {
  if (r > n) fail(ErrorKind::InvalidRank, "projection rank exceeds dimension");
  if (r == 0) return ComplexMatrix(n, n);
  if (r == n) return ComplexMatrix::identity(n);
  for (int attempt = 0; attempt < 4; ++attempt) {
    SeededRng rng(derive_seed(seed, 0x70a9u + attempt));
    ComplexMatrix g = rng.gaussian_matrix(n, r);
    ComplexMatrix b = orthonormalize_columns(g);
    if (b.cols() != r) continue;
    ComplexMatrix p = b * b.adjoint();
    return cdouble(0.5, 0.0) * (p + p.adjoint());
  }
  fail(ErrorKind::NumericalFailure, "haar_random_projection: degenerate Gaussian sample");
}

ComplexMatrix lu_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.is_square() || a.rows() != b.rows()) fail(ErrorKind::ShapeError, "lu_solve shape mismatch");
  const std::size_t n = a.rows(), m = b.cols();
  ComplexMatrix lu = a;
  ComplexMatrix x = b;
  std::vector<std::size_t> piv(n);
  std::iota(piv.begin(), piv.end(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pr = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > best) { best = std::abs(lu(i, k)); pr = i; }
    if (best == 0.0) fail(ErrorKind::NumericalFailure, "lu_solve: singular matrix");
    if (pr != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(pr, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(pr, j));
    }
    const cdouble pivot = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cdouble f = lu(i, k) / pivot;
      lu(i, k) = f;
      if (f == cdouble(0.0, 0.0)) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      cdouble acc = x(kk, j);
      for (std::size_t i = kk + 1; i < n; ++i) acc -= lu(kk, i) * x(i, j);
      x(kk, j) = acc / lu(kk, kk);
    }
  }
  return x;
}

} // namespace offdiag
