#include "offdiag/shift_lab.hpp"

#include <algorithm>
#include <cmath>

#include "offdiag/corners.hpp"
#include "offdiag/rng.hpp"

namespace offdiag::shift {

namespace {

// 2^e with graceful underflow; exponents are clamped so |p| far past the
// double range still yields the correct limit values.
double pow2(long e) {
  e = std::clamp(e, -1200l, 1200l);
  if (e >= 1024) return std::numeric_limits<double>::infinity();
  return std::ldexp(1.0, static_cast<int>(e));
}

// (W_l A W_r)[i][j] = l_i A_ij r_j for diagonal weight vectors.
ComplexMatrix scaled(const ComplexMatrix& a, const std::vector<double>& left,
                     const std::vector<double>& right) {
  ComplexMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = left[i] * a(i, j) * right[j];
  return out;
}

ShiftModel finish_model(std::string label, ComplexMatrix d, ComplexMatrix p,
                        std::vector<std::size_t> boundary, bool grows,
                        const ToleranceProfile& tol) {
  ShiftModel model;
  model.label = std::move(label);
  model.d = std::move(d);
  model.p = std::move(p);
  model.boundary = std::move(boundary);
  model.rank2_grows_with_t = grows;

  corners::CornerDecomposition dec = corners::decompose(model.d, model.p, tol);
  model.rank2 = numerical_rank(dec.d2, tol);
  model.rank3 = numerical_rank(dec.d3, tol);
  model.full_defect = corners::normality_defect(model.d);

  ComplexMatrix da = model.d.adjoint();
  ComplexMatrix c = model.d * da - da * model.d;
  for (std::size_t b : model.boundary) {
    for (std::size_t i = 0; i < c.rows(); ++i) {
      c(b, i) = cdouble(0.0, 0.0);
      c(i, b) = cdouble(0.0, 0.0);
    }
  }
  const double dn = frobenius_norm(model.d);
  model.interior_defect = frobenius_norm(c) / std::max(1.0, dn * dn);
  return model;
}

} // namespace

double alpha_weight(int n) {
  if (n >= 0) return 1.0 / std::sqrt(1.0 + pow2(-2l * n));
  return pow2(n) / std::sqrt(1.0 + pow2(2l * n));
}

double beta_weight(int n) {
  if (n >= 0) return pow2(-n) / std::sqrt(1.0 + pow2(-2l * n));
  return 1.0 / std::sqrt(1.0 + pow2(2l * n));
}

WeightedPair weighted_pair(int half_width) {
  if (half_width < 1) fail(ErrorKind::InvalidInput, "half width must be at least 1");
  WeightedPair w;
  w.half_width = half_width;
  for (int n = -half_width; n <= half_width; ++n) {
    w.alpha.push_back(alpha_weight(n));
    w.beta.push_back(beta_weight(n));
  }
  return w;
}

TruncatedOperator truncated_bilateral_shift(int half_width) {
  if (half_width < 1) fail(ErrorKind::InvalidInput, "half width must be at least 1");
  TruncatedOperator u;
  u.half_width = half_width;
  u.interior_margin = 1;
  u.matrix = ComplexMatrix(u.dim(), u.dim());
  for (int n = -half_width + 1; n <= half_width; ++n)
    u.matrix(u.index_of(n - 1), u.index_of(n)) = cdouble(1.0, 0.0);
  return u;
}

ShiftModel build_case1(std::optional<std::size_t> k, int half_width, const ToleranceProfile& tol) {
  if (half_width < 2) fail(ErrorKind::InvalidInput, "case one needs half width >= 2");
  const std::size_t copies = k ? *k : static_cast<std::size_t>(half_width);
  const std::size_t l = static_cast<std::size_t>(2 * half_width + 1);

  if (copies == 0) {
    // degenerate target (0, 0): the identity with any nonzero projection
    ComplexMatrix d = ComplexMatrix::identity(l);
    ComplexMatrix p(l, l);
    for (int n = -half_width; n <= 0; ++n)
      p(static_cast<std::size_t>(n + half_width), static_cast<std::size_t>(n + half_width)) =
          cdouble(1.0, 0.0);
    return finish_model("case1:k=0", std::move(d), std::move(p), {}, false, tol);
  }

  const std::size_t dim = l * copies;
  ComplexMatrix d(dim, dim);
  ComplexMatrix p(dim, dim);
  std::vector<std::size_t> boundary;
  auto at = [&](int n, std::size_t i) {
    return static_cast<std::size_t>(n + half_width) * copies + i;
  };
  for (std::size_t i = 0; i < copies; ++i) {
    for (int n = -half_width + 1; n <= half_width; ++n) d(at(n - 1, i), at(n, i)) = cdouble(1.0, 0.0);
    for (int n = -half_width; n <= 0; ++n) p(at(n, i), at(n, i)) = cdouble(1.0, 0.0);
    boundary.push_back(at(-half_width, i));
    boundary.push_back(at(half_width, i));
  }
  return finish_model(k ? "case1:k=" + std::to_string(copies) : "case1:k=inf", std::move(d),
                      std::move(p), std::move(boundary), !k.has_value(), tol);
}

ShiftModel build_case2(std::size_t j, std::optional<std::size_t> k, int half_width,
                       const ToleranceProfile& tol) {
  if (half_width < 2) fail(ErrorKind::InvalidInput, "case two needs half width >= 2");
  if (j < 1) fail(ErrorKind::InvalidTarget, "case two needs 1 <= j < infinity");
  if (k && *k < j) fail(ErrorKind::InvalidTarget, "case two needs j <= k");
  const std::size_t extra = k ? *k - j : static_cast<std::size_t>(half_width);
  const std::size_t l = static_cast<std::size_t>(2 * half_width + 1);
  const std::size_t dim = l * (j + extra);
  ComplexMatrix d(dim, dim);
  ComplexMatrix p(dim, dim);
  std::vector<std::size_t> boundary;

  // H = (U + U*) ⊗ I_j on the first l*j coordinates
  auto h_at = [&](int n, std::size_t i) {
    return static_cast<std::size_t>(n + half_width) * j + i;
  };
  for (std::size_t i = 0; i < j; ++i) {
    for (int n = -half_width + 1; n <= half_width; ++n) {
      d(h_at(n - 1, i), h_at(n, i)) = cdouble(1.0, 0.0);
      d(h_at(n, i), h_at(n - 1, i)) = cdouble(1.0, 0.0);
    }
    for (int n = -half_width; n <= 0; ++n) p(h_at(n, i), h_at(n, i)) = cdouble(1.0, 0.0);
    boundary.push_back(h_at(-half_width, i));
    boundary.push_back(h_at(half_width, i));
  }
  // R = U ⊗ I_{k-j} on the rest
  const std::size_t off = l * j;
  auto r_at = [&](int n, std::size_t i) {
    return off + static_cast<std::size_t>(n + half_width) * extra + i;
  };
  for (std::size_t i = 0; i < extra; ++i) {
    for (int n = -half_width + 1; n <= half_width; ++n) d(r_at(n - 1, i), r_at(n, i)) = cdouble(1.0, 0.0);
    for (int n = -half_width; n <= 0; ++n) p(r_at(n, i), r_at(n, i)) = cdouble(1.0, 0.0);
    boundary.push_back(r_at(-half_width, i));
    boundary.push_back(r_at(half_width, i));
  }
  std::string label = "case2:j=" + std::to_string(j) +
                      (k ? ",k=" + std::to_string(*k) : ",k=inf");
  return finish_model(std::move(label), std::move(d), std::move(p), std::move(boundary),
                      !k.has_value(), tol);
}

ShiftModel build_case3(std::size_t n, const ToleranceProfile& tol) {
  if (n < 1) fail(ErrorKind::InvalidInput, "case three needs n >= 1");
  ComplexMatrix d(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = d(i, n + i) = d(n + i, i) = d(n + i, n + i) = cdouble(1.0, 0.0);
  }
  ComplexMatrix p(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) p(i, i) = cdouble(1.0, 0.0);
  return finish_model("case3:n=" + std::to_string(n), std::move(d), std::move(p), {}, true, tol);
}

QuasiaffinityTruncation build_quasiaffinity(int half_width) {
  if (half_width < 3) fail(ErrorKind::InvalidInput, "half width must be at least 3");
  QuasiaffinityTruncation t;
  t.half_width = half_width;
  t.a = truncated_bilateral_shift(half_width);
  // A = U + 2U*
  ComplexMatrix ustar = t.a.matrix.adjoint();
  t.a.matrix = t.a.matrix + cdouble(2.0, 0.0) * ustar;
  t.weights = weighted_pair(half_width);

  ComplexMatrix at = t.a.matrix.transpose(); // A* for the real banded A
  t.lower = scaled(t.a.matrix, t.weights.beta, t.weights.alpha) -
            scaled(at, t.weights.alpha, t.weights.beta);
  t.upper = scaled(t.a.matrix, t.weights.alpha, t.weights.beta) -
            scaled(at, t.weights.beta, t.weights.alpha);
  return t;
}

double kernel_recursion_oracle(long p) {
  if (p >= 0) {
    const double num = std::sqrt(1.0 + pow2(-2 * p - 2));
    const double den = std::sqrt(1.0 + pow2(-2 * p + 2));
    return -2.0 * num / den;
  }
  // factor 2^{|p| +/- 1} out of both radicals to avoid 4^{|p|} overflow
  const long a = -p - 1, b = -p + 1;
  const double num = std::sqrt(1.0 + pow2(-2 * a));
  const double den = std::sqrt(1.0 + pow2(-2 * b));
  return -0.5 * num / den;
}

double matrix_recursion_ratio(const QuasiaffinityTruncation& t, int p) {
  if (std::abs(p) > t.half_width - 1)
    fail(ErrorKind::InvalidInput, "p is outside the truncation interior");
  const std::size_t row = t.a.index_of(p);
  const cdouble num = t.upper(row, t.a.index_of(p - 1)); // 2 a_p b_{p-1} - a_{p-1} b_p
  const cdouble den = t.upper(row, t.a.index_of(p + 1)); // a_p b_{p+1} - 2 a_{p+1} b_p
  return (num / den).real();
}

ComplexMatrix interior_compression(const ComplexMatrix& m, int half_width, int margin) {
  const int lo = -(half_width - margin), hi = half_width - margin;
  if (lo > hi) fail(ErrorKind::InvalidInput, "margin leaves no interior");
  const std::size_t dim = static_cast<std::size_t>(hi - lo + 1);
  ComplexMatrix out(dim, dim);
  for (int i = lo; i <= hi; ++i)
    for (int j = lo; j <= hi; ++j)
      out(static_cast<std::size_t>(i - lo), static_cast<std::size_t>(j - lo)) =
          m(static_cast<std::size_t>(i + half_width), static_cast<std::size_t>(j + half_width));
  return out;
}

double interior_sigma_min(const ComplexMatrix& m, int half_width, int margin) {
  ComplexMatrix c = interior_compression(m, half_width, margin);
  Svd svd = jacobi_svd(c);
  return svd.sigma.empty() ? 0.0 : svd.sigma.back();
}

namespace {

// log2 of sigma_min bounds for a bidiagonal block given log2 band magnitudes:
// |inv_{ij}| = prod off / prod diag, so everything reduces to prefix sums.
struct BidiagonalBounds {
  double log2_frob_inv = 0.0; // log2 ||inv||_F
  double log2_max_inv = 0.0;  // log2 max |inv entry|
  bool nonsingular = false;
};

BidiagonalBounds bidiagonal_inverse_bounds(const std::vector<double>& diag,
                                           const std::vector<double>& off) {
  BidiagonalBounds out;
  const std::size_t m = diag.size();
  for (double d : diag)
    if (d == 0.0 || !std::isfinite(d)) return out;
  out.nonsingular = true;
  std::vector<double> sd(m + 1, 0.0), so(off.size() + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) sd[i + 1] = sd[i] + std::log2(std::abs(diag[i]));
  for (std::size_t i = 0; i < off.size(); ++i) so[i + 1] = so[i] + std::log2(std::abs(off[i]));
  std::vector<double> ls;
  ls.reserve(m * (m + 1) / 2);
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = j; i < m; ++i) {
      const double l = (so[i] - so[j]) - (sd[i + 1] - sd[j]);
      ls.push_back(l);
      lmax = std::max(lmax, l);
    }
  double sum = 0.0;
  for (double l : ls) sum += std::exp2(2.0 * (l - lmax));
  out.log2_max_inv = lmax;
  out.log2_frob_inv = lmax + 0.5 * std::log2(sum);
  return out;
}

} // namespace

InteriorInjectivity interior_injectivity(const QuasiaffinityTruncation& t) {
  const int hw = t.half_width;
  // even window [-(T-1), T-2]; see the header note on the parity artifact
  const int lo = -(hw - 1), hi = hw - 2;
  const std::size_t dim = static_cast<std::size_t>(hi - lo + 1);
  InteriorInjectivity out;
  out.dim = dim;
  ComplexMatrix s(dim, dim);
  for (int i = lo; i <= hi; ++i)
    for (int j = lo; j <= hi; ++j)
      s(static_cast<std::size_t>(i - lo), static_cast<std::size_t>(j - lo)) =
          t.upper(t.a.index_of(i), t.a.index_of(j));

  {
    Svd svd = jacobi_svd(s);
    out.sigma_min_direct = svd.sigma.empty() ? 0.0 : svd.sigma.back();
  }

  // parity split: rows/cols of even window position vs odd position give two
  // bidiagonal blocks whose singular values exhaust those of the section
  const std::size_t m = dim / 2;
  std::vector<double> diag_a(m), off_a(m > 0 ? m - 1 : 0);
  std::vector<double> diag_b(m), off_b(m > 0 ? m - 1 : 0);
  for (std::size_t i = 0; i < m; ++i) {
    diag_a[i] = std::abs(s(2 * i, 2 * i + 1));     // even row, odd col
    diag_b[i] = std::abs(s(2 * i + 1, 2 * i));     // odd row, even col
    if (i + 1 < m) {
      off_a[i] = std::abs(s(2 * i + 2, 2 * i + 1)); // couples block-A rows i+1, i
      off_b[i] = std::abs(s(2 * i + 1, 2 * i + 2)); // couples block-B cols i, i+1
    }
  }
  BidiagonalBounds ba = bidiagonal_inverse_bounds(diag_a, off_a);
  BidiagonalBounds bb = bidiagonal_inverse_bounds(diag_b, off_b);
  out.nonsingular = ba.nonsingular && bb.nonsingular;
  if (out.nonsingular) {
    out.log2_sigma_min_lb = -std::max(ba.log2_frob_inv, bb.log2_frob_inv);
    out.log2_sigma_min_ub = -std::max(ba.log2_max_inv, bb.log2_max_inv);
  }
  return out;
}

namespace {

struct AdaptedBlocks {
  ComplexMatrix b1, b2, b3, b4; // compressions onto [M;N] and [N;-M]
};

// Corner blocks of A ⊕ A* in the isometry bases [M;N], [N;-M]; all products
// are diagonal scalings of the banded A.
AdaptedBlocks quasiaffinity_blocks(const QuasiaffinityTruncation& t) {
  ComplexMatrix at = t.a.matrix.transpose();
  AdaptedBlocks blk;
  blk.b1 = scaled(t.a.matrix, t.weights.alpha, t.weights.alpha) +
           scaled(at, t.weights.beta, t.weights.beta);
  blk.b2 = t.upper;
  blk.b3 = t.lower;
  blk.b4 = scaled(t.a.matrix, t.weights.beta, t.weights.beta) +
           scaled(at, t.weights.alpha, t.weights.alpha);
  return blk;
}

} // namespace

FourBlockModel assemble_four_block(std::size_t j, int half_width, const ToleranceProfile& tol) {
  if (j < 1) fail(ErrorKind::InvalidTarget, "the four-block assembly needs j >= 1");
  QuasiaffinityTruncation t = build_quasiaffinity(half_width);
  AdaptedBlocks nb = quasiaffinity_blocks(t);
  const std::size_t l = t.a.dim();
  const std::size_t dim = 2 * j + 2 * l;
  const std::size_t c1 = 0, c2 = j, c3 = j + l, c4 = j + 2 * l;

  ComplexMatrix d(dim, dim);
  for (std::size_t i = 0; i < j; ++i) {
    d(c1 + i, c1 + i) = cdouble(1.0, 0.0);
    d(c1 + i, c4 + i) = cdouble(1.0, 0.0);
    d(c4 + i, c1 + i) = cdouble(1.0, 0.0);
    d(c4 + i, c4 + i) = cdouble(1.0, 0.0);
  }
  d.set_block(c2, c2, nb.b1);
  d.set_block(c2, c3, nb.b2);
  d.set_block(c3, c2, nb.b3);
  d.set_block(c3, c3, nb.b4);

  ComplexMatrix p(dim, dim);
  for (std::size_t i = 0; i < j + l; ++i) p(i, i) = cdouble(1.0, 0.0);

  std::vector<std::size_t> boundary = {c2, c2 + l - 1, c3, c3 + l - 1};
  FourBlockModel model;
  model.base = finish_model("cor36:j=" + std::to_string(j), std::move(d), std::move(p),
                            std::move(boundary), true, tol);
  model.injectivity = interior_injectivity(t);
  return model;
}

SixBlockModel assemble_six_block(std::size_t j, int half_width, const ToleranceProfile& tol) {
  QuasiaffinityTruncation t = build_quasiaffinity(half_width);
  AdaptedBlocks nb = quasiaffinity_blocks(t);
  const std::size_t l = t.a.dim();

  // M part: the four-block model for j >= 1, the plain quasiaffinity pair for j = 0
  ComplexMatrix m1, m2, m3, m4;
  std::vector<std::size_t> m_boundary;
  if (j == 0) {
    m1 = nb.b1;
    m2 = nb.b2;
    m3 = nb.b3;
    m4 = nb.b4;
    m_boundary = {0, l - 1, l, 2 * l - 1};
  } else {
    FourBlockModel inner = assemble_four_block(j, half_width, tol);
    const std::size_t mp = j + l;
    m1 = inner.base.d.block(0, 0, mp, mp);
    m2 = inner.base.d.block(0, mp, mp, mp);
    m3 = inner.base.d.block(mp, 0, mp, mp);
    m4 = inner.base.d.block(mp, mp, mp, mp);
    m_boundary = inner.base.boundary;
  }
  const std::size_t mp = m1.rows(), mq = m4.rows();

  const std::size_t b1 = 0, b2 = l, b3 = 2 * l, b4 = 2 * l + mp, b5 = 2 * l + mp + mq;
  const std::size_t b6 = b5 + l;
  const std::size_t dim = b6 + l;

  ComplexMatrix d(dim, dim);
  d.set_block(b1, b1, nb.b1);
  d.set_block(b1, b6, nb.b2);
  d.set_block(b6, b1, nb.b3);
  d.set_block(b6, b6, nb.b4);
  d.set_block(b2, b2, nb.b1);
  d.set_block(b2, b5, nb.b2);
  d.set_block(b5, b2, nb.b3);
  d.set_block(b5, b5, nb.b4);
  d.set_block(b3, b3, m1);
  d.set_block(b3, b4, m2);
  d.set_block(b4, b3, m3);
  d.set_block(b4, b4, m4);

  ComplexMatrix p(dim, dim);
  for (std::size_t i = 0; i < 2 * l + mp; ++i) p(i, i) = cdouble(1.0, 0.0);

  std::vector<std::size_t> boundary = {b1, b1 + l - 1, b6, b6 + l - 1,
                                       b2, b2 + l - 1, b5, b5 + l - 1};
  for (std::size_t b : m_boundary) boundary.push_back(b < mp ? b3 + b : b4 + (b - mp));

  SixBlockModel model;
  model.base = finish_model("cor38:j=" + std::to_string(j), std::move(d), std::move(p),
                            std::move(boundary), true, tol);
  model.duplicated_block_dim = 2 * l;
  model.eig_report = chain::distinct_eigenvalue_check(model.base.d, tol);
  return model;
}

ComplexMatrix diag_compact_model(int half_width) {
  const std::size_t dim = static_cast<std::size_t>(2 * half_width + 1);
  ComplexMatrix k(dim, dim);
  for (int n = -half_width; n <= half_width; ++n)
    k(static_cast<std::size_t>(n + half_width), static_cast<std::size_t>(n + half_width)) =
        cdouble(1.0 / (std::abs(n) + 1.0), 0.0);
  return k;
}

std::vector<HsSweepRow> hs_corner_sweep(const std::function<ComplexMatrix(int)>& k_builder,
                                        std::uint64_t p_seed, const std::vector<int>& t_list,
                                        const ToleranceProfile& tol) {
  std::vector<HsSweepRow> rows;
  for (int t : t_list) {
    ComplexMatrix k = k_builder(t);
    if (!k.is_square()) fail(ErrorKind::ShapeError, "K builder must return a square matrix");
    HsSweepRow row;
    row.half_width = t;
    row.defect = corners::normality_defect(k);
    if (row.defect > tol.normality_rel_tol)
      fail(ErrorKind::NotNormal, "truncated K is not normal at tolerance");
    ComplexMatrix p = haar_random_projection(k.rows(), k.rows() / 2,
                                             derive_seed(p_seed, static_cast<std::uint64_t>(t)));
    corners::CornerDecomposition dec = corners::decompose(k, p, tol);
    row.frob2 = frobenius_norm(dec.d2);
    row.frob3 = frobenius_norm(dec.d3);
    rows.push_back(row);
  }
  return rows;
}

} // namespace offdiag::shift
