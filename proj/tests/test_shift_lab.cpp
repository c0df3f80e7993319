#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "offdiag/corners.hpp"
#include "offdiag/rng.hpp"
#include "offdiag/shift_lab.hpp"

using namespace offdiag;
using namespace offdiag::shift;

namespace {
const ToleranceProfile kTol{};
}

TEST_CASE("truncated bilateral shift") {
  TruncatedOperator u = truncated_bilateral_shift(1);
  REQUIRE(u.dim() == 3);
  CHECK(u.matrix(0, 1) == cdouble(1, 0));
  CHECK(u.matrix(1, 2) == cdouble(1, 0));
  double sum = 0.0;
  for (std::size_t i = 0; i < u.matrix.size(); ++i) sum += std::abs(u.matrix.data()[i]);
  CHECK(sum == doctest::Approx(2.0)); // exactly one band

  TruncatedOperator u5 = truncated_bilateral_shift(5);
  ComplexMatrix defect = u5.matrix.adjoint() * u5.matrix - ComplexMatrix::identity(u5.dim());
  CHECK(numerical_rank(defect, kTol).rank == 1); // isometric off the boundary column

  ComplexMatrix h = u5.matrix + u5.matrix.adjoint();
  CHECK(frobenius_norm(h - h.adjoint()) == 0.0);
  for (std::size_t i = 0; i < h.rows(); ++i) CHECK(h(i, i) == cdouble(0, 0));
}

TEST_CASE("weights: exact identities and range safety") {
  for (int n = -25; n <= 25; ++n) {
    const double a = alpha_weight(n), b = beta_weight(n);
    CHECK(a > 0.0);
    CHECK(b > 0.0);
    CHECK(a < 1.0);
    CHECK(b < 1.0 + 1e-16);
    CHECK(std::abs(a * a + b * b - 1.0) <= 1e-15);
    // the two product identities behind the vanishing lower corner
    CHECK(std::abs(alpha_weight(n) * beta_weight(n - 1) - 2.0 * alpha_weight(n - 1) * beta_weight(n)) <= 1e-16);
    CHECK(std::abs(2.0 * alpha_weight(n) * beta_weight(n + 1) - alpha_weight(n + 1) * beta_weight(n)) <= 1e-16);
  }
  for (int n : {-600, -300, 300, 600}) {
    const double a = alpha_weight(n), b = beta_weight(n);
    CHECK(std::isfinite(a));
    CHECK(std::isfinite(b));
    CHECK(a > 0.0);
    CHECK(b > 0.0);
    CHECK(a <= 1.0);
    CHECK(b <= 1.0);
    CHECK(std::abs(a * a + b * b - 1.0) <= 1e-15);
  }
}

TEST_CASE("quasiaffinity truncation") {
  QuasiaffinityTruncation t = build_quasiaffinity(30);
  const std::size_t l = t.a.dim();

  SUBCASE("lower corner vanishes") {
    CHECK(max_entry_norm(interior_compression(t.lower, 30, 1)) <= 1e-13);
    CHECK(max_entry_norm(t.lower) <= 1e-13); // holds on the boundary band too
  }
  SUBCASE("upper corner is skew-hermitian off the boundary band") {
    ComplexMatrix skew = interior_compression(t.upper + t.upper.adjoint(), 30, 1);
    CHECK(max_entry_norm(skew) <= 1e-13);
  }
  SUBCASE("upper corner columns carry exactly two entries") {
    for (int n = -28; n <= 28; ++n) {
      const std::size_t col = t.a.index_of(n);
      std::size_t nonzero = 0;
      for (std::size_t i = 0; i < l; ++i)
        if (std::abs(t.upper(i, col)) > 1e-13) ++nonzero;
      CHECK(nonzero == 2);
    }
  }
  SUBCASE("interior section injectivity") {
    // odd windows of the zero-diagonal tridiagonal section are singular by
    // parity: their smallest singular value is a structural zero, far below
    // the genuinely smallest one of the even window
    ComplexMatrix odd = interior_compression(t.upper, 30, 1);
    Svd odd_svd = jacobi_svd(odd);
    CHECK(odd_svd.sigma.back() <= 1e-15 * odd_svd.sigma.front());

    // the even window is certified nonsingular with log-domain sigma_min
    InteriorInjectivity inj = interior_injectivity(t);
    CHECK(inj.dim % 2 == 0);
    CHECK(inj.nonsingular);
    CHECK(inj.log2_sigma_min_lb <= inj.log2_sigma_min_ub);
    CHECK(inj.log2_sigma_min_ub < 0.0);

    // at a small width the direct SVD value must sit inside the log bounds
    QuasiaffinityTruncation t8 = build_quasiaffinity(8);
    InteriorInjectivity inj8 = interior_injectivity(t8);
    REQUIRE(inj8.sigma_min_direct > 0.0);
    const double l2 = std::log2(inj8.sigma_min_direct);
    CHECK(l2 >= inj8.log2_sigma_min_lb - 1.0);
    CHECK(l2 <= inj8.log2_sigma_min_ub + 1.0);
  }
  SUBCASE("sigma_min decays with the truncation width") {
    double last = 1.0;
    for (int hw : {10, 20, 30}) {
      InteriorInjectivity inj = interior_injectivity(build_quasiaffinity(hw));
      CHECK(inj.log2_sigma_min_ub < last);
      last = inj.log2_sigma_min_lb;
    }
  }
}

TEST_CASE("kernel recursion oracle") {
  // p = 0 by hand: -2 sqrt(5/4)/sqrt(5) = -1
  CHECK(kernel_recursion_oracle(0) == doctest::Approx(-1.0).epsilon(1e-14));

  QuasiaffinityTruncation t = build_quasiaffinity(20);
  for (int p = -19; p <= 19; ++p)
    CHECK(matrix_recursion_ratio(t, p) ==
          doctest::Approx(kernel_recursion_oracle(p)).epsilon(1e-12));

  // growth in the divergent direction: forward for p >= 1, backward for p <= -1
  const double sqrt2 = std::sqrt(2.0);
  for (long p = 1; p <= 50; ++p) CHECK(std::abs(kernel_recursion_oracle(p)) >= sqrt2 - 1e-12);
  for (long p = -50; p <= -1; ++p)
    CHECK(1.0 / std::abs(kernel_recursion_oracle(p)) >= sqrt2 - 1e-12);
  CHECK(std::abs(kernel_recursion_oracle(1000)) == doctest::Approx(2.0));
  CHECK(std::abs(kernel_recursion_oracle(-1000)) == doctest::Approx(0.5));
}

TEST_CASE("case one") {
  ShiftModel m1 = build_case1(1, 20, kTol);
  CHECK(m1.rank3.rank == 0);
  CHECK(std::isinf(m1.rank3.gap_ratio));
  CHECK(m1.rank2.rank == 1);
  CHECK(m1.interior_defect <= 1e-15);

  ShiftModel m3 = build_case1(3, 20, kTol);
  CHECK(m3.rank3.rank == 0);
  CHECK(m3.rank2.rank == 3);

  ShiftModel m0 = build_case1(0, 10, kTol);
  CHECK(m0.rank2.rank == 0);
  CHECK(m0.rank3.rank == 0);

  ShiftModel minf = build_case1(std::nullopt, 8, kTol);
  CHECK(minf.rank2_grows_with_t);
  CHECK(minf.rank2.rank == 8);
  CHECK(minf.rank3.rank == 0);
}

TEST_CASE("case two") {
  ShiftModel m11 = build_case2(1, 1, 20, kTol);
  CHECK(m11.rank3.rank == 1);
  CHECK(m11.rank2.rank == 1);
  CHECK(m11.interior_defect <= 1e-15);

  ShiftModel m13 = build_case2(1, 3, 20, kTol);
  CHECK(m13.rank3.rank == 1);
  CHECK(m13.rank2.rank == 3);

  // infinite k: rank2 grows one per unit of T per shift copy
  std::vector<std::size_t> ranks;
  for (int t : {10, 15, 20}) ranks.push_back(build_case2(2, std::nullopt, t, kTol).rank2.rank);
  CHECK(ranks[0] == 2 + 10);
  CHECK(ranks[1] == 2 + 15);
  CHECK(ranks[2] == 2 + 20);

  CHECK_THROWS_AS(build_case2(0, 1, 10, kTol), Error);
  CHECK_THROWS_AS(build_case2(3, 2, 10, kTol), Error);

  // targets are met exactly across truncation widths
  for (int hw = 8; hw <= 20; hw += 4) {
    ShiftModel c1 = build_case1(3, hw, kTol);
    CHECK(c1.rank2.rank == 3);
    CHECK(c1.rank3.rank == 0);
    ShiftModel c2 = build_case2(2, 4, hw, kTol);
    CHECK(c2.rank2.rank == 4);
    CHECK(c2.rank3.rank == 2);
  }
}

TEST_CASE("case three") {
  ShiftModel m1 = build_case3(1, kTol);
  CHECK(m1.rank2.rank == 1);
  CHECK(m1.rank3.rank == 1);

  ShiftModel m5 = build_case3(5, kTol);
  CHECK(m5.rank2.rank == 5);
  CHECK(m5.rank3.rank == 5);
  CHECK(m5.full_defect <= 1e-15); // twice a projection, normal outright
}

TEST_CASE("four-block assembly (quasiaffinity + finite rank)") {
  for (std::size_t j : {1ul, 4ul}) {
    FourBlockModel m = assemble_four_block(j, 20, kTol);
    CHECK(m.base.rank3.rank == j);
    CHECK(m.base.rank3.certified());
    CHECK(m.base.interior_defect <= 1e-12);
    CHECK(m.injectivity.nonsingular);
    MESSAGE("j=", j, " boundary defect ", m.base.full_defect);
  }
  CHECK_THROWS_AS(assemble_four_block(0, 10, kTol), Error);
}

TEST_CASE("six-block assembly is never cyclic") {
  for (std::size_t j : {0ul, 2ul}) {
    SixBlockModel m = assemble_six_block(j, 10, kTol);
    CHECK(m.base.rank3.rank == j);
    CHECK(m.base.rank3.certified());
    CHECK(m.base.interior_defect <= 1e-12);
    CHECK_FALSE(m.eig_report.distinct); // duplicated block forces multiplicity >= 2

    // a seed supported in the duplicated copies is trapped there: its Krylov
    // space stays inside 2L coordinates, so the rank certificate is exact
    const std::size_t n = m.base.d.rows();
    const std::size_t l = m.duplicated_block_dim / 2;
    SeededRng rng(7 + j);
    ComplexMatrix x(n, 1);
    for (std::size_t i = 0; i < l; ++i) x(i, 0) = rng.complex_gaussian();          // first copy, ran P side
    for (std::size_t i = n - l; i < n; ++i) x(i, 0) = rng.complex_gaussian();      // first copy, complement side
    RankResult kr = chain::krylov_rank_from(m.base.d, x, kTol);
    CHECK(kr.rank <= m.duplicated_block_dim);
    CHECK(kr.rank < n);
    CHECK(kr.certified());
  }
}

TEST_CASE("hilbert-schmidt corner sweep") {
  auto rows = hs_corner_sweep(diag_compact_model, 42, {10, 20, 40}, kTol);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    const double kn = frobenius_norm(diag_compact_model(row.half_width));
    CHECK(std::abs(row.frob2 - row.frob3) <= 1e-10 * kn);
    CHECK(row.defect <= 1e-14);
  }
  // non-normal truncations are refused
  auto bad_builder = [](int) {
    ComplexMatrix j(4, 4);
    j(0, 1) = cdouble(1, 0);
    return j;
  };
  CHECK_THROWS_WITH_AS(hs_corner_sweep(bad_builder, 1, {4}, kTol), doctest::Contains("NotNormal"),
                       Error);
}
