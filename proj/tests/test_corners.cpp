#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "offdiag/construct.hpp"
#include "offdiag/corners.hpp"
#include "offdiag/rng.hpp"

using namespace offdiag;
using namespace offdiag::corners;

namespace {

const ToleranceProfile kTol{};

ComplexMatrix seeded_normal(std::uint64_t seed, std::size_t n) {
  SeededRng rng(seed);
  std::vector<cdouble> lam(n);
  for (auto& z : lam) z = rng.complex_gaussian();
  ComplexMatrix w = haar_unitary(n, derive_seed(seed, 5));
  return w * ComplexMatrix::diagonal(lam) * w.adjoint();
}

ComplexMatrix seeded_hermitian(std::uint64_t seed, std::size_t n) {
  SeededRng rng(seed);
  ComplexMatrix g = rng.gaussian_matrix(n, n);
  return cdouble(0.5, 0.0) * (g + g.adjoint());
}

} // namespace

TEST_CASE("decompose basics") {
  ComplexMatrix d = seeded_normal(3, 4);

  SUBCASE("P = I leaves empty complements") {
    CornerDecomposition dec = decompose(d, ComplexMatrix::identity(4), kTol);
    CHECK(dec.d1 == d); // coordinate basis, so the compression is D itself
    CHECK(dec.d2.cols() == 0);
    CHECK(dec.d3.rows() == 0);
    CHECK(dec.d4.rows() == 0);
    CHECK(numerical_rank(dec.d2, kTol).rank == 0);
  }

  SUBCASE("diagonal operator, coordinate projection") {
    ComplexMatrix dd(2, 2);
    dd(0, 0) = cdouble(2.5, 0);
    dd(1, 1) = cdouble(-1, 1);
    ComplexMatrix p(2, 2);
    p(0, 0) = cdouble(1, 0);
    CornerDecomposition dec = decompose(dd, p, kTol);
    CHECK(dec.d2.rows() == 1);
    CHECK(dec.d2(0, 0) == cdouble(0, 0));
    CHECK(dec.d3(0, 0) == cdouble(0, 0));
    // a commuting projection kills both sides of the commutator identity
    CornerReport rep = corner_identity_check(dec, kTol);
    CHECK(rep.commutator_residual <= 1e-12 * frobenius_norm(dd) * frobenius_norm(dd));
  }

  SUBCASE("all-ones with diag projection has corner ranks (1,1)") {
    ComplexMatrix ones(2, 2);
    for (std::size_t i = 0; i < 4; ++i) ones.data()[i] = cdouble(1, 0);
    ComplexMatrix p(2, 2);
    p(0, 0) = cdouble(1, 0);
    CornerDecomposition dec = decompose(ones, p, kTol);
    CHECK(numerical_rank(dec.d2, kTol).rank == 1);
    CHECK(numerical_rank(dec.d3, kTol).rank == 1);
  }

  SUBCASE("reassembly returns D") {
    ComplexMatrix p = haar_random_projection(4, 2, 11);
    CornerDecomposition dec = decompose(d, p, kTol);
    const std::size_t n = 4;
    ComplexMatrix w(n, n);
    w.set_block(0, 0, dec.ranp_basis);
    w.set_block(0, dec.ranp_basis.cols(), dec.ranq_basis);
    ComplexMatrix blocks(n, n);
    blocks.set_block(0, 0, dec.d1);
    blocks.set_block(0, dec.d1.cols(), dec.d2);
    blocks.set_block(dec.d1.rows(), 0, dec.d3);
    blocks.set_block(dec.d1.rows(), dec.d1.cols(), dec.d4);
    CHECK(frobenius_norm(w * blocks * w.adjoint() - d) <= 1e-12 * frobenius_norm(d));
    // bases are isometries
    CHECK(frobenius_norm(adjoint_times(dec.ranp_basis, dec.ranp_basis) -
                         ComplexMatrix::identity(2)) <= 1e-12);
  }

  SUBCASE("non-projection rejected") {
    ComplexMatrix notp = seeded_hermitian(9, 4);
    CHECK_THROWS_WITH_AS(decompose(d, notp, kTol), doctest::Contains("NotAProjection"), Error);
  }
}

TEST_CASE("normality defect") {
  CHECK(normality_defect(seeded_hermitian(4, 5)) <= 1e-15);
  CHECK(normality_defect(haar_unitary(6, 2)) <= 1e-14);
  ComplexMatrix jordan(2, 2);
  jordan(0, 1) = cdouble(1, 0);
  CHECK(normality_defect(jordan) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("corner identity for normal operators") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    ComplexMatrix d = seeded_normal(seed, 6);
    const double dn = frobenius_norm(d);
    for (std::size_t r = 1; r <= 5; r += 2) {
      ComplexMatrix p = haar_random_projection(6, r, derive_seed(seed, r));
      CornerReport rep = corner_identity_check(decompose(d, p, kTol), kTol);
      CHECK(std::abs(rep.frob2 - rep.frob3) <= 1e-10 * dn);
      CHECK(rep.commutator_residual <= 1e-10 * dn * dn);
    }
  }
  // non-normal input must be refused
  SeededRng rng(19);
  ComplexMatrix g = rng.gaussian_matrix(4, 4);
  ComplexMatrix p = haar_random_projection(4, 2, 3);
  CHECK_THROWS_WITH_AS(corner_identity_check(decompose(g, p, kTol), kTol),
                       doctest::Contains("NotNormal"), Error);
}

TEST_CASE("cr_sample_test") {
  SUBCASE("hermitian: no violation in 200 trials") {
    ComplexMatrix h = seeded_hermitian(7, 4);
    CrSampleResult res = cr_sample_test(h, 200, 42, kTol);
    CHECK_FALSE(res.violation_found());
    CHECK(res.trials_run == 200);
  }
  SUBCASE("scalar: all corners vanish") {
    ComplexMatrix lam = cdouble(2.0, 1.0) * ComplexMatrix::identity(5);
    CrSampleResult res = cr_sample_test(lam, 60, 1, kTol);
    CHECK_FALSE(res.violation_found());
  }
  SUBCASE("gamma-construction output with its projection as trial zero") {
    auto cert = construct::build_m_one(construct::GammaSpec{3, 25.0}, kTol);
    REQUIRE(cert.certified());
    CrSampleResult res = cr_sample_test(cert.d, 10, 0, kTol, {cert.p});
    REQUIRE(res.violation_found());
    CHECK(res.witness->trial == 0);
    CHECK(res.witness->rank2.rank == 3);
    CHECK(res.witness->rank3.rank == 1);
  }
}

TEST_CASE("spectrum classification") {
  using offdiag::corners::SpectrumShape;
  CHECK(spectrum_line_circle_classify({cdouble(0, 0), cdouble(1, 0), cdouble(2, 0),
                                       cdouble(3, 1e-15)}) == SpectrumShape::Line);
  CHECK(spectrum_line_circle_classify({cdouble(1, 0), cdouble(0, 1), cdouble(-1, 0),
                                       cdouble(0, -1)}) == SpectrumShape::Circle);
  CHECK(spectrum_line_circle_classify({cdouble(5, 5)}) == SpectrumShape::Line);
  CHECK(spectrum_line_circle_classify({cdouble(5, 5), cdouble(5, 5)}) == SpectrumShape::Line);
  CHECK_THROWS_AS(spectrum_line_circle_classify({}), Error);

  // eigenvalues of the m=3 construction: j*gamma +/- i on a 2x3 grid
  std::vector<cdouble> grid;
  for (int j = 1; j <= 3; ++j) {
    grid.emplace_back(25.0 * j, 1.0);
    grid.emplace_back(25.0 * j, -1.0);
  }
  CHECK(spectrum_line_circle_classify(grid) == SpectrumShape::Neither);

  // affine invariance
  SeededRng rng(33);
  for (int rep = 0; rep < 5; ++rep) {
    const cdouble a = rng.complex_gaussian() + cdouble(3.0, 0.0);
    const cdouble b = rng.complex_gaussian();
    auto map = [&](std::vector<cdouble> pts) {
      for (auto& z : pts) z = a * z + b;
      return pts;
    };
    std::vector<cdouble> line = {cdouble(0, 0), cdouble(1, 1), cdouble(2, 2), cdouble(-3, -3)};
    std::vector<cdouble> circle = {cdouble(1, 0), cdouble(0, 1), cdouble(-1, 0), cdouble(0, -1),
                                   cdouble(std::sqrt(0.5), std::sqrt(0.5))};
    CHECK(spectrum_line_circle_classify(map(line)) == SpectrumShape::Line);
    CHECK(spectrum_line_circle_classify(map(circle)) == SpectrumShape::Circle);
    CHECK(spectrum_line_circle_classify(map(grid)) == SpectrumShape::Neither);
  }
}

TEST_CASE("rank_distance is a certified metric") {
  ComplexMatrix a = seeded_normal(21, 5);
  CHECK(rank_distance(a, a, kTol).rank == 0);

  SeededRng rng(22);
  ComplexMatrix u = rng.gaussian_matrix(5, 1);
  ComplexMatrix v = rng.gaussian_matrix(5, 1);
  CHECK(rank_distance(a, a + u * v.adjoint(), kTol).rank == 1);

  for (std::uint64_t seed : {30u, 31u}) {
    ComplexMatrix x = seeded_hermitian(seed, 6);
    ComplexMatrix y = seeded_hermitian(seed + 50, 6);
    ComplexMatrix z = seeded_hermitian(seed + 90, 6);
    const auto dxy = rank_distance(x, y, kTol);
    const auto dyx = rank_distance(y, x, kTol);
    const auto dyz = rank_distance(y, z, kTol);
    const auto dxz = rank_distance(x, z, kTol);
    CHECK(dxy.rank == dyx.rank);
    CHECK(dxz.rank <= dxy.rank + dyz.rank);
  }
  CHECK_THROWS_AS(rank_distance(a, ComplexMatrix(4, 4), kTol), Error);
}

TEST_CASE("distance to the common-rank class") {
  auto cert = construct::build_m_one(construct::GammaSpec{3, 25.0}, kTol);
  REQUIRE(cert.certified());
  const std::size_t m = 3;

  ComplexMatrix herm = cdouble(0.5, 0.0) * (cert.d + cert.d.adjoint());
  ComplexMatrix zero(2 * m, 2 * m);
  DistanceBoundReport rep = cr_distance_bound_check(cert.d, cert.p, {herm, zero}, kTol);
  CHECK(rep.bound == (m - 1) / 2);
  CHECK(rep.entries[0].margin >= 0);
  CHECK(rep.entries[1].distance.rank == 2 * m); // D - 0 is full rank here
  CHECK(rep.all_met());

  // a comparator with spectrum off line/circle is refused
  CHECK_THROWS_WITH_AS(cr_distance_bound_check(cert.d, cert.p, {cert.d}, kTol),
                       doctest::Contains("InvalidComparator"), Error);
}
