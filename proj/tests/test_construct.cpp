#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "offdiag/construct.hpp"
#include "offdiag/rng.hpp"

using namespace offdiag;
using namespace offdiag::construct;

namespace {
const ToleranceProfile kTol{};
}

TEST_CASE("alpha/beta weights") {
  auto [a1, b1] = build_alpha_beta(GammaSpec{1, 9.0});
  CHECK(a1[0] == cdouble(9.0, 1.0));
  CHECK(b1[0] == cdouble(9.0, -1.0));

  auto [a3, b3] = build_alpha_beta(GammaSpec{3, 25.0});
  CHECK(a3[1] == cdouble(50.0, 1.0));
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::conj(a3[j]) == b3[j]);
}

TEST_CASE("Z matrix") {
  auto [a, b] = build_alpha_beta(GammaSpec{3, 25.0});
  ComplexMatrix z = build_z(a, b);
  for (std::size_t j = 0; j < 3; ++j) CHECK(z(j, j) == cdouble(0.0, 2.0));
  CHECK(z(0, 1) == cdouble(-25.0, 2.0));

  auto [a2, b2] = build_alpha_beta(GammaSpec{2, 17.0});
  CHECK(build_z(a2, b2)(0, 1) == cdouble(-17.0, 2.0));

  std::vector<cdouble> real_pts = {cdouble(1, 0), cdouble(2, 0)};
  ComplexMatrix zr = build_z(real_pts, real_pts);
  CHECK(zr(0, 0) == cdouble(0, 0));
  CHECK(zr(1, 1) == cdouble(0, 0));

  CHECK_THROWS_AS(build_z(a, b2), Error);
}

TEST_CASE("S matrix") {
  ComplexMatrix s = build_s(GammaSpec{3, 25.0});
  for (std::size_t j = 0; j < 3; ++j) CHECK(s(j, j) == cdouble(1.0, 0.0));
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::conj(s(k, j)) == s(j, k));
  CHECK(operator_norm(s - ComplexMatrix::identity(3)) < 0.25);
  HermitianEig eig = hermitian_eig(s, kTol);
  CHECK(eig.values.front() > 0.0);
  // with ||S - I|| < 1/4 the spectrum sits in (3/4, 5/4)
  CHECK(eig.values.front() > 0.75);
  CHECK(eig.values.back() < 1.25);
}

TEST_CASE("rank hypotheses on the gamma data") {
  GammaSpec spec{3, 25.0};
  auto [a, b] = build_alpha_beta(spec);
  ComplexMatrix s = build_s(spec);
  ComplexMatrix z = build_z(a, b);

  ComplexMatrix sz = hadamard(s, z);
  for (std::size_t i = 0; i < sz.size(); ++i)
    CHECK(std::abs(sz.data()[i] - cdouble(0.0, 2.0)) <= 1e-13);

  RankHypotheses hyp = verify_rank_hypotheses(s, z, kTol);
  CHECK(hyp.rank_sz.rank == 1);
  CHECK(hyp.rank_stz.rank == 3);
  CHECK(hyp.positive_definite);

  // entries of (1/2i)(S^t o Z) are unimodular and Toeplitz and hermitian
  ComplexMatrix t = cdouble(0.0, -0.5) * hadamard(s.transpose(), z);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(std::abs(t(j, k)) - 1.0) <= 1e-13);
      if (j + 1 < 3 && k + 1 < 3) CHECK(std::abs(t(j, k) - t(j + 1, k + 1)) <= 1e-13);
      CHECK(std::abs(std::conj(t(k, j)) - t(j, k)) <= 1e-13);
    }
}

TEST_CASE("Toeplitz invertibility certificate") {
  ToeplitzCertificate c3 = toeplitz_invertibility_cert(GammaSpec{3, 25.0});
  CHECK(c3.margin > 0.0);
  CHECK(c3.that_inv_norm == doctest::Approx(1.0));
  CHECK(c3.chain_bounds_hold);

  ToeplitzCertificate c4 = toeplitz_invertibility_cert(GammaSpec::with_default_gamma(4));
  CHECK(c4.that_inv_norm == doctest::Approx(0.5));
  CHECK(c4.margin > 0.0);

  CHECK_THROWS_WITH_AS(toeplitz_invertibility_cert(GammaSpec{2, 17.0}),
                       doctest::Contains("OutOfScope"), Error);

  // small gamma: the analytic route may fail, direct rank still certifies
  ToeplitzCertificate weak = toeplitz_invertibility_cert(GammaSpec{3, 10.0});
  ConstructionCertificate cert = build_m_one(GammaSpec{3, 10.0}, kTol);
  CHECK(cert.certified());
  CHECK(cert.rank2.rank == 3);
  CHECK(cert.rank3.rank == 1);
  (void)weak; // margin sign at gamma=10 is data, not a requirement
}

TEST_CASE("mn-pair assembly") {
  GammaSpec spec{3, 25.0};
  auto [a, b] = build_alpha_beta(spec);
  ComplexMatrix s = build_s(spec);
  MnAssembly asmb = assemble_mn_pair(a, b, s, kTol);
  CHECK(asmb.rank2.rank == 3);
  CHECK(asmb.rank3.rank == 1);
  CHECK(asmb.trace_p_error <= 1e-10);
  CHECK(frobenius_norm(asmb.p * asmb.p - asmb.p) <= 1e-12);

  // A S - S B equals S o Z entrywise (diagonal scaling identity)
  ComplexMatrix as_sb(3, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) as_sb(j, k) = a[j] * s(j, k) - s(j, k) * b[k];
  ComplexMatrix sz = hadamard(s, build_z(a, b));
  CHECK(frobenius_norm(as_sb - sz) <= 1e-13 * frobenius_norm(sz));
  CHECK(numerical_rank(as_sb, kTol).rank == numerical_rank(sz, kTol).rank);

  // dual route: decompose(D, P) must agree with the isometry-compression ranks
  corners::CornerDecomposition dec = corners::decompose(asmb.d, asmb.p, kTol);
  CHECK(numerical_rank(dec.d2, kTol).rank == 3);
  CHECK(numerical_rank(dec.d3, kTol).rank == 1);
}

TEST_CASE("(m,1) builder") {
  SUBCASE("m = 1") {
    ConstructionCertificate cert = build_m_one(GammaSpec{1, 9.0}, kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == 1);
    CHECK(cert.rank3.rank == 1);
    CHECK(cert.d(0, 1) == cdouble(1.0, 0.0));
    CHECK_FALSE(cert.s_pd_min_eig.has_value());
  }
  SUBCASE("m = 3, gamma = 25") {
    ConstructionCertificate cert = build_m_one(GammaSpec{3, 25.0}, kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == 3);
    CHECK(cert.rank3.rank == 1);
    CHECK(cert.normality_defect <= 1e-13);
    CHECK(cert.rank2.gap_ratio >= 1e6);
    CHECK(cert.rank3.gap_ratio >= 1e6);
  }
  SUBCASE("m = 10, default gamma = 81") {
    ConstructionCertificate cert = build_m_one(GammaSpec::with_default_gamma(10), kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == 10);
    CHECK(cert.rank3.rank == 1);
  }
  SUBCASE("eigenvalues are the j*gamma +/- i grid") {
    ConstructionCertificate cert = build_m_one(GammaSpec{4, 33.0}, kTol);
    auto eigs = general_eigenvalues(cert.d);
    for (std::size_t j = 1; j <= 4; ++j) {
      for (double sgn : {1.0, -1.0}) {
        const cdouble expect(33.0 * static_cast<double>(j), sgn);
        double best = 1e300;
        for (const auto& e : eigs) best = std::min(best, std::abs(e - expect));
        CHECK(best <= 1e-10);
      }
    }
  }
}

TEST_CASE("m = 2 randomized witness") {
  CHECK_THROWS_WITH_AS(search_m2(7, 1, kTol), doctest::Contains("SearchExhausted"), Error);

  ConstructionCertificate cert = search_m2(7, 100000, kTol);
  CHECK(cert.certified());
  CHECK(cert.rank2.rank == 2);
  CHECK(cert.rank3.rank == 1);
  CHECK(cert.normality_defect <= 1e-12);
  CHECK(corners::spectrum_line_circle_classify(general_eigenvalues(cert.d)) ==
        corners::SpectrumShape::Neither);
  // frobenius corner identity holds despite the rank gap
  corners::CornerDecomposition dec = corners::decompose(cert.d, cert.p, kTol);
  CHECK(std::abs(frobenius_norm(dec.d2) - frobenius_norm(dec.d3)) <=
        1e-10 * frobenius_norm(cert.d));
  MESSAGE("search evals: ", cert.search_evals);
}

TEST_CASE("general rank composer") {
  SUBCASE("n=4 j=1 k=2 via the m=2 witness") {
    ConstructionCertificate cert = compose_ranks(TargetRanks{4, 1, 2}, kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == 2);
    CHECK(cert.rank3.rank == 1);
  }
  SUBCASE("n=9 j=2 k=4") {
    ConstructionCertificate cert = compose_ranks(TargetRanks{9, 2, 4}, kTol);
    CHECK(cert.certified());
    CHECK(cert.d.rows() == 9);
    CHECK(cert.rank2.rank == 4);
    CHECK(cert.rank3.rank == 2);
    CHECK(cert.normality_defect <= 1e-13);
    // rank P = (n-2k) + (j-1) + m
    RankResult pr = numerical_rank(cert.p, kTol);
    CHECK(pr.rank == (9 - 8) + 1 + 3);
  }
  SUBCASE("square target n=6 j=k=3") {
    ConstructionCertificate cert = compose_ranks(TargetRanks{6, 3, 3}, kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == 3);
    CHECK(cert.rank3.rank == 3);
  }
  SUBCASE("swapped target j > k") {
    ConstructionCertificate cert = compose_ranks(TargetRanks{9, 4, 2}, kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == 2);
    CHECK(cert.rank3.rank == 4);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_WITH_AS(compose_ranks(TargetRanks{4, 0, 1}, kTol),
                         doctest::Contains("orthogonally reductive"), Error);
    CHECK_THROWS_AS(compose_ranks(TargetRanks{4, 1, 3}, kTol), Error);
    CHECK_THROWS_AS(compose_ranks(TargetRanks{1, 1, 1}, kTol), Error);
  }
}

TEST_CASE("perturbation robustness") {
  ConstructionCertificate base = build_m_one(GammaSpec{3, 25.0}, kTol);

  SUBCASE("epsilon = 0 reproduces the build bit for bit") {
    ConstructionCertificate same = perturb_and_rebuild(base, 0.0, 1, kTol);
    REQUIRE(same.d.rows() == base.d.rows());
    CHECK(same.d == base.d);
    CHECK(same.p == base.p);
    CHECK(same.rank2.rank == base.rank2.rank);
  }
  SUBCASE("small perturbation stays certified") {
    ConstructionCertificate pert = perturb_and_rebuild(base, 1e-3 * 25.0, 1, kTol);
    CHECK(pert.certified());
    CHECK(pert.rank2.rank == 3);
    CHECK(pert.rank3.rank == 1);
    // S0 remains hermitian for real perturbations: check via its corners
    CHECK(pert.normality_defect <= 1e-13);
  }
  SUBCASE("a perturbation that collides two weights is refused") {
    // S0 stays positive definite whenever the perturbed weights are distinct
    // (Cauchy-Gram structure), so the failure mode is a collision; build an
    // epsilon that collides a pair exactly for this seed's documented draws.
    const std::uint64_t seed = 1;
    SeededRng rng(derive_seed(seed, 0xA1FA));
    double u[3];
    for (auto& x : u) x = rng.uniform(-1.0, 1.0);
    double eps = -1.0;
    for (std::size_t j = 0; j < 3 && eps <= 0.0; ++j)
      for (std::size_t k = j + 1; k < 3; ++k) {
        const double cand = 25.0 * static_cast<double>(k - j) / (u[j] - u[k]);
        if (cand > 0.0 && (eps <= 0.0 || cand < eps)) eps = cand;
      }
    REQUIRE(eps > 0.0);
    CHECK_THROWS_WITH_AS(perturb_and_rebuild(base, eps, seed, kTol),
                         doctest::Contains("PerturbationTooLarge"), Error);
  }
  SUBCASE("m < 3 certificates cannot be perturbed") {
    ConstructionCertificate m1 = build_m_one(GammaSpec{1, 9.0}, kTol);
    CHECK_THROWS_AS(perturb_and_rebuild(m1, 0.1, 0, kTol), Error);
  }
}

TEST_CASE("m sweep stays certified with tight gaps") {
  for (std::size_t m : {1ul, 2ul, 3ul, 5ul, 8ul}) {
    ConstructionCertificate cert = build_m_one(GammaSpec::with_default_gamma(m), kTol);
    CHECK(cert.certified());
    CHECK(cert.rank2.rank == m);
    CHECK(cert.rank3.rank == 1);
    CHECK(cert.normality_defect <= 1e-12);
    CHECK(cert.rank2.gap_ratio >= 1e6);
    CHECK(cert.rank3.gap_ratio >= 1e6);
  }
}
