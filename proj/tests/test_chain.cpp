#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "offdiag/chain.hpp"
#include "offdiag/construct.hpp"
#include "offdiag/corners.hpp"
#include "offdiag/rng.hpp"

using namespace offdiag;
using namespace offdiag::chain;

namespace {

const ToleranceProfile kTol{};

ComplexMatrix ranp_basis_of(const ComplexMatrix& d, const ComplexMatrix& p) {
  return corners::decompose(d, p, kTol).ranp_basis;
}

} // namespace

TEST_CASE("shift_to_invertible") {
  {
    auto [shifted, lambda] = shift_to_invertible(ComplexMatrix(3, 3));
    CHECK(lambda == cdouble(1.0, 0.0));
    CHECK(frobenius_norm(shifted - ComplexMatrix::identity(3)) == 0.0);
  }
  SeededRng rng(3);
  ComplexMatrix d = rng.gaussian_matrix(5, 5);
  auto [shifted, lambda] = shift_to_invertible(d);
  Svd svd = jacobi_svd(shifted);
  CHECK(svd.sigma.back() >= 1.0 - 1e-12);
  (void)lambda;
}

TEST_CASE("chain on the identity stabilizes") {
  ComplexMatrix v0(4, 2);
  v0(0, 0) = cdouble(1, 0);
  v0(1, 1) = cdouble(1, 0);
  SubspaceChain chain = build_chain(ComplexMatrix::identity(4), v0, 3, 2, kTol);
  for (std::size_t dim : chain.dims) CHECK(dim == 2);
}

TEST_CASE("chain of the gamma construction is a strict ladder") {
  auto cert = construct::build_m_one(construct::GammaSpec{3, 25.0}, kTol);
  REQUIRE(cert.certified());
  const std::size_t m = 3;
  ComplexMatrix v0 = ranp_basis_of(cert.d, cert.p);

  SubspaceChain chain = build_chain(cert.d, v0, m, m, kTol);
  REQUIRE(chain.dims.size() == 2 * m + 1);
  for (std::size_t i = 0; i < chain.dims.size(); ++i) CHECK(chain.dims[i] == i);

  // dim(V0 v D V0) = m + 1 and dim(V0 ∩ D^{-1} V0) = m - 1
  CHECK(chain.basis_at(1).cols() == m + 1);
  CHECK(chain.basis_at(-1).cols() == m - 1);

  // nestedness
  for (int k = chain.lowest_index; k < chain.highest_index(); ++k) {
    const ComplexMatrix& small = chain.basis_at(k);
    const ComplexMatrix& big = chain.basis_at(k + 1);
    if (small.cols() == 0) continue;
    ComplexMatrix resid = small - big * adjoint_times(big, small);
    CHECK(operator_norm(resid) <= 1e-10);
  }

  // the chain is insensitive to adding a multiple of the identity
  auto [shifted, lambda] = shift_to_invertible(cert.d);
  SubspaceChain chain2 = build_chain(shifted, v0, m, m, kTol);
  CHECK(chain2.dims == chain.dims);
  (void)lambda;

  // forward shifting holds by construction
  for (double r : verify_shifts_forward(cert.d, chain))
    CHECK(r <= 1e-10 * (1.0 + operator_norm(cert.d)));

  // cyclic vector
  CyclicityReport rep = extract_cyclic_vector(cert.d, chain, kTol);
  CHECK(rep.krylov_rank.rank == 2 * m);
  CHECK(rep.krylov_rank.certified());
  CHECK(rep.distinct);
  CHECK(rep.span_checked);
  CHECK(rep.max_span_residual <= 1e-8);
}

TEST_CASE("identity operator yields no cyclic witness") {
  ComplexMatrix v0(3, 1);
  v0(0, 0) = cdouble(1, 0);
  SubspaceChain chain = build_chain(ComplexMatrix::identity(3), v0, 2, 1, kTol);
  CHECK_THROWS_WITH_AS(extract_cyclic_vector(ComplexMatrix::identity(3), chain, kTol),
                       doctest::Contains("NotCyclicWitness"), Error);
}

TEST_CASE("distinct eigenvalues") {
  auto cert = construct::build_m_one(construct::GammaSpec{3, 25.0}, kTol);
  DistinctnessReport rep = distinct_eigenvalue_check(cert.d, kTol);
  CHECK(rep.distinct);
  CHECK(rep.min_gap == doctest::Approx(2.0).epsilon(1e-9));

  std::vector<cdouble> lam = {cdouble(1, 0), cdouble(1, 0), cdouble(2, 0)};
  DistinctnessReport dup = distinct_eigenvalue_check(ComplexMatrix::diagonal(lam), kTol);
  CHECK_FALSE(dup.distinct);
  CHECK(dup.min_gap <= 1e-12);
}

TEST_CASE("flag chain of the truncated shift is shifted forward") {
  // U e_n = e_{n-1} on basis indices -T..T; M_j = span{e_n : n <= j}
  const int T = 6;
  const std::size_t n = 2 * T + 1;
  ComplexMatrix u(n, n);
  for (std::size_t col = 1; col < n; ++col) u(col - 1, col) = cdouble(1, 0);

  SubspaceChain flags;
  flags.lowest_index = -3;
  for (int j = -3; j <= 3; ++j) {
    const std::size_t dim = static_cast<std::size_t>(j + T) + 1;
    ComplexMatrix b(n, dim);
    for (std::size_t c = 0; c < dim; ++c) b(c, c) = cdouble(1, 0);
    flags.bases.push_back(b);
    flags.dims.push_back(dim);
  }
  for (double r : verify_shifts_forward(u, flags)) CHECK(r == 0.0);
  for (double r : verify_shifts_forward(ComplexMatrix::identity(n), flags)) CHECK(r == 0.0);
}
