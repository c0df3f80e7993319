#include "offdiag/kernels/kernels.hpp"

namespace offdiag::kernels::detail {

// Reference kernels. Kept branch-free and in the same accumulation order the
// vectorized variants use (k-major for matmul) so results stay comparable.

void matmul_scalar(const cdouble* a, const cdouble* b, cdouble* c,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = cdouble(0.0, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const cdouble* arow = a + i * k;
    cdouble* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const cdouble aip = arow[p];
      if (aip == cdouble(0.0, 0.0)) continue;
      const cdouble* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double br = brow[j].real(), bi = brow[j].imag();
        const double ar = aip.real(), ai = aip.imag();
        crow[j] += cdouble(ar * br - ai * bi, ar * bi + ai * br);
      }
    }
  }
}

void hadamard_scalar(const cdouble* x, const cdouble* y, cdouble* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    out[i] = cdouble(xr * yr - xi * yi, xr * yi + xi * yr);
  }
}

double norm_sq_scalar(const cdouble* x, std::size_t count) {
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    sum += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return sum;
}

cdouble dot_conj_scalar(const cdouble* x, const cdouble* y, std::size_t count) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return cdouble(re, im);
}

void rot2_scalar(cdouble* x, cdouble* y, std::size_t count, double c, cdouble s) {
  const double sr = s.real(), si = s.imag();
  for (std::size_t i = 0; i < count; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    // conj(s)*y and s*x expanded to match the fused vector variant.
    x[i] = cdouble(c * xr + sr * yr + si * yi, c * xi + sr * yi - si * yr);
    y[i] = cdouble(c * yr - (sr * xr - si * xi), c * yi - (sr * xi + si * xr));
  }
}

} // namespace offdiag::kernels::detail
