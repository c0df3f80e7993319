#if defined(__x86_64__) || defined(_M_X64)

#include "offdiag/kernels/kernels.hpp"

#include <immintrin.h>

namespace offdiag::kernels::detail {

// One __m256d holds two complex doubles as [re0, im0, re1, im1].

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// (ar+i*ai)*(br+i*bi) for two packed pairs; no FMA so this matches the
// scalar reference bit for bit.
inline __m256d cmul(__m256d a, __m256d b) {
  __m256d a_re = _mm256_movedup_pd(a);
  __m256d a_im = _mm256_permute_pd(a, 0xF);
  __m256d b_swap = _mm256_permute_pd(b, 0x5);
  return _mm256_addsub_pd(_mm256_mul_pd(a_re, b), _mm256_mul_pd(a_im, b_swap));
}

} // namespace

void matmul_avx2(const cdouble* a, const cdouble* b, cdouble* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = cdouble(0.0, 0.0);
  const std::size_t n2 = n & ~std::size_t(1);
  for (std::size_t i = 0; i < m; ++i) {
    const cdouble* arow = a + i * k;
    double* crow = reinterpret_cast<double*>(c + i * n);
    for (std::size_t p = 0; p < k; ++p) {
      const double ar = arow[p].real(), ai = arow[p].imag();
      if (ar == 0.0 && ai == 0.0) continue;
      const double* brow = reinterpret_cast<const double*>(b + p * n);
      const __m256d a_re = _mm256_set1_pd(ar);
      const __m256d a_im = _mm256_set1_pd(ai);
      std::size_t j = 0;
      for (; j < n2; j += 2) {
        __m256d bv = _mm256_loadu_pd(brow + 2 * j);
        __m256d b_swap = _mm256_permute_pd(bv, 0x5);
        __m256d prod = _mm256_fmaddsub_pd(a_re, bv, _mm256_mul_pd(a_im, b_swap));
        __m256d cv = _mm256_loadu_pd(crow + 2 * j);
        _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, prod));
      }
      if (j < n) {
        const cdouble aip(ar, ai);
        const cdouble* btail = b + p * n + j;
        cdouble* ctail = c + i * n + j;
        const double br = btail->real(), bi = btail->imag();
        *ctail += cdouble(ar * br - ai * bi, ar * bi + ai * br);
        (void)aip;
      }
    }
  }
}

void hadamard_avx2(const cdouble* x, const cdouble* y, cdouble* out, std::size_t count) {
  const double* xp = reinterpret_cast<const double*>(x);
  const double* yp = reinterpret_cast<const double*>(y);
  double* op = reinterpret_cast<double*>(out);
  const std::size_t c2 = count & ~std::size_t(1);
  std::size_t i = 0;
  for (; i < c2; i += 2)
    _mm256_storeu_pd(op + 2 * i, cmul(_mm256_loadu_pd(xp + 2 * i), _mm256_loadu_pd(yp + 2 * i)));
  for (; i < count; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    out[i] = cdouble(xr * yr - xi * yi, xr * yi + xi * yr);
  }
}

double norm_sq_avx2(const cdouble* x, std::size_t count) {
  const double* xp = reinterpret_cast<const double*>(x);
  const std::size_t c2 = count & ~std::size_t(1);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i < c2; i += 2) {
    __m256d v = _mm256_loadu_pd(xp + 2 * i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double sum = hsum(acc);
  for (; i < count; ++i)
    sum += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  return sum;
}

cdouble dot_conj_avx2(const cdouble* x, const cdouble* y, std::size_t count) {
  const double* xp = reinterpret_cast<const double*>(x);
  const double* yp = reinterpret_cast<const double*>(y);
  const std::size_t c2 = count & ~std::size_t(1);
  const __m256d neg_even = _mm256_set_pd(0.0, -0.0, 0.0, -0.0);
  __m256d acc_re = _mm256_setzero_pd();
  __m256d acc_im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i < c2; i += 2) {
    __m256d xv = _mm256_loadu_pd(xp + 2 * i);
    __m256d yv = _mm256_loadu_pd(yp + 2 * i);
    acc_re = _mm256_fmadd_pd(xv, yv, acc_re);
    // im lanes: [-xi*yr, xr*yi] per pair, summed below.
    __m256d x_swap = _mm256_permute_pd(xv, 0x5);
    __m256d y_alt = _mm256_xor_pd(yv, neg_even);
    acc_im = _mm256_fmadd_pd(x_swap, y_alt, acc_im);
  }
  double re = hsum(acc_re);
  double im = hsum(acc_im);
  for (; i < count; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    re += xr * yr + xi * yi;
    im += xr * yi - xi * yr;
  }
  return cdouble(re, im);
}

void rot2_avx2(cdouble* x, cdouble* y, std::size_t count, double c, cdouble s) {
  double* xp = reinterpret_cast<double*>(x);
  double* yp = reinterpret_cast<double*>(y);
  const double sr = s.real(), si = s.imag();
  const __m256d c_v = _mm256_set1_pd(c);
  const __m256d sr_v = _mm256_set1_pd(sr);
  const __m256d si_v = _mm256_set1_pd(si);
  const __m256d neg_even = _mm256_set_pd(0.0, -0.0, 0.0, -0.0);
  const __m256d neg_odd = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
  const std::size_t c2 = count & ~std::size_t(1);
  std::size_t i = 0;
  for (; i < c2; i += 2) {
    __m256d xv = _mm256_loadu_pd(xp + 2 * i);
    __m256d yv = _mm256_loadu_pd(yp + 2 * i);
    __m256d x_swap = _mm256_permute_pd(xv, 0x5);
    __m256d y_swap = _mm256_permute_pd(yv, 0x5);
    // conj(s)*y: even sr*yr + si*yi, odd sr*yi - si*yr
    __m256d t = _mm256_fmadd_pd(si_v, _mm256_xor_pd(y_swap, neg_odd), _mm256_mul_pd(sr_v, yv));
    // s*x: even sr*xr - si*xi, odd sr*xi + si*xr
    __m256d u = _mm256_fmadd_pd(si_v, _mm256_xor_pd(x_swap, neg_even), _mm256_mul_pd(sr_v, xv));
    _mm256_storeu_pd(xp + 2 * i, _mm256_fmadd_pd(c_v, xv, t));
    _mm256_storeu_pd(yp + 2 * i, _mm256_fmsub_pd(c_v, yv, u));
  }
  for (; i < count; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    x[i] = cdouble(c * xr + sr * yr + si * yi, c * xi + sr * yi - si * yr);
    y[i] = cdouble(c * yr - (sr * xr - si * xi), c * yi - (sr * xi + si * xr));
  }
}

} // namespace offdiag::kernels::detail

#endif
