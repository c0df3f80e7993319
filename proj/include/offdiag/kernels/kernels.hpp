#pragma once

#include <complex>
#include <cstddef>
#include <string_view>

// Data-parallel inner loops behind the matrix layer. Every kernel has a
// scalar reference implementation and (on x86-64 with AVX2+FMA) a vectorized
// variant; the active set is chosen once at runtime from CPUID and can be
// overridden for equivalence testing.

namespace offdiag::kernels {

using cdouble = std::complex<double>;

enum class Backend { Scalar, Avx2 };

/// Backend currently in use (auto-detected on first call).
Backend active_backend();

/// Force a specific backend; throws if it is not available on this CPU.
void force_backend(Backend backend);

/// Reset to auto-detection.
void reset_backend();

bool avx2_available();

std::string_view backend_name(Backend backend);

/// c[mxn] = a[mxk] * b[kxn], row-major dense, c must not alias a or b.
void matmul(const cdouble* a, const cdouble* b, cdouble* c,
            std::size_t m, std::size_t k, std::size_t n);

/// out[i] = x[i] * y[i].
void hadamard(const cdouble* x, const cdouble* y, cdouble* out, std::size_t count);

/// sum_i |x[i]|^2.
double norm_sq(const cdouble* x, std::size_t count);

/// sum_i conj(x[i]) * y[i].
cdouble dot_conj(const cdouble* x, const cdouble* y, std::size_t count);

/// Plane rotation of two vectors in place, c real:
///   x' = c*x + conj(s)*y,  y' = -s*x + c*y.
void rot2(cdouble* x, cdouble* y, std::size_t count, double c, cdouble s);

namespace detail {
void matmul_scalar(const cdouble*, const cdouble*, cdouble*, std::size_t, std::size_t, std::size_t);
void hadamard_scalar(const cdouble*, const cdouble*, cdouble*, std::size_t);
double norm_sq_scalar(const cdouble*, std::size_t);
cdouble dot_conj_scalar(const cdouble*, const cdouble*, std::size_t);
void rot2_scalar(cdouble*, cdouble*, std::size_t, double, cdouble);

#if defined(__x86_64__) || defined(_M_X64)
void matmul_avx2(const cdouble*, const cdouble*, cdouble*, std::size_t, std::size_t, std::size_t);
void hadamard_avx2(const cdouble*, const cdouble*, cdouble*, std::size_t);
double norm_sq_avx2(const cdouble*, std::size_t);
cdouble dot_conj_avx2(const cdouble*, const cdouble*, std::size_t);
void rot2_avx2(cdouble*, cdouble*, std::size_t, double, cdouble);
#endif
} // namespace detail

} // namespace offdiag::kernels
