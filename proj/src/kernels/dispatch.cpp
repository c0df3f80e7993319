#include "offdiag/kernels/kernels.hpp"

#include "offdiag/error.hpp"

namespace offdiag::kernels {

namespace {

Backend detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::Avx2;
#endif
  return Backend::Scalar;
}

Backend g_backend = detect();

} // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return g_backend; }

void force_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_available())
    fail(ErrorKind::InvalidInput, "AVX2 backend requested but not supported by this CPU");
  g_backend = backend;
}

void reset_backend() { g_backend = detect(); }

std::string_view backend_name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

void matmul(const cdouble* a, const cdouble* b, cdouble* c,
            std::size_t m, std::size_t k, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_backend == Backend::Avx2) return detail::matmul_avx2(a, b, c, m, k, n);
#endif
  detail::matmul_scalar(a, b, c, m, k, n);
}

void hadamard(const cdouble* x, const cdouble* y, cdouble* out, std::size_t count) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_backend == Backend::Avx2) return detail::hadamard_avx2(x, y, out, count);
#endif
  detail::hadamard_scalar(x, y, out, count);
}

double norm_sq(const cdouble* x, std::size_t count) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_backend == Backend::Avx2) return detail::norm_sq_avx2(x, count);
#endif
  return detail::norm_sq_scalar(x, count);
}

cdouble dot_conj(const cdouble* x, const cdouble* y, std::size_t count) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_backend == Backend::Avx2) return detail::dot_conj_avx2(x, y, count);
#endif
  return detail::dot_conj_scalar(x, y, count);
}

void rot2(cdouble* x, cdouble* y, std::size_t count, double c, cdouble s) {
#if defined(__x86_64__) || defined(_M_X64)
  if (g_backend == Backend::Avx2) return detail::rot2_avx2(x, y, count, c, s);
#endif
  detail::rot2_scalar(x, y, count, c, s);
}

} // namespace offdiag::kernels
