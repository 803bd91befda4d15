#include "qinf/kernels.hpp"

namespace qinf::kernels {

namespace detail {

void pair_site_products_scalar(const double* vp, const double* vq,
                               const std::int32_t* s, const std::int32_t* t,
                               const double* w, double* out, int n) {
  for (int e = 0; e < n; ++e) {
    const int si = s[e], ti = t[e];
    out[e] = w[e] * (vq[si] * vp[ti] + vq[ti] * vp[si]);
  }
}

double dot_scalar(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace detail

namespace {

Backend pick_default() {
#ifdef QINF_BUILD_AVX2
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Backend::Avx2;
#endif
  return Backend::Scalar;
}

Backend g_backend = pick_default();

}  // namespace

Backend active_backend() { return g_backend; }

bool avx2_supported() {
#ifdef QINF_BUILD_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

void force_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_supported()) return;
  g_backend = b;
}

std::string backend_name() {
  return g_backend == Backend::Avx2 ? "avx2" : "scalar";
}

void pair_site_products(const double* vp, const double* vq,
                        const std::int32_t* s, const std::int32_t* t,
                        const double* w, double* out, int n) {
#ifdef QINF_BUILD_AVX2
  if (g_backend == Backend::Avx2) {
    detail::pair_site_products_avx2(vp, vq, s, t, w, out, n);
    return;
  }
#endif
  detail::pair_site_products_scalar(vp, vq, s, t, w, out, n);
}

double dot(const double* a, const double* b, int n) {
#ifdef QINF_BUILD_AVX2
  if (g_backend == Backend::Avx2) return detail::dot_avx2(a, b, n);
#endif
  return detail::dot_scalar(a, b, n);
}

void axpy(double alpha, const double* x, double* y, int n) {
#ifdef QINF_BUILD_AVX2
  if (g_backend == Backend::Avx2) {
    detail::axpy_avx2(alpha, x, y, n);
    return;
  }
#endif
  detail::axpy_scalar(alpha, x, y, n);
}

}  // namespace qinf::kernels
