#include <immintrin.h>

#include "qinf/kernels.hpp"

namespace qinf::kernels::detail {

void pair_site_products_avx2(const double* vp, const double* vq,
                             const std::int32_t* s, const std::int32_t* t,
                             const double* w, double* out, int n) {
  int e = 0;
  for (; e + 4 <= n; e += 4) {
    const __m128i si = _mm_loadu_si128(reinterpret_cast<const __m128i*>(s + e));
    const __m128i ti = _mm_loadu_si128(reinterpret_cast<const __m128i*>(t + e));
    const __m256d qs = _mm256_i32gather_pd(vq, si, 8);
    const __m256d pt = _mm256_i32gather_pd(vp, ti, 8);
    const __m256d qt = _mm256_i32gather_pd(vq, ti, 8);
    const __m256d ps = _mm256_i32gather_pd(vp, si, 8);
    const __m256d sum = _mm256_fmadd_pd(qs, pt, _mm256_mul_pd(qt, ps));
    const __m256d we = _mm256_loadu_pd(w + e);
    _mm256_storeu_pd(out + e, _mm256_mul_pd(we, sum));
  }
  for (; e < n; ++e) {
    const int si = s[e], ti = t[e];
    out[e] = w[e] * (vq[si] * vp[ti] + vq[ti] * vp[si]);
  }
}

double dot_avx2(const double* a, const double* b, int n) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, acc);
  double r = tmp[0] + tmp[1] + tmp[2] + tmp[3];
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

void axpy_avx2(double alpha, const double* x, double* y, int n) {
  const __m256d av = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yi = _mm256_loadu_pd(y + i);
    yi = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yi);
    _mm256_storeu_pd(y + i, yi);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace qinf::kernels::detail
