#pragma once

#include <cstdint>
#include <string>

// Data-parallel inner loops of the SDP solver. Each kernel has a scalar
// reference implementation and, on x86-64 with AVX2, a vectorized variant.
// The active backend is chosen once at startup from CPUID; qinf_force_backend
// overrides it (used by the equivalence tests).

namespace qinf::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void force_backend(Backend b);     // Scalar always valid; Avx2 only if supported
bool avx2_supported();
std::string backend_name();

// out[e] = w[e] * (vq[s[e]]*vp[t[e]] + vq[t[e]]*vp[s[e]])
// Core of the Schur-complement assembly: vp/vq are two rows of the NT
// scaling matrix, (s,t,w) the sparse coefficient sites of one constraint
// matrix.
void pair_site_products(const double* vp, const double* vq,
                        const std::int32_t* s, const std::int32_t* t,
                        const double* w, double* out, int n);

double dot(const double* a, const double* b, int n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, int n);

namespace detail {
void pair_site_products_scalar(const double* vp, const double* vq,
                               const std::int32_t* s, const std::int32_t* t,
                               const double* w, double* out, int n);
double dot_scalar(const double* a, const double* b, int n);
void axpy_scalar(double alpha, const double* x, double* y, int n);
#ifdef QINF_BUILD_AVX2
void pair_site_products_avx2(const double* vp, const double* vq,
                             const std::int32_t* s, const std::int32_t* t,
                             const double* w, double* out, int n);
double dot_avx2(const double* a, const double* b, int n);
void axpy_avx2(double alpha, const double* x, double* y, int n);
#endif
}  // namespace detail

}  // namespace qinf::kernels
