#include <doctest.h>

#include <cmath>
#include <vector>

#include "qinf/kernels.hpp"
#include "qinf/oracle.hpp"

using namespace qinf;
namespace k = qinf::kernels;

namespace {

struct BackendGuard {
  k::Backend saved;
  BackendGuard() : saved(k::active_backend()) {}
  ~BackendGuard() { k::force_backend(saved); }
};

}  // namespace

TEST_CASE("kernel backends agree on pair_site_products") {
  BackendGuard guard;
  Rng rng(7);
  const int dim = 37;
  std::vector<double> vp(dim), vq(dim);
  for (int i = 0; i < dim; ++i) {
    vp[i] = rng.gaussian();
    vq[i] = rng.gaussian();
  }
  for (int n : {0, 1, 3, 4, 7, 64, 129}) {
    std::vector<std::int32_t> s(n), t(n);
    std::vector<double> w(n), out_scalar(n, -1), out_active(n, -2);
    for (int e = 0; e < n; ++e) {
      s[e] = static_cast<std::int32_t>(rng.next_u64() % dim);
      t[e] = static_cast<std::int32_t>(rng.next_u64() % dim);
      w[e] = rng.gaussian();
    }
    k::force_backend(k::Backend::Scalar);
    k::pair_site_products(vp.data(), vq.data(), s.data(), t.data(), w.data(),
                          out_scalar.data(), n);
    if (k::avx2_supported()) {
      k::force_backend(k::Backend::Avx2);
      k::pair_site_products(vp.data(), vq.data(), s.data(), t.data(), w.data(),
                            out_active.data(), n);
      for (int e = 0; e < n; ++e)
        CHECK(out_active[e] == doctest::Approx(out_scalar[e]).epsilon(1e-13));
    }
  }
}

TEST_CASE("kernel backends agree on dot and axpy") {
  BackendGuard guard;
  Rng rng(11);
  for (int n : {0, 1, 5, 32, 1001}) {
    std::vector<double> a(n), b(n), y1(n), y2(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.gaussian();
      b[i] = rng.gaussian();
      y1[i] = y2[i] = rng.gaussian();
    }
    k::force_backend(k::Backend::Scalar);
    double d_scalar = k::dot(a.data(), b.data(), n);
    k::axpy(0.37, a.data(), y1.data(), n);
    if (k::avx2_supported()) {
      k::force_backend(k::Backend::Avx2);
      double d_avx = k::dot(a.data(), b.data(), n);
      k::axpy(0.37, a.data(), y2.data(), n);
      CHECK(d_avx == doctest::Approx(d_scalar).epsilon(1e-12));
      for (int i = 0; i < n; ++i)
        CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-13));
    } else {
      CHECK(d_scalar == d_scalar);
    }
  }
}

TEST_CASE("avx2 is the active backend when supported") {
  if (k::avx2_supported()) CHECK(k::backend_name() == "avx2");
}
