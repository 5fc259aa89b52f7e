#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixorder/kernels.hpp"
#include "mixorder/rng.hpp"

using namespace mixorder;

namespace {

struct BackendGuard {
  ~BackendGuard() { kernels::reset_backend(); }
};

std::vector<double> random_buffer(std::size_t n, Rng& rng, double lo,
                                  double hi) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

}  // namespace

TEST_CASE("kernel backends agree on batch log-densities") {
  if (!kernels::cpu_supports(kernels::Backend::kAvx2)) return;
  BackendGuard guard;
  Rng rng = make_rng(11);
  for (int d : {1, 2, 3, 5}) {
    for (std::size_t n : {1u, 4u, 7u, 64u, 201u}) {
      auto x = random_buffer(n * d, rng, -3.0, 3.0);
      auto mean = random_buffer(d, rng, -1.0, 1.0);
      // SPD precision via A'A + I
      std::vector<double> a(d * d), prec(d * d, 0.0);
      for (auto& v : a) v = rng.uniform(-0.5, 0.5);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          for (int k = 0; k < d; ++k) prec[i * d + j] += a[k * d + i] * a[k * d + j];
          if (i == j) prec[i * d + j] += 1.0;
        }
      std::vector<double> out_scalar(2 * n), out_avx(2 * n);
      kernels::scalar_ops().logdensity(x.data(), n, d, mean.data(), prec.data(),
                                       -1.7, out_scalar.data(), 2);
      kernels::set_backend(kernels::Backend::kAvx2);
      kernels::active_ops().logdensity(x.data(), n, d, mean.data(), prec.data(),
                                       -1.7, out_avx.data(), 2);
      kernels::reset_backend();
      for (std::size_t i = 0; i < n; ++i)
        CHECK(out_avx[2 * i] ==
              doctest::Approx(out_scalar[2 * i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("vectorized exp matches std::exp") {
  if (!kernels::cpu_supports(kernels::Backend::kAvx2)) return;
  BackendGuard guard;
  Rng rng = make_rng(5);
  std::vector<double> buf = random_buffer(1003, rng, -700.0, 30.0);
  buf.push_back(0.0);
  buf.push_back(-745.0);  // below the underflow cut
  buf.push_back(-0.5);
  std::vector<double> ref = buf;
  kernels::scalar_ops().exp_inplace(ref.data(), ref.size());
  kernels::set_backend(kernels::Backend::kAvx2);
  kernels::active_ops().exp_inplace(buf.data(), buf.size());
  kernels::reset_backend();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (ref[i] == 0.0)
      CHECK(buf[i] == 0.0);
    else
      CHECK(std::abs(buf[i] - ref[i]) <= 4e-15 * ref[i]);
  }
}

TEST_CASE("kernel backends agree on weighted moments") {
  if (!kernels::cpu_supports(kernels::Backend::kAvx2)) return;
  BackendGuard guard;
  Rng rng = make_rng(99);
  for (int d : {1, 2, 4}) {
    const std::size_t n = 157;
    auto x = random_buffer(n * d, rng, -2.0, 2.0);
    auto w = random_buffer(n, rng, 0.0, 1.0);
    auto c = random_buffer(d, rng, -1.0, 1.0);
    double sw_s, sw_v;
    std::vector<double> swx_s(d), swx_v(d), sc_s(d * d), sc_v(d * d);
    kernels::scalar_ops().weighted_moments(x.data(), n, d, w.data(), c.data(),
                                           &sw_s, swx_s.data(), sc_s.data());
    kernels::set_backend(kernels::Backend::kAvx2);
    kernels::active_ops().weighted_moments(x.data(), n, d, w.data(), c.data(),
                                           &sw_v, swx_v.data(), sc_v.data());
    kernels::reset_backend();
    CHECK(sw_v == doctest::Approx(sw_s).epsilon(1e-13));
    for (int a = 0; a < d; ++a)
      CHECK(swx_v[a] == doctest::Approx(swx_s[a]).epsilon(1e-12));
    for (int a = 0; a < d * d; ++a)
      CHECK(sc_v[a] == doctest::Approx(sc_s[a]).epsilon(1e-12));
  }
}

TEST_CASE("backend selection is sticky and validated") {
  BackendGuard guard;
  kernels::set_backend(kernels::Backend::kScalar);
  CHECK(kernels::active_backend() == kernels::Backend::kScalar);
  kernels::reset_backend();
  CHECK(kernels::backend_name(kernels::active_backend()).size() > 0);
}
