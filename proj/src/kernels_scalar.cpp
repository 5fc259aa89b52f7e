#include <cmath>
#include <cstddef>

#include "mixorder/kernels.hpp"

namespace mixorder::kernels {

namespace {

void logdensity_scalar(const double* x, std::size_t n, int d, const double* mean,
                       const double* prec, double lognorm, double* out,
                       std::size_t out_stride) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * d;
    double q = 0.0;
    for (int a = 0; a < d; ++a) {
      const double ra = xi[a] - mean[a];
      double acc = 0.0;
      for (int b = 0; b < d; ++b) acc += prec[a * d + b] * (xi[b] - mean[b]);
      q += ra * acc;
    }
    out[i * out_stride] = lognorm - 0.5 * q;
  }
}

void exp_inplace_scalar(double* buf, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) buf[i] = std::exp(buf[i]);
}

void weighted_moments_scalar(const double* x, std::size_t n, int d,
                             const double* w, const double* c, double* sw,
                             double* swx, double* scatter) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) swx[a] = 0.0;
  for (int a = 0; a < d * d; ++a) scatter[a] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w[i];
    const double* xi = x + i * d;
    s += wi;
    for (int a = 0; a < d; ++a) {
      swx[a] += wi * xi[a];
      const double ra = xi[a] - c[a];
      for (int b = a; b < d; ++b) scatter[a * d + b] += wi * ra * (xi[b] - c[b]);
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < a; ++b) scatter[a * d + b] = scatter[b * d + a];
  *sw = s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{logdensity_scalar, exp_inplace_scalar,
                       weighted_moments_scalar};
  return ops;
}

}  // namespace mixorder::kernels
