#pragma once

#include <cstddef>
#include <string>

namespace mixorder::kernels {

// Batch kernels on the EM hot path. Scalar reference implementations and an
// AVX2 variant share these signatures; the active backend is picked at
// runtime (CPUID, MIXORDER_KERNEL env override, or set_backend()).
//
// Layout contracts:
//   x         row-major, n rows of d contiguous doubles
//   prec      row-major d*d symmetric precision matrix (Sigma^{-1})
//   out       n entries written with spacing out_stride

struct Ops {
  // out[i*out_stride] = lognorm - 0.5 * (x_i - mean)' prec (x_i - mean)
  void (*logdensity)(const double* x, std::size_t n, int d, const double* mean,
                     const double* prec, double lognorm, double* out,
                     std::size_t out_stride);
  // buf[i] = exp(buf[i]) for i in [0, n)
  void (*exp_inplace)(double* buf, std::size_t n);
  // sw = sum_i w[i]; swx[a] = sum_i w[i] x[i,a];
  // scatter[a*d+b] = sum_i w[i] (x[i,a]-c[a])(x[i,b]-c[b])
  void (*weighted_moments)(const double* x, std::size_t n, int d,
                           const double* w, const double* c, double* sw,
                           double* swx, double* scatter);
};

enum class Backend { kScalar, kAvx2 };

const Ops& scalar_ops();

// Active backend ops (resolved once, overridable for tests).
const Ops& active_ops();
Backend active_backend();
void set_backend(Backend b);   // throws ArgumentError if unsupported on this CPU
void reset_backend();          // back to auto-detection
bool cpu_supports(Backend b);
std::string backend_name(Backend b);

}  // namespace mixorder::kernels
