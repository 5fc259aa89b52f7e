// AVX2 variants of the batch kernels. Compiled only on x86-64 (see
// CMakeLists); correctness against the scalar reference is covered by the
// kernel equivalence tests.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "mixorder/kernels.hpp"

namespace mixorder::kernels {

namespace {

constexpr int kMaxVecDim = 8;  // wider d falls back to the scalar kernel

// exp on 4 lanes: Cody-Waite reduction + degree-13 Taylor, |rel err| < 4 ulp
// on the reduced range. Underflow below exp(-708) flushes to 0, overflow to inf.
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d too_small = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  const __m256d too_big = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  __m256d xc = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, xc);
  r = _mm256_fnmadd_pd(n, c2, r);

  // p = sum_{k=0}^{13} r^k / k!
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);           // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // scale by 2^n via the exponent field
  __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i bias = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(bias, 52));
  __m256d result = _mm256_mul_pd(p, scale);

  result = _mm256_andnot_pd(too_small, result);
  result = _mm256_blendv_pd(result, _mm256_set1_pd(HUGE_VAL), too_big);
  return result;
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void logdensity_avx2(const double* x, std::size_t n, int d, const double* mean,
                     const double* prec, double lognorm, double* out,
                     std::size_t out_stride) {
  if (d > kMaxVecDim) {
    scalar_ops().logdensity(x, n, d, mean, prec, lognorm, out, out_stride);
    return;
  }
  const __m256d ln = _mm256_set1_pd(lognorm);
  const __m256d half = _mm256_set1_pd(0.5);
  std::size_t i = 0;
  __m256d r[kMaxVecDim];
  for (; i + 4 <= n; i += 4) {
    const double* x0 = x + i * d;
    for (int a = 0; a < d; ++a) {
      r[a] = _mm256_sub_pd(
          _mm256_setr_pd(x0[a], x0[d + a], x0[2 * d + a], x0[3 * d + a]),
          _mm256_set1_pd(mean[a]));
    }
    __m256d q = _mm256_setzero_pd();
    for (int a = 0; a < d; ++a) {
      q = _mm256_fmadd_pd(_mm256_mul_pd(r[a], r[a]),
                          _mm256_set1_pd(prec[a * d + a]), q);
      for (int b = a + 1; b < d; ++b) {
        const __m256d two_p = _mm256_set1_pd(2.0 * prec[a * d + b]);
        q = _mm256_fmadd_pd(_mm256_mul_pd(r[a], r[b]), two_p, q);
      }
    }
    __m256d v = _mm256_fnmadd_pd(half, q, ln);
    double tmp[4];
    _mm256_storeu_pd(tmp, v);
    out[(i + 0) * out_stride] = tmp[0];
    out[(i + 1) * out_stride] = tmp[1];
    out[(i + 2) * out_stride] = tmp[2];
    out[(i + 3) * out_stride] = tmp[3];
  }
  if (i < n)
    scalar_ops().logdensity(x + i * d, n - i, d, mean, prec, lognorm,
                            out + i * out_stride, out_stride);
}

void exp_inplace_avx2(double* buf, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(buf + i, exp4(_mm256_loadu_pd(buf + i)));
  for (; i < n; ++i) buf[i] = std::exp(buf[i]);
}

void weighted_moments_avx2(const double* x, std::size_t n, int d,
                           const double* w, const double* c, double* sw,
                           double* swx, double* scatter) {
  if (d > kMaxVecDim) {
    scalar_ops().weighted_moments(x, n, d, w, c, sw, swx, scatter);
    return;
  }
  __m256d acc_w = _mm256_setzero_pd();
  __m256d acc_x[kMaxVecDim];
  __m256d acc_s[kMaxVecDim * (kMaxVecDim + 1) / 2];
  const int ntri = d * (d + 1) / 2;
  for (int a = 0; a < d; ++a) acc_x[a] = _mm256_setzero_pd();
  for (int t = 0; t < ntri; ++t) acc_s[t] = _mm256_setzero_pd();

  std::size_t i = 0;
  __m256d xv[kMaxVecDim], rv[kMaxVecDim];
  for (; i + 4 <= n; i += 4) {
    const double* x0 = x + i * d;
    const __m256d wv = _mm256_loadu_pd(w + i);
    acc_w = _mm256_add_pd(acc_w, wv);
    for (int a = 0; a < d; ++a) {
      xv[a] = _mm256_setr_pd(x0[a], x0[d + a], x0[2 * d + a], x0[3 * d + a]);
      acc_x[a] = _mm256_fmadd_pd(wv, xv[a], acc_x[a]);
      rv[a] = _mm256_sub_pd(xv[a], _mm256_set1_pd(c[a]));
    }
    int t = 0;
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b, ++t)
        acc_s[t] = _mm256_fmadd_pd(wv, _mm256_mul_pd(rv[a], rv[b]), acc_s[t]);
  }

  double s = hsum(acc_w);
  for (int a = 0; a < d; ++a) swx[a] = hsum(acc_x[a]);
  {
    int t = 0;
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b, ++t) scatter[a * d + b] = hsum(acc_s[t]);
  }
  // scalar tail
  for (; i < n; ++i) {
    const double wi = w[i];
    const double* xi = x + i * d;
    s += wi;
    for (int a = 0; a < d; ++a) {
      swx[a] += wi * xi[a];
      for (int b = a; b < d; ++b)
        scatter[a * d + b] += wi * (xi[a] - c[a]) * (xi[b] - c[b]);
    }
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < a; ++b) scatter[a * d + b] = scatter[b * d + a];
  *sw = s;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{logdensity_avx2, exp_inplace_avx2, weighted_moments_avx2};
  return ops;
}

}  // namespace mixorder::kernels

#endif  // x86-64
