#include "mixorder/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "mixorder/common.hpp"

namespace mixorder::kernels {

#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();  // kernels_avx2.cpp
#endif

namespace {

bool detect_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("MIXORDER_KERNEL")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::kScalar;
    if (std::strcmp(env, "avx2") == 0 && detect_avx2()) return Backend::kAvx2;
    return Backend::kScalar;
  }
  return detect_avx2() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<int> g_backend{-1};  // -1 = not yet resolved

Backend resolve() {
  int b = g_backend.load(std::memory_order_acquire);
  if (b < 0) {
    Backend detected = detect_backend();
    int expected = -1;
    g_backend.compare_exchange_strong(expected, static_cast<int>(detected));
    b = g_backend.load(std::memory_order_acquire);
  }
  return static_cast<Backend>(b);
}

}  // namespace

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::kScalar: return true;
    case Backend::kAvx2: return detect_avx2();
  }
  return false;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
  }
  return "?";
}

Backend active_backend() { return resolve(); }

void set_backend(Backend b) {
  if (!cpu_supports(b))
    throw ArgumentError("kernel backend '" + backend_name(b) +
                        "' not supported on this CPU");
  g_backend.store(static_cast<int>(b), std::memory_order_release);
}

void reset_backend() { g_backend.store(-1, std::memory_order_release); }

const Ops& active_ops() {
  switch (resolve()) {
    case Backend::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2_ops();
#else
      break;
#endif
    case Backend::kScalar: break;
  }
  return scalar_ops();
}

}  // namespace mixorder::kernels
