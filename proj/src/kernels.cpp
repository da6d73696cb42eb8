#include "ecgregen/kernels.hpp"

#include <cmath>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace ecgregen::kern {

// Four independent accumulators: breaks the serial dependency chain and
// matches the error profile of the vectorized variants closely enough for
// the shared tolerances.
float l2_sq_scalar(const float* a, const float* b, size_t d) {
  float acc0 = 0.f, acc1 = 0.f, acc2 = 0.f, acc3 = 0.f;
  size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    float d0 = a[i + 0] - b[i + 0];
    float d1 = a[i + 1] - b[i + 1];
    float d2 = a[i + 2] - b[i + 2];
    float d3 = a[i + 3] - b[i + 3];
    acc0 += d0 * d0;
    acc1 += d1 * d1;
    acc2 += d2 * d2;
    acc3 += d3 * d3;
  }
  for (; i < d; ++i) {
    float di = a[i] - b[i];
    acc0 += di * di;
  }
  return (acc0 + acc1) + (acc2 + acc3);
}

float dot_scalar(const float* a, const float* b, size_t d) {
  float acc0 = 0.f, acc1 = 0.f, acc2 = 0.f, acc3 = 0.f;
  size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    acc0 += a[i + 0] * b[i + 0];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  for (; i < d; ++i) acc0 += a[i] * b[i];
  return (acc0 + acc1) + (acc2 + acc3);
}

void l2_sq_batch_scalar(const float* query, const float* rows, size_t n,
                        size_t d, float* out) {
  for (size_t i = 0; i < n; ++i) out[i] = l2_sq_scalar(query, rows + i * d, d);
}

#if defined(__aarch64__)

namespace {

float l2_sq_neon(const float* a, const float* b, size_t d) {
  float32x4_t acc0 = vdupq_n_f32(0.f);
  float32x4_t acc1 = vdupq_n_f32(0.f);
  size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    float32x4_t d0 = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
    float32x4_t d1 = vsubq_f32(vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    acc0 = vfmaq_f32(acc0, d0, d0);
    acc1 = vfmaq_f32(acc1, d1, d1);
  }
  float tail = 0.f;
  for (; i < d; ++i) {
    float di = a[i] - b[i];
    tail += di * di;
  }
  return vaddvq_f32(vaddq_f32(acc0, acc1)) + tail;
}

float dot_neon(const float* a, const float* b, size_t d) {
  float32x4_t acc0 = vdupq_n_f32(0.f);
  float32x4_t acc1 = vdupq_n_f32(0.f);
  size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  float tail = 0.f;
  for (; i < d; ++i) tail += a[i] * b[i];
  return vaddvq_f32(vaddq_f32(acc0, acc1)) + tail;
}

void l2_sq_batch_neon(const float* query, const float* rows, size_t n,
                      size_t d, float* out) {
  for (size_t i = 0; i < n; ++i) out[i] = l2_sq_neon(query, rows + i * d, d);
}

}  // namespace

#endif  // __aarch64__

namespace {

struct Dispatch {
  float (*l2_sq)(const float*, const float*, size_t);
  float (*dot)(const float*, const float*, size_t);
  void (*l2_sq_batch)(const float*, const float*, size_t, size_t, float*);
  const char* isa;
};

Dispatch resolve() {
#if defined(ECGREGEN_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return {l2_sq_avx2, dot_avx2, l2_sq_batch_avx2, "avx2"};
  }
#endif
#if defined(__aarch64__)
  return {l2_sq_neon, dot_neon, l2_sq_batch_neon, "neon"};
#endif
  return {l2_sq_scalar, dot_scalar, l2_sq_batch_scalar, "scalar"};
}

const Dispatch& dispatch() {
  static const Dispatch d = resolve();
  return d;
}

}  // namespace

float l2_sq(const float* a, const float* b, size_t d) {
  return dispatch().l2_sq(a, b, d);
}

float dot(const float* a, const float* b, size_t d) {
  return dispatch().dot(a, b, d);
}

void l2_sq_batch(const float* query, const float* rows, size_t n, size_t d,
                 float* out) {
  dispatch().l2_sq_batch(query, rows, n, d, out);
}

const char* active_isa() { return dispatch().isa; }

double norm(const float* v, size_t d) {
  double acc = 0.0;
  for (size_t i = 0; i < d; ++i) acc += static_cast<double>(v[i]) * v[i];
  return std::sqrt(acc);
}

double normalize(float* v, size_t d) {
  double n = norm(v, d);
  if (n == 0.0) return 0.0;
  float inv = static_cast<float>(1.0 / n);
  for (size_t i = 0; i < d; ++i) v[i] *= inv;
  return n;
}

}  // namespace ecgregen::kern
