#pragma once

#include <cstddef>

// Data-parallel inner loops used by the vector index and the featurizer.
//
// Each kernel has a scalar reference implementation plus SIMD variants
// (AVX2/FMA on x86-64, NEON on aarch64) selected once at runtime from CPU
// capabilities. The dispatched entry points are the default; the scalar
// versions stay exported so equivalence tests can compare the two paths on
// the same inputs.
//
// A distance is always computed from the same (a, b) pair of buffers, so for
// a fixed host the dispatched kernel yields bit-identical values no matter
// how rows are ordered or which index variant (flat/IVF) asks for them.

namespace ecgregen::kern {

/// Squared Euclidean distance between a and b, length d.
float l2_sq(const float* a, const float* b, size_t d);

/// Inner product of a and b, length d.
float dot(const float* a, const float* b, size_t d);

/// out[i] = l2_sq(query, rows + i*d) for i in [0, n).
void l2_sq_batch(const float* query, const float* rows, size_t n, size_t d,
                 float* out);

/// Euclidean norm (accumulated in double).
double norm(const float* v, size_t d);

/// Scales v to unit norm in place; returns the pre-scaling norm.
/// Leaves v untouched and returns 0 when the norm is exactly zero.
double normalize(float* v, size_t d);

/// Name of the instruction set the dispatched kernels run on:
/// "avx2", "neon" or "scalar".
const char* active_isa();

// Scalar reference kernels (always available).
float l2_sq_scalar(const float* a, const float* b, size_t d);
float dot_scalar(const float* a, const float* b, size_t d);
void l2_sq_batch_scalar(const float* query, const float* rows, size_t n,
                        size_t d, float* out);

#if defined(ECGREGEN_AVX2_TU)
// AVX2/FMA kernels, defined in kernels_avx2.cpp (compiled with -mavx2 -mfma).
// Call only when the CPU reports AVX2+FMA support.
float l2_sq_avx2(const float* a, const float* b, size_t d);
float dot_avx2(const float* a, const float* b, size_t d);
void l2_sq_batch_avx2(const float* query, const float* rows, size_t n,
                      size_t d, float* out);
#endif

}  // namespace ecgregen::kern
