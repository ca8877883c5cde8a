#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the samplers and the grid evaluators.
// Scalar reference implementations always exist; on x86-64 an AVX2 variant is
// selected at runtime when the CPU supports it.
namespace dshmm::kernels {

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// out[i] = a[i]*b[i]
void mul(const double* a, const double* b, double* out, std::size_t n);

double sum(const double* a, std::size_t n);

// max over n entries; n must be >= 1
double max(const double* a, std::size_t n);

// a[i] *= s
void scale(double* a, double s, std::size_t n);

// out[i] = exp(a[i] - shift); returns sum(out). Scalar on all backends.
double exp_shift(const double* a, double shift, double* out, std::size_t n);

// Name of the dispatched backend: "avx2" or "scalar".
const char* active_backend();

// Force the scalar path (used by the equivalence tests). Not thread-safe;
// call before any sampling work starts.
void force_scalar(bool on);

}  // namespace dshmm::kernels
