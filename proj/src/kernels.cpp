#include "dshmm/kernels.hpp"

#include <cmath>

namespace dshmm::kernels {

namespace scalar {
double dot(const double*, const double*, std::size_t);
void mul(const double*, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
double max(const double*, std::size_t);
void scale(double*, double, std::size_t);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
void mul(const double*, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
double max(const double*, std::size_t);
void scale(double*, double, std::size_t);
}  // namespace avx2
#endif

namespace {

struct Backend {
  double (*dot)(const double*, const double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*max)(const double*, std::size_t);
  void (*scale)(double*, double, std::size_t);
  const char* name;
};

constexpr Backend kScalar{scalar::dot, scalar::mul, scalar::sum, scalar::max, scalar::scale,
                          "scalar"};

Backend detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Backend{avx2::dot, avx2::mul, avx2::sum, avx2::max, avx2::scale, "avx2"};
#endif
  return kScalar;
}

Backend g_backend = detect();
bool g_forced_scalar = false;

const Backend& active() { return g_forced_scalar ? kScalar : g_backend; }

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
void mul(const double* a, const double* b, double* out, std::size_t n) {
  active().mul(a, b, out, n);
}
double sum(const double* a, std::size_t n) { return active().sum(a, n); }
double max(const double* a, std::size_t n) { return active().max(a, n); }
void scale(double* a, double s, std::size_t n) { active().scale(a, s, n); }

double exp_shift(const double* a, double shift, double* out, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a[i] - shift);
    s += out[i];
  }
  return s;
}

const char* active_backend() { return active().name; }
void force_scalar(bool on) { g_forced_scalar = on; }

}  // namespace dshmm::kernels
