#pragma once

#include <cstddef>
#include <string>

namespace mlcwmd::kern {

// Data-parallel inner-loop kernels. One scalar reference lane plus an AVX2
// lane selected at runtime; both sides are exercised by the equivalence
// tests. The AVX2 exp/log flush subnormal results to zero and reassociate
// reductions, so agreement with the scalar lane is numeric (~4 ulp), not
// bitwise.
struct Ops {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);

  void (*exp_v)(const double* x, double* out, std::size_t n);
  void (*log1pexp_v)(const double* x, double* out, std::size_t n);
  void (*sigmoid_v)(const double* x, double* out, std::size_t n);

  // sum_i w[i] * (y[i]*eta[i] - log(1+exp(eta[i]))), y stored as double 0/1.
  double (*bernoulli_loglik)(const double* eta, const double* y,
                             const double* w, std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when the CPU or build lacks AVX2+FMA

// Active table. Lane is chosen on first use: MLCWMD_KERNELS env var
// ("scalar"/"avx2") wins, otherwise best supported.
const Ops& ops();

// Test hook; empty name restores automatic selection. Throws on an
// unavailable lane.
void force_lane(const std::string& name);

inline double dot(const double* a, const double* b, std::size_t n) {
  return ops().dot(a, b, n);
}
inline double sum(const double* x, std::size_t n) { return ops().sum(x, n); }
inline void exp_v(const double* x, double* out, std::size_t n) {
  ops().exp_v(x, out, n);
}
inline void log1pexp_v(const double* x, double* out, std::size_t n) {
  ops().log1pexp_v(x, out, n);
}
inline void sigmoid_v(const double* x, double* out, std::size_t n) {
  ops().sigmoid_v(x, out, n);
}
inline double bernoulli_loglik(const double* eta, const double* y,
                               const double* w, std::size_t n) {
  return ops().bernoulli_loglik(eta, y, w, n);
}

// Scalar helpers shared by both lanes' definitions and by callers that
// work one value at a time.
double log1pexp(double x);
double sigmoid(double x);

}  // namespace mlcwmd::kern
