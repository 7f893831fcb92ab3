#include "mlcwmd/kern/kernels.hpp"

#include <cmath>

namespace mlcwmd::kern {

double log1pexp(double x) {
  // Stable softplus, cut points after Maechler (2012).
  if (x > 33.3) return x;
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  if (x > -37.0) return std::log1p(std::exp(x));
  return std::exp(x);
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void exp_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void log1pexp_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = log1pexp(x[i]);
}

void sigmoid_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(x[i]);
}

double bernoulli_loglik_scalar(const double* eta, const double* y,
                               const double* w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += w[i] * (y[i] * eta[i] - log1pexp(eta[i]));
  }
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      "scalar",        dot_scalar,     sum_scalar,
      exp_scalar,      log1pexp_scalar, sigmoid_scalar,
      bernoulli_loglik_scalar,
  };
  return table;
}

}  // namespace mlcwmd::kern
