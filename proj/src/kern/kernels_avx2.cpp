// AVX2+FMA lane. exp/log are Cephes-style polynomial kernels (~2 ulp);
// results below DBL_MIN flush to zero. Built only on x86-64; the dispatcher
// skips this lane when the CPU lacks AVX2 or FMA.

#include "mlcwmd/kern/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace mlcwmd::kern {
namespace {

inline __m256d vset(double v) { return _mm256_set1_pd(v); }

// exp(x) with Cody-Waite reduction x = n*ln2 + r and a rational minimax
// approximation of exp(r) on |r| <= ln2/2.
inline __m256d vexp(__m256d x) {
  const __m256d hi = vset(709.437);
  const __m256d lo = vset(-708.396418532264106224);
  const __m256d log2e = vset(1.4426950408889634073599);
  const __m256d c1 = vset(6.93145751953125e-1);
  const __m256d c2 = vset(1.42860682030941723212e-6);

  const __m256d big = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  const __m256d small = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, xc);
  r = _mm256_fnmadd_pd(n, c2, r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d px = vset(1.26177193074810590878e-4);
  px = _mm256_fmadd_pd(px, rr, vset(3.02994407707441961300e-2));
  px = _mm256_fmadd_pd(px, rr, vset(9.99999999999999999910e-1));
  px = _mm256_mul_pd(px, r);

  __m256d qx = vset(3.00198505138664455042e-6);
  qx = _mm256_fmadd_pd(qx, rr, vset(2.52448340349684104192e-3));
  qx = _mm256_fmadd_pd(qx, rr, vset(2.27265548208155028766e-1));
  qx = _mm256_fmadd_pd(qx, rr, vset(2.0));

  const __m256d ratio = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  __m256d er = _mm256_fmadd_pd(vset(2.0), ratio, vset(1.0));

  // scale by 2^n through the exponent field
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  er = _mm256_mul_pd(er, _mm256_castsi256_pd(n64));

  er = _mm256_blendv_pd(er, vset(0.0), small);
  er = _mm256_blendv_pd(er, vset(HUGE_VAL), big);
  return er;
}

// log(x) for normal positive inputs, Cephes rational form.
inline __m256d vlog(__m256d x) {
  const __m256i mag = _mm256_set1_epi64x(0x7ff0000000000000LL);
  const __m256i man = _mm256_set1_epi64x(0x000fffffffffffffLL);
  const __m256i half_exp = _mm256_set1_epi64x(0x3fe0000000000000LL);

  __m256i bits = _mm256_castpd_si256(x);
  __m256i expo = _mm256_srli_epi64(_mm256_and_si256(bits, mag), 52);
  expo = _mm256_sub_epi64(expo, _mm256_set1_epi64x(1022));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, man), half_exp));
  // m in [0.5, 1); e such that x = m * 2^e
  __m256d e = _mm256_cvtepi32_pd(_mm256_castsi256_si128(
      _mm256_permutevar8x32_epi32(expo, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0))));

  const __m256d sqrth = vset(0.70710678118654752440);
  const __m256d below = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(below, vset(1.0)));
  const __m256d m_lo = _mm256_sub_pd(_mm256_add_pd(m, m), vset(1.0));
  const __m256d m_hi = _mm256_sub_pd(m, vset(1.0));
  m = _mm256_blendv_pd(m_hi, m_lo, below);

  const __m256d mm = _mm256_mul_pd(m, m);

  __m256d px = vset(1.01875663804580931796e-4);
  px = _mm256_fmadd_pd(px, m, vset(4.97494994976747001425e-1));
  px = _mm256_fmadd_pd(px, m, vset(4.70579119878881725854e0));
  px = _mm256_fmadd_pd(px, m, vset(1.44989225341610930846e1));
  px = _mm256_fmadd_pd(px, m, vset(1.79368678507819816313e1));
  px = _mm256_fmadd_pd(px, m, vset(7.70838733755885391666e0));

  __m256d qx = _mm256_add_pd(m, vset(1.12873587189167450590e1));
  qx = _mm256_fmadd_pd(qx, m, vset(4.52279145837532221105e1));
  qx = _mm256_fmadd_pd(qx, m, vset(8.29875266912776603211e1));
  qx = _mm256_fmadd_pd(qx, m, vset(7.11544750618563894466e1));
  qx = _mm256_fmadd_pd(qx, m, vset(2.31251620126765340583e1));

  __m256d y = _mm256_mul_pd(_mm256_mul_pd(m, mm), _mm256_div_pd(px, qx));
  y = _mm256_fmadd_pd(e, vset(-2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(vset(0.5), mm, y);
  __m256d res = _mm256_add_pd(m, y);
  res = _mm256_fmadd_pd(e, vset(0.693359375), res);
  return res;
}

// Kahan's formula keeps log1p accurate for z near 0; callers pass z in (0,1].
inline __m256d vlog1p(__m256d z) {
  const __m256d one = vset(1.0);
  const __m256d u = _mm256_add_pd(one, z);
  const __m256d d = _mm256_sub_pd(u, one);
  const __m256d exact = _mm256_cmp_pd(d, vset(0.0), _CMP_EQ_OQ);
  const __m256d safe_d = _mm256_blendv_pd(d, one, exact);
  const __m256d scaled =
      _mm256_mul_pd(vlog(u), _mm256_div_pd(z, safe_d));
  return _mm256_blendv_pd(scaled, z, exact);
}

inline __m256d vabs(__m256d x) {
  return _mm256_andnot_pd(vset(-0.0), x);
}

inline __m256d vsoftplus(__m256d x) {
  const __m256d t = vexp(_mm256_sub_pd(vset(0.0), vabs(x)));
  const __m256d l = vlog1p(t);
  const __m256d pos = _mm256_cmp_pd(x, vset(0.0), _CMP_GT_OQ);
  __m256d res = _mm256_blendv_pd(l, _mm256_add_pd(x, l), pos);
  res = _mm256_blendv_pd(res, x, _mm256_cmp_pd(x, vset(33.3), _CMP_GT_OQ));
  res = _mm256_blendv_pd(res, t, _mm256_cmp_pd(x, vset(-37.0), _CMP_LE_OQ));
  return res;
}

inline __m256d vsigmoid(__m256d x) {
  const __m256d one = vset(1.0);
  const __m256d t = vexp(_mm256_sub_pd(vset(0.0), vabs(x)));
  const __m256d denom = _mm256_add_pd(one, t);
  const __m256d nonneg = _mm256_cmp_pd(x, vset(0.0), _CMP_GE_OQ);
  return _mm256_blendv_pd(_mm256_div_pd(t, denom), _mm256_div_pd(one, denom),
                          nonneg);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

void exp_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, vexp(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

void log1pexp_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, vsoftplus(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = log1pexp(x[i]);
}

void sigmoid_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, vsigmoid(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = sigmoid(x[i]);
}

double bernoulli_loglik_avx2(const double* eta, const double* y,
                             const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = _mm256_loadu_pd(eta + i);
    const __m256d term =
        _mm256_fmsub_pd(_mm256_loadu_pd(y + i), e, vsoftplus(e));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), term, acc);
  }
  double r = hsum(acc);
  for (; i < n; ++i) r += w[i] * (y[i] * eta[i] - log1pexp(eta[i]));
  return r;
}

const Ops avx2_table = {
    "avx2",    dot_avx2,      sum_avx2,     exp_avx2,
    log1pexp_avx2, sigmoid_avx2, bernoulli_loglik_avx2,
};

}  // namespace

const Ops* avx2_ops() {
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &avx2_table;
  }
  return nullptr;
}

}  // namespace mlcwmd::kern

#else

namespace mlcwmd::kern {
const Ops* avx2_ops() { return nullptr; }
}  // namespace mlcwmd::kern

#endif
