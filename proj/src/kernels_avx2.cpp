// AVX2 kernel variants. This translation unit is compiled with -mavx2 and is
// only entered through the dispatch table after a runtime CPU check.

#include "kernels_detail.hpp"

#if defined(DTRTI_HAVE_AVX2)

#include <cmath>
#include <cstddef>
#include <immintrin.h>
#include <limits>

namespace dtrti::kernels::detail {

namespace {

// exp(x) on 4 lanes: x = n*ln2 + r, Pade approximant on r, scale by 2^n.
// Coefficients are the classic Cephes expansion; |error| stays within a few
// ulp over the clamped range, which the backend equivalence tests pin down.
inline __m256d exp4(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);

    const __m256d nd =
        _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(nd, ln2_hi));
    r = _mm256_sub_pd(r, _mm256_mul_pd(nd, ln2_lo));
    const __m256d r2 = _mm256_mul_pd(r, r);

    __m256d pv = _mm256_add_pd(_mm256_mul_pd(p0, r2), p1);
    pv = _mm256_add_pd(_mm256_mul_pd(pv, r2), p2);
    pv = _mm256_mul_pd(r, pv);

    __m256d qv = _mm256_add_pd(_mm256_mul_pd(q0, r2), q1);
    qv = _mm256_add_pd(_mm256_mul_pd(qv, r2), q2);
    qv = _mm256_add_pd(_mm256_mul_pd(qv, r2), q3);

    const __m256d e = _mm256_div_pd(pv, _mm256_sub_pd(qv, pv));
    __m256d res = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(_mm256_set1_pd(2.0), e));

    // 2^n through the exponent field; n is in [-1022, 1023] after clamping.
    const __m128i n32 = _mm256_cvtpd_epi32(nd);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    res = _mm256_mul_pd(res, _mm256_castsi256_pd(pow2));

    const __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
    res = _mm256_andnot_pd(under, res);
    const __m256d over = _mm256_cmp_pd(x, _mm256_set1_pd(708.0), _CMP_GT_OQ);
    res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
    return res;
}

inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double gauss_kernel_sum_avx2(const double* pts, const double* w, std::size_t n, double x, double inv_h) {
    const __m256d xv = _mm256_set1_pd(x);
    const __m256d ihv = _mm256_set1_pd(inv_h);
    const __m256d mhalf = _mm256_set1_pd(-0.5);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    if (w == nullptr) {
        for (; i + 4 <= n; i += 4) {
            const __m256d p = _mm256_loadu_pd(pts + i);
            const __m256d t = _mm256_mul_pd(_mm256_sub_pd(xv, p), ihv);
            const __m256d arg = _mm256_mul_pd(mhalf, _mm256_mul_pd(t, t));
            acc = _mm256_add_pd(acc, exp4(arg));
        }
    } else {
        for (; i + 4 <= n; i += 4) {
            const __m256d p = _mm256_loadu_pd(pts + i);
            const __m256d wv = _mm256_loadu_pd(w + i);
            const __m256d t = _mm256_mul_pd(_mm256_sub_pd(xv, p), ihv);
            const __m256d arg = _mm256_mul_pd(mhalf, _mm256_mul_pd(t, t));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(wv, exp4(arg)));
        }
    }
    double total = hsum4(acc);
    for (; i < n; ++i) {
        const double t = (x - pts[i]) * inv_h;
        const double term = std::exp(-0.5 * t * t);
        total += (w == nullptr) ? term : w[i] * term;
    }
    return total;
}

std::size_t count_in_range_avx2(const double* v, std::size_t n, double lo, double hi) {
    const __m256d lov = _mm256_set1_pd(lo);
    const __m256d hiv = _mm256_set1_pd(hi);
    std::size_t count = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(v + i);
        const __m256d ge = _mm256_cmp_pd(x, lov, _CMP_GE_OQ);
        const __m256d le = _mm256_cmp_pd(x, hiv, _CMP_LE_OQ);
        const int mask = _mm256_movemask_pd(_mm256_and_pd(ge, le));
        count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) {
        count += (v[i] >= lo) & (v[i] <= hi);
    }
    return count;
}

} // namespace

const Vtable avx2_vtable = {&gauss_kernel_sum_avx2, &count_in_range_avx2};

} // namespace dtrti::kernels::detail

#endif // DTRTI_HAVE_AVX2
