// AVX2 variant: 4 doubles per vector, mul+add kept unfused so results stay
// bit-identical to the scalar reference.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "hbnet/kernels.hpp"
#include "hbnet/parallel.hpp"
#include "kernels/corr2d_impl.hpp"

namespace hbnet::kernels {

namespace {

struct Avx2Vec {
    static constexpr i64 lanes = 4;
    using reg = __m256d;
    static reg load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
    static reg bcast(double v) { return _mm256_set1_pd(v); }
    static reg madd(reg acc, reg w, reg x) { return _mm256_add_pd(acc, _mm256_mul_pd(w, x)); }
};

struct Avx2Quad {
    using reg = __m256d;
    static reg zero() { return _mm256_setzero_pd(); }
    static reg madd(reg acc, const double* a, const double* b) {
        return _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a), _mm256_loadu_pd(b)));
    }
    static double combine(reg acc) {
        alignas(32) double lanes[4];
        _mm256_store_pd(lanes, acc);
        return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    }
};

void corr2d_avx2(double* out, const double* in, const double* ker, const double* bias,
                 bool accumulate, const Corr2dGeom& g) {
    detail::corr2d_driver<Avx2Vec>(out, in, ker, bias, accumulate, g);
}

void corr2d_kgrad_avx2(double* dker, const double* dout, const double* in, const Corr2dGeom& g) {
    detail::corr2d_kgrad_driver<Avx2Quad>(dker, dout, in, g);
}

void relu_fwd_avx2(double* out, const double* in, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        const __m256d zero = _mm256_setzero_pd();
        i64 i = lo;
        // max(x, 0) with x as first operand so -0.0 maps to +0.0 like the
        // scalar branch does
        for (; i + 4 <= hi; i += 4) _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(in + i), zero));
        for (; i < hi; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    });
}

void relu_bwd_avx2(double* din, const double* dout, const double* in, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        const __m256d zero = _mm256_setzero_pd();
        i64 i = lo;
        for (; i + 4 <= hi; i += 4) {
            __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(in + i), zero, _CMP_GT_OQ);
            __m256d contrib = _mm256_and_pd(mask, _mm256_loadu_pd(dout + i));
            _mm256_storeu_pd(din + i, _mm256_add_pd(_mm256_loadu_pd(din + i), contrib));
        }
        for (; i < hi; ++i) din[i] += in[i] > 0.0 ? dout[i] : 0.0;
    });
}

void add_avx2(double* out, const double* a, const double* b, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        i64 i = lo;
        for (; i + 4 <= hi; i += 4)
            _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        for (; i < hi; ++i) out[i] = a[i] + b[i];
    });
}

void axpy_avx2(double* y, double a, const double* x, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        const __m256d va = _mm256_set1_pd(a);
        i64 i = lo;
        for (; i + 4 <= hi; i += 4) {
            __m256d vy = _mm256_loadu_pd(y + i);
            vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
            _mm256_storeu_pd(y + i, vy);
        }
        for (; i < hi; ++i) y[i] += a * x[i];
    });
}

void mul_acc_avx2(double* d, const double* a, const double* b, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        i64 i = lo;
        for (; i + 4 <= hi; i += 4) {
            __m256d vd = _mm256_loadu_pd(d + i);
            vd = _mm256_add_pd(vd, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
            _mm256_storeu_pd(d + i, vd);
        }
        for (; i < hi; ++i) d[i] += a[i] * b[i];
    });
}

void adam_update_avx2(double* param, double* m, double* v, const double* grad, i64 n,
                      const AdamScalars& s) {
    const double c1 = 1.0 / (1.0 - std::pow(s.beta1, static_cast<double>(s.step)));
    const double c2 = 1.0 / (1.0 - std::pow(s.beta2, static_cast<double>(s.step)));
    parallel_for(n, [&](i64 lo, i64 hi) {
        const __m256d vb1 = _mm256_set1_pd(s.beta1);
        const __m256d vb2 = _mm256_set1_pd(s.beta2);
        const __m256d v1mb1 = _mm256_set1_pd(1.0 - s.beta1);
        const __m256d v1mb2 = _mm256_set1_pd(1.0 - s.beta2);
        const __m256d vc1 = _mm256_set1_pd(c1);
        const __m256d vc2 = _mm256_set1_pd(c2);
        const __m256d vlr = _mm256_set1_pd(s.lr);
        const __m256d veps = _mm256_set1_pd(s.eps);
        const __m256d vwd = _mm256_set1_pd(s.weight_decay);
        i64 i = lo;
        for (; i + 4 <= hi; i += 4) {
            __m256d vp = _mm256_loadu_pd(param + i);
            __m256d vg = _mm256_add_pd(_mm256_loadu_pd(grad + i), _mm256_mul_pd(vwd, vp));
            __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(v1mb1, vg));
            __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                       _mm256_mul_pd(v1mb2, _mm256_mul_pd(vg, vg)));
            _mm256_storeu_pd(m + i, vm);
            _mm256_storeu_pd(v + i, vv);
            __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vc2)), veps);
            __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(vm, vc1)), denom);
            _mm256_storeu_pd(param + i, _mm256_sub_pd(vp, step));
        }
        for (; i < hi; ++i) {
            const double g = grad[i] + s.weight_decay * param[i];
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * (g * g);
            param[i] -= s.lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + s.eps);
        }
    });
}

}  // namespace

const KernelTable kAvx2Table = {
    "avx2",      corr2d_avx2, corr2d_kgrad_avx2, relu_fwd_avx2, relu_bwd_avx2,
    add_avx2,    axpy_avx2,   mul_acc_avx2,      adam_update_avx2,
};

}  // namespace hbnet::kernels

#endif  // x86_64
