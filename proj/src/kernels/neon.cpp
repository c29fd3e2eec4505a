// NEON variant: 2 doubles per vector. The striped-dot contract is defined
// in stripes of 4, so the dot keeps two 2-lane accumulators side by side.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

#include "hbnet/kernels.hpp"
#include "hbnet/parallel.hpp"
#include "kernels/corr2d_impl.hpp"

namespace hbnet::kernels {

namespace {

struct NeonVec {
    static constexpr i64 lanes = 2;
    using reg = float64x2_t;
    static reg load(const double* p) { return vld1q_f64(p); }
    static void store(double* p, reg v) { vst1q_f64(p, v); }
    static reg bcast(double v) { return vdupq_n_f64(v); }
    static reg madd(reg acc, reg w, reg x) { return vaddq_f64(acc, vmulq_f64(w, x)); }
};

struct NeonQuad {
    struct reg {
        float64x2_t lo, hi;
    };
    static reg zero() { return {vdupq_n_f64(0.0), vdupq_n_f64(0.0)}; }
    static reg madd(reg acc, const double* a, const double* b) {
        acc.lo = vaddq_f64(acc.lo, vmulq_f64(vld1q_f64(a), vld1q_f64(b)));
        acc.hi = vaddq_f64(acc.hi, vmulq_f64(vld1q_f64(a + 2), vld1q_f64(b + 2)));
        return acc;
    }
    static double combine(reg acc) {
        return (vgetq_lane_f64(acc.lo, 0) + vgetq_lane_f64(acc.lo, 1)) +
               (vgetq_lane_f64(acc.hi, 0) + vgetq_lane_f64(acc.hi, 1));
    }
};

void corr2d_neon(double* out, const double* in, const double* ker, const double* bias,
                 bool accumulate, const Corr2dGeom& g) {
    detail::corr2d_driver<NeonVec>(out, in, ker, bias, accumulate, g);
}

void corr2d_kgrad_neon(double* dker, const double* dout, const double* in, const Corr2dGeom& g) {
    detail::corr2d_kgrad_driver<NeonQuad>(dker, dout, in, g);
}

void relu_fwd_neon(double* out, const double* in, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        const float64x2_t zero = vdupq_n_f64(0.0);
        i64 i = lo;
        for (; i + 2 <= hi; i += 2) {
            float64x2_t v = vld1q_f64(in + i);
            uint64x2_t pos = vcgtq_f64(v, zero);
            vst1q_f64(out + i, vreinterpretq_f64_u64(vandq_u64(pos, vreinterpretq_u64_f64(v))));
        }
        for (; i < hi; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    });
}

void relu_bwd_neon(double* din, const double* dout, const double* in, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        const float64x2_t zero = vdupq_n_f64(0.0);
        i64 i = lo;
        for (; i + 2 <= hi; i += 2) {
            uint64x2_t pos = vcgtq_f64(vld1q_f64(in + i), zero);
            float64x2_t contrib =
                vreinterpretq_f64_u64(vandq_u64(pos, vreinterpretq_u64_f64(vld1q_f64(dout + i))));
            vst1q_f64(din + i, vaddq_f64(vld1q_f64(din + i), contrib));
        }
        for (; i < hi; ++i) din[i] += in[i] > 0.0 ? dout[i] : 0.0;
    });
}

void add_neon(double* out, const double* a, const double* b, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        i64 i = lo;
        for (; i + 2 <= hi; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        for (; i < hi; ++i) out[i] = a[i] + b[i];
    });
}

void axpy_neon(double* y, double a, const double* x, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        const float64x2_t va = vdupq_n_f64(a);
        i64 i = lo;
        for (; i + 2 <= hi; i += 2) {
            float64x2_t vy = vld1q_f64(y + i);
            vst1q_f64(y + i, vaddq_f64(vy, vmulq_f64(va, vld1q_f64(x + i))));
        }
        for (; i < hi; ++i) y[i] += a * x[i];
    });
}

void mul_acc_neon(double* d, const double* a, const double* b, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        i64 i = lo;
        for (; i + 2 <= hi; i += 2) {
            float64x2_t vd = vld1q_f64(d + i);
            vst1q_f64(d + i, vaddq_f64(vd, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
        }
        for (; i < hi; ++i) d[i] += a[i] * b[i];
    });
}

void adam_update_neon(double* param, double* m, double* v, const double* grad, i64 n,
                      const AdamScalars& s) {
    kScalarTable.adam_update(param, m, v, grad, n, s);
}

}  // namespace

const KernelTable kNeonTable = {
    "neon",   corr2d_neon, corr2d_kgrad_neon, relu_fwd_neon, relu_bwd_neon,
    add_neon, axpy_neon,   mul_acc_neon,      adam_update_neon,
};

}  // namespace hbnet::kernels

#endif  // __aarch64__
