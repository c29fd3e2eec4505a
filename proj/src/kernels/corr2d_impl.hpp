#pragma once

// Traversal logic shared by every kernel variant. A variant supplies a
// vector abstraction V (lanes, load/store/bcast/madd) plus a 4-wide Quad
// used for the kernel-gradient reduction. Each output element accumulates
// its taps in (ci, u, v) order with the running sum held in a register;
// the kernel gradient reduces x in four stripes anchored at x = pad,
// combined as (s0+s1)+(s2+s3), with edge and tail columns folded in
// scalar order. Two variants that follow these contracts match the scalar
// reference bit for bit (no fused multiply-add anywhere).

#include <algorithm>

#include "hbnet/kernels.hpp"
#include "hbnet/parallel.hpp"

namespace hbnet::kernels::detail {

struct ScalarVec {
    static constexpr i64 lanes = 1;
    using reg = double;
    static reg load(const double* p) { return *p; }
    static void store(double* p, reg v) { *p = v; }
    static reg bcast(double v) { return v; }
    static reg madd(reg acc, reg w, reg x) { return acc + w * x; }
};

struct ScalarQuad {
    struct reg {
        double s[4];
    };
    static reg zero() { return {{0.0, 0.0, 0.0, 0.0}}; }
    static reg madd(reg acc, const double* a, const double* b) {
        for (int j = 0; j < 4; ++j) acc.s[j] += a[j] * b[j];
        return acc;
    }
    static double combine(reg acc) { return (acc.s[0] + acc.s[1]) + (acc.s[2] + acc.s[3]); }
};

template <typename V>
void corr2d_driver(double* out, const double* in, const double* ker, const double* bias,
                   bool accumulate, const Corr2dGeom& g) {
    const i64 k = g.k, pad = g.pad;
    const i64 x_lo = std::min(pad, g.wout);           // [x_lo, x_hi): all k taps in range
    const i64 x_hi = std::max(x_lo, g.wout - pad);
    parallel_for(g.batch * g.cout, [&](i64 begin, i64 end) {
        for (i64 bc = begin; bc < end; ++bc) {
            const i64 b = bc / g.cout;
            const i64 co = bc % g.cout;
            double* oplane = out + (b * g.cout + co) * g.hout * g.wout;
            const double* iplanes = in + b * g.cin * g.hin * g.win;
            const double* kbase = ker + co * g.cin * k * k;
            const double init = bias != nullptr ? bias[co] : 0.0;

            for (i64 y = 0; y < g.hout; ++y) {
                double* orow = oplane + y * g.wout;

                auto scalar_at = [&](i64 x) {
                    double acc = accumulate ? orow[x] : init;
                    for (i64 ci = 0; ci < g.cin; ++ci) {
                        const double* iplane = iplanes + ci * g.hin * g.win;
                        const double* kk = kbase + ci * k * k;
                        for (i64 u = 0; u < k; ++u) {
                            const i64 iy = y + u - pad;
                            if (iy < 0 || iy >= g.hin) continue;
                            const double* irow = iplane + iy * g.win;
                            for (i64 v = 0; v < k; ++v) {
                                const i64 ix = x + v - pad;
                                if (ix < 0 || ix >= g.win) continue;
                                acc += kk[u * k + v] * irow[ix];
                            }
                        }
                    }
                    orow[x] = acc;
                };

                for (i64 x = 0; x < x_lo; ++x) scalar_at(x);
                i64 x = x_lo;
                for (; x + V::lanes <= x_hi; x += V::lanes) {
                    typename V::reg acc =
                        accumulate ? V::load(orow + x) : V::bcast(init);
                    for (i64 ci = 0; ci < g.cin; ++ci) {
                        const double* iplane = iplanes + ci * g.hin * g.win;
                        const double* kk = kbase + ci * k * k;
                        for (i64 u = 0; u < k; ++u) {
                            const i64 iy = y + u - pad;
                            if (iy < 0 || iy >= g.hin) continue;
                            const double* irow = iplane + iy * g.win + (x - pad);
                            for (i64 v = 0; v < k; ++v)
                                acc = V::madd(acc, V::bcast(kk[u * k + v]), V::load(irow + v));
                        }
                    }
                    V::store(orow + x, acc);
                }
                for (; x < g.wout; ++x) scalar_at(x);
            }
        }
    });
}

template <typename Q>
void corr2d_kgrad_driver(double* dker, const double* dout, const double* in, const Corr2dGeom& g) {
    const i64 k = g.k, pad = g.pad;
    const i64 x_lo = std::min(pad, g.wout);
    const i64 x_hi = std::max(x_lo, g.wout - pad);
    // with k beyond the register budget every column takes the tail path
    const i64 blocks = k <= 9 ? (x_hi - x_lo) / 4 : 0;
    const i64 x_vec_end = x_lo + 4 * blocks;
    parallel_for(g.cout * g.cin, [&](i64 begin, i64 end) {
        std::vector<double> acc;
        for (i64 cc = begin; cc < end; ++cc) {
            const i64 co = cc / g.cin;
            const i64 ci = cc % g.cin;
            acc.assign(static_cast<size_t>(k * k), 0.0);
            for (i64 b = 0; b < g.batch; ++b) {
                const double* oplane = dout + (b * g.cout + co) * g.hout * g.wout;
                const double* iplane = in + (b * g.cin + ci) * g.hin * g.win;
                for (i64 y = 0; y < g.hout; ++y) {
                    const double* orow = oplane + y * g.wout;
                    for (i64 u = 0; u < k; ++u) {
                        const i64 iy = y + u - pad;
                        if (iy < 0 || iy >= g.hin) continue;
                        const double* irow = iplane + iy * g.win;
                        // vector stripes over the all-taps-valid interior
                        typename Q::reg q[9];
                        const i64 kq = std::min<i64>(k, 9);
                        for (i64 v = 0; v < kq; ++v) q[v] = Q::zero();
                        for (i64 x = x_lo; x < x_vec_end; x += 4)
                            for (i64 v = 0; v < k; ++v)
                                q[v] = Q::madd(q[v], orow + x, irow + (x - pad) + v);
                        for (i64 v = 0; v < k; ++v) {
                            double left = 0.0;
                            const i64 x_left_stop = std::min(x_lo, g.win + pad - v);
                            for (i64 x = std::max<i64>(0, pad - v); x < x_left_stop; ++x)
                                left += orow[x] * irow[x + v - pad];
                            double tail = 0.0;
                            const i64 x_stop = std::min(g.wout, g.win + pad - v);
                            for (i64 x = std::max(x_vec_end, pad - v); x < x_stop; ++x)
                                tail += orow[x] * irow[x + v - pad];
                            const double mid = v < kq ? Q::combine(q[v]) : 0.0;
                            acc[static_cast<size_t>(u * k + v)] += left + mid + tail;
                        }
                    }
                }
            }
            double* dk = dker + (co * g.cin + ci) * k * k;
            for (i64 i = 0; i < k * k; ++i) dk[i] += acc[static_cast<size_t>(i)];
        }
    });
}

}  // namespace hbnet::kernels::detail
