#pragma once

#include <string>
#include <vector>

#include "hbnet/common.hpp"

namespace hbnet::kernels {

// Geometry of a stride-1 cross-correlation. out[b,co,y,x] visits
// in[b,ci, y+u-pad, x+v-pad] for u,v in [0,k); out-of-range taps are
// skipped, never added as zero.
struct Corr2dGeom {
    i64 batch = 0;
    i64 cin = 0;
    i64 hin = 0;
    i64 win = 0;
    i64 cout = 0;
    i64 hout = 0;
    i64 wout = 0;
    i64 k = 0;
    i64 pad = 0;
};

struct AdamScalars {
    double lr = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    i64 step = 1;  // 1-based, after increment
};

// One table per instruction-set variant. Scalar is the reference; every
// other variant must produce bit-identical results (same accumulation
// order, no fused multiply-add).
struct KernelTable {
    const char* name;

    /// out = (bias broadcast | 0 | out) followed by += correlation; the
    /// initial value is bias[co] when bias != nullptr, untouched when
    /// accumulate, else 0.
    void (*corr2d)(double* out, const double* in, const double* ker, const double* bias,
                   bool accumulate, const Corr2dGeom& g);

    /// dker[co,ci,u,v] += sum over (b,y,x) of dout[b,co,y,x] * in-tap.
    /// Per row the interior x reduction runs in four interleaved stripes
    /// anchored at x = pad and combined as (s0+s1)+(s2+s3), with edge and
    /// tail columns folded in ascending-x order; variants must honour that
    /// contract exactly.
    void (*corr2d_kgrad)(double* dker, const double* dout, const double* in, const Corr2dGeom& g);

    void (*relu_fwd)(double* out, const double* in, i64 n);
    void (*relu_bwd)(double* din, const double* dout, const double* in, i64 n);  // accumulates
    void (*add)(double* out, const double* a, const double* b, i64 n);
    void (*axpy)(double* y, double a, const double* x, i64 n);                  // y += a*x
    void (*mul_acc)(double* d, const double* a, const double* b, i64 n);        // d += a*b
    void (*adam_update)(double* param, double* m, double* v, const double* grad, i64 n,
                        const AdamScalars& s);
};

extern const KernelTable kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Table;
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonTable;
#endif

/// Active table. Picked once at first use: HBNET_KERNEL env var if set,
/// else the widest variant this CPU supports.
const KernelTable& active();

/// Override selection ("scalar", "avx2", "neon", "auto"). Throws on a
/// variant this build/CPU cannot run.
void force(const std::string& name);

/// Variant names runnable on this machine, scalar first.
std::vector<std::string> available();

// Scalar-only helpers (cold paths, no dispatch).

/// Cross-correlation with arbitrary stride; forward only.
void corr2d_strided(double* out, const double* in, const double* ker, const double* bias,
                    const Corr2dGeom& g, i64 stride);
/// Adjoints of corr2d_strided.
void corr2d_strided_dinput(double* din, const double* dout, const double* ker, const Corr2dGeom& g,
                           i64 stride);
void corr2d_strided_dkernel(double* dker, const double* dout, const double* in, const Corr2dGeom& g,
                            i64 stride);

/// dbias[co] += sum over (b,y,x) of dout[b,co,y,x].
void bias_grad(double* dbias, const double* dout, i64 batch, i64 cout, i64 hw);

}  // namespace hbnet::kernels
