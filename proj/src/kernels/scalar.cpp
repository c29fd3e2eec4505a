#include <algorithm>
#include <cmath>

#include "hbnet/kernels.hpp"
#include "hbnet/parallel.hpp"
#include "kernels/corr2d_impl.hpp"

namespace hbnet::kernels {

namespace {

void corr2d_scalar(double* out, const double* in, const double* ker, const double* bias,
                   bool accumulate, const Corr2dGeom& g) {
    detail::corr2d_driver<detail::ScalarVec>(out, in, ker, bias, accumulate, g);
}

void corr2d_kgrad_scalar(double* dker, const double* dout, const double* in, const Corr2dGeom& g) {
    detail::corr2d_kgrad_driver<detail::ScalarQuad>(dker, dout, in, g);
}

void relu_fwd_scalar(double* out, const double* in, i64 n) {
    parallel_for(n, [&](i64 b, i64 e) {
        for (i64 i = b; i < e; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    });
}

void relu_bwd_scalar(double* din, const double* dout, const double* in, i64 n) {
    parallel_for(n, [&](i64 b, i64 e) {
        for (i64 i = b; i < e; ++i) din[i] += in[i] > 0.0 ? dout[i] : 0.0;
    });
}

void add_scalar(double* out, const double* a, const double* b, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        for (i64 i = lo; i < hi; ++i) out[i] = a[i] + b[i];
    });
}

void axpy_scalar(double* y, double a, const double* x, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        for (i64 i = lo; i < hi; ++i) y[i] += a * x[i];
    });
}

void mul_acc_scalar(double* d, const double* a, const double* b, i64 n) {
    parallel_for(n, [&](i64 lo, i64 hi) {
        for (i64 i = lo; i < hi; ++i) d[i] += a[i] * b[i];
    });
}

void adam_update_scalar(double* param, double* m, double* v, const double* grad, i64 n,
                        const AdamScalars& s) {
    const double c1 = 1.0 / (1.0 - std::pow(s.beta1, static_cast<double>(s.step)));
    const double c2 = 1.0 / (1.0 - std::pow(s.beta2, static_cast<double>(s.step)));
    parallel_for(n, [&](i64 lo, i64 hi) {
        for (i64 i = lo; i < hi; ++i) {
            const double g = grad[i] + s.weight_decay * param[i];
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * (g * g);
            param[i] -= s.lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + s.eps);
        }
    });
}

}  // namespace

const KernelTable kScalarTable = {
    "scalar",        corr2d_scalar, corr2d_kgrad_scalar, relu_fwd_scalar, relu_bwd_scalar,
    add_scalar,      axpy_scalar,   mul_acc_scalar,      adam_update_scalar,
};

void corr2d_strided(double* out, const double* in, const double* ker, const double* bias,
                    const Corr2dGeom& g, i64 stride) {
    parallel_for(g.batch * g.cout, [&](i64 begin, i64 end) {
        for (i64 bc = begin; bc < end; ++bc) {
            const i64 b = bc / g.cout;
            const i64 co = bc % g.cout;
            double* oplane = out + (b * g.cout + co) * g.hout * g.wout;
            for (i64 y = 0; y < g.hout; ++y) {
                for (i64 x = 0; x < g.wout; ++x) {
                    double acc = bias != nullptr ? bias[co] : 0.0;
                    for (i64 ci = 0; ci < g.cin; ++ci) {
                        const double* iplane = in + (b * g.cin + ci) * g.hin * g.win;
                        for (i64 u = 0; u < g.k; ++u) {
                            const i64 iy = y * stride + u - g.pad;
                            if (iy < 0 || iy >= g.hin) continue;
                            for (i64 v = 0; v < g.k; ++v) {
                                const i64 ix = x * stride + v - g.pad;
                                if (ix < 0 || ix >= g.win) continue;
                                acc += iplane[iy * g.win + ix] *
                                       ker[((co * g.cin + ci) * g.k + u) * g.k + v];
                            }
                        }
                    }
                    oplane[y * g.wout + x] = acc;
                }
            }
        }
    });
}

void corr2d_strided_dinput(double* din, const double* dout, const double* ker, const Corr2dGeom& g,
                           i64 stride) {
    parallel_for(g.batch * g.cin, [&](i64 begin, i64 end) {
        for (i64 bc = begin; bc < end; ++bc) {
            const i64 b = bc / g.cin;
            const i64 ci = bc % g.cin;
            double* iplane = din + (b * g.cin + ci) * g.hin * g.win;
            for (i64 co = 0; co < g.cout; ++co) {
                const double* oplane = dout + (b * g.cout + co) * g.hout * g.wout;
                for (i64 y = 0; y < g.hout; ++y) {
                    for (i64 u = 0; u < g.k; ++u) {
                        const i64 iy = y * stride + u - g.pad;
                        if (iy < 0 || iy >= g.hin) continue;
                        for (i64 x = 0; x < g.wout; ++x) {
                            for (i64 v = 0; v < g.k; ++v) {
                                const i64 ix = x * stride + v - g.pad;
                                if (ix < 0 || ix >= g.win) continue;
                                iplane[iy * g.win + ix] +=
                                    oplane[y * g.wout + x] *
                                    ker[((co * g.cin + ci) * g.k + u) * g.k + v];
                            }
                        }
                    }
                }
            }
        }
    });
}

void corr2d_strided_dkernel(double* dker, const double* dout, const double* in, const Corr2dGeom& g,
                            i64 stride) {
    parallel_for(g.cout * g.cin, [&](i64 begin, i64 end) {
        for (i64 cc = begin; cc < end; ++cc) {
            const i64 co = cc / g.cin;
            const i64 ci = cc % g.cin;
            for (i64 u = 0; u < g.k; ++u) {
                for (i64 v = 0; v < g.k; ++v) {
                    double acc = 0.0;
                    for (i64 b = 0; b < g.batch; ++b) {
                        const double* oplane = dout + (b * g.cout + co) * g.hout * g.wout;
                        const double* iplane = in + (b * g.cin + ci) * g.hin * g.win;
                        for (i64 y = 0; y < g.hout; ++y) {
                            const i64 iy = y * stride + u - g.pad;
                            if (iy < 0 || iy >= g.hin) continue;
                            for (i64 x = 0; x < g.wout; ++x) {
                                const i64 ix = x * stride + v - g.pad;
                                if (ix < 0 || ix >= g.win) continue;
                                acc += oplane[y * g.wout + x] * iplane[iy * g.win + ix];
                            }
                        }
                    }
                    dker[((co * g.cin + ci) * g.k + u) * g.k + v] += acc;
                }
            }
        }
    });
}

void bias_grad(double* dbias, const double* dout, i64 batch, i64 cout, i64 hw) {
    parallel_for(cout, [&](i64 begin, i64 end) {
        for (i64 co = begin; co < end; ++co) {
            double acc = 0.0;
            for (i64 b = 0; b < batch; ++b) {
                const double* plane = dout + (b * cout + co) * hw;
                for (i64 i = 0; i < hw; ++i) acc += plane[i];
            }
            dbias[co] += acc;
        }
    });
}

}  // namespace hbnet::kernels
