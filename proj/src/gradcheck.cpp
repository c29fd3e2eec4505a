#include "hbnet/gradcheck.hpp"

#include <cmath>
#include <vector>

namespace hbnet {

GradCheckReport grad_check(const std::function<Tensor(Tape*)>& f, Tensor point, double h) {
    check(point.defined() && point.numel() >= 1, "grad_check: undefined or empty point");
    check(h > 0.0, "grad_check: h must be positive");

    const bool had_rg = point.requires_grad();
    point.set_requires_grad(true);
    point.zero_grad();
    Tape tape;
    Tensor loss = f(&tape);
    check(loss.numel() == 1, "grad_check: f must produce a scalar");
    tape.backward(loss);
    std::vector<double> analytic(point.grad().begin(), point.grad().end());

    GradCheckReport report;
    auto data = point.data();
    for (i64 i = 0; i < point.numel(); ++i) {
        const double saved = data[static_cast<size_t>(i)];
        data[static_cast<size_t>(i)] = saved + h;
        const double fp = f(nullptr).scalar();
        data[static_cast<size_t>(i)] = saved - h;
        const double fm = f(nullptr).scalar();
        data[static_cast<size_t>(i)] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            report.finite = false;
            report.nonfinite_coord = i;
            break;
        }
        const double fd = (fp - fm) / (2.0 * h);
        const double a = analytic[static_cast<size_t>(i)];
        const double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coord = i;
        }
    }
    if (!had_rg) point.set_requires_grad(false);
    return report;
}

}  // namespace hbnet
