#pragma once

#include <functional>

#include "hbnet/tape.hpp"

namespace hbnet {

struct GradCheckReport {
    double max_rel_err = 0.0;
    i64 worst_coord = -1;
    bool finite = true;        // false when some evaluation was non-finite
    i64 nonfinite_coord = -1;
};

/// Compare the taped gradient of `f` with central finite differences at
/// `point`. `f` builds a scalar loss from current program state and must
/// read `point` (by handle) while doing so; it is called with a recording
/// tape once and with nullptr for the probe evaluations. The error metric
/// is max over coordinates of |analytic - fd| / max(1, |analytic|).
GradCheckReport grad_check(const std::function<Tensor(Tape*)>& f, Tensor point, double h);

}  // namespace hbnet
