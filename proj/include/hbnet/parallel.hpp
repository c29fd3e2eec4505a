#pragma once

#include <cstdint>
#include <functional>

#include "hbnet/common.hpp"

namespace hbnet {

// Static-partition parallel loop over [0, n). Tasks write disjoint outputs;
// no cross-thread reductions happen anywhere, so results are bit-identical
// for every thread count, including 1.
void parallel_for(i64 n, const std::function<void(i64 begin, i64 end)>& body);

/// Worker count used by parallel_for. 0 = hardware concurrency.
void set_num_threads(int n);
int num_threads();

}  // namespace hbnet
