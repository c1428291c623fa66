#pragma once

#include <functional>

namespace phsyn {

/// Global worker count for frequency-grid sweeps (1 = serial).
void set_num_threads(int n);
int num_threads();

/// Runs fn(i) for i in [0, n). Work is split across num_threads() workers;
/// the first exception thrown by any worker is rethrown on the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace phsyn
