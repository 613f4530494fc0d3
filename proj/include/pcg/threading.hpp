#pragma once

namespace pcg {

// Global worker-thread cap for the OpenMP kernels. Default 1 keeps every
// pipeline serial; the parallel paths write disjoint outputs only, so any
// thread count produces bit-identical results.
void set_num_threads(int n);
int num_threads();

} // namespace pcg
