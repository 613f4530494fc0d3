#include "pcg/threading.hpp"

namespace pcg {

namespace {
int g_threads = 1;
}

void set_num_threads(int n) { g_threads = n < 1 ? 1 : n; }
int num_threads() { return g_threads; }

} // namespace pcg
