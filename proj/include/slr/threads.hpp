#pragma once

namespace slr::threads {

// Worker count used by the OpenMP kernels. Resolution order: explicit
// set_count() (CLI --threads), SLR_THREADS env var, then 1. Results are
// bit-identical for any count; this only affects speed.
int count();
void set_count(int n);

}  // namespace slr::threads
