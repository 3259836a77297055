#pragma once

namespace hopmix {

// Caps the OpenMP thread pool. 0 or negative restores the runtime default.
void set_threads(int n);
int threads();

// Applies HOPMIX_THREADS if set; silently ignores unparseable values.
void init_threads_from_env();

}  // namespace hopmix
