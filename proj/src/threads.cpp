#include "hopmix/threads.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace hopmix {

namespace {
int default_threads() {
    static const int n = omp_get_max_threads();
    return n;
}
}  // namespace

void set_threads(int n) {
    omp_set_num_threads(n > 0 ? n : default_threads());
}

int threads() { return omp_get_max_threads(); }

void init_threads_from_env() {
    default_threads();  // capture before any override
    const char* env = std::getenv("HOPMIX_THREADS");
    if (!env) return;
    try {
        set_threads(std::stoi(env));
    } catch (const std::exception&) {
        // bad value: leave the runtime default in place
    }
}

}  // namespace hopmix
