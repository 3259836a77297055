#include "hopmix/kernels.hpp"

#include <cstdint>
#include <omp.h>

namespace hopmix::kernels {

namespace {

// Eight independent accumulator lanes folded by a fixed tree: breaks the
// serial FP dependency chain (and lets the compiler vectorize) while keeping
// the summation order identical for every caller and thread count.
inline double dot_row(const float* row, const double* q, std::size_t dim) {
    double lane[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 8 <= dim; i += 8)
        for (std::size_t l = 0; l < 8; ++l)
            lane[l] += q[i + l] * static_cast<double>(row[i + l]);
    for (std::size_t l = 0; i < dim; ++i, ++l)
        lane[l] += q[i] * static_cast<double>(row[i]);
    return ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
           ((lane[4] + lane[5]) + (lane[6] + lane[7]));
}

}  // namespace

void dot_scores_serial(const float* values, std::size_t n, std::size_t dim,
                       const double* q, double* out) {
    for (std::size_t m = 0; m < n; ++m) out[m] = dot_row(values + m * dim, q, dim);
}

void dot_scores_omp(const float* values, std::size_t n, std::size_t dim,
                    const double* q, double* out) {
    const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t m = 0; m < nn; ++m)
        out[m] = dot_row(values + static_cast<std::size_t>(m) * dim, q, dim);
}

void dot_scores(const float* values, std::size_t n, std::size_t dim,
                const double* q, double* out) {
    if (omp_get_max_threads() > 1 && n >= 256)
        dot_scores_omp(values, n, dim, q, out);
    else
        dot_scores_serial(values, n, dim, q, out);
}

}  // namespace hopmix::kernels
