#pragma once

#include <cstddef>

namespace hopmix::kernels {

// Inner-product scoring over a contiguous dim-strided f32 block:
//   out[m] = sum_i q[i] * values[m*dim + i]   for m in [0, n)
// Accumulation is in double per row with a fixed lane layout and reduction
// tree, so the serial and OpenMP variants are bit-identical for any thread
// count (rows are independent and each row sums in one fixed order).

// Serial reference. Kept as the test oracle and for the kernel benchmark.
void dot_scores_serial(const float* values, std::size_t n, std::size_t dim,
                       const double* q, double* out);

// OpenMP-parallel over rows.
void dot_scores_omp(const float* values, std::size_t n, std::size_t dim,
                    const double* q, double* out);

// Dispatches to the OpenMP kernel when more than one thread is configured,
// otherwise runs the serial path.
void dot_scores(const float* values, std::size_t n, std::size_t dim,
                const double* q, double* out);

}  // namespace hopmix::kernels
