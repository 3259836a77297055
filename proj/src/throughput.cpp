#include "hopmix/throughput.hpp"

#include <chrono>

#include <omp.h>

#include "hopmix/errors.hpp"

namespace hopmix {

ThroughputReport measure_throughput(const CombinedIndex& index,
                                    const MixParams& params,
                                    const std::vector<std::vector<Vec>>& queries,
                                    const ThroughputOptions& opts) {
    if (queries.size() < 100)
        throw ValidationError("throughput needs at least 100 queries, got " +
                              std::to_string(queries.size()));
    if (opts.batch < 1) throw ValidationError("batch must be positive");
    const std::size_t hops = queries.front().size();
    if (hops == 0) throw ValidationError("queries need at least one hop vector");
    for (const auto& q : queries)
        if (q.size() != hops)
            throw ValidationError("all queries must have the same hop count");

    std::vector<std::optional<EntryKind>> masks = opts.masks;
    if (masks.empty()) masks.assign(hops, std::nullopt);
    if (masks.size() != hops)
        throw ValidationError("mask count does not match hop count");

    const int n_threads = opts.parallel ? omp_get_max_threads() : 1;
    std::vector<RunScratch> scratch(static_cast<std::size_t>(n_threads));
    std::vector<StageTimers> timers(static_cast<std::size_t>(n_threads));
    std::vector<std::uint64_t> sums(static_cast<std::size_t>(n_threads), 0);

    RunOptions run_opts;
    run_opts.keep_scores = false;
    run_opts.update_enabled = opts.update_enabled;

    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = queries.size();
    const std::size_t batch = static_cast<std::size_t>(opts.batch);
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t stop = std::min(n, start + batch);
        if (opts.parallel) {
#pragma omp parallel for schedule(static)
            for (std::int64_t qi = static_cast<std::int64_t>(start);
                 qi < static_cast<std::int64_t>(stop); ++qi) {
                const std::size_t tid = static_cast<std::size_t>(omp_get_thread_num());
                RunOptions local = run_opts;
                local.timers = &timers[tid];
                QueryState state;
                state.vectors = queries[static_cast<std::size_t>(qi)];
                const RetrievalTrace trace = run_hops(state, index, params, masks,
                                                      &scratch[tid], local);
                sums[tid] += trace.records.back().retrieved;
            }
        } else {
            RunOptions local = run_opts;
            local.timers = &timers[0];
            for (std::size_t qi = start; qi < stop; ++qi) {
                QueryState state;
                state.vectors = queries[qi];
                const RetrievalTrace trace =
                    run_hops(state, index, params, masks, &scratch[0], local);
                sums[0] += trace.records.back().retrieved;
            }
        }
    }
    const auto t1 = std::chrono::steady_clock::now();

    ThroughputReport report;
    report.seconds = std::chrono::duration<double>(t1 - t0).count();
    report.n_queries = n;
    report.batch = opts.batch;
    report.parallel = opts.parallel;
    report.qps = report.seconds > 0.0 ? static_cast<double>(n) / report.seconds
                                      : 0.0;
    for (std::size_t t = 0; t < timers.size(); ++t) {
        report.stages.score_ns += timers[t].score_ns;
        report.stages.mix_ns += timers[t].mix_ns;
        report.stages.update_ns += timers[t].update_ns;
        report.checksum += sums[t];
    }
    return report;
}

}  // namespace hopmix
