#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hopmix/hop_engine.hpp"
#include "hopmix/index.hpp"

namespace hopmix {

struct ThroughputOptions {
    int batch = 8;  // sequential batches, mirroring the runtime protocol
    bool parallel = false;  // opt-in: queries within a batch fan out over threads
    bool update_enabled = true;
    // One filter per hop; empty means unmasked hops, one per query vector.
    std::vector<std::optional<EntryKind>> masks;
};

struct ThroughputReport {
    double qps = 0.0;
    double seconds = 0.0;
    std::size_t n_queries = 0;
    int batch = 8;
    bool parallel = false;
    StageTimers stages;          // aggregated across all queries
    std::uint64_t checksum = 0;  // sum of retrieved entry ids; pins the work
};

// Wall-clock queries/second of the full hop loop. Each inner vector holds one
// query's per-hop init vectors; all queries must agree on hop count and dim.
// Needs at least 100 queries for a stable figure.
ThroughputReport measure_throughput(const CombinedIndex& index,
                                    const MixParams& params,
                                    const std::vector<std::vector<Vec>>& queries,
                                    const ThroughputOptions& opts = {});

}  // namespace hopmix
