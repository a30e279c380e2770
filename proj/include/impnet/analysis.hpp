#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "impnet/model.hpp"
#include "impnet/synthdata.hpp"

namespace impnet {

// Quantitative probes of what the first convolution layer learned and of
// how much variation the intermap pool absorbs.

struct GroupCoherenceReport {
    std::vector<double> per_group;  // mean pairwise cosine inside each group
    double within_mean = 0.0;       // mean of per_group (groups of size >= 2)
    double across_mean = 0.0;       // mean pairwise cosine across groups
    double gap = 0.0;               // within_mean - across_mean
    std::size_t group_size = 0;
    std::size_t stride = 0;
};

// Cosine similarity over flattened first-layer filters, grouped by the
// intermap pool that follows them. Requires layer 1 = convolution and
// layer 2 = intermap pool.
GroupCoherenceReport group_coherence(const Network& net);

struct InvarianceReport {
    std::vector<int> shifts;        // 1..max_shift
    std::vector<double> pre_mean;   // mean relative L2 distance before the pool
    std::vector<double> post_mean;  // after the pool
    std::vector<double> ratio;      // post/pre per shift
};

// For each shift magnitude, renders noise-free class patterns shifted both
// ways and measures the relative L2 distance between shifted and unshifted
// activations at the pre-pool (layer 1) and post-pool (layer 2) taps.
InvarianceReport shift_invariance(const Network& net,
                                  const std::vector<PatternClass>& classes,
                                  int max_shift);

// One 8-bit PGM (min-max normalized; a constant filter maps to all-zero
// pixels) and one full-precision CSV per filter of the given conv layer
// (0-based). Files are named L{layer}_g{group}_m{map}.{pgm,csv} with the
// layer number 1-based and groups taken from the following intermap pool
// when there is one, so group adjacency and IMPO map order are visible in
// a directory listing. Returns the number of filters written.
std::size_t export_filters(const Network& net, std::size_t layer_index,
                           const std::filesystem::path& dir);

// JSON-lines report: one record per metric.
void write_reports_jsonl(const std::filesystem::path& path,
                         const std::optional<GroupCoherenceReport>& coherence,
                         const std::optional<InvarianceReport>& invariance);

}  // namespace impnet
