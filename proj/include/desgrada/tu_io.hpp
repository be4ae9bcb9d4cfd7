#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "desgrada/graph.hpp"

namespace desgrada {

struct TuLoadOptions {
    int degree_onehot_cap = 50; // bucket cap when synthesizing degree features
};

// Reads the sparse TU text format from `root_path/{name}_A.txt` and friends.
// Self-loops are added to every node, attribute columns are min-max scaled to
// [0,1] (zero-range columns become 0), labels are remapped to contiguous ids,
// and graphs without attribute/label files get one-hot degree features.
GraphDataset load_tudataset(const std::string& root_path, const std::string& name,
                            const TuLoadOptions& opts = {});

// Writes a dataset back out in TU shape under `dir/{name}_*.txt`, using the
// raw sidecar records when present so partition files match the original
// conventions. Synthetic datasets without raw records emit their edge lists
// (self-loops included) and no attribute file when features were synthesized.
void write_tudataset(const std::string& dir, const std::string& name, const GraphDataset& ds);

// Partition driver: writes `{name}_P0..Pk-1/` directories plus manifest.json
// recording metric, k, per-chunk score ranges and the seed.
std::vector<std::string> write_partitions(const std::string& out_dir, const std::string& name,
                                          const GraphDataset& ds, DensityMetric metric, int k,
                                          std::uint64_t seed);

// FNV-1a over the dataset's canonical byte content; used for run manifests.
std::string fingerprint_dataset(const GraphDataset& ds);

} // namespace desgrada
