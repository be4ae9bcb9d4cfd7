#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "desgrada/tensor.hpp"

namespace desgrada {

enum class DomainTag { source, target };

// One undirected graph. Edges are stored once with u <= v and always include
// a self-loop per node (added at load/build time); degrees count distinct
// neighbors including the node itself.
struct Graph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;
    Tensor features; // node_count x feature_dim, entries in [0,1]
    int label = -1;  // -1 = absent (unlabeled target graph)
    std::vector<int> degrees;

    int edge_count_without_loops() const;
};

// Raw file content kept aside so density partitions can be re-written in the
// original TU shape (no added self-loops, original attribute values).
struct RawGraphRecord {
    std::vector<std::pair<int, int>> file_edges; // deduped, 0-based local ids
    std::vector<std::vector<double>> attributes; // empty when absent
    std::vector<int> node_labels;                // empty when absent
    int raw_label = 0;                           // label value as it appeared on disk
};

struct GraphDataset {
    std::vector<Graph> graphs;
    int num_classes = 0;
    int feature_dim = 0;
    std::string name;
    DomainTag domain_tag = DomainTag::source;
    std::vector<RawGraphRecord> raw; // parallel to graphs, may be empty
};

// Sorted distinct node degrees of a dataset (the set B).
struct DegreeTable {
    std::vector<int> degrees;
    std::string origin; // "source" | "target-extension"

    bool contains(int d) const;
};

enum class DensityMetric { node, edge };

// Finalizes a graph built from an edge list: ensures self-loops, sorts and
// dedupes edges, computes degrees. Throws FormatError on out-of-range
// endpoints.
void finalize_graph(Graph& g);

// Checks the documented Graph/GraphDataset invariants; throws on violation.
void validate_dataset(const GraphDataset& ds);

// node: node_count; edge: average degree 2|E|/|V| before self-loops.
double density_score(const Graph& g, DensityMetric metric);

DegreeTable collect_degree_set(const GraphDataset& ds);

// Sorts graphs ascending by density score (ties by original index) and splits
// into k contiguous chunks whose sizes differ by at most one.
std::vector<GraphDataset> partition_by_density(const GraphDataset& ds, DensityMetric metric,
                                               int k);

const char* to_string(DensityMetric m);
DensityMetric density_metric_from_string(const std::string& s);

} // namespace desgrada
