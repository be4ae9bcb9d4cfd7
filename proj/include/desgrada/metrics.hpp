#pragma once

#include <utility>
#include <vector>

#include "desgrada/graph.hpp"
#include "desgrada/tensor.hpp"

namespace desgrada {

struct GraphTrace;

struct PearsonResult {
    double r = 0.0;
    bool degenerate = false; // zero variance in either coordinate
};

// Standard Pearson coefficient over (x, y) records. Throws with fewer than
// two records; zero-variance inputs report r = 0 with the degenerate flag.
PearsonResult pearson(const std::vector<std::pair<double, double>>& records);

// Event-driven energy model: each synaptic operation costs a fixed charge.
// The per-SOP constant is configuration, not a measured value; all built-in
// assertions about energy are comparative.
struct EnergyModel {
    double energy_per_sop = 77e-15; // joules
    bool count_spikes_only = false; // ignore fan-out, bill per spike
};

struct EnergyReport {
    double total_joules = 0.0;
    std::vector<double> per_graph;
    long long total_events = 0;
};

EnergyReport energy_estimate(const std::vector<GraphTrace>& traces, const EnergyModel& model);

// Pairwise 1-D Wasserstein matrix over per-graph density scores. Symmetric
// with a zero diagonal.
Tensor divergence_report(const std::vector<GraphDataset>& partitions, DensityMetric metric);

} // namespace desgrada
