#include "desgrada/metrics.hpp"

#include <cmath>

#include "desgrada/errors.hpp"
#include "desgrada/spiking.hpp"
#include "desgrada/wasserstein.hpp"

namespace desgrada {

PearsonResult pearson(const std::vector<std::pair<double, double>>& records) {
    if (records.size() < 2) throw ArgumentError("pearson: need at least two records");
    const double n = static_cast<double>(records.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : records) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : records) {
        const double dx = x - mx;
        const double dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return {0.0, true};
    return {sxy / std::sqrt(sxx * syy), false};
}

EnergyReport energy_estimate(const std::vector<GraphTrace>& traces, const EnergyModel& model) {
    if (!(model.energy_per_sop > 0.0))
        throw ArgumentError("energy_estimate: energy_per_sop must be positive");
    EnergyReport report;
    report.per_graph.reserve(traces.size());
    for (const GraphTrace& t : traces) {
        const long long events = model.count_spikes_only ? t.spike_count : t.sop_count;
        const double joules = static_cast<double>(events) * model.energy_per_sop;
        report.per_graph.push_back(joules);
        report.total_joules += joules;
        report.total_events += events;
    }
    return report;
}

Tensor divergence_report(const std::vector<GraphDataset>& partitions, DensityMetric metric) {
    if (partitions.size() < 2) throw ArgumentError("divergence_report: need >= 2 partitions");
    std::vector<std::vector<double>> scores(partitions.size());
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        if (partitions[i].graphs.empty())
            throw ArgumentError("divergence_report: empty partition " + std::to_string(i));
        for (const Graph& g : partitions[i].graphs)
            scores[i].push_back(density_score(g, metric));
    }
    Tensor m(partitions.size(), partitions.size(), 0.0);
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        for (std::size_t j = i + 1; j < partitions.size(); ++j) {
            const double d = wasserstein_1d(scores[i], scores[j]);
            m(i, j) = d;
            m(j, i) = d;
        }
    }
    return m;
}

} // namespace desgrada
