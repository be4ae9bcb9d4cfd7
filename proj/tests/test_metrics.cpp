#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "desgrada/errors.hpp"
#include "desgrada/metrics.hpp"
#include "desgrada/rng.hpp"
#include "desgrada/spiking.hpp"
#include "test_util.hpp"

using namespace desgrada;
using testutil::make_dataset;
using testutil::make_graph;

namespace {

GraphTrace trace_with(long long spikes, long long sops) {
    GraphTrace t;
    t.spike_count = spikes;
    t.sop_count = sops;
    return t;
}

} // namespace

TEST_CASE("energy: zero spikes cost nothing") {
    EnergyModel em;
    EnergyReport r = energy_estimate({trace_with(0, 0)}, em);
    CHECK(r.total_joules == 0.0);
    CHECK(r.total_events == 0);
}

TEST_CASE("energy: one spike with fan-out three") {
    EnergyModel em;
    em.energy_per_sop = 2.0;
    EnergyReport r = energy_estimate({trace_with(1, 3)}, em);
    CHECK(r.total_joules == doctest::Approx(6.0));

    em.count_spikes_only = true;
    EnergyReport r2 = energy_estimate({trace_with(1, 3)}, em);
    CHECK(r2.total_joules == doctest::Approx(2.0));
}

TEST_CASE("energy is linear in the per-SOP constant and additive over graphs") {
    SplitMix64 rng(3);
    std::vector<GraphTrace> traces;
    for (int i = 0; i < 6; ++i)
        traces.push_back(trace_with(static_cast<long long>(rng.below(50)),
                                    static_cast<long long>(rng.below(500))));
    EnergyModel em;
    em.energy_per_sop = 1.5e-14;
    EnergyReport whole = energy_estimate(traces, em);

    EnergyModel doubled = em;
    doubled.energy_per_sop = 3.0e-14;
    CHECK(energy_estimate(traces, doubled).total_joules ==
          doctest::Approx(2.0 * whole.total_joules).epsilon(1e-15));

    double sum = 0.0;
    for (const GraphTrace& t : traces) sum += energy_estimate({t}, em).total_joules;
    CHECK(sum == doctest::Approx(whole.total_joules).epsilon(1e-15));

    EnergyModel bad;
    bad.energy_per_sop = 0.0;
    CHECK_THROWS_AS(energy_estimate(traces, bad), ArgumentError);
}

TEST_CASE("doubling latency at most doubles energy under persistent firing") {
    Graph g = make_graph(1, {}, 1, 1.0);
    LIFConfig cfg;
    cfg.layers = 1;
    cfg.hidden_dim = 2;
    cfg.v_th_init = 0.2;
    std::vector<LayerParams> params = {{Tensor(1, 2, 2.0), Tensor(1, 2)}};
    auto run = [&](int T) {
        LIFConfig c = cfg;
        c.T = T;
        ThresholdTable table(c.v_th_init);
        SpikeTensor spikes = bernoulli_encode(g, T, 4);
        EncodeOptions opts;
        opts.aggregation = AggregationKind::raw_sum;
        return encode_graph(g, spikes, params, table, c, opts).sop_count;
    };
    const long long e1 = run(5);
    const long long e2 = run(10);
    CHECK(e2 <= 2 * e1);
    CHECK(e2 >= e1);
}

TEST_CASE("pearson closed forms") {
    std::vector<std::pair<double, double>> linear = {{1, 2}, {2, 4}, {3, 6}};
    CHECK(pearson(linear).r == doctest::Approx(1.0));
    std::vector<std::pair<double, double>> anti = {{1, 6}, {2, 4}, {3, 2}};
    CHECK(pearson(anti).r == doctest::Approx(-1.0));
    std::vector<std::pair<double, double>> mixed = {{1, 0.2}, {2, 0.4}, {3, 0.5}};
    CHECK(pearson(mixed).r == doctest::Approx(0.982).epsilon(1e-3));
    CHECK_THROWS_AS(pearson({{1.0, 1.0}}), ArgumentError);

    std::vector<std::pair<double, double>> flat = {{1, 3}, {2, 3}, {3, 3}};
    PearsonResult pr = pearson(flat);
    CHECK(pr.degenerate);
    CHECK(pr.r == 0.0);
}

TEST_CASE("pearson is invariant to positive affine rescaling") {
    SplitMix64 rng(10);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({rng.normal(), rng.normal()});
    const double base = pearson(pts).r;
    CHECK(base >= -1.0);
    CHECK(base <= 1.0);
    std::vector<std::pair<double, double>> scaled;
    for (auto [x, y] : pts) scaled.push_back({3.0 * x + 7.0, 0.5 * y - 2.0});
    CHECK(pearson(scaled).r == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("divergence matrix: identical partitions vanish") {
    GraphDataset a = make_dataset({make_graph(4, {{0, 1}}), make_graph(6, {{0, 1}})}, 1, 1);
    Tensor m = divergence_report({a, a}, DensityMetric::node);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == 0.0);
}

TEST_CASE("divergence matrix: point masses and symmetry") {
    GraphDataset a = make_dataset({make_graph(1, {})}, 1, 1);
    GraphDataset b = make_dataset({make_graph(4, {})}, 1, 1);
    Tensor m = divergence_report({a, b}, DensityMetric::node);
    CHECK(m(0, 1) == doctest::Approx(3.0));
    CHECK(m(1, 0) == doctest::Approx(3.0));
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 1) == 0.0);

    GraphDataset empty;
    CHECK_THROWS_AS(divergence_report({a, empty}, DensityMetric::node), ArgumentError);
    CHECK_THROWS_AS(divergence_report({a}, DensityMetric::node), ArgumentError);
}

TEST_CASE("divergence matrix obeys the triangle inequality") {
    SplitMix64 rng(21);
    std::vector<GraphDataset> parts;
    for (int p = 0; p < 4; ++p) {
        std::vector<Graph> graphs;
        for (int i = 0; i < 6; ++i)
            graphs.push_back(make_graph(2 + static_cast<int>(rng.below(12)), {}));
        parts.push_back(make_dataset(std::move(graphs), 1, 1));
    }
    Tensor m = divergence_report(parts, DensityMetric::node);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 4; ++k)
                CHECK(m(i, j) <= m(i, k) + m(k, j) + 1e-12);
}
