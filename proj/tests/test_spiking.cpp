#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "desgrada/encode.hpp"
#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"
#include "desgrada/spiking.hpp"
#include "desgrada/synthetic.hpp"
#include "test_util.hpp"

using namespace desgrada;
using testutil::make_graph;

namespace {

LIFConfig small_cfg(int T, int layers, int hidden, double v_th = 0.2) {
    LIFConfig cfg;
    cfg.T = T;
    cfg.layers = layers;
    cfg.hidden_dim = hidden;
    cfg.v_th_init = v_th;
    return cfg;
}

std::vector<LayerParams> unit_layers(int layers, int in_dim, int hidden, double w) {
    std::vector<LayerParams> params(static_cast<std::size_t>(layers));
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? in_dim : hidden;
        params[static_cast<std::size_t>(l)].weight =
            Tensor(static_cast<std::size_t>(in), static_cast<std::size_t>(hidden));
        for (int i = 0; i < std::min(in, hidden); ++i)
            params[static_cast<std::size_t>(l)].weight(static_cast<std::size_t>(i),
                                                       static_cast<std::size_t>(i)) = w;
        params[static_cast<std::size_t>(l)].bias = Tensor(1, static_cast<std::size_t>(hidden));
    }
    return params;
}

// Independent evaluator of the integrate/fire/reset recurrence for one
// layer over a hand-built dense adjacency; no shared code with the engine.
struct BruteResult {
    std::vector<std::vector<double>> u_rows; // per step, graph-mean membrane
    std::vector<double> s_last;              // graph-mean spikes at final step
};

BruteResult brute_force_single_layer(const Graph& g, const SpikeTensor& spikes,
                                     const Tensor& W, const Tensor& bias, double leak,
                                     double v_reset, double threshold, bool gcn_norm) {
    const int n = g.node_count;
    const int d = static_cast<int>(W.cols());
    const int f = static_cast<int>(W.rows());
    std::vector<std::vector<double>> A(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (const auto& [u, v] : g.edges) {
        double w = 1.0;
        if (gcn_norm)
            w = 1.0 / std::sqrt(static_cast<double>(g.degrees[static_cast<std::size_t>(u)]) *
                                static_cast<double>(g.degrees[static_cast<std::size_t>(v)]));
        A[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = w;
        A[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = w;
    }

    std::vector<std::vector<double>> u(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<std::vector<double>> s = u;
    BruteResult out;
    for (int t = 0; t < spikes.T; ++t) {
        std::vector<std::vector<double>> next_u = u;
        std::vector<std::vector<double>> next_s = s;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) {
                double current = bias[static_cast<std::size_t>(k)];
                for (int j = 0; j < n; ++j) {
                    if (A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 0.0)
                        continue;
                    double zjk = 0.0;
                    for (int p = 0; p < f; ++p)
                        zjk += static_cast<double>(spikes.at(t, j, p)) *
                               W(static_cast<std::size_t>(p), static_cast<std::size_t>(k));
                    current += A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * zjk;
                }
                const double u_pre =
                    leak * (u[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] -
                            threshold *
                                s[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) +
                    current;
                const double spike = u_pre - threshold >= 0.0 ? 1.0 : 0.0;
                next_s[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = spike;
                next_u[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                    spike > 0.0 ? v_reset : u_pre;
            }
        }
        u = next_u;
        s = next_s;
        std::vector<double> row(static_cast<std::size_t>(d), 0.0);
        for (int k = 0; k < d; ++k) {
            for (int i = 0; i < n; ++i)
                row[static_cast<std::size_t>(k)] +=
                    u[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            row[static_cast<std::size_t>(k)] /= n;
        }
        out.u_rows.push_back(row);
    }
    out.s_last.assign(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < n; ++i)
            out.s_last[static_cast<std::size_t>(k)] +=
                s[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        out.s_last[static_cast<std::size_t>(k)] /= n;
    }
    return out;
}

} // namespace

TEST_CASE("aggregate: zero spikes give bias-only current") {
    Graph g = make_graph(3, {{0, 1}, {1, 2}});
    LayerParams lp;
    lp.weight = Tensor(2, 4, 0.7);
    lp.bias = Tensor::row({1.0, 2.0, 3.0, 4.0});
    Tensor out = aggregate(g, Tensor(3, 2, 0.0), lp);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(out(i, j) == doctest::Approx(lp.bias[j]));
}

TEST_CASE("aggregate: isolated self-looped node is the identity") {
    Graph g = make_graph(1, {});
    LayerParams lp;
    lp.weight = Tensor(3, 3);
    for (int i = 0; i < 3; ++i)
        lp.weight(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = 1.0;
    lp.bias = Tensor(1, 3, 0.0);
    Tensor x = Tensor::row({0.0, 1.0, 1.0});
    Tensor out = aggregate(g, x, lp, AggregationKind::gcn_norm);
    for (std::size_t j = 0; j < 3; ++j) CHECK(out(0, j) == doctest::Approx(x[j]));
}

TEST_CASE("aggregate: raw-sum path graph sums neighbor spikes") {
    Graph g = make_graph(2, {{0, 1}});
    LayerParams lp;
    lp.weight = Tensor(1, 1);
    lp.weight(0, 0) = 1.0;
    lp.bias = Tensor(1, 1, 0.0);
    Tensor spikes(2, 1);
    spikes(0, 0) = 1.0;
    spikes(1, 0) = 1.0;
    Tensor out = aggregate(g, spikes, lp, AggregationKind::raw_sum);
    CHECK(out(0, 0) == doctest::Approx(2.0)); // own spike + neighbor
    CHECK(out(1, 0) == doctest::Approx(2.0));

    Tensor bad(3, 1, 0.0);
    CHECK_THROWS_AS(aggregate(g, bad, lp), ShapeError);
}

TEST_CASE("lif_step hand traces") {
    MembraneState st;
    st.u = Tensor(1, 1, 0.0);
    st.last_spikes = Tensor(1, 1, 0.0);

    // strong current fires and hard-resets
    auto [s1, st1] = lif_step(st, Tensor(1, 1, 2.0), {1.0}, 0.5, 0.0);
    CHECK(s1(0, 0) == 1.0);
    CHECK(st1.u(0, 0) == 0.0);

    // resting neuron stays silent
    auto [s2, st2] = lif_step(st, Tensor(1, 1, 0.0), {1.0}, 0.5, 0.0);
    CHECK(s2(0, 0) == 0.0);
    CHECK(st2.u(0, 0) == 0.0);

    // membrane exactly at threshold fires (H(0) = 1)
    auto [s3, st3] = lif_step(st, Tensor(1, 1, 1.0), {1.0}, 0.5, 0.0);
    CHECK(s3(0, 0) == 1.0);

    // second step after a fire keeps the leak subtraction term
    auto [s4, st4] = lif_step(st1, Tensor(1, 1, 2.0), {1.0}, 0.5, 0.0);
    CHECK(s4(0, 0) == 1.0); // u' = 0.5*(0 - 1) + 2 = 1.5 >= 1
    (void)st4;

    CHECK_THROWS_AS(
        lif_step(st, Tensor(1, 1, std::numeric_limits<double>::quiet_NaN()), {1.0}, 0.5, 0.0),
        NumericError);
}

TEST_CASE("threshold table nearest lookup with ties to the smaller degree") {
    ThresholdTable t(0.2);
    t.register_degrees({2, 6});
    std::map<int, double> rates = {{2, 1.0}, {6, 0.0}};
    t.ema_update(rates, 0.5); // 2 -> 0.6, 6 -> 0.1
    CHECK(t.lookup(2) == doctest::Approx(0.6));
    CHECK(t.lookup(1) == doctest::Approx(0.6));  // below range
    CHECK(t.lookup(9) == doctest::Approx(0.1));  // above range
    CHECK(t.lookup(3) == doctest::Approx(0.6));  // closer to 2
    CHECK(t.lookup(5) == doctest::Approx(0.1));  // closer to 6
    CHECK(t.lookup(4) == doctest::Approx(0.6));  // tie -> smaller degree
}

TEST_CASE("adapt_thresholds EMA arithmetic") {
    ThresholdTable t(0.2);
    t.register_degrees({3});

    SUBCASE("alpha 0 leaves the table unchanged") {
        t.ema_update({{3, 0.9}}, 0.0);
        CHECK(t.lookup(3) == doctest::Approx(0.2));
    }
    SUBCASE("rate equal to threshold is a fixed point") {
        t.ema_update({{3, 0.2}}, 0.7);
        CHECK(t.lookup(3) == doctest::Approx(0.2));
    }
    SUBCASE("standard update") {
        t.ema_update({{3, 1.0}}, 0.1);
        CHECK(t.lookup(3) == doctest::Approx(0.28));
    }
    SUBCASE("unseen degree registers by nearest copy before updating") {
        t.ema_update({{3, 1.0}}, 0.5); // 3 -> 0.6
        t.ema_update({{7, 0.0}}, 0.5); // 7 registers at 0.6, then halves
        CHECK(t.lookup(7) == doctest::Approx(0.3));
    }
    SUBCASE("alpha outside [0,1] rejected") {
        CHECK_THROWS_AS(t.ema_update({{3, 0.5}}, 1.5), ArgumentError);
    }
}

TEST_CASE("EMA contraction law holds exactly over random triples") {
    SplitMix64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.uniform(0.0, 2.0);
        const double s = rng.uniform();
        const double a = rng.uniform();
        ThresholdTable t(v);
        t.register_degrees({1});
        t.ema_update({{1, s}}, a);
        const double v2 = t.lookup(1);
        CHECK(std::abs(std::abs(v2 - s) - (1.0 - a) * std::abs(v - s)) <= 1e-12);
    }
}

TEST_CASE("encode_graph: dead input stays silent") {
    Graph g = make_graph(3, {{0, 1}, {1, 2}}, 2, 0.0);
    LIFConfig cfg = small_cfg(5, 2, 4);
    auto params = unit_layers(2, 2, 4, 0.9);
    ThresholdTable table(cfg.v_th_init);
    table.register_degrees({2, 3});
    SpikeTensor spikes = bernoulli_encode(g, cfg.T, 7);
    GraphTrace trace = encode_graph(g, spikes, params, table, cfg);
    CHECK(trace.spike_count == 0);
    CHECK(trace.sop_count == 0);
    for (std::size_t j = 0; j < trace.s_G.size(); ++j) CHECK(trace.s_G[j] == 0.0);
    for (std::size_t i = 0; i < trace.U_G.size(); ++i) CHECK(trace.U_G[i] == 0.0);
}

TEST_CASE("encode_graph: constant super-threshold drive fires every step") {
    Graph g = make_graph(1, {}, 1, 1.0); // one node, self-loop, feature 1
    LIFConfig cfg = small_cfg(3, 1, 1, 1.0);
    auto params = unit_layers(1, 1, 1, 2.0); // current = 2 every step
    ThresholdTable table(cfg.v_th_init);
    table.register_degrees({1});
    SpikeTensor spikes = bernoulli_encode(g, cfg.T, 3);
    EncodeOptions opts;
    opts.aggregation = AggregationKind::raw_sum;
    GraphTrace trace = encode_graph(g, spikes, params, table, cfg, opts);
    CHECK(trace.spike_count == 3);
    CHECK(trace.s_G[0] == 1.0);
    for (int t = 0; t < 3; ++t)
        CHECK(trace.U_G(static_cast<std::size_t>(t), 0) == cfg.v_reset); // reset accounting
}

TEST_CASE("encode_graph adaptive threshold follows the EMA recurrence") {
    Graph g = make_graph(1, {}, 1, 1.0);
    auto params = unit_layers(1, 1, 1, 2.0);
    for (int T : {1, 2, 3}) {
        LIFConfig cfg = small_cfg(T, 1, 1, 0.2);
        cfg.ema_alpha = 0.5;
        ThresholdTable table(cfg.v_th_init);
        table.register_degrees({1});
        SpikeTensor spikes = bernoulli_encode(g, cfg.T, 3);
        EncodeOptions opts;
        opts.adapt = true;
        opts.aggregation = AggregationKind::raw_sum;
        encode_graph(g, spikes, params, table, cfg, opts);
        // firing rate 1 each step: 0.2 -> 0.6 -> 0.8 -> 0.9
        const double expected = T == 1 ? 0.6 : (T == 2 ? 0.8 : 0.9);
        CHECK(table.lookup(1) == doctest::Approx(expected));
    }
}

TEST_CASE("encode_graph is a pure function of its inputs") {
    SplitMix64 rng(4);
    Graph g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}}, 3, 0.6);
    LIFConfig cfg = small_cfg(6, 2, 8);
    auto params = unit_layers(2, 3, 8, 0.0);
    for (auto& lp : params)
        for (std::size_t i = 0; i < lp.weight.size(); ++i) lp.weight[i] = rng.normal() * 0.4;
    ThresholdTable table(cfg.v_th_init);
    table.register_degrees({3, 4});
    SpikeTensor spikes = bernoulli_encode(g, cfg.T, 21);

    ThresholdTable t1 = table, t2 = table;
    GraphTrace a = encode_graph(g, spikes, params, t1, cfg);
    GraphTrace b = encode_graph(g, spikes, params, t2, cfg);
    CHECK(std::memcmp(a.s_G.data(), b.s_G.data(), a.s_G.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.U_G.data(), b.U_G.data(), a.U_G.size() * sizeof(double)) == 0);
    CHECK(a.spike_count == b.spike_count);
    CHECK(a.sop_count == b.sop_count);
}

TEST_CASE("binary spikes and mean readouts stay in range") {
    SplitMix64 rng(8);
    Graph g = make_graph(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}, 2, 0.7);
    LIFConfig cfg = small_cfg(7, 2, 5);
    auto params = unit_layers(2, 2, 5, 0.0);
    for (auto& lp : params)
        for (std::size_t i = 0; i < lp.weight.size(); ++i) lp.weight[i] = rng.normal();
    ThresholdTable table(cfg.v_th_init);
    SpikeTensor spikes = bernoulli_encode(g, cfg.T, 5);
    GraphTrace trace = encode_graph(g, spikes, params, table, cfg);
    for (std::size_t j = 0; j < trace.s_G.size(); ++j) {
        CHECK(trace.s_G[j] >= 0.0);
        CHECK(trace.s_G[j] <= 1.0);
    }
    CHECK(trace.sop_count >= trace.spike_count); // every node has a self-loop
}

TEST_CASE("reset law: stored membrane equals v_reset after every fire") {
    // One node, one channel: track the recurrence manually alongside.
    Graph g = make_graph(1, {}, 1, 0.5);
    LIFConfig cfg = small_cfg(50, 1, 1, 0.3);
    cfg.v_reset = -0.25;
    auto params = unit_layers(1, 1, 1, 0.8);
    ThresholdTable table(cfg.v_th_init);
    table.register_degrees({1});
    SpikeTensor spikes = bernoulli_encode(g, cfg.T, 123);

    GraphTrace trace = encode_graph(g, spikes, params, table, cfg,
                                    {false, AggregationKind::raw_sum, nullptr, nullptr});
    double u = 0.0, s = 0.0;
    for (int t = 0; t < cfg.T; ++t) {
        const double current = 0.8 * static_cast<double>(spikes.at(t, 0, 0));
        const double u_pre = cfg.leak * (u - 0.3 * s) + current;
        s = u_pre - 0.3 >= 0.0 ? 1.0 : 0.0;
        u = s > 0.0 ? cfg.v_reset : u_pre;
        if (s > 0.0) CHECK(trace.U_G(static_cast<std::size_t>(t), 0) == cfg.v_reset);
        CHECK(trace.U_G(static_cast<std::size_t>(t), 0) == doctest::Approx(u).epsilon(1e-15));
    }
}

TEST_CASE("equivalence oracle: engine matches the brute-force evaluator") {
    SplitMix64 rng(55);
    for (int iter = 0; iter < 25; ++iter) {
        const int n = 1 + static_cast<int>(rng.below(3));
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (rng.uniform() < 0.6) edges.push_back({u, v});
        Graph g = make_graph(n, std::move(edges), 2, 0.0);
        for (std::size_t i = 0; i < g.features.size(); ++i) g.features[i] = rng.uniform();

        LIFConfig cfg = small_cfg(2, 1, 3, 0.25);
        cfg.leak = 0.6;
        Tensor W(2, 3);
        for (std::size_t i = 0; i < W.size(); ++i) W[i] = rng.normal() * 0.8;
        Tensor bias(1, 3);
        for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = rng.normal() * 0.2;
        std::vector<LayerParams> params = {{W, bias}};
        ThresholdTable table(cfg.v_th_init);

        const bool gcn = iter % 2 == 0;
        SpikeTensor spikes = bernoulli_encode(g, cfg.T, 1000 + static_cast<std::uint64_t>(iter));
        EncodeOptions opts;
        opts.aggregation = gcn ? AggregationKind::gcn_norm : AggregationKind::raw_sum;
        GraphTrace trace = encode_graph(g, spikes, params, table, cfg, opts);
        BruteResult brute = brute_force_single_layer(g, spikes, W, bias, cfg.leak, cfg.v_reset,
                                                     cfg.v_th_init, gcn);
        for (int t = 0; t < cfg.T; ++t)
            for (int k = 0; k < 3; ++k)
                CHECK(trace.U_G(static_cast<std::size_t>(t), static_cast<std::size_t>(k)) ==
                      doctest::Approx(
                          brute.u_rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)])
                          .epsilon(1e-12));
        for (int k = 0; k < 3; ++k)
            CHECK(trace.s_G[static_cast<std::size_t>(k)] ==
                  doctest::Approx(brute.s_last[static_cast<std::size_t>(k)]).epsilon(1e-12));
    }
}

TEST_CASE("differentiable encode mirrors the plain engine") {
    SplitMix64 rng(66);
    Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, 2, 0.0);
    for (std::size_t i = 0; i < g.features.size(); ++i) g.features[i] = rng.uniform();
    LIFConfig cfg = small_cfg(4, 2, 6);
    auto params = unit_layers(2, 2, 6, 0.0);
    for (auto& lp : params)
        for (std::size_t i = 0; i < lp.weight.size(); ++i) lp.weight[i] = rng.normal() * 0.5;
    ThresholdTable table(cfg.v_th_init);
    table.register_degrees({3});
    SpikeTensor spikes = bernoulli_encode(g, cfg.T, 77);

    ThresholdTable t1 = table;
    GraphTrace plain = encode_graph(g, spikes, params, t1, cfg);

    Tape tape;
    std::vector<Tape::Ref> ws, bs;
    for (const auto& lp : params) {
        ws.push_back(tape.leaf(lp.weight, true));
        bs.push_back(tape.leaf(lp.bias, true));
    }
    const SymAdj adj = build_aggregation(g, AggregationKind::gcn_norm);
    DiffTrace diff = encode_graph_diff(tape, g, spikes, ws, bs, adj, table, cfg);

    const Tensor& sg = tape.value(diff.s_G);
    const Tensor& ug = tape.value(diff.U_G);
    for (std::size_t j = 0; j < sg.size(); ++j)
        CHECK(sg[j] == doctest::Approx(plain.s_G[j]).epsilon(1e-12));
    for (std::size_t j = 0; j < ug.size(); ++j)
        CHECK(ug[j] == doctest::Approx(plain.U_G[j]).epsilon(1e-12));
    for (std::size_t j = 0; j < diff.shallow.size(); ++j)
        CHECK(diff.shallow[j] == doctest::Approx(plain.shallow[j]).epsilon(1e-12));
    CHECK(diff.spike_count == plain.spike_count);
    CHECK(diff.sop_count == plain.sop_count);
}

TEST_CASE("op counters scale with the complexity model") {
    SplitMix64 rng(12);
    auto make_random = [&](int n, double p) {
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (rng.uniform() < p) edges.push_back({u, v});
        Graph g = make_graph(n, std::move(edges), 8, 0.5);
        return g;
    };
    auto run = [&](const Graph& g, int T, int d) {
        LIFConfig cfg = small_cfg(T, 1, d);
        std::vector<LayerParams> params = {
            {Tensor(8, static_cast<std::size_t>(d), 0.05), Tensor(1, static_cast<std::size_t>(d))}};
        ThresholdTable table(cfg.v_th_init);
        SpikeTensor spikes = bernoulli_encode(g, T, 5);
        return encode_graph(g, spikes, params, table, cfg).op_count;
    };
    auto predicted = [](const Graph& g, int T, int d_in, int d) {
        const SymAdj adj = build_aggregation(g, AggregationKind::gcn_norm);
        return static_cast<double>(T) *
               (static_cast<double>(g.node_count) * d_in * d +
                static_cast<double>(adj.nnz()) * d);
    };

    const Graph g30 = make_random(30, 0.2);
    const Graph g30dense = make_random(30, 0.45);

    // doubling T
    {
        const double measured = static_cast<double>(run(g30, 12, 16)) /
                                static_cast<double>(run(g30, 6, 16));
        const double expect = predicted(g30, 12, 8, 16) / predicted(g30, 6, 8, 16);
        CHECK(measured / expect <= 1.15);
        CHECK(measured / expect >= 0.85);
    }
    // doubling d (quadratic term dominates)
    {
        const double measured = static_cast<double>(run(g30, 6, 32)) /
                                static_cast<double>(run(g30, 6, 16));
        const double expect = predicted(g30, 6, 8, 32) / predicted(g30, 6, 8, 16);
        CHECK(measured / expect <= 1.15);
        CHECK(measured / expect >= 0.85);
    }
    // denser adjacency (linear in nnz)
    {
        const double measured = static_cast<double>(run(g30dense, 6, 16)) /
                                static_cast<double>(run(g30, 6, 16));
        const double expect = predicted(g30dense, 6, 8, 16) / predicted(g30, 6, 8, 16);
        CHECK(measured / expect <= 1.15);
        CHECK(measured / expect >= 0.85);
    }
}

TEST_CASE("star graph: hub outspikes leaves under a fixed threshold") {
    const int leaves = 8;
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v <= leaves; ++v) edges.push_back({0, v});
    Graph g = make_graph(leaves + 1, std::move(edges), 4, 0.5);

    LIFConfig cfg = small_cfg(9, 1, 8, 0.2);
    SplitMix64 rng(3);
    std::vector<LayerParams> params = {{Tensor(4, 8), Tensor(1, 8)}};
    for (std::size_t i = 0; i < params[0].weight.size(); ++i)
        params[0].weight[i] = std::abs(rng.normal()) * 0.1;
    ThresholdTable table(cfg.v_th_init);
    table.register_degrees({2, leaves + 1});

    double hub = 0.0, leaf = 0.0;
    const int trials = 40;
    for (int trial = 0; trial < trials; ++trial) {
        SpikeTensor spikes = bernoulli_encode(g, cfg.T, 900 + static_cast<std::uint64_t>(trial));
        std::vector<long long> counts;
        EncodeOptions opts;
        opts.aggregation = AggregationKind::raw_sum;
        opts.collect_node_spikes = &counts;
        ThresholdTable fresh = table;
        encode_graph(g, spikes, params, fresh, cfg, opts);
        hub += static_cast<double>(counts[0]);
        for (int v = 1; v <= leaves; ++v) leaf += static_cast<double>(counts[static_cast<std::size_t>(v)]) / leaves;
    }
    CHECK(hub / trials >= leaf / trials);
}

TEST_CASE("prop1: constant-degree graphs are degenerate") {
    LIFConfig cfg = small_cfg(5, 1, 4);
    Prop1Result res = prop1_experiment({2, 2}, 3, cfg, 31);
    CHECK(res.fixed_degenerate);
    CHECK(res.fixed_corr == 0.0);
}

TEST_CASE("prop1: adaptive thresholds flatten the weight-frequency correlation") {
    LIFConfig cfg = small_cfg(9, 1, 16, 0.2);
    cfg.ema_alpha = 0.1;
    const auto seq = power_law_degree_sequence(150, 2.5, 1, 60, 5);
    Prop1Result res = prop1_experiment(seq, 20, cfg, 17);
    CHECK_FALSE(res.fixed_degenerate);
    CHECK(res.fixed_corr > 0.4);
    CHECK(std::abs(res.adaptive_corr) < std::abs(res.fixed_corr));
}
