#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "desgrada/encode.hpp"
#include "desgrada/graph.hpp"
#include "desgrada/tape.hpp"
#include "desgrada/tensor.hpp"

namespace desgrada {

enum class AggregationKind { gcn_norm, raw_sum };

const char* to_string(AggregationKind k);
AggregationKind aggregation_from_string(const std::string& s);

struct LIFConfig {
    double leak = 0.5;
    double v_reset = 0.0;
    int T = 9;
    double v_th_init = 0.2;
    double surrogate_width = 1.0;
    double ema_alpha = 0.1;
    int layers = 4;
    int hidden_dim = 256;

    void validate() const;
    // 1-based latency step used for the shallow readout: ceil(T/2).
    int shallow_step() const { return (T + 1) / 2; }
};

// Per-degree firing thresholds, EMA-adapted from observed spike rates. Lookup
// for an unregistered degree falls back to the nearest registered degree
// (ties toward the smaller one); an empty table answers with the init value.
class ThresholdTable {
public:
    explicit ThresholdTable(double v_th_init = 0.2) : init_(v_th_init) {}

    void register_degree(int degree);
    void register_degrees(const std::vector<int>& degrees);
    double lookup(int degree) const;
    bool has(int degree) const { return entries_.count(degree) != 0; }

    // V' = (1-alpha) V + alpha * rate for each degree present in mean_rates;
    // unseen degrees are first registered by nearest-neighbor copy. Forward
    // state only, never differentiated through.
    void ema_update(const std::map<int, double>& mean_rates, double alpha);

    const std::map<int, double>& entries() const { return entries_; }
    double init_value() const { return init_; }

    double min_threshold() const;
    double max_threshold() const;
    double mean_threshold() const;

private:
    std::map<int, double> entries_;
    double init_;
};

struct LayerParams {
    Tensor weight; // in_dim x out_dim
    Tensor bias;   // 1 x out_dim
};

struct MembraneState {
    Tensor u;           // node_count x d
    Tensor last_spikes; // node_count x d, binary
};

// Â = D^{-1/2}(A+I)D^{-1/2} (gcn_norm) or A+I (raw_sum); A+I is already
// materialized in Graph::edges, degrees include the self-loop.
SymAdj build_aggregation(const Graph& g, AggregationKind kind);

// Â (spikes W) + bias. Spec-facing convenience around the fused kernels.
Tensor aggregate(const Graph& g, const Tensor& spikes, const LayerParams& layer,
                 AggregationKind kind = AggregationKind::gcn_norm);

// One integrate/fire/reset step: u' = leak (u - th ⊙ last_spikes) + current,
// spikes = H(u' - th) with H(0)=1, then hard reset to v_reset on fire.
std::pair<Tensor, MembraneState> lif_step(const MembraneState& state, const Tensor& current,
                                          const std::vector<double>& thresholds, double leak,
                                          double v_reset);

// Per-latency trace of one graph: final readouts plus event counters.
struct GraphTrace {
    Tensor s_G;     // 1 x d, mean final-layer spikes at the last step
    Tensor U_G;     // T x d, mean final-layer membrane per step (post reset)
    Tensor shallow; // 1 x d, mean final-layer spikes at step ceil(T/2)
    long long spike_count = 0;
    long long sop_count = 0;
    long long op_count = 0; // accumulator work, for the complexity budget
};

// Per-step spike-rate sums/counts per degree, for batch-synchronous EMA.
struct DegreeRateAccumulator {
    // step -> degree -> (sum of spike values, number of spike slots)
    std::vector<std::map<int, std::pair<double, long long>>> per_step;

    void ensure_steps(int T);
    void merge(const DegreeRateAccumulator& other);
    std::map<int, double> step_means(int step) const;
};

struct EncodeOptions {
    bool adapt = false; // per-step in-place threshold adaptation
    AggregationKind aggregation = AggregationKind::gcn_norm;
    DegreeRateAccumulator* collect_rates = nullptr; // optional stats out
    // Optional per-node spike totals of the final layer (resized to n).
    std::vector<long long>* collect_node_spikes = nullptr;
};

// Runs T latency steps of the layered LIF dynamics and collects the trace.
// Pure given (graph, spikes, params, table, cfg) when adapt is off; with
// adapt on the table is updated after every step from the final layer's
// per-degree mean spike rates.
GraphTrace encode_graph(const Graph& g, const SpikeTensor& spikes,
                        const std::vector<LayerParams>& params, ThresholdTable& table,
                        const LIFConfig& cfg, const EncodeOptions& opts = {});

// Tape-backed encode used by training; mirrors encode_graph's arithmetic.
// Thresholds are read from the table snapshot and treated as constants.
struct DiffTrace {
    Tape::Ref s_G = -1;
    Tape::Ref U_G = -1;
    Tensor shallow; // detached
    long long spike_count = 0;
    long long sop_count = 0;
};

DiffTrace encode_graph_diff(Tape& tape, const Graph& g, const SpikeTensor& spikes,
                            const std::vector<Tape::Ref>& weights,
                            const std::vector<Tape::Ref>& biases, const SymAdj& adj,
                            const ThresholdTable& table, const LIFConfig& cfg,
                            DegreeRateAccumulator* collect_rates = nullptr);

// Fixed-vs-adaptive correlation experiment between per-node aggregated weight
// (row sums of Â) and spiking frequency, on random graphs realizing a degree
// sequence with Gaussian node features.
struct Prop1Record {
    double aggregated_weight = 0.0;
    double frequency = 0.0;
    int degree = 0;
};

struct Prop1Result {
    double fixed_corr = 0.0;
    double adaptive_corr = 0.0;
    bool fixed_degenerate = false;
    bool adaptive_degenerate = false;
    std::vector<Prop1Record> fixed_records;
    std::vector<Prop1Record> adaptive_records;
};

Prop1Result prop1_experiment(const std::vector<int>& degree_seq, int trials, const LIFConfig& cfg,
                             std::uint64_t seed);

} // namespace desgrada
