#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "desgrada/tape.hpp"
#include "desgrada/tensor.hpp"

namespace desgrada {

// Single-head scaled dot-product attention with a learned global query; the
// per-step scalars alpha_tau summarize a T x d membrane trace.
struct AttentionParams {
    Tensor query;      // d x 1
    Tensor key_proj;   // d x d
    Tensor value_proj; // d x d
};

// Two affine layers with tanh between: d -> d -> num_classes.
struct ClassifierParams {
    Tensor w1, b1, w2, b2;
};

// Two affine layers with tanh between and sigmoid output: in -> d -> 1.
struct DiscriminatorParams {
    Tensor w1, b1, w2, b2;
};

enum class DiscriminatorInput { logits, features };
const char* to_string(DiscriminatorInput d);
DiscriminatorInput discriminator_input_from_string(const std::string& s);

struct AttentionOutput {
    Tensor alpha;   // T x 1, sums to 1
    Tensor u_tilde; // 1 x d
};

// Plain (non-tape) attention: alpha = softmax((U Wk) q / sqrt(d)),
// u_tilde = alpha^T (U Wv).
AttentionOutput temporal_attention(const Tensor& U, const AttentionParams& p);

// Tape-side variants used during training.
struct AttentionRefs {
    Tape::Ref query, key_proj, value_proj;
};
struct MlpRefs {
    Tape::Ref w1, b1, w2, b2;
};

struct AttentionDiff {
    Tape::Ref alpha, u_tilde;
};
AttentionDiff temporal_attention_diff(Tape& tape, Tape::Ref U, const AttentionRefs& p);

Tape::Ref classifier_forward_diff(Tape& tape, Tape::Ref x, const MlpRefs& p);
Tape::Ref discriminator_forward_diff(Tape& tape, Tape::Ref x, const MlpRefs& p);

// Plain classifier forward for evaluation.
Tensor classifier_forward(const Tensor& x, const ClassifierParams& p);
Tensor discriminator_forward(const Tensor& x, const DiscriminatorParams& p);

// Mean cross-entropy with a numerically stable log-softmax.
double source_loss(const Tensor& logits, const std::vector<int>& labels);

// L_AD on the tape: features pass grad_reverse(lambda), then the classifier,
// then the discriminator; returns mean log Q over source plus mean log(1-Q)
// over target, with Q clamped to [1e-7, 1-1e-7] before the log.
struct AdversarialLossDiff {
    Tape::Ref loss;         // scalar L_AD
    double disc_accuracy;   // fraction of correct source/target calls
};
AdversarialLossDiff adversarial_loss_diff(Tape& tape, const std::vector<Tape::Ref>& src_tilde,
                                          const std::vector<Tape::Ref>& tgt_tilde,
                                          const MlpRefs& classifier, const MlpRefs& discriminator,
                                          DiscriminatorInput input_kind, double lambda_coeff);

// l_s + l_t - lambda * l_ad, exactly.
double total_loss(double l_s, double l_t, double l_ad, double lambda_coeff);

// Deterministic k-means with k-means++ seeding and at most max_iters Lloyd
// rounds. Ties go to the smaller centroid index; empty clusters keep their
// previous center.
struct KMeansResult {
    std::vector<int> assignment;
    Tensor centroids;
    int iterations = 0;
};
KMeansResult kmeans(const Tensor& points, int k, std::uint64_t seed, int max_iters = 100);

struct PseudoLabelEntry {
    int graph_index = 0;
    int label = 0;
    int cluster = 0;
};

struct ClusterInfo {
    int dominant_label = -1; // -1 = discarded (no strict majority)
    double purity = 0.0;     // holder share of the dominant label
    int size = 0;
};

struct PseudoLabelSet {
    std::vector<PseudoLabelEntry> entries;
    std::vector<ClusterInfo> cluster_info;

    bool empty() const { return entries.empty(); }
};

// Retention rule on top of a fixed clustering: a graph is kept iff its
// prediction is its cluster's strict-majority label and that cluster holds
// the most graphs with that prediction among clusters sharing the label
// (ties toward the smaller cluster index).
PseudoLabelSet apply_pseudo_label_rule(const std::vector<int>& assignment, int num_clusters,
                                       const std::vector<int>& preds, int num_classes);

// Clusters shallow target features into C groups and applies the rule.
PseudoLabelSet distill_pseudo_labels(const Tensor& shallow_features,
                                     const std::vector<int>& preds, int num_classes,
                                     std::uint64_t seed);

// Mean cross-entropy of deep logits against retained pseudo-labels; 0 when
// the set is empty.
double target_loss(const Tensor& logits_for_entries, const PseudoLabelSet& set);

} // namespace desgrada
