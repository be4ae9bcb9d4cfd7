#include "desgrada/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"

namespace desgrada {

const char* to_string(DiscriminatorInput d) {
    return d == DiscriminatorInput::logits ? "logits" : "features";
}

DiscriminatorInput discriminator_input_from_string(const std::string& s) {
    if (s == "logits") return DiscriminatorInput::logits;
    if (s == "features") return DiscriminatorInput::features;
    throw ArgumentError("unknown discriminator input: " + s);
}

AttentionOutput temporal_attention(const Tensor& U, const AttentionParams& p) {
    if (U.rows() < 1) throw ShapeError("temporal_attention: need T >= 1");
    if (U.cols() != p.key_proj.rows()) throw ShapeError("temporal_attention: width mismatch");
    const double scl = 1.0 / std::sqrt(static_cast<double>(U.cols()));
    Tensor K = matmul(U, p.key_proj);
    Tensor scores = scale(matmul(K, p.query), scl); // T x 1
    double mx = scores[0];
    for (std::size_t i = 1; i < scores.size(); ++i) mx = std::max(mx, scores[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = std::exp(scores[i] - mx);
        z += scores[i];
    }
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] /= z;
    Tensor V = matmul(U, p.value_proj);
    Tensor out(1, U.cols(), 0.0);
    for (std::size_t t = 0; t < U.rows(); ++t)
        for (std::size_t j = 0; j < U.cols(); ++j) out[j] += scores[t] * V(t, j);
    return {std::move(scores), std::move(out)};
}

AttentionDiff temporal_attention_diff(Tape& tape, Tape::Ref U, const AttentionRefs& p) {
    const double scl = 1.0 / std::sqrt(static_cast<double>(tape.value(U).cols()));
    Tape::Ref K = tape.matmul(U, p.key_proj);
    Tape::Ref scores = tape.scale(tape.matmul(K, p.query), scl);
    Tape::Ref alpha = tape.softmax_vec(scores);
    Tape::Ref V = tape.matmul(U, p.value_proj);
    Tape::Ref u_tilde = tape.matmul(tape.transpose(alpha), V);
    return {alpha, u_tilde};
}

Tape::Ref classifier_forward_diff(Tape& tape, Tape::Ref x, const MlpRefs& p) {
    Tape::Ref h = tape.tanh(tape.add_rowvec(tape.matmul(x, p.w1), p.b1));
    return tape.add_rowvec(tape.matmul(h, p.w2), p.b2);
}

Tape::Ref discriminator_forward_diff(Tape& tape, Tape::Ref x, const MlpRefs& p) {
    Tape::Ref h = tape.tanh(tape.add_rowvec(tape.matmul(x, p.w1), p.b1));
    return tape.sigmoid(tape.add_rowvec(tape.matmul(h, p.w2), p.b2));
}

Tensor classifier_forward(const Tensor& x, const ClassifierParams& p) {
    Tensor h = add_rowvec(matmul(x, p.w1), p.b1);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
    return add_rowvec(matmul(h, p.w2), p.b2);
}

Tensor discriminator_forward(const Tensor& x, const DiscriminatorParams& p) {
    Tensor h = add_rowvec(matmul(x, p.w1), p.b1);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
    Tensor q = add_rowvec(matmul(h, p.w2), p.b2);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 1.0 / (1.0 + std::exp(-q[i]));
    return q;
}

double source_loss(const Tensor& logits, const std::vector<int>& labels) {
    if (labels.size() != logits.rows()) throw ArgumentError("source_loss: label count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= static_cast<int>(logits.cols()))
            throw ArgumentError("source_loss: invalid label " + std::to_string(y));
        double mx = logits(i, 0);
        for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) lse += std::exp(logits(i, j) - mx);
        loss += std::log(lse) + mx - logits(i, static_cast<std::size_t>(y));
    }
    return loss / static_cast<double>(logits.rows());
}

AdversarialLossDiff adversarial_loss_diff(Tape& tape, const std::vector<Tape::Ref>& src_tilde,
                                          const std::vector<Tape::Ref>& tgt_tilde,
                                          const MlpRefs& classifier, const MlpRefs& discriminator,
                                          DiscriminatorInput input_kind, double lambda_coeff) {
    if (src_tilde.empty() || tgt_tilde.empty())
        throw ArgumentError("adversarial_loss: empty batch");
    constexpr double kClampLo = 1e-7;
    constexpr double kClampHi = 1.0 - 1e-7;

    auto q_of = [&](const std::vector<Tape::Ref>& rows) {
        Tape::Ref stacked = tape.stack_rows(rows);
        Tape::Ref reversed = tape.grad_reverse(stacked, lambda_coeff);
        Tape::Ref features = reversed;
        if (input_kind == DiscriminatorInput::logits)
            features = classifier_forward_diff(tape, reversed, classifier);
        return discriminator_forward_diff(tape, features, discriminator);
    };

    Tape::Ref q_src = q_of(src_tilde);
    Tape::Ref q_tgt = q_of(tgt_tilde);

    Tape::Ref log_src = tape.mean(tape.log_clamped(q_src, kClampLo, kClampHi));
    Tape::Ref one_minus_tgt = tape.add_scalar(tape.scale(q_tgt, -1.0), 1.0);
    Tape::Ref log_tgt = tape.mean(tape.log_clamped(one_minus_tgt, kClampLo, kClampHi));
    Tape::Ref loss = tape.add(log_src, log_tgt);

    long long correct = 0;
    const Tensor& qs = tape.value(q_src);
    const Tensor& qt = tape.value(q_tgt);
    for (std::size_t i = 0; i < qs.size(); ++i) correct += qs[i] > 0.5 ? 1 : 0;
    for (std::size_t i = 0; i < qt.size(); ++i) correct += qt[i] <= 0.5 ? 1 : 0;
    const double acc = static_cast<double>(correct) /
                       static_cast<double>(qs.size() + qt.size());
    return {loss, acc};
}

double total_loss(double l_s, double l_t, double l_ad, double lambda_coeff) {
    return l_s + l_t - lambda_coeff * l_ad;
}

KMeansResult kmeans(const Tensor& points, int k, std::uint64_t seed, int max_iters) {
    const int n = static_cast<int>(points.rows());
    const std::size_t d = points.cols();
    if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
    if (n < k) throw ArgumentError("kmeans: fewer points than clusters");

    auto dist2 = [&](int i, const Tensor& c, int ci) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = points(static_cast<std::size_t>(i), j) -
                                c(static_cast<std::size_t>(ci), j);
            s += diff * diff;
        }
        return s;
    };

    // k-means++ seeding.
    SplitMix64 rng(seed);
    Tensor centroids(static_cast<std::size_t>(k), d);
    std::vector<double> best(static_cast<std::size_t>(n),
                             std::numeric_limits<double>::infinity());
    int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    for (std::size_t j = 0; j < d; ++j)
        centroids(0, j) = points(static_cast<std::size_t>(first), j);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            best[static_cast<std::size_t>(i)] =
                std::min(best[static_cast<std::size_t>(i)], dist2(i, centroids, c - 1));
            total += best[static_cast<std::size_t>(i)];
        }
        int chosen = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += best[static_cast<std::size_t>(i)];
                if (acc >= r) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        }
        for (std::size_t j = 0; j < d; ++j)
            centroids(static_cast<std::size_t>(c), j) =
                points(static_cast<std::size_t>(chosen), j);
    }

    KMeansResult res;
    res.assignment.assign(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int argmin = 0;
            double dmin = dist2(i, centroids, 0);
            for (int c = 1; c < k; ++c) {
                const double dd = dist2(i, centroids, c);
                if (dd < dmin) { // strict: ties keep the smaller index
                    dmin = dd;
                    argmin = c;
                }
            }
            if (res.assignment[static_cast<std::size_t>(i)] != argmin) {
                res.assignment[static_cast<std::size_t>(i)] = argmin;
                changed = true;
            }
        }
        res.iterations = iter + 1;

        Tensor sums(static_cast<std::size_t>(k), d);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            const int c = res.assignment[static_cast<std::size_t>(i)];
            counts[static_cast<std::size_t>(c)] += 1;
            for (std::size_t j = 0; j < d; ++j)
                sums(static_cast<std::size_t>(c), j) += points(static_cast<std::size_t>(i), j);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue; // keep old center
            for (std::size_t j = 0; j < d; ++j)
                centroids(static_cast<std::size_t>(c), j) =
                    sums(static_cast<std::size_t>(c), j) /
                    static_cast<double>(counts[static_cast<std::size_t>(c)]);
        }
        if (!changed && iter > 0) break;
    }
    res.centroids = std::move(centroids);
    return res;
}

PseudoLabelSet apply_pseudo_label_rule(const std::vector<int>& assignment, int num_clusters,
                                       const std::vector<int>& preds, int num_classes) {
    if (assignment.size() != preds.size())
        throw ArgumentError("apply_pseudo_label_rule: size mismatch");

    // holders[r][y] = members of cluster r predicted as y
    std::vector<std::vector<int>> holders(static_cast<std::size_t>(num_clusters),
                                          std::vector<int>(static_cast<std::size_t>(num_classes),
                                                           0));
    std::vector<int> cluster_size(static_cast<std::size_t>(num_clusters), 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const int r = assignment[i];
        const int y = preds[i];
        if (r < 0 || r >= num_clusters) throw ArgumentError("cluster index out of range");
        if (y < 0 || y >= num_classes) throw ArgumentError("prediction out of range");
        holders[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)] += 1;
        cluster_size[static_cast<std::size_t>(r)] += 1;
    }

    PseudoLabelSet out;
    out.cluster_info.resize(static_cast<std::size_t>(num_clusters));
    // Strict-majority dominating label per cluster; ties discard the cluster.
    for (int r = 0; r < num_clusters; ++r) {
        ClusterInfo& info = out.cluster_info[static_cast<std::size_t>(r)];
        info.size = cluster_size[static_cast<std::size_t>(r)];
        int best_label = -1;
        int best_count = 0;
        bool tie = false;
        for (int y = 0; y < num_classes; ++y) {
            const int c = holders[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)];
            if (c > best_count) {
                best_count = c;
                best_label = y;
                tie = false;
            } else if (c == best_count && c > 0) {
                tie = true;
            }
        }
        if (best_label >= 0 && !tie) {
            info.dominant_label = best_label;
            info.purity = info.size > 0
                              ? static_cast<double>(best_count) / static_cast<double>(info.size)
                              : 0.0;
        }
    }

    // For each label keep only the cluster holding it the most (dominating
    // cluster); ties toward the smaller cluster index.
    std::vector<int> dominating_cluster(static_cast<std::size_t>(num_classes), -1);
    for (int y = 0; y < num_classes; ++y) {
        int best_r = -1;
        int best_count = 0;
        for (int r = 0; r < num_clusters; ++r) {
            if (out.cluster_info[static_cast<std::size_t>(r)].dominant_label != y) continue;
            const int c = holders[static_cast<std::size_t>(r)][static_cast<std::size_t>(y)];
            if (c > best_count) {
                best_count = c;
                best_r = r;
            }
        }
        dominating_cluster[static_cast<std::size_t>(y)] = best_r;
    }

    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const int r = assignment[i];
        const int y = preds[i];
        const ClusterInfo& info = out.cluster_info[static_cast<std::size_t>(r)];
        if (info.dominant_label != y) continue;
        if (dominating_cluster[static_cast<std::size_t>(y)] != r) continue;
        out.entries.push_back({static_cast<int>(i), y, r});
    }
    return out;
}

PseudoLabelSet distill_pseudo_labels(const Tensor& shallow_features,
                                     const std::vector<int>& preds, int num_classes,
                                     std::uint64_t seed) {
    if (num_classes < 1) throw ArgumentError("distill_pseudo_labels: C must be >= 1");
    if (static_cast<std::size_t>(shallow_features.rows()) != preds.size())
        throw ArgumentError("distill_pseudo_labels: feature/prediction count mismatch");
    if (static_cast<int>(shallow_features.rows()) < num_classes)
        throw ArgumentError("distill_pseudo_labels: fewer graphs than clusters");
    KMeansResult km = kmeans(shallow_features, num_classes, seed, 100);
    return apply_pseudo_label_rule(km.assignment, num_classes, preds, num_classes);
}

double target_loss(const Tensor& logits_for_entries, const PseudoLabelSet& set) {
    if (set.empty()) return 0.0;
    if (logits_for_entries.rows() != set.entries.size())
        throw ArgumentError("target_loss: logit row per entry expected");
    std::vector<int> labels;
    labels.reserve(set.entries.size());
    for (const auto& e : set.entries) labels.push_back(e.label);
    return source_loss(logits_for_entries, labels);
}

} // namespace desgrada
