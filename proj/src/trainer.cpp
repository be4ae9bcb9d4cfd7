#include "desgrada/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "desgrada/adam.hpp"
#include "desgrada/encode.hpp"
#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"

namespace desgrada {
namespace {

// Seed domains for the independent random streams of one run.
constexpr std::uint64_t kStreamShuffle = 0xE0;
constexpr std::uint64_t kStreamEncodeSrc = 0xE1;
constexpr std::uint64_t kStreamEncodeTgt = 0xE2;
constexpr std::uint64_t kStreamPseudo = 0xE3;

std::string format_csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ParamRefs {
    std::vector<Tape::Ref> weights;
    std::vector<Tape::Ref> biases;
    AttentionRefs attention{};
    MlpRefs classifier{};
    MlpRefs discriminator{};
    std::vector<Tape::Ref> ordered; // matches Model::parameters() order
};

ParamRefs bind_model(Tape& tape, Model& model) {
    ParamRefs refs;
    for (auto& l : model.layers) {
        refs.weights.push_back(tape.leaf(l.weight, true));
        refs.biases.push_back(tape.leaf(l.bias, true));
        refs.ordered.push_back(refs.weights.back());
        refs.ordered.push_back(refs.biases.back());
    }
    refs.attention.query = tape.leaf(model.attention.query, true);
    refs.attention.key_proj = tape.leaf(model.attention.key_proj, true);
    refs.attention.value_proj = tape.leaf(model.attention.value_proj, true);
    refs.classifier = {tape.leaf(model.classifier.w1, true), tape.leaf(model.classifier.b1, true),
                       tape.leaf(model.classifier.w2, true), tape.leaf(model.classifier.b2, true)};
    refs.discriminator = {tape.leaf(model.discriminator.w1, true),
                          tape.leaf(model.discriminator.b1, true),
                          tape.leaf(model.discriminator.w2, true),
                          tape.leaf(model.discriminator.b2, true)};
    for (Tape::Ref r : {refs.attention.query, refs.attention.key_proj, refs.attention.value_proj,
                        refs.classifier.w1, refs.classifier.b1, refs.classifier.w2,
                        refs.classifier.b2, refs.discriminator.w1, refs.discriminator.b1,
                        refs.discriminator.w2, refs.discriminator.b2})
        refs.ordered.push_back(r);
    return refs;
}

} // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("TrainConfig: lr must be positive");
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be >= 0");
    LIFConfig merged = lif;
    merged.layers = layers;
    merged.hidden_dim = hidden_dim;
    merged.validate();
}

ModelConfig TrainConfig::model_config(int feature_dim, int num_classes) const {
    ModelConfig mc;
    mc.lif = lif;
    mc.lif.layers = layers;
    mc.lif.hidden_dim = hidden_dim;
    mc.aggregation = aggregation;
    mc.discriminator_input = discriminator_input;
    mc.feature_dim = feature_dim;
    mc.num_classes = num_classes;
    return mc;
}

void TrainHistory::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write history CSV " + path);
    out << "epoch,l_s,l_t";
    if (has_alignment) out << ",l_ad";
    out << ",src_acc,tgt_acc";
    if (has_alignment) out << ",disc_acc";
    out << ",spikes,pseudo_labels,th_min,th_mean,th_max\n";
    for (const EpochStats& e : epochs) {
        out << e.epoch << ',' << format_csv_double(e.l_s) << ',' << format_csv_double(e.l_t);
        if (has_alignment) out << ',' << format_csv_double(e.l_ad);
        out << ',' << format_csv_double(e.src_acc) << ',' << format_csv_double(e.tgt_acc);
        if (has_alignment) out << ',' << format_csv_double(e.disc_acc);
        out << ',' << e.spikes << ',' << e.pseudo_labels << ',' << format_csv_double(e.th_min)
            << ',' << format_csv_double(e.th_mean) << ',' << format_csv_double(e.th_max) << "\n";
    }
}

TrainResult train(const TrainConfig& cfg, const GraphDataset& source, const GraphDataset& target,
                  const std::string& checkpoint_path) {
    cfg.validate();
    if (source.graphs.empty()) throw ArgumentError("train: empty source dataset");
    for (const Graph& g : source.graphs)
        if (g.label < 0) throw ArgumentError("train: source must be fully labeled");
    const bool use_target = cfg.alignment_enabled || cfg.pseudo_labels_enabled;
    if (use_target) {
        if (target.graphs.empty()) throw ArgumentError("train: target dataset required");
        if (target.feature_dim != source.feature_dim)
            throw ConfigError("train: source/target feature_dim mismatch");
    }

    const int num_classes = source.num_classes;
    const ModelConfig mcfg = cfg.model_config(source.feature_dim, num_classes);
    const DegreeTable source_degrees = collect_degree_set(source);
    Model model = Model::init(mcfg, source_degrees.degrees, cfg.seed);

    auto params = model.parameters();
    const auto names = model.parameter_names();
    AdamState opt = AdamState::init(params);

    // Aggregation operators are pure per-graph structure; build once.
    std::vector<SymAdj> src_adj(source.graphs.size());
    for (std::size_t i = 0; i < source.graphs.size(); ++i)
        src_adj[i] = build_aggregation(source.graphs[i], cfg.aggregation);
    std::vector<SymAdj> tgt_adj(use_target ? target.graphs.size() : 0);
    for (std::size_t i = 0; i < tgt_adj.size(); ++i)
        tgt_adj[i] = build_aggregation(target.graphs[i], cfg.aggregation);

    // Target graphs containing degrees outside B^s, for the optional
    // restriction of the alignment expectation.
    std::vector<bool> tgt_has_unseen(tgt_adj.size(), false);
    for (std::size_t i = 0; i < tgt_adj.size(); ++i)
        for (int d : target.graphs[i].degrees)
            if (!source_degrees.contains(d)) {
                tgt_has_unseen[i] = true;
                break;
            }

    TrainHistory history;
    history.has_alignment = cfg.alignment_enabled;

    std::vector<int> pseudo_label_of(use_target ? target.graphs.size() : 0, -1);
    int pseudo_count = 0;

    const LIFConfig lif = mcfg.lif;
    const int n_batches =
        (static_cast<int>(source.graphs.size()) + cfg.batch_size - 1) / cfg.batch_size;

    std::vector<int> tgt_order;
    std::size_t tgt_cursor = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const std::uint64_t stream_epoch =
            cfg.debug_fixed_epoch_streams ? 1ull : static_cast<std::uint64_t>(epoch);
        if (cfg.debug_fixed_epoch_streams) {
            tgt_order.clear();
            tgt_cursor = 0;
        }
        // Pseudo-label distillation (once per epoch after warm-up).
        if (use_target && cfg.pseudo_labels_enabled && epoch >= cfg.pseudo_label_start_epoch &&
            static_cast<int>(target.graphs.size()) >= num_classes) {
            Tensor shallow(target.graphs.size(), static_cast<std::size_t>(lif.hidden_dim));
            std::vector<int> preds(target.graphs.size(), 0);
            for (std::size_t i = 0; i < target.graphs.size(); ++i) {
                const SpikeTensor spikes = bernoulli_encode(
                    target.graphs[i], lif.T,
                    counter_hash(cfg.seed, kStreamPseudo, stream_epoch,
                                 static_cast<std::uint64_t>(i)));
                EncodeOptions opts;
                opts.adapt = false;
                opts.aggregation = cfg.aggregation;
                GraphTrace trace = encode_graph(target.graphs[i], spikes, model.layers,
                                                model.thresholds, lif, opts);
                for (std::size_t j = 0; j < shallow.cols(); ++j)
                    shallow(i, j) = trace.shallow[j];
                Tensor logits = classifier_forward(trace.s_G, model.classifier);
                int arg = 0;
                for (std::size_t c = 1; c < logits.size(); ++c)
                    if (logits[c] > logits[arg]) arg = static_cast<int>(c);
                preds[i] = arg;
            }
            const PseudoLabelSet set = distill_pseudo_labels(
                shallow, preds, num_classes,
                counter_hash(cfg.seed, kStreamPseudo, stream_epoch, 0xC));
            std::fill(pseudo_label_of.begin(), pseudo_label_of.end(), -1);
            for (const auto& e : set.entries)
                pseudo_label_of[static_cast<std::size_t>(e.graph_index)] = e.label;
            pseudo_count = static_cast<int>(set.entries.size());
        }

        // Seeded shuffles; the target list is cycled across batches.
        SplitMix64 shuffle_rng(
            counter_hash(cfg.seed, kStreamShuffle, stream_epoch));
        std::vector<int> src_order(source.graphs.size());
        std::iota(src_order.begin(), src_order.end(), 0);
        shuffle_indices(src_order, shuffle_rng);

        EpochStats es;
        es.epoch = epoch;
        long long src_correct = 0, src_seen = 0;
        long long tgt_correct = 0, tgt_labeled = 0;
        double disc_acc_sum = 0.0;
        int disc_acc_batches = 0;

        for (int b = 0; b < n_batches; ++b) {
            const int lo = b * cfg.batch_size;
            const int hi = std::min<int>(lo + cfg.batch_size,
                                         static_cast<int>(source.graphs.size()));
            std::vector<int> src_batch(src_order.begin() + lo, src_order.begin() + hi);
            std::vector<int> tgt_batch;
            if (use_target) {
                for (int i = 0; i < hi - lo; ++i) {
                    if (tgt_cursor >= tgt_order.size()) {
                        tgt_order.resize(target.graphs.size());
                        std::iota(tgt_order.begin(), tgt_order.end(), 0);
                        shuffle_indices(tgt_order, shuffle_rng);
                        tgt_cursor = 0;
                    }
                    tgt_batch.push_back(tgt_order[tgt_cursor++]);
                }
            }

            Tape tape;
            ParamRefs refs = bind_model(tape, model);

            DegreeRateAccumulator src_rates;
            src_rates.ensure_steps(lif.T);
            DegreeRateAccumulator tgt_rates;
            tgt_rates.ensure_steps(lif.T);

            // Source forward: deep readouts, traces, attention summaries.
            std::vector<Tape::Ref> src_sG, src_utilde;
            std::vector<int> src_labels;
            for (int idx : src_batch) {
                const Graph& g = source.graphs[static_cast<std::size_t>(idx)];
                const SpikeTensor spikes = bernoulli_encode(
                    g, lif.T,
                    counter_hash(cfg.seed, kStreamEncodeSrc, stream_epoch,
                                 static_cast<std::uint64_t>(idx)));
                DiffTrace t = encode_graph_diff(tape, g, spikes, refs.weights, refs.biases,
                                                src_adj[static_cast<std::size_t>(idx)],
                                                model.thresholds, lif, &src_rates);
                src_sG.push_back(t.s_G);
                src_utilde.push_back(
                    temporal_attention_diff(tape, t.U_G, refs.attention).u_tilde);
                src_labels.push_back(g.label);
                es.spikes += t.spike_count;
            }

            std::vector<Tape::Ref> tgt_utilde_all, tgt_utilde_unseen;
            std::vector<Tape::Ref> tgt_pl_sG;
            std::vector<int> tgt_pl_labels;
            for (int idx : tgt_batch) {
                const Graph& g = target.graphs[static_cast<std::size_t>(idx)];
                const bool pseudo_labeled = pseudo_label_of[static_cast<std::size_t>(idx)] >= 0;
                const SpikeTensor spikes = bernoulli_encode(
                    g, lif.T,
                    counter_hash(cfg.seed, kStreamEncodeTgt, stream_epoch,
                                 static_cast<std::uint64_t>(idx)));
                DiffTrace t = encode_graph_diff(tape, g, spikes, refs.weights, refs.biases,
                                                tgt_adj[static_cast<std::size_t>(idx)],
                                                model.thresholds, lif,
                                                pseudo_labeled ? &tgt_rates : nullptr);
                Tape::Ref ut = temporal_attention_diff(tape, t.U_G, refs.attention).u_tilde;
                tgt_utilde_all.push_back(ut);
                if (tgt_has_unseen[static_cast<std::size_t>(idx)])
                    tgt_utilde_unseen.push_back(ut);
                if (pseudo_labeled) {
                    tgt_pl_sG.push_back(t.s_G);
                    tgt_pl_labels.push_back(pseudo_label_of[static_cast<std::size_t>(idx)]);
                }
                es.spikes += t.spike_count;
                // Training-pass accuracy bookkeeping (evaluation labels only).
                if (g.label >= 0) {
                    const Tensor logits =
                        classifier_forward(tape.value(t.s_G), model.classifier);
                    int arg = 0;
                    for (std::size_t c = 1; c < logits.size(); ++c)
                        if (logits[c] > logits[arg]) arg = static_cast<int>(c);
                    tgt_correct += arg == g.label ? 1 : 0;
                    ++tgt_labeled;
                }
            }

            // L_S over the source batch.
            Tape::Ref src_logits =
                classifier_forward_diff(tape, tape.stack_rows(src_sG), refs.classifier);
            Tape::Ref l_s = tape.cross_entropy_mean(src_logits, src_labels);
            {
                const Tensor& lg = tape.value(src_logits);
                for (std::size_t i = 0; i < lg.rows(); ++i) {
                    int arg = 0;
                    for (std::size_t c = 1; c < lg.cols(); ++c)
                        if (lg(i, c) > lg(i, arg)) arg = static_cast<int>(c);
                    src_correct += arg == src_labels[i] ? 1 : 0;
                    ++src_seen;
                }
            }

            // L_T over pseudo-labeled target graphs present in this batch.
            Tape::Ref l_t = -1;
            if (!tgt_pl_sG.empty()) {
                Tape::Ref pl_logits =
                    classifier_forward_diff(tape, tape.stack_rows(tgt_pl_sG), refs.classifier);
                l_t = tape.cross_entropy_mean(pl_logits, tgt_pl_labels);
            } else {
                l_t = tape.constant(Tensor(1, 1, 0.0));
            }

            // L_AD through the gradient-reversal route.
            Tape::Ref l_ad = -1;
            double l_ad_value = 0.0;
            const std::vector<Tape::Ref>& tgt_for_alignment =
                cfg.align_only_unseen_degree_graphs ? tgt_utilde_unseen : tgt_utilde_all;
            const bool do_alignment = cfg.alignment_enabled && !tgt_for_alignment.empty();
            if (do_alignment) {
                AdversarialLossDiff ad = adversarial_loss_diff(
                    tape, src_utilde, tgt_for_alignment, refs.classifier, refs.discriminator,
                    cfg.discriminator_input, cfg.lambda_coeff);
                l_ad = ad.loss;
                l_ad_value = tape.value(ad.loss)[0];
                disc_acc_sum += ad.disc_accuracy;
                ++disc_acc_batches;
            }

            Tape::Ref total = tape.add(l_s, l_t);
            if (do_alignment) total = tape.add(total, tape.scale(l_ad, -cfg.lambda_coeff));

            StepStats ss;
            ss.l_s = tape.value(l_s)[0];
            ss.l_t = tape.value(l_t)[0];
            ss.l_ad = do_alignment ? l_ad_value : 0.0;
            ss.total = tape.value(total)[0];
            history.steps.push_back(ss);
            if (!std::isfinite(ss.total)) {
                throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
            }

            tape.backward(total);
            if (!cfg.debug_skip_optimizer) {
                std::vector<Tensor> grads;
                grads.reserve(refs.ordered.size());
                for (std::size_t p = 0; p < refs.ordered.size(); ++p) {
                    const Tensor& g = tape.grad(refs.ordered[p]);
                    grads.push_back(g.size() == params[p]->size()
                                        ? g
                                        : Tensor(params[p]->rows(), params[p]->cols()));
                }
                adam_step(params, grads, opt, cfg.lr, cfg.weight_decay, names);
            }

            // Batch-synchronous threshold EMA: source stats update source
            // degrees; pseudo-labeled target stats update only degrees
            // outside B^s.
            for (int t = 0; t < lif.T; ++t) {
                const auto src_means = src_rates.step_means(t);
                if (!src_means.empty()) model.thresholds.ema_update(src_means, lif.ema_alpha);
                auto tgt_means = tgt_rates.step_means(t);
                for (auto it = tgt_means.begin(); it != tgt_means.end();) {
                    if (source_degrees.contains(it->first))
                        it = tgt_means.erase(it);
                    else
                        ++it;
                }
                if (!tgt_means.empty()) model.thresholds.ema_update(tgt_means, lif.ema_alpha);
            }

            es.l_s += ss.l_s;
            es.l_t += ss.l_t;
            es.l_ad += ss.l_ad;
        }

        es.l_s /= n_batches;
        es.l_t /= n_batches;
        es.l_ad /= n_batches;
        es.src_acc = src_seen > 0 ? static_cast<double>(src_correct) /
                                        static_cast<double>(src_seen)
                                  : 0.0;
        es.tgt_acc = tgt_labeled > 0 ? static_cast<double>(tgt_correct) /
                                           static_cast<double>(tgt_labeled)
                                     : -1.0;
        es.disc_acc = disc_acc_batches > 0 ? disc_acc_sum / disc_acc_batches : -1.0;
        es.th_min = model.thresholds.min_threshold();
        es.th_mean = model.thresholds.mean_threshold();
        es.th_max = model.thresholds.max_threshold();
        es.pseudo_labels = pseudo_count;
        history.epochs.push_back(es);

        if (!checkpoint_path.empty()) model.save(checkpoint_path);
    }

    return {std::move(model), std::move(history)};
}

TrainResult train_source_only(const TrainConfig& cfg, const GraphDataset& source,
                              const std::string& checkpoint_path) {
    TrainConfig c = cfg;
    c.alignment_enabled = false;
    c.pseudo_labels_enabled = false;
    c.lambda_coeff = 0.0;
    GraphDataset empty_target;
    empty_target.feature_dim = source.feature_dim;
    empty_target.num_classes = source.num_classes;
    empty_target.domain_tag = DomainTag::target;
    return train(c, source, empty_target, checkpoint_path);
}

EvalResult evaluate(const Model& model, const GraphDataset& ds, std::uint64_t eval_seed,
                    int encode_samples, bool require_labels) {
    if (encode_samples < 1) throw ArgumentError("evaluate: encode_samples must be >= 1");
    if (require_labels) {
        for (const Graph& g : ds.graphs)
            if (g.label < 0) throw ArgumentError("evaluate: dataset has unlabeled graphs");
    }

    EvalResult res;
    res.per_class.assign(static_cast<std::size_t>(std::max(1, model.cfg.num_classes)),
                         {0, 0});
    long long correct = 0;
    ThresholdTable frozen = model.thresholds; // adaptation disabled

    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
        const Graph& g = ds.graphs[i];
        Tensor logit_sum(1, static_cast<std::size_t>(model.cfg.num_classes), 0.0);
        GraphTrace last_trace;
        for (int rep = 0; rep < encode_samples; ++rep) {
            const SpikeTensor spikes = bernoulli_encode(
                g, model.cfg.lif.T,
                counter_hash(eval_seed, static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(rep)));
            EncodeOptions opts;
            opts.adapt = false;
            opts.aggregation = model.cfg.aggregation;
            GraphTrace trace =
                encode_graph(g, spikes, model.layers, frozen, model.cfg.lif, opts);
            Tensor logits = classifier_forward(trace.s_G, model.classifier);
            for (std::size_t c = 0; c < logit_sum.size(); ++c) logit_sum[c] += logits[c];
            last_trace = std::move(trace);
        }
        int arg = 0;
        for (std::size_t c = 1; c < logit_sum.size(); ++c)
            if (logit_sum[c] > logit_sum[arg]) arg = static_cast<int>(c); // ties -> smaller
        res.predictions.push_back(arg);
        res.traces.push_back(std::move(last_trace));
        if (g.label >= 0) {
            res.per_class[static_cast<std::size_t>(g.label)][1] += 1;
            if (arg == g.label) {
                res.per_class[static_cast<std::size_t>(g.label)][0] += 1;
                ++correct;
            }
        }
    }
    long long labeled = 0;
    for (const auto& pc : res.per_class) labeled += pc[1];
    res.accuracy = labeled > 0 ? static_cast<double>(correct) / static_cast<double>(labeled) : 0.0;
    return res;
}

} // namespace desgrada
