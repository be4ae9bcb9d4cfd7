// desgrada: train, evaluate and analyze degree-conscious spiking graph
// models with temporal adversarial domain adaptation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "desgrada/config.hpp"
#include "desgrada/encode.hpp"
#include "desgrada/errors.hpp"
#include "desgrada/metrics.hpp"
#include "desgrada/rng.hpp"
#include "desgrada/synthetic.hpp"
#include "desgrada/trainer.hpp"
#include "desgrada/tu_io.hpp"
#include "desgrada/wasserstein.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersionTag = "desgrada 0.1.0";
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string dataset_name_for(const std::string& dir, const std::string& override_name) {
    if (!override_name.empty()) return override_name;
    return fs::path(dir).filename().string();
}

desgrada::GraphDataset load_dir(const std::string& dir, const std::string& name_override,
                                desgrada::DomainTag tag) {
    desgrada::GraphDataset ds =
        desgrada::load_tudataset(dir, dataset_name_for(dir, name_override));
    ds.domain_tag = tag;
    return ds;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << content;
        if (!out) throw desgrada::LoadError("cannot write " + path);
    }
    fs::rename(tmp, path);
}

struct TrainArgs {
    std::string source_dir, target_dir, config_file, out_dir = "run";
    std::string source_name, target_name;
    long long seed = -1;
    bool source_only = false;
};

int run_train(const TrainArgs& args) {
    desgrada::TrainConfig cfg;
    if (!args.config_file.empty())
        cfg = desgrada::train_config_from(desgrada::FlatConfig::parse_file(args.config_file));
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.validate();

    desgrada::GraphDataset source =
        load_dir(args.source_dir, args.source_name, desgrada::DomainTag::source);
    desgrada::GraphDataset target;
    if (!args.source_only) {
        if (args.target_dir.empty())
            throw desgrada::ConfigError("train: --target is required unless --source-only");
        target = load_dir(args.target_dir, args.target_name, desgrada::DomainTag::target);
    }

    fs::create_directories(args.out_dir);
    const std::string ckpt = (fs::path(args.out_dir) / "model.ckpt").string();
    const std::string history_csv = (fs::path(args.out_dir) / "history.csv").string();
    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();

    json manifest;
    manifest["version"] = kVersionTag;
    manifest["config"] = desgrada::train_config_to_text(cfg);
    manifest["seed"] = cfg.seed;
    manifest["source"] = {{"dir", args.source_dir},
                          {"fingerprint", desgrada::fingerprint_dataset(source)},
                          {"graphs", source.graphs.size()}};
    if (!args.source_only)
        manifest["target"] = {{"dir", args.target_dir},
                              {"fingerprint", desgrada::fingerprint_dataset(target)},
                              {"graphs", target.graphs.size()}};
    manifest["mode"] = args.source_only ? "source-only" : "full";
    manifest["outputs"] = {{"checkpoint", ckpt}, {"history", history_csv}};
    manifest["started_at"] = utc_timestamp();
    write_text_atomic(manifest_path, manifest.dump(2) + "\n");

    desgrada::TrainResult result;
    try {
        result = args.source_only ? desgrada::train_source_only(cfg, source, ckpt)
                                  : desgrada::train(cfg, source, target, ckpt);
    } catch (const desgrada::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        manifest["finished_at"] = utc_timestamp();
        manifest["status"] = "diverged";
        write_text_atomic(manifest_path, manifest.dump(2) + "\n");
        return kExitNumeric;
    }
    result.history.write_csv(history_csv);
    if (cfg.epochs == 0) result.model.save(ckpt);

    manifest["finished_at"] = utc_timestamp();
    manifest["status"] = "ok";
    write_text_atomic(manifest_path, manifest.dump(2) + "\n");

    json summary;
    summary["checkpoint"] = ckpt;
    summary["history"] = history_csv;
    summary["epochs"] = result.history.epochs.size();
    if (!result.history.epochs.empty()) {
        const auto& last = result.history.epochs.back();
        summary["final"] = {{"l_s", last.l_s},         {"l_t", last.l_t},
                            {"l_ad", last.l_ad},       {"src_acc", last.src_acc},
                            {"tgt_acc", last.tgt_acc}, {"spikes", last.spikes}};
    }
    std::cout << summary.dump() << "\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& name_override, int samples, long long eval_seed,
             const std::string& csv_path) {
    const desgrada::Model model = desgrada::Model::load(model_path);
    desgrada::GraphDataset ds = load_dir(data_dir, name_override, desgrada::DomainTag::target);
    const std::uint64_t seed =
        eval_seed >= 0 ? static_cast<std::uint64_t>(eval_seed) : 0x4556414cull;
    const desgrada::EvalResult res = desgrada::evaluate(model, ds, seed, samples);

    json out;
    out["accuracy"] = res.accuracy;
    out["graphs"] = ds.graphs.size();
    json per_class = json::array();
    for (std::size_t c = 0; c < res.per_class.size(); ++c)
        per_class.push_back(
            {{"class", c}, {"correct", res.per_class[c][0]}, {"total", res.per_class[c][1]}});
    out["per_class"] = per_class;
    std::cout << out.dump() << "\n";

    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        csv << "graph,prediction,label\n";
        for (std::size_t i = 0; i < ds.graphs.size(); ++i)
            csv << i << ',' << res.predictions[i] << ',' << ds.graphs[i].label << "\n";
    }
    return 0;
}

struct AnalyzeArgs {
    std::string mode;
    std::string model_path;
    std::vector<std::string> data_dirs;
    std::string name_override;
    std::string metric = "node";
    std::string csv_path;
    int nodes = 200;
    double exponent = 2.5;
    int trials = 10;
    long long seed = 1;
    double energy_per_sop = 77e-15;
    bool spikes_only = false;
};

int run_analyze(const AnalyzeArgs& args) {
    json out;
    if (args.mode == "correlation") {
        desgrada::LIFConfig lif;
        lif.T = 9;
        lif.v_th_init = 0.2;
        lif.layers = 1;
        lif.hidden_dim = 16;
        const auto seq = desgrada::power_law_degree_sequence(
            args.nodes, args.exponent, 1, args.nodes - 1, static_cast<std::uint64_t>(args.seed));
        const desgrada::Prop1Result res = desgrada::prop1_experiment(
            seq, args.trials, lif, static_cast<std::uint64_t>(args.seed));
        out["fixed_corr"] = res.fixed_corr;
        out["adaptive_corr"] = res.adaptive_corr;
        out["fixed_degenerate"] = res.fixed_degenerate;
        out["adaptive_degenerate"] = res.adaptive_degenerate;
        if (!args.csv_path.empty()) {
            std::ofstream csv(args.csv_path);
            csv << "mode,aggregated_weight,frequency,degree\n";
            for (const auto& r : res.fixed_records)
                csv << "fixed," << r.aggregated_weight << ',' << r.frequency << ',' << r.degree
                    << "\n";
            for (const auto& r : res.adaptive_records)
                csv << "adaptive," << r.aggregated_weight << ',' << r.frequency << ',' << r.degree
                    << "\n";
        }
    } else if (args.mode == "energy") {
        if (args.model_path.empty() || args.data_dirs.empty())
            throw desgrada::ConfigError("analyze energy: --model and --data required");
        const desgrada::Model model = desgrada::Model::load(args.model_path);
        desgrada::GraphDataset ds =
            load_dir(args.data_dirs[0], args.name_override, desgrada::DomainTag::target);
        const desgrada::EvalResult res =
            desgrada::evaluate(model, ds, 0x4556414cull, 1, /*require_labels=*/false);
        desgrada::EnergyModel em;
        em.energy_per_sop = args.energy_per_sop;
        em.count_spikes_only = args.spikes_only;
        const desgrada::EnergyReport report = desgrada::energy_estimate(res.traces, em);
        out["total_joules"] = report.total_joules;
        out["total_events"] = report.total_events;
        out["graphs"] = report.per_graph.size();
        out["energy_per_sop"] = em.energy_per_sop;
        out["count_spikes_only"] = em.count_spikes_only;
        if (!args.csv_path.empty()) {
            std::ofstream csv(args.csv_path);
            csv << "graph,joules,spikes,sops\n";
            for (std::size_t i = 0; i < report.per_graph.size(); ++i)
                csv << i << ',' << report.per_graph[i] << ',' << res.traces[i].spike_count << ','
                    << res.traces[i].sop_count << "\n";
        }
    } else if (args.mode == "divergence") {
        if (args.data_dirs.size() < 2)
            throw desgrada::ConfigError("analyze divergence: need >= 2 --data directories");
        std::vector<desgrada::GraphDataset> parts;
        for (const std::string& dir : args.data_dirs)
            parts.push_back(load_dir(dir, "", desgrada::DomainTag::source));
        const desgrada::Tensor m =
            desgrada::divergence_report(parts, desgrada::density_metric_from_string(args.metric));
        json rows = json::array();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(row);
        }
        out["metric"] = args.metric;
        out["matrix"] = rows;
        if (!args.csv_path.empty()) {
            std::ofstream csv(args.csv_path);
            for (std::size_t i = 0; i < m.rows(); ++i) {
                for (std::size_t j = 0; j < m.cols(); ++j)
                    csv << (j ? "," : "") << m(i, j);
                csv << "\n";
            }
        }
    } else if (args.mode == "pseudo-labels") {
        if (args.model_path.empty() || args.data_dirs.empty())
            throw desgrada::ConfigError("analyze pseudo-labels: --model and --data required");
        const desgrada::Model model = desgrada::Model::load(args.model_path);
        desgrada::GraphDataset ds =
            load_dir(args.data_dirs[0], args.name_override, desgrada::DomainTag::target);
        const desgrada::EvalResult res =
            desgrada::evaluate(model, ds, 0x4556414cull, 1, /*require_labels=*/false);
        desgrada::Tensor shallow(ds.graphs.size(),
                                 static_cast<std::size_t>(model.cfg.lif.hidden_dim));
        for (std::size_t i = 0; i < ds.graphs.size(); ++i)
            for (std::size_t j = 0; j < shallow.cols(); ++j)
                shallow(i, j) = res.traces[i].shallow[j];
        const desgrada::PseudoLabelSet set = desgrada::distill_pseudo_labels(
            shallow, res.predictions, model.cfg.num_classes,
            static_cast<std::uint64_t>(args.seed));
        json entries = json::array();
        for (const auto& e : set.entries)
            entries.push_back({{"graph", e.graph_index}, {"label", e.label},
                               {"cluster", e.cluster}});
        json clusters = json::array();
        for (std::size_t r = 0; r < set.cluster_info.size(); ++r)
            clusters.push_back({{"cluster", r},
                                {"dominant_label", set.cluster_info[r].dominant_label},
                                {"purity", set.cluster_info[r].purity},
                                {"size", set.cluster_info[r].size}});
        out["entries"] = entries;
        out["clusters"] = clusters;
        out["retained"] = set.entries.size();
        out["graphs"] = ds.graphs.size();
    } else {
        throw desgrada::ConfigError("unknown analyze mode: " + args.mode);
    }
    std::cout << out.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degree-conscious spiking graph networks with temporal-alignment domain "
                 "adaptation"};
    app.set_version_flag("--version", kVersionTag);
    app.require_subcommand(1);

    // partition
    auto* partition = app.add_subcommand("partition", "Split a TU dataset by density score");
    std::string p_data, p_name, p_metric = "node", p_out = "partitions";
    int p_k = 4;
    long long p_seed = 0;
    partition->add_option("--data", p_data, "Dataset directory")->required();
    partition->add_option("--name", p_name, "Dataset name (default: directory basename)");
    partition->add_option("--metric", p_metric, "Density metric: node|edge")
        ->check(CLI::IsMember({"node", "edge"}));
    partition->add_option("--k", p_k, "Number of chunks (>= 2)")->required();
    partition->add_option("--out", p_out, "Output directory");
    partition->add_option("--seed", p_seed, "Recorded seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model (full method or source-only)");
    TrainArgs t_args;
    train_cmd->add_option("--source", t_args.source_dir, "Source dataset directory")->required();
    train_cmd->add_option("--target", t_args.target_dir, "Target dataset directory");
    train_cmd->add_option("--config", t_args.config_file, "Flat key=value config file");
    train_cmd->add_option("--seed", t_args.seed, "Override config seed");
    train_cmd->add_option("--out", t_args.out_dir, "Run output directory");
    train_cmd->add_option("--source-name", t_args.source_name, "Source dataset name override");
    train_cmd->add_option("--target-name", t_args.target_name, "Target dataset name override");
    train_cmd->add_flag("--source-only", t_args.source_only,
                        "Disable alignment and pseudo-labels; ignore target data");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled dataset");
    std::string e_model, e_data, e_name, e_csv;
    int e_samples = 1;
    long long e_seed = -1;
    eval_cmd->add_option("--model", e_model, "Checkpoint path")->required();
    eval_cmd->add_option("--data", e_data, "Dataset directory")->required();
    eval_cmd->add_option("--name", e_name, "Dataset name override");
    eval_cmd->add_option("--samples", e_samples, "Bernoulli encodings averaged per graph");
    eval_cmd->add_option("--eval-seed", e_seed, "Evaluation encode seed");
    eval_cmd->add_option("--csv", e_csv, "Optional per-graph prediction CSV");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Diagnostics: correlation, energy, divergence,"
                                                  " pseudo-labels");
    AnalyzeArgs a_args;
    analyze->add_option("--mode", a_args.mode, "correlation|energy|divergence|pseudo-labels")
        ->required()
        ->check(CLI::IsMember({"correlation", "energy", "divergence", "pseudo-labels"}));
    analyze->add_option("--model", a_args.model_path, "Checkpoint path");
    analyze->add_option("--data", a_args.data_dirs, "Dataset directory (repeatable)");
    analyze->add_option("--name", a_args.name_override, "Dataset name override");
    analyze->add_option("--metric", a_args.metric, "Density metric: node|edge")
        ->check(CLI::IsMember({"node", "edge"}));
    analyze->add_option("--csv", a_args.csv_path, "Optional CSV output path");
    analyze->add_option("--nodes", a_args.nodes, "Correlation: node count");
    analyze->add_option("--exponent", a_args.exponent, "Correlation: power-law exponent");
    analyze->add_option("--trials", a_args.trials, "Correlation: trials per mode");
    analyze->add_option("--seed", a_args.seed, "Experiment seed");
    analyze->add_option("--energy-per-sop", a_args.energy_per_sop, "Joules per SOP");
    analyze->add_flag("--spikes-only", a_args.spikes_only, "Bill per spike, ignore fan-out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (partition->parsed()) {
            if (p_k < 2) {
                std::cerr << "partition: --k must be >= 2\n";
                return kExitUsage;
            }
            const std::string name = dataset_name_for(p_data, p_name);
            desgrada::GraphDataset ds = desgrada::load_tudataset(p_data, name);
            const auto dirs = desgrada::write_partitions(
                p_out, name, ds, desgrada::density_metric_from_string(p_metric), p_k,
                static_cast<std::uint64_t>(p_seed));
            json out;
            out["chunks"] = dirs;
            out["manifest"] = (fs::path(p_out) / "manifest.json").string();
            std::cout << out.dump() << "\n";
            return 0;
        }
        if (train_cmd->parsed()) return run_train(t_args);
        if (eval_cmd->parsed()) return run_eval(e_model, e_data, e_name, e_samples, e_seed, e_csv);
        if (analyze->parsed()) return run_analyze(a_args);
    } catch (const desgrada::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const desgrada::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
