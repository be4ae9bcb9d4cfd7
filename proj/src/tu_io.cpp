#include "desgrada/tu_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "desgrada/errors.hpp"

namespace fs = std::filesystem;

namespace desgrada {
namespace {

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw LoadError("cannot open " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string::npos)
        lines.pop_back();
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (std::string& s : out) {
        std::size_t b = s.find_first_not_of(" \t");
        std::size_t e = s.find_last_not_of(" \t");
        s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

long parse_int(const std::string& tok, const std::string& file, std::size_t line_no) {
    try {
        std::size_t used = 0;
        long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(file + ":" + std::to_string(line_no) + ": non-numeric token '" + tok +
                         "'");
    }
}

double parse_real(const std::string& tok, const std::string& file, std::size_t line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(file + ":" + std::to_string(line_no) + ": non-numeric token '" + tok +
                         "'");
    }
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

GraphDataset load_tudataset(const std::string& root_path, const std::string& name,
                            const TuLoadOptions& opts) {
    const fs::path root(root_path);
    const std::string a_name = name + "_A.txt";
    const std::string ind_name = name + "_graph_indicator.txt";
    const std::string lab_name = name + "_graph_labels.txt";
    const std::string attr_name = name + "_node_attributes.txt";
    const std::string nlab_name = name + "_node_labels.txt";

    for (const std::string& mandatory : {a_name, ind_name, lab_name}) {
        if (!fs::exists(root / mandatory)) throw LoadError("missing " + mandatory);
    }

    // graph_indicator: line i = 1-based graph id of node i.
    const auto ind_lines = read_lines(root / ind_name);
    const std::size_t total_nodes = ind_lines.size();
    if (total_nodes == 0) throw FormatError(ind_name + ": no nodes");
    std::vector<int> node_graph(total_nodes);
    int num_graphs = 0;
    for (std::size_t i = 0; i < total_nodes; ++i) {
        long gid = parse_int(ind_lines[i], ind_name, i + 1);
        if (gid < 1) throw FormatError(ind_name + ":" + std::to_string(i + 1) + ": graph id < 1");
        node_graph[i] = static_cast<int>(gid - 1);
        num_graphs = std::max(num_graphs, static_cast<int>(gid));
    }

    // Node id ranges per graph (TU files number nodes consecutively per graph).
    std::vector<int> nodes_per_graph(static_cast<std::size_t>(num_graphs), 0);
    std::vector<int> node_local(total_nodes);
    for (std::size_t i = 0; i < total_nodes; ++i) {
        int g = node_graph[i];
        node_local[i] = nodes_per_graph[static_cast<std::size_t>(g)]++;
    }

    const auto lab_lines = read_lines(root / lab_name);
    if (static_cast<int>(lab_lines.size()) != num_graphs) {
        throw FormatError(lab_name + ": expected " + std::to_string(num_graphs) + " labels, got " +
                          std::to_string(lab_lines.size()));
    }
    std::vector<int> raw_labels(static_cast<std::size_t>(num_graphs));
    for (std::size_t i = 0; i < lab_lines.size(); ++i)
        raw_labels[i] = static_cast<int>(parse_int(lab_lines[i], lab_name, i + 1));
    std::set<int> label_values(raw_labels.begin(), raw_labels.end());
    std::map<int, int> label_remap;
    int next_id = 0;
    for (int v : label_values) label_remap[v] = next_id++;

    GraphDataset ds;
    ds.name = name;
    ds.num_classes = static_cast<int>(label_values.size());
    ds.graphs.resize(static_cast<std::size_t>(num_graphs));
    ds.raw.resize(static_cast<std::size_t>(num_graphs));
    for (int g = 0; g < num_graphs; ++g) {
        ds.graphs[static_cast<std::size_t>(g)].node_count =
            nodes_per_graph[static_cast<std::size_t>(g)];
        ds.graphs[static_cast<std::size_t>(g)].label = label_remap.at(raw_labels[static_cast<std::size_t>(g)]);
        ds.raw[static_cast<std::size_t>(g)].raw_label = raw_labels[static_cast<std::size_t>(g)];
    }

    // Edge list; 1-indexed global node ids, comma separated.
    const auto a_lines = read_lines(root / a_name);
    for (std::size_t li = 0; li < a_lines.size(); ++li) {
        if (a_lines[li].find_first_not_of(" \t") == std::string::npos) continue;
        auto toks = split_csv(a_lines[li]);
        if (toks.size() != 2)
            throw FormatError(a_name + ":" + std::to_string(li + 1) + ": expected 'u, v'");
        long u = parse_int(toks[0], a_name, li + 1);
        long v = parse_int(toks[1], a_name, li + 1);
        if (u < 1 || v < 1 || u > static_cast<long>(total_nodes) ||
            v > static_cast<long>(total_nodes)) {
            throw FormatError(a_name + ":" + std::to_string(li + 1) + ": node id out of range");
        }
        const std::size_t ui = static_cast<std::size_t>(u - 1);
        const std::size_t vi = static_cast<std::size_t>(v - 1);
        if (node_graph[ui] != node_graph[vi]) {
            throw FormatError(a_name + ":" + std::to_string(li + 1) +
                              ": edge references a node outside its graph");
        }
        int g = node_graph[ui];
        int lu = node_local[ui];
        int lv = node_local[vi];
        if (lu > lv) std::swap(lu, lv);
        ds.raw[static_cast<std::size_t>(g)].file_edges.push_back({lu, lv});
    }
    for (int g = 0; g < num_graphs; ++g) {
        auto& fe = ds.raw[static_cast<std::size_t>(g)].file_edges;
        std::sort(fe.begin(), fe.end());
        fe.erase(std::unique(fe.begin(), fe.end()), fe.end());
        ds.graphs[static_cast<std::size_t>(g)].edges = fe;
        finalize_graph(ds.graphs[static_cast<std::size_t>(g)]);
    }

    // Features: attributes and/or node labels, else one-hot degree buckets.
    const bool has_attr = fs::exists(root / attr_name);
    const bool has_nlab = fs::exists(root / nlab_name);
    std::vector<std::vector<double>> attr_rows;
    std::vector<int> nlab_rows;
    int attr_dim = 0;
    if (has_attr) {
        const auto lines = read_lines(root / attr_name);
        if (lines.size() != total_nodes)
            throw FormatError(attr_name + ": expected one row per node");
        attr_rows.resize(total_nodes);
        for (std::size_t i = 0; i < total_nodes; ++i) {
            auto toks = split_csv(lines[i]);
            for (const std::string& t : toks)
                attr_rows[i].push_back(parse_real(t, attr_name, i + 1));
            if (i == 0)
                attr_dim = static_cast<int>(attr_rows[i].size());
            else if (static_cast<int>(attr_rows[i].size()) != attr_dim)
                throw FormatError(attr_name + ":" + std::to_string(i + 1) +
                                  ": inconsistent attribute count");
        }
    }
    std::map<int, int> nlab_remap;
    if (has_nlab) {
        const auto lines = read_lines(root / nlab_name);
        if (lines.size() != total_nodes)
            throw FormatError(nlab_name + ": expected one row per node");
        nlab_rows.resize(total_nodes);
        std::set<int> vals;
        for (std::size_t i = 0; i < total_nodes; ++i) {
            nlab_rows[i] = static_cast<int>(parse_int(lines[i], nlab_name, i + 1));
            vals.insert(nlab_rows[i]);
        }
        int id = 0;
        for (int v : vals) nlab_remap[v] = id++;
    }

    if (has_attr || has_nlab) {
        const int nlab_dim = static_cast<int>(nlab_remap.size());
        const int fdim = attr_dim + nlab_dim;
        // Min-max per attribute column over the whole dataset; zero range -> 0.
        std::vector<double> lo(static_cast<std::size_t>(attr_dim),
                               std::numeric_limits<double>::infinity());
        std::vector<double> hi(static_cast<std::size_t>(attr_dim),
                               -std::numeric_limits<double>::infinity());
        if (has_attr) {
            for (const auto& row : attr_rows)
                for (int j = 0; j < attr_dim; ++j) {
                    lo[static_cast<std::size_t>(j)] =
                        std::min(lo[static_cast<std::size_t>(j)], row[static_cast<std::size_t>(j)]);
                    hi[static_cast<std::size_t>(j)] =
                        std::max(hi[static_cast<std::size_t>(j)], row[static_cast<std::size_t>(j)]);
                }
        }
        ds.feature_dim = fdim;
        for (int g = 0; g < num_graphs; ++g)
            ds.graphs[static_cast<std::size_t>(g)].features =
                Tensor(static_cast<std::size_t>(nodes_per_graph[static_cast<std::size_t>(g)]),
                       static_cast<std::size_t>(fdim));
        for (std::size_t i = 0; i < total_nodes; ++i) {
            Graph& g = ds.graphs[static_cast<std::size_t>(node_graph[i])];
            const std::size_t r = static_cast<std::size_t>(node_local[i]);
            if (has_attr) {
                for (int j = 0; j < attr_dim; ++j) {
                    const double range = hi[static_cast<std::size_t>(j)] -
                                         lo[static_cast<std::size_t>(j)];
                    const double x = attr_rows[i][static_cast<std::size_t>(j)];
                    g.features(r, static_cast<std::size_t>(j)) =
                        range > 0.0 ? (x - lo[static_cast<std::size_t>(j)]) / range : 0.0;
                }
            }
            if (has_nlab)
                g.features(r, static_cast<std::size_t>(attr_dim + nlab_remap.at(nlab_rows[i]))) =
                    1.0;
            if (has_attr)
                ds.raw[static_cast<std::size_t>(node_graph[i])].attributes.push_back(attr_rows[i]);
            if (has_nlab)
                ds.raw[static_cast<std::size_t>(node_graph[i])].node_labels.push_back(nlab_rows[i]);
        }
    } else {
        // One-hot degree buckets min(degree, cap); values are already in [0,1].
        const int cap = opts.degree_onehot_cap;
        ds.feature_dim = cap + 1;
        for (Graph& g : ds.graphs) {
            g.features = Tensor(static_cast<std::size_t>(g.node_count),
                                static_cast<std::size_t>(cap + 1));
            for (int v = 0; v < g.node_count; ++v) {
                int bucket = std::min(g.degrees[static_cast<std::size_t>(v)], cap);
                g.features(static_cast<std::size_t>(v), static_cast<std::size_t>(bucket)) = 1.0;
            }
        }
    }

    validate_dataset(ds);
    return ds;
}

void write_tudataset(const std::string& dir, const std::string& name, const GraphDataset& ds) {
    fs::create_directories(dir);
    const fs::path base(dir);
    std::ofstream a(base / (name + "_A.txt"));
    std::ofstream ind(base / (name + "_graph_indicator.txt"));
    std::ofstream lab(base / (name + "_graph_labels.txt"));
    if (!a || !ind || !lab) throw LoadError("cannot write dataset files under " + dir);

    const bool has_raw = ds.raw.size() == ds.graphs.size();
    bool write_attr = false;
    bool write_nlab = false;
    if (has_raw) {
        for (const auto& r : ds.raw) {
            if (!r.attributes.empty()) write_attr = true;
            if (!r.node_labels.empty()) write_nlab = true;
        }
    }
    std::ofstream attr;
    std::ofstream nlab;
    if (write_attr) attr.open(base / (name + "_node_attributes.txt"));
    if (write_nlab) nlab.open(base / (name + "_node_labels.txt"));

    int offset = 0;
    for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
        const Graph& g = ds.graphs[gi];
        const std::vector<std::pair<int, int>>& edges =
            has_raw ? ds.raw[gi].file_edges : g.edges;
        for (const auto& [u, v] : edges) {
            a << (offset + u + 1) << ", " << (offset + v + 1) << "\n";
            if (u != v) a << (offset + v + 1) << ", " << (offset + u + 1) << "\n";
        }
        for (int v = 0; v < g.node_count; ++v) {
            ind << (gi + 1) << "\n";
            if (write_attr) {
                const auto& row = ds.raw[gi].attributes[static_cast<std::size_t>(v)];
                for (std::size_t j = 0; j < row.size(); ++j) {
                    if (j) attr << ", ";
                    attr << format_real(row[j]);
                }
                attr << "\n";
            }
            if (write_nlab) nlab << ds.raw[gi].node_labels[static_cast<std::size_t>(v)] << "\n";
        }
        lab << (has_raw ? ds.raw[gi].raw_label : g.label) << "\n";
        offset += g.node_count;
    }
}

std::vector<std::string> write_partitions(const std::string& out_dir, const std::string& name,
                                          const GraphDataset& ds, DensityMetric metric, int k,
                                          std::uint64_t seed) {
    auto parts = partition_by_density(ds, metric, k);
    fs::create_directories(out_dir);

    nlohmann::json manifest;
    manifest["name"] = name;
    manifest["metric"] = to_string(metric);
    manifest["k"] = k;
    manifest["seed"] = seed;
    manifest["chunks"] = nlohmann::json::array();

    std::vector<std::string> dirs;
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const std::string part_name = name + "_P" + std::to_string(c);
        const fs::path dir = fs::path(out_dir) / part_name;
        write_tudataset(dir.string(), part_name, parts[c]);
        dirs.push_back(dir.string());

        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const Graph& g : parts[c].graphs) {
            double s = density_score(g, metric);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        nlohmann::json chunk;
        chunk["dir"] = part_name;
        chunk["graphs"] = parts[c].graphs.size();
        chunk["score_min"] = lo;
        chunk["score_max"] = hi;
        manifest["chunks"].push_back(chunk);
    }

    std::ofstream mf(fs::path(out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
    return dirs;
}

std::string fingerprint_dataset(const GraphDataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    auto feed_int = [&](long long v) { feed(&v, sizeof(v)); };
    auto feed_double = [&](double v) { feed(&v, sizeof(v)); };

    feed_int(static_cast<long long>(ds.graphs.size()));
    feed_int(ds.num_classes);
    feed_int(ds.feature_dim);
    for (const Graph& g : ds.graphs) {
        feed_int(g.node_count);
        feed_int(g.label);
        for (const auto& [u, v] : g.edges) {
            feed_int(u);
            feed_int(v);
        }
        for (std::size_t i = 0; i < g.features.size(); ++i) feed_double(g.features[i]);
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

} // namespace desgrada
