#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "desgrada/graph.hpp"

namespace testutil {

// Fresh scratch directory under the build tree; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("desgrada_" + tag + "_" + std::to_string(++counter) + "_" +
                 std::to_string(static_cast<unsigned long>(::getpid())));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

// Two triangles: nodes 1-3 in graph 1 (label 1), nodes 4-6 in graph 2
// (label 2).
inline void write_two_triangle_fixture(const std::filesystem::path& dir,
                                       const std::string& name) {
    write_file(dir / (name + "_A.txt"), "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n"
                                        "4, 5\n5, 4\n5, 6\n6, 5\n4, 6\n6, 4\n");
    write_file(dir / (name + "_graph_indicator.txt"), "1\n1\n1\n2\n2\n2\n");
    write_file(dir / (name + "_graph_labels.txt"), "1\n2\n");
}

inline desgrada::Graph make_graph(int n, std::vector<std::pair<int, int>> edges,
                                  int feature_dim = 1, double feature_value = 0.5,
                                  int label = 0) {
    desgrada::Graph g;
    g.node_count = n;
    g.edges = std::move(edges);
    desgrada::finalize_graph(g);
    g.features = desgrada::Tensor(static_cast<std::size_t>(n),
                                  static_cast<std::size_t>(feature_dim), feature_value);
    g.label = label;
    return g;
}

inline desgrada::GraphDataset make_dataset(std::vector<desgrada::Graph> graphs, int num_classes,
                                           int feature_dim) {
    desgrada::GraphDataset ds;
    ds.graphs = std::move(graphs);
    ds.num_classes = num_classes;
    ds.feature_dim = feature_dim;
    ds.name = "fixture";
    return ds;
}

} // namespace testutil
