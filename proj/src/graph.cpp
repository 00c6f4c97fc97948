#include "sva/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "sva/error.hpp"
#include "sva/kernels.hpp"
#include "sva/threading.hpp"

namespace sva {

DistanceMatrix cosine_distances(const FeatureMatrix& features, unsigned threads) {
    const std::size_t n = features.num_windows();
    const std::size_t m = features.num_coefficients();
    if (n == 0) throw Error("cosine_distances: empty feature matrix");

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = std::sqrt(kernels::sumsq(features.X.row(i).data(), m));
        if (!(norms[i] > 0.0)) {
            throw Error("window " + std::to_string(i) + " has a zero feature vector; cosine distance is undefined");
        }
    }

    DistanceMatrix distances(n);
    parallel_chunks(0, n, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* xi = features.X.row(i).data();
            for (std::size_t j = i + 1; j < n; ++j) {
                const double cosine = kernels::dot(xi, features.X.row(j).data(), m) / (norms[i] * norms[j]);
                const double d = std::clamp(1.0 - cosine, 0.0, 2.0);
                distances.at(i, j) = d;
                distances.at(j, i) = d;
            }
        }
    });
    return distances;
}

double SimilarityGraph::at(std::size_t i, std::size_t j) const {
    for (std::size_t k = row_begin[i]; k < row_begin[i + 1]; ++k) {
        if (column[k] == j) return value[k];
    }
    return 0.0;
}

SimilarityGraph adaptive_similarities(const DistanceMatrix& distances, std::size_t neighbor_count) {
    const std::size_t n = distances.n;
    if (neighbor_count < 1 || neighbor_count >= n) {
        throw Error("neighbor count N=" + std::to_string(neighbor_count) + " must satisfy 1 <= N < n (n=" +
                    std::to_string(n) + ")");
    }

    SimilarityGraph graph;
    graph.n = n;
    graph.neighbor_count = neighbor_count;
    graph.sigma.assign(n, 0.0);

    // Row-wise neighbor selection, then union symmetrization via a map of
    // upper-triangle edges.
    std::map<std::pair<std::size_t, std::size_t>, double> edges;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));  // exclude self
        // Nearest first; distance ties broken by the lower index.
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double da = distances.at(i, a);
            const double db = distances.at(i, b);
            return da != db ? da < db : a < b;
        });

        const double sigma = distances.at(i, order[neighbor_count - 1]);
        if (!(sigma > 0.0)) {
            throw Error("point " + std::to_string(i) + " has at least " + std::to_string(neighbor_count) +
                        " exact duplicates; its adaptive bandwidth would be zero");
        }
        graph.sigma[i] = sigma;

        for (std::size_t k = 0; k < neighbor_count; ++k) {
            const std::size_t j = order[k];
            const double d = distances.at(i, j);
            const double s = std::exp(-(d * d) / (sigma * sigma));
            const auto key = i < j ? std::make_pair(i, j) : std::make_pair(j, i);
            auto [it, inserted] = edges.emplace(key, s);
            if (!inserted) it->second = std::max(it->second, s);
        }
    }

    // Assemble CSR with both orientations of every edge.
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (const auto& [key, s] : edges) {
        rows[key.first].emplace_back(key.second, s);
        rows[key.second].emplace_back(key.first, s);
    }
    graph.row_begin.assign(n + 1, 0);
    graph.degrees.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = rows[i];
        std::sort(row.begin(), row.end());
        graph.row_begin[i + 1] = graph.row_begin[i] + row.size();
        for (const auto& [j, s] : row) {
            graph.column.push_back(j);
            graph.value.push_back(s);
            graph.degrees[i] += s;
        }
        if (!(graph.degrees[i] > 0.0)) {
            throw Error("vertex " + std::to_string(i) + " has zero degree; the similarity graph is degenerate");
        }
    }
    return graph;
}

void save_graph(const SimilarityGraph& graph, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write graph dump: " + path.string());
    char buf[64];
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t k = graph.row_begin[i]; k < graph.row_begin[i + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i, graph.column[k], graph.value[k]);
            file << buf;
        }
    }
    if (!file) throw Error("failed writing graph dump: " + path.string());
}

}  // namespace sva
