#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "sva/features.hpp"

namespace sva {

/// Dense symmetric pairwise distance matrix with zero diagonal.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // n x n, row-major

    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t size) : n(size), values(size * size, 0.0) {}

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

/// Pairwise cosine distances d = 1 - <x_i, x_j> / (|x_i| |x_j|), clamped to
/// [0, 2] against roundoff. Each pair is computed once and mirrored, so the
/// result is exactly symmetric. Errors on any zero-norm row.
DistanceMatrix cosine_distances(const FeatureMatrix& features, unsigned threads = 1);

/// Sparse symmetric similarity graph with per-point adaptive bandwidths.
struct SimilarityGraph {
    std::size_t n = 0;
    std::size_t neighbor_count = 0;    // the N used to build the graph
    std::vector<double> sigma;         // distance to each point's N-th neighbor
    std::vector<double> degrees;       // row sums of S
    // CSR storage of the symmetrized S (zero diagonal, values in [0, 1]).
    std::vector<std::size_t> row_begin;  // n+1 offsets
    std::vector<std::size_t> column;
    std::vector<double> value;

    std::size_t nonzeros() const { return value.size(); }
    /// S[i][j], zero when the edge is absent.
    double at(std::size_t i, std::size_t j) const;
};

/// Build the neighborhood graph: sigma_i is the distance from i to its N-th
/// nearest neighbor (self excluded, ties to the lower index), edges
/// S_ij = exp(-d_ij^2 / sigma_i^2) are kept for i's N nearest neighbors, and
/// the result is union-symmetrized with S = max(S, S^T). Errors when some
/// sigma_i is zero (N-fold duplicates) or a vertex ends up with zero degree.
SimilarityGraph adaptive_similarities(const DistanceMatrix& distances, std::size_t neighbor_count);

/// Debug dump: one "i j s_ij" line per stored entry, sorted by (i, j).
void save_graph(const SimilarityGraph& graph, const std::filesystem::path& path);

}  // namespace sva
