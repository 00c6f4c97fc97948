#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sva/graph.hpp"
#include "sva/matrix.hpp"

namespace sva {

/// Symmetric normalized graph Laplacian, stored dense (the working regime is
/// a few hundred windows).
struct Laplacian {
    std::size_t n = 0;
    std::vector<double> values;  // n x n, row-major, symmetric

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

/// L = I - D^{-1/2} S D^{-1/2}. Requires every degree positive.
Laplacian build_sngl(const SimilarityGraph& graph);

/// Leading (smallest-eigenvalue) spectral coordinates.
struct Embedding {
    std::vector<double> eigenvalues;  // ascending, one per kept column
    RowMatrix vectors;                // n x k, unit-norm columns

    std::size_t dimension() const { return vectors.cols; }
};

/// The k_max algebraically smallest eigenpairs of a dense symmetric
/// Laplacian. Columns follow a fixed sign convention (the entry of largest
/// magnitude is positive, ties to the lower row) so results are
/// bit-reproducible. Errors if the solver fails to converge or a residual
/// ||L v - lambda v|| exceeds 1e-8.
Embedding smallest_eigenpairs(const Laplacian& laplacian, std::size_t k_max);

/// Largest consecutive gap: argmax over k in [k_min, k_max] of
/// lambda_{k+1} - lambda_k with 1-based k, ties to the smaller k.
std::size_t eigengap_select(std::span<const double> eigenvalues, std::size_t k_min, std::size_t k_max);

// Embedding persistence: CSV whose header tags each coordinate column with
// its eigenvalue (time_s,v1:lambda=...,...). The eigenvalue report is a
// separate CSV (index,eigenvalue,gap_after).
void save_embedding_csv(const Embedding& embedding, std::span<const double> window_times_s,
                        const std::filesystem::path& path);
struct LoadedEmbedding {
    Embedding embedding;
    std::vector<double> window_times_s;
};
LoadedEmbedding load_embedding_csv(const std::filesystem::path& path);
void save_eigenvalue_report(std::span<const double> eigenvalues, const std::filesystem::path& path);

}  // namespace sva
