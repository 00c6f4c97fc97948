#include "sva/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "sva/error.hpp"

namespace sva {

namespace {

// Dense solves get slow and memory-hungry past this; the pipeline operates
// on hundreds of windows.
constexpr std::size_t kMaxDenseOrder = 4096;

void format_double(std::string& out, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out += buf;
}

}  // namespace

Laplacian build_sngl(const SimilarityGraph& graph) {
    const std::size_t n = graph.n;
    std::vector<double> inv_sqrt_degree(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(graph.degrees[i] > 0.0)) {
            throw Error("vertex " + std::to_string(i) + " has zero degree; cannot normalize the Laplacian");
        }
        inv_sqrt_degree[i] = 1.0 / std::sqrt(graph.degrees[i]);
    }

    Laplacian laplacian;
    laplacian.n = n;
    laplacian.values.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) laplacian.at(i, i) = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = graph.row_begin[i]; k < graph.row_begin[i + 1]; ++k) {
            const std::size_t j = graph.column[k];
            const double normalized = graph.value[k] * inv_sqrt_degree[i] * inv_sqrt_degree[j];
            laplacian.at(i, j) -= normalized;
        }
    }
    return laplacian;
}

Embedding smallest_eigenpairs(const Laplacian& laplacian, std::size_t k_max) {
    const std::size_t n = laplacian.n;
    if (k_max < 1 || k_max > n) {
        throw Error("k_max=" + std::to_string(k_max) + " out of range for a " + std::to_string(n) +
                    "-vertex Laplacian");
    }
    if (n > kMaxDenseOrder) {
        throw Error("Laplacian order " + std::to_string(n) + " exceeds the dense-solver limit of " +
                    std::to_string(kMaxDenseOrder));
    }

    Eigen::MatrixXd dense(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = laplacian.at(i, j);
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success) {
        throw Error("eigendecomposition failed to converge for the " + std::to_string(n) + "-vertex Laplacian");
    }

    Embedding embedding;
    embedding.eigenvalues.resize(k_max);
    embedding.vectors = RowMatrix(n, k_max);
    double worst_residual = 0.0;
    for (std::size_t c = 0; c < k_max; ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        embedding.eigenvalues[c] = solver.eigenvalues()(col);
        Eigen::VectorXd v = solver.eigenvectors().col(col);

        // Deterministic sign: the entry of largest magnitude is positive,
        // ties resolved toward the lower index.
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < v.size(); ++r) {
            if (std::abs(v(r)) > best) {
                best = std::abs(v(r));
                pivot = r;
            }
        }
        if (v(pivot) < 0.0) v = -v;

        const double residual = (dense * v - embedding.eigenvalues[c] * v).norm();
        worst_residual = std::max(worst_residual, residual);
        for (std::size_t r = 0; r < n; ++r) embedding.vectors.at(r, c) = v(static_cast<Eigen::Index>(r));
    }
    if (worst_residual > 1e-8) {
        std::ostringstream msg;
        msg << "eigenpair residual " << worst_residual << " exceeds 1e-8; the solve did not converge";
        throw Error(msg.str());
    }
    return embedding;
}

std::size_t eigengap_select(std::span<const double> eigenvalues, std::size_t k_min, std::size_t k_max) {
    if (k_min < 1 || k_min > k_max || k_max + 1 > eigenvalues.size()) {
        throw Error("eigengap range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                    "] invalid for " + std::to_string(eigenvalues.size()) + " eigenvalues");
    }
    std::size_t best_k = k_min;
    double best_gap = -1.0;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const double gap = eigenvalues[k] - eigenvalues[k - 1];  // lambda_{k+1} - lambda_k, 1-based
        if (gap > best_gap) {
            best_gap = gap;
            best_k = k;
        }
    }
    return best_k;
}

void save_embedding_csv(const Embedding& embedding, std::span<const double> window_times_s,
                        const std::filesystem::path& path) {
    if (window_times_s.size() != embedding.vectors.rows) {
        throw Error("embedding row count does not match the window time axis");
    }
    std::string out = "time_s";
    for (std::size_t c = 0; c < embedding.dimension(); ++c) {
        out += ",v" + std::to_string(c + 1) + ":lambda=";
        format_double(out, embedding.eigenvalues[c]);
    }
    out += '\n';
    for (std::size_t i = 0; i < embedding.vectors.rows; ++i) {
        format_double(out, window_times_s[i]);
        for (const double v : embedding.vectors.row(i)) {
            out += ',';
            format_double(out, v);
        }
        out += '\n';
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write embedding CSV: " + path.string());
    file << out;
    if (!file) throw Error("failed writing embedding CSV: " + path.string());
}

LoadedEmbedding load_embedding_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw Error("cannot open embedding CSV: " + path.string());
    std::string line;
    if (!std::getline(file, line)) throw Error("empty embedding CSV: " + path.string());

    LoadedEmbedding loaded;
    {
        std::stringstream header(line);
        std::string cell;
        bool first = true;
        while (std::getline(header, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            const auto tag = cell.find("lambda=");
            if (tag == std::string::npos) throw Error("embedding CSV header lacks lambda tags: " + path.string());
            loaded.embedding.eigenvalues.push_back(std::strtod(cell.c_str() + tag + 7, nullptr));
        }
    }
    const std::size_t k = loaded.embedding.eigenvalues.size();
    if (k == 0) throw Error("embedding CSV has no coordinate columns: " + path.string());

    std::vector<double> values;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> parsed;
        while (std::getline(row, cell, ',')) parsed.push_back(std::strtod(cell.c_str(), nullptr));
        if (parsed.size() != k + 1) throw Error("ragged embedding CSV: " + path.string());
        loaded.window_times_s.push_back(parsed[0]);
        values.insert(values.end(), parsed.begin() + 1, parsed.end());
    }
    loaded.embedding.vectors = RowMatrix(loaded.window_times_s.size(), k);
    loaded.embedding.vectors.values = std::move(values);
    return loaded;
}

void save_eigenvalue_report(std::span<const double> eigenvalues, const std::filesystem::path& path) {
    std::string out = "index,eigenvalue,gap_after\n";
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        format_double(out, eigenvalues[i]);
        out += ',';
        if (i + 1 < eigenvalues.size()) format_double(out, eigenvalues[i + 1] - eigenvalues[i]);
        out += '\n';
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write eigenvalue report: " + path.string());
    file << out;
    if (!file) throw Error("failed writing eigenvalue report: " + path.string());
}

}  // namespace sva
