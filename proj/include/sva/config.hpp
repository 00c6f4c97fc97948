#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace sva {

/// Stage parameters shared by every subcommand. JSON keys match the CLI flag
/// names, and any flag given on the command line overrides the file.
struct PipelineConfig {
    std::size_t window_frames = 6000;
    std::size_t m = 1500;
    std::size_t n_neighbors = 15;
    std::size_t k_eigs = 5;
    std::size_t kmeans_k = 3;
    std::size_t restarts = 1000;
    std::size_t knn_k = 15;
    std::size_t max_iters = 100;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = hardware concurrency
    std::string window_function = "box";
    std::size_t hop_frames = 0;  // 0 = window_frames (no overlap)
    std::string out_dir = ".";

    static PipelineConfig load(const std::filesystem::path& path);
    void validate() const;
};

}  // namespace sva
