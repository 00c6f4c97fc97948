#include "sva/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "sva/error.hpp"
#include "sva/features.hpp"

namespace sva {

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed config " + path.string() + ": " + e.what());
    }

    PipelineConfig config;
    try {
        config.window_frames = doc.value("window_frames", config.window_frames);
        config.m = doc.value("m", config.m);
        config.n_neighbors = doc.value("n_neighbors", config.n_neighbors);
        config.k_eigs = doc.value("k_eigs", config.k_eigs);
        config.kmeans_k = doc.value("kmeans_k", config.kmeans_k);
        config.restarts = doc.value("restarts", config.restarts);
        config.knn_k = doc.value("knn_k", config.knn_k);
        config.max_iters = doc.value("max_iters", config.max_iters);
        config.seed = doc.value("seed", config.seed);
        config.threads = doc.value("threads", config.threads);
        config.window_function = doc.value("window_function", config.window_function);
        config.hop_frames = doc.value("hop_frames", config.hop_frames);
        config.out_dir = doc.value("out_dir", config.out_dir);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed config " + path.string() + ": " + e.what());
    }
    config.validate();
    return config;
}

void PipelineConfig::validate() const {
    if (window_frames < 2) throw Error("config: window_frames must be at least 2");
    if (m == 0 || m > window_frames / 2) {
        throw Error("config: m must lie in 1.." + std::to_string(window_frames / 2));
    }
    if (n_neighbors == 0) throw Error("config: n_neighbors must be positive");
    if (k_eigs == 0) throw Error("config: k_eigs must be positive");
    if (kmeans_k == 0) throw Error("config: kmeans_k must be positive");
    if (restarts == 0) throw Error("config: restarts must be positive");
    if (knn_k == 0) throw Error("config: knn_k must be positive");
    if (max_iters == 0) throw Error("config: max_iters must be positive");
    parse_window_function(window_function);
}

}  // namespace sva
