// sva: vehicle-audio identification pipeline driver.
//
// Stages persist their artifacts to disk so each one can be inspected or
// rerun in isolation; `sva pipeline` chains them end to end.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sva/audio.hpp"
#include "sva/classify.hpp"
#include "sva/config.hpp"
#include "sva/embedding.hpp"
#include "sva/error.hpp"
#include "sva/features.hpp"
#include "sva/graph.hpp"
#include "sva/synth.hpp"
#include "sva/threading.hpp"
#include "sva/wav.hpp"

namespace fs = std::filesystem;
using namespace sva;

namespace {

/// Config flags shared by the subcommands. A JSON config file (--config) is
/// loaded first; any flag given on the command line overrides it.
struct ConfigFlags {
    std::string config_path;
    PipelineConfig flag_values;

    CLI::Option* config = nullptr;
    CLI::Option* window_frames = nullptr;
    CLI::Option* m = nullptr;
    CLI::Option* n_neighbors = nullptr;
    CLI::Option* k_eigs = nullptr;
    CLI::Option* kmeans_k = nullptr;
    CLI::Option* restarts = nullptr;
    CLI::Option* knn_k = nullptr;
    CLI::Option* max_iters = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* threads = nullptr;
    CLI::Option* window_function = nullptr;
    CLI::Option* hop_frames = nullptr;
    CLI::Option* out_dir = nullptr;

    void attach(CLI::App& cmd) {
        config = cmd.add_option("--config", config_path, "JSON config file; flags override its fields");
        window_frames = cmd.add_option("--window-frames", flag_values.window_frames, "analysis window length in frames");
        m = cmd.add_option("--m", flag_values.m, "Fourier coefficients kept per window");
        n_neighbors = cmd.add_option("--n-neighbors", flag_values.n_neighbors, "graph neighbor count N");
        k_eigs = cmd.add_option("--k-eigs", flag_values.k_eigs, "embedding dimension (leading eigenvectors)");
        kmeans_k = cmd.add_option("--kmeans-k", flag_values.kmeans_k, "K-means cluster count");
        restarts = cmd.add_option("--restarts", flag_values.restarts, "K-means restarts");
        knn_k = cmd.add_option("--knn-k", flag_values.knn_k, "KNN neighbor count");
        max_iters = cmd.add_option("--max-iters", flag_values.max_iters, "K-means iteration cap");
        seed = cmd.add_option("--seed", flag_values.seed, "random seed");
        threads = cmd.add_option("--threads", flag_values.threads, "worker threads (0 = all cores)");
        window_function = cmd.add_option("--window-function", flag_values.window_function, "box or hamming");
        hop_frames = cmd.add_option("--hop-frames", flag_values.hop_frames, "window hop (0 = no overlap)");
        out_dir = cmd.add_option("--out-dir", flag_values.out_dir, "output directory");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (config->count() > 0) cfg = PipelineConfig::load(config_path);
        if (window_frames->count() > 0) cfg.window_frames = flag_values.window_frames;
        if (m->count() > 0) cfg.m = flag_values.m;
        if (n_neighbors->count() > 0) cfg.n_neighbors = flag_values.n_neighbors;
        if (k_eigs->count() > 0) cfg.k_eigs = flag_values.k_eigs;
        if (kmeans_k->count() > 0) cfg.kmeans_k = flag_values.kmeans_k;
        if (restarts->count() > 0) cfg.restarts = flag_values.restarts;
        if (knn_k->count() > 0) cfg.knn_k = flag_values.knn_k;
        if (max_iters->count() > 0) cfg.max_iters = flag_values.max_iters;
        if (seed->count() > 0) cfg.seed = flag_values.seed;
        if (threads->count() > 0) cfg.threads = flag_values.threads;
        if (window_function->count() > 0) cfg.window_function = flag_values.window_function;
        if (hop_frames->count() > 0) cfg.hop_frames = flag_values.hop_frames;
        if (out_dir->count() > 0) cfg.out_dir = flag_values.out_dir;
        cfg.validate();
        return cfg;
    }
};

struct FeatureArtifacts {
    FeatureMatrix features;
    std::vector<WindowLabel> labels;  // empty when the input had no manifest
};

/// Shared feature-extraction stage: WAV or manifest in, windows out.
FeatureArtifacts extract_features(const PipelineConfig& cfg, const fs::path& input) {
    AudioSignal signal;
    LabelTrack track;
    const bool is_manifest = input.extension() == ".json";
    if (is_manifest) {
        const SegmentManifest manifest = SegmentManifest::load(input);
        CompositeSignal comp = composite(manifest, input.parent_path());
        signal = std::move(comp.signal);
        track = std::move(comp.labels);
    } else {
        signal = load_audio(input);
    }
    signal = remove_dc(std::move(signal));

    const WindowedSignal windows = window(signal, cfg.window_frames, cfg.hop_frames);
    FeatureArtifacts artifacts;
    artifacts.features = stft(windows, cfg.m, parse_window_function(cfg.window_function), cfg.threads);
    if (is_manifest) artifacts.labels = window_labels(track, windows);

    std::printf("windows: n=%zu, m=%zu, window=%.6g s\n", artifacts.features.num_windows(),
                artifacts.features.num_coefficients(),
                static_cast<double>(cfg.window_frames) / windows.source_rate_hz);
    return artifacts;
}

void write_feature_artifacts(const PipelineConfig& cfg, const FeatureArtifacts& artifacts) {
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    save_feature_binary(artifacts.features, out / "features.svfm");
    save_feature_csv(artifacts.features, out / "features.csv");
    if (!artifacts.labels.empty()) {
        save_window_labels_csv(artifacts.features.window_times_s, artifacts.labels, out / "labels.csv");
    }
}

struct EmbedResult {
    Embedding embedding;  // k_eigs (or auto-selected k) columns
    std::vector<double> all_eigenvalues;
    std::size_t suggested_k = 0;
};

EmbedResult embed_features(const PipelineConfig& cfg, const FeatureMatrix& features, bool auto_k,
                           const std::optional<fs::path>& graph_dump) {
    const std::size_t n = features.num_windows();
    if (cfg.k_eigs > n) {
        throw Error("k_eigs=" + std::to_string(cfg.k_eigs) + " exceeds the number of windows (" +
                    std::to_string(n) + ")");
    }
    const DistanceMatrix distances = cosine_distances(features, cfg.threads);
    const SimilarityGraph graph = adaptive_similarities(distances, cfg.n_neighbors);
    if (graph_dump.has_value()) save_graph(graph, *graph_dump);
    const Laplacian laplacian = build_sngl(graph);

    // Solve a little past the requested dimension so the report can show
    // the gap structure around it.
    const std::size_t k_report = std::min(n, std::max<std::size_t>(cfg.k_eigs + 1, 12));
    const Embedding full = smallest_eigenpairs(laplacian, k_report);

    EmbedResult result;
    result.all_eigenvalues = full.eigenvalues;
    if (k_report >= 3) {
        result.suggested_k = eigengap_select(full.eigenvalues, 2, std::min<std::size_t>(8, k_report - 1));
    }

    std::size_t k = cfg.k_eigs;
    if (auto_k && result.suggested_k != 0) k = result.suggested_k;
    result.embedding.eigenvalues.assign(full.eigenvalues.begin(),
                                        full.eigenvalues.begin() + static_cast<std::ptrdiff_t>(k));
    result.embedding.vectors = RowMatrix(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) result.embedding.vectors.at(i, c) = full.vectors.at(i, c);
    }
    return result;
}

LabeledSet training_set(const std::vector<WindowLabel>& labels) {
    LabeledSet train;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].role == Role::train && !labels[i].label.empty()) {
            train.indices.push_back(i);
            train.labels.push_back(labels[i].label);
        }
    }
    if (train.indices.empty()) throw Error("no training windows: mark at least one manifest entry with role=train");
    return train;
}

std::vector<std::string> truth_labels(const std::vector<WindowLabel>& labels) {
    std::vector<std::string> truth(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) truth[i] = labels[i].label;
    return truth;
}

void run_knn_stage(const PipelineConfig& cfg, const Embedding& embedding, std::span<const double> times,
                   const std::vector<WindowLabel>& labels) {
    const LabeledSet train = training_set(labels);
    const std::vector<std::string> predicted = knn_classify(embedding.vectors, train, cfg.knn_k);
    const std::vector<std::string> truth = truth_labels(labels);

    const fs::path out(cfg.out_dir);
    save_predictions_csv(times, truth, predicted, out / "predictions.csv");

    std::set<std::string> class_set;
    for (const auto& label : truth) {
        if (!label.empty()) class_set.insert(label);
    }
    const std::vector<std::string> class_order(class_set.begin(), class_set.end());

    // Score every window that carries a ground-truth label.
    std::vector<std::string> scored_truth, scored_predicted;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].empty()) continue;
        scored_truth.push_back(truth[i]);
        scored_predicted.push_back(predicted[i]);
    }
    const ConfusionMatrix matrix = confusion(scored_truth, scored_predicted, class_order);
    save_confusion_json(matrix, out / "confusion.json");
    std::printf("knn: K=%zu, accuracy=%.6f (%lld/%lld windows)\n", cfg.knn_k, accuracy(matrix),
                static_cast<long long>(matrix.diagonal()), static_cast<long long>(matrix.total()));
}

void run_cluster_stage(const PipelineConfig& cfg, const Embedding& embedding, std::span<const double> times,
                       const std::vector<WindowLabel>& labels) {
    const ClusterAssignment assignment =
        kmeans(embedding.vectors, cfg.kmeans_k, cfg.restarts, cfg.max_iters, cfg.seed, cfg.threads);

    const fs::path out(cfg.out_dir);
    std::string csv = "window_index,time_s,cluster\n";
    char buf[64];
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu\n", i, times[i], assignment.labels[i]);
        csv += buf;
    }
    std::ofstream file(out / "assignments.csv", std::ios::trunc);
    if (!file) throw Error("cannot write assignments CSV");
    file << csv;

    std::printf("kmeans: K=%zu, restarts=%zu, sse=%.9g\n", cfg.kmeans_k, cfg.restarts, assignment.sse);
    if (!labels.empty()) {
        const std::vector<std::string> truth = truth_labels(labels);
        const std::set<std::string> classes(truth.begin(), truth.end());
        if (classes.size() == cfg.kmeans_k && cfg.kmeans_k <= 8 && !classes.contains("")) {
            const ClusterAlignment alignment = align_clusters(assignment, truth);
            std::printf("kmeans: best-aligned accuracy=%.6f\n", alignment.accuracy);
        }
    }
}

std::vector<IndexRange> parse_ranges(const std::string& text) {
    std::vector<IndexRange> ranges;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw Error("range '" + item + "' is not of the form begin:end");
        IndexRange range;
        range.begin = std::stoul(item.substr(0, colon));
        range.end = std::stoul(item.substr(colon + 1));
        ranges.push_back(range);
    }
    if (ranges.empty()) throw Error("no coefficient ranges given");
    return ranges;
}

int run(int argc, char** argv) {
    CLI::App app{"vehicle-audio identification: STFT features, spectral embedding, K-means / KNN"};
    app.require_subcommand(1);

    // features
    auto* cmd_features = app.add_subcommand("features", "extract per-window Fourier magnitude features");
    std::string features_input;
    cmd_features->add_option("input", features_input, "WAV file or manifest JSON")->required();
    ConfigFlags features_cfg;
    features_cfg.attach(*cmd_features);

    // reconstruct
    auto* cmd_reconstruct = app.add_subcommand("reconstruct", "band-filtered reconstructions of a recording");
    std::string reconstruct_input, reconstruct_ranges;
    cmd_reconstruct->add_option("input", reconstruct_input, "WAV file")->required();
    cmd_reconstruct->add_option("--ranges", reconstruct_ranges, "comma-separated begin:end coefficient ranges")
        ->required();
    ConfigFlags reconstruct_cfg;
    reconstruct_cfg.attach(*cmd_reconstruct);

    // embed
    auto* cmd_embed = app.add_subcommand("embed", "build the similarity graph and spectral embedding");
    std::string embed_input, embed_graph_dump;
    bool embed_auto_k = false;
    cmd_embed->add_option("input", embed_input, "feature file (.svfm or .csv)")->required();
    cmd_embed->add_flag("--auto-k", embed_auto_k, "use the eigengap-selected dimension instead of k_eigs");
    cmd_embed->add_option("--dump-graph", embed_graph_dump, "write the similarity graph as 'i j s_ij' lines");
    ConfigFlags embed_cfg;
    embed_cfg.attach(*cmd_embed);

    // cluster
    auto* cmd_cluster = app.add_subcommand("cluster", "K-means on the embedding");
    std::string cluster_input, cluster_labels;
    cmd_cluster->add_option("input", cluster_input, "embedding CSV")->required();
    cmd_cluster->add_option("--labels", cluster_labels, "window label CSV for alignment scoring");
    ConfigFlags cluster_cfg;
    cluster_cfg.attach(*cmd_cluster);

    // knn
    auto* cmd_knn = app.add_subcommand("knn", "semi-supervised KNN classification on the embedding");
    std::string knn_input, knn_labels;
    cmd_knn->add_option("input", knn_input, "embedding CSV")->required();
    cmd_knn->add_option("--labels", knn_labels, "window label CSV with train/test roles")->required();
    ConfigFlags knn_cfg;
    knn_cfg.attach(*cmd_knn);

    // synth
    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    std::string synth_scenario, synth_preset;
    cmd_synth->add_option("--scenario", synth_scenario, "scenario JSON");
    cmd_synth->add_option("--preset", synth_preset, "built-in scenario name (default)");
    ConfigFlags synth_cfg;
    synth_cfg.attach(*cmd_synth);

    // pipeline
    auto* cmd_pipeline = app.add_subcommand("pipeline", "synth (optional) + features + embed + cluster + knn");
    std::string pipeline_scenario, pipeline_preset, pipeline_input;
    bool pipeline_auto_k = false;
    cmd_pipeline->add_option("--scenario", pipeline_scenario, "scenario JSON to synthesize first");
    cmd_pipeline->add_option("--preset", pipeline_preset, "built-in scenario name (default)");
    cmd_pipeline->add_option("--input", pipeline_input, "existing WAV or manifest JSON");
    cmd_pipeline->add_flag("--auto-k", pipeline_auto_k, "use the eigengap-selected embedding dimension");
    ConfigFlags pipeline_cfg;
    pipeline_cfg.attach(*cmd_pipeline);

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "confusion matrix and accuracy from a predictions CSV");
    std::string eval_input;
    cmd_eval->add_option("input", eval_input, "predictions CSV")->required();
    ConfigFlags eval_cfg;
    eval_cfg.attach(*cmd_eval);

    CLI11_PARSE(app, argc, argv);

    if (cmd_features->parsed()) {
        const PipelineConfig cfg = features_cfg.resolve();
        const FeatureArtifacts artifacts = extract_features(cfg, features_input);
        write_feature_artifacts(cfg, artifacts);
        std::printf("wrote %s and %s\n", (fs::path(cfg.out_dir) / "features.svfm").c_str(),
                    (fs::path(cfg.out_dir) / "features.csv").c_str());
        return 0;
    }

    if (cmd_reconstruct->parsed()) {
        const PipelineConfig cfg = reconstruct_cfg.resolve();
        const std::vector<IndexRange> ranges = parse_ranges(reconstruct_ranges);
        AudioSignal signal = load_audio(reconstruct_input);
        const WindowedSignal windows = window(signal, cfg.window_frames, cfg.hop_frames);

        fs::create_directories(cfg.out_dir);
        const fs::path out(cfg.out_dir);
        std::string energies = "window_index,time_s";
        std::vector<AudioSignal> bands;
        for (const auto& range : ranges) {
            bands.push_back(band_reconstruct(windows, std::span(&range, 1), cfg.threads));
            energies += ",band" + std::to_string(range.begin) + "_" + std::to_string(range.end);
        }
        energies += '\n';
        char buf[64];
        for (std::size_t i = 0; i < windows.count; ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g", i, windows.window_times_s[i]);
            energies += buf;
            for (const auto& band : bands) {
                const double* w = band.samples.data() + i * windows.window_len_frames;
                double e = 0.0;
                for (std::size_t j = 0; j < windows.window_len_frames; ++j) e += w[j] * w[j];
                std::snprintf(buf, sizeof buf, ",%.17g", e);
                energies += buf;
            }
            energies += '\n';
        }
        for (std::size_t b = 0; b < bands.size(); ++b) {
            const auto name = "band_" + std::to_string(ranges[b].begin) + "_" + std::to_string(ranges[b].end) +
                              ".wav";
            write_wav(out / name, bands[b].samples, bands[b].sample_rate_hz, WavEncoding::float64);
            std::printf("wrote %s\n", (out / name).c_str());
        }
        std::ofstream efile(out / "band_energies.csv", std::ios::trunc);
        if (!efile) throw Error("cannot write band energies CSV");
        efile << energies;
        return 0;
    }

    if (cmd_embed->parsed()) {
        const PipelineConfig cfg = embed_cfg.resolve();
        const FeatureMatrix features = load_features(embed_input);
        std::optional<fs::path> dump;
        if (!embed_graph_dump.empty()) dump = embed_graph_dump;
        fs::create_directories(cfg.out_dir);
        const EmbedResult result = embed_features(cfg, features, embed_auto_k, dump);
        const fs::path out(cfg.out_dir);
        save_embedding_csv(result.embedding, features.window_times_s, out / "embedding.csv");
        save_eigenvalue_report(result.all_eigenvalues, out / "eigenvalues.csv");
        std::printf("embedding: k=%zu columns; largest eigengap after k=%zu\n", result.embedding.dimension(),
                    result.suggested_k);
        return 0;
    }

    if (cmd_cluster->parsed()) {
        const PipelineConfig cfg = cluster_cfg.resolve();
        const LoadedEmbedding loaded = load_embedding_csv(cluster_input);
        std::vector<WindowLabel> labels;
        if (!cluster_labels.empty()) labels = load_window_labels_csv(cluster_labels).labels;
        fs::create_directories(cfg.out_dir);
        run_cluster_stage(cfg, loaded.embedding, loaded.window_times_s, labels);
        return 0;
    }

    if (cmd_knn->parsed()) {
        const PipelineConfig cfg = knn_cfg.resolve();
        const LoadedEmbedding loaded = load_embedding_csv(knn_input);
        const LoadedWindowLabels labels = load_window_labels_csv(knn_labels);
        if (labels.labels.size() != loaded.embedding.vectors.rows) {
            throw Error("label CSV and embedding CSV disagree on the number of windows");
        }
        fs::create_directories(cfg.out_dir);
        run_knn_stage(cfg, loaded.embedding, loaded.window_times_s, labels.labels);
        return 0;
    }

    if (cmd_synth->parsed()) {
        const PipelineConfig cfg = synth_cfg.resolve();
        Scenario scenario;
        if (!synth_scenario.empty()) {
            scenario = Scenario::load(synth_scenario);
        } else if (synth_preset == "default") {
            scenario = make_default_scenario(cfg.seed);
        } else {
            throw Error("synth needs --scenario FILE or --preset default");
        }
        const SegmentManifest manifest = synth_dataset(scenario, cfg.out_dir, cfg.threads);
        std::printf("synthesized %zu passages (%zu classes) into %s\n", manifest.entries.size(),
                    manifest.classes().size(), cfg.out_dir.c_str());
        return 0;
    }

    if (cmd_pipeline->parsed()) {
        const PipelineConfig cfg = pipeline_cfg.resolve();
        fs::create_directories(cfg.out_dir);

        fs::path input;
        if (!pipeline_input.empty()) {
            input = pipeline_input;
        } else {
            Scenario scenario;
            if (!pipeline_scenario.empty()) {
                scenario = Scenario::load(pipeline_scenario);
            } else if (pipeline_preset == "default") {
                scenario = make_default_scenario(cfg.seed);
            } else {
                throw Error("pipeline needs --input, --scenario or --preset default");
            }
            synth_dataset(scenario, fs::path(cfg.out_dir) / "audio", cfg.threads);
            input = fs::path(cfg.out_dir) / "audio" / "manifest.json";
        }

        const FeatureArtifacts artifacts = extract_features(cfg, input);
        write_feature_artifacts(cfg, artifacts);

        const EmbedResult result = embed_features(cfg, artifacts.features, pipeline_auto_k, std::nullopt);
        const fs::path out(cfg.out_dir);
        save_embedding_csv(result.embedding, artifacts.features.window_times_s, out / "embedding.csv");
        save_eigenvalue_report(result.all_eigenvalues, out / "eigenvalues.csv");
        std::printf("embedding: k=%zu columns; largest eigengap after k=%zu\n", result.embedding.dimension(),
                    result.suggested_k);

        run_cluster_stage(cfg, result.embedding, artifacts.features.window_times_s, artifacts.labels);
        if (!artifacts.labels.empty()) {
            run_knn_stage(cfg, result.embedding, artifacts.features.window_times_s, artifacts.labels);
        }
        return 0;
    }

    if (cmd_eval->parsed()) {
        const PipelineConfig cfg = eval_cfg.resolve();
        const LoadedPredictions predictions = load_predictions_csv(eval_input);
        std::vector<std::string> truth, predicted;
        for (std::size_t i = 0; i < predictions.truth.size(); ++i) {
            if (predictions.truth[i].empty()) continue;  // unlabeled windows are not scored
            truth.push_back(predictions.truth[i]);
            predicted.push_back(predictions.predicted[i]);
        }
        std::set<std::string> class_set(truth.begin(), truth.end());
        class_set.insert(predicted.begin(), predicted.end());
        const std::vector<std::string> class_order(class_set.begin(), class_set.end());
        const ConfusionMatrix matrix = confusion(truth, predicted, class_order);
        fs::create_directories(cfg.out_dir);
        save_confusion_json(matrix, fs::path(cfg.out_dir) / "confusion.json");
        std::printf("accuracy=%.6f (%lld/%lld)\n", accuracy(matrix), static_cast<long long>(matrix.diagonal()),
                    static_cast<long long>(matrix.total()));
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
