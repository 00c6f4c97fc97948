#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sva/matrix.hpp"

namespace sva {

/// Result of one K-means solve.
struct ClusterAssignment {
    std::vector<std::size_t> labels;  // cluster index per point, in [0, K)
    RowMatrix centers;                // K x dim
    double sse = 0.0;                 // total within-cluster squared distance
};

/// Per-iteration objective values of a single Lloyd run (testing hook).
struct LloydTrace {
    std::vector<double> sse_per_iteration;
};

/// One Lloyd run from a seeded random initialization (K distinct points
/// drawn without replacement). Assignment ties go to the lower cluster
/// index; a cluster left empty is reseeded with the point farthest from its
/// current center. Stops when assignments repeat or after max_iters.
ClusterAssignment lloyd_once(const RowMatrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters,
                             LloydTrace* trace = nullptr);

/// Best of `restarts` independent Lloyd runs (minimal sse, ties to the lower
/// restart index). Restart r uses the derived seed mix_seed(seed, r), so the
/// result is identical for any thread count.
ClusterAssignment kmeans(const RowMatrix& points, std::size_t k, std::size_t restarts, std::size_t max_iters,
                         std::uint64_t seed, unsigned threads = 1);

/// Labeled training windows for the semi-supervised classifier.
struct LabeledSet {
    std::vector<std::size_t> indices;
    std::vector<std::string> labels;

    /// Sorted unique labels.
    std::vector<std::string> classes() const;
};

/// Classify every row (training rows included) by majority vote over its
/// k_nn nearest training points, Euclidean metric. A training point never
/// counts itself among its neighbors, so it can land outside its own class.
/// Vote ties go to the class with the smaller summed distance, then to class
/// order (sorted labels).
std::vector<std::string> knn_classify(const RowMatrix& rows, const LabeledSet& train, std::size_t k_nn);

struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::int64_t> counts;  // classes.size()^2, row = true class

    std::int64_t at(std::size_t true_class, std::size_t predicted) const {
        return counts[true_class * classes.size() + predicted];
    }
    std::int64_t total() const;
    std::int64_t diagonal() const;
};

/// counts[a][b] = |{i : truth[i] = class a, predicted[i] = class b}|.
/// Labels outside `class_order` are an error.
ConfusionMatrix confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                          std::span<const std::string> class_order);

/// Trace over total.
double accuracy(const ConfusionMatrix& matrix);

struct ClusterAlignment {
    std::vector<std::size_t> cluster_to_class;  // class index per cluster
    double accuracy = 0.0;
};

/// Best cluster-to-class bijection by exhaustive search over all K!
/// permutations (K <= 8). The class set is the sorted unique truth labels
/// and must have exactly K members.
ClusterAlignment align_clusters(const ClusterAssignment& assignment, std::span<const std::string> truth);

// Persistence for the evaluation artifacts.
void save_predictions_csv(std::span<const double> window_times_s, std::span<const std::string> truth,
                          std::span<const std::string> predicted, const std::filesystem::path& path);
struct LoadedPredictions {
    std::vector<std::string> truth;
    std::vector<std::string> predicted;
};
LoadedPredictions load_predictions_csv(const std::filesystem::path& path);
void save_confusion_json(const ConfusionMatrix& matrix, const std::filesystem::path& path);

}  // namespace sva
