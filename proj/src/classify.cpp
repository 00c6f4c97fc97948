#include "sva/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sva/error.hpp"
#include "sva/kernels.hpp"
#include "sva/rng.hpp"
#include "sva/threading.hpp"

namespace sva {

namespace {

/// Nearest center by squared Euclidean distance, ties to the lower index.
std::size_t nearest_center(const RowMatrix& points, std::size_t i, const RowMatrix& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows; ++c) {
        const double d = kernels::squared_distance(points.row(i).data(), centers.row(c).data(), points.cols);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double assignment_sse(const RowMatrix& points, const std::vector<std::size_t>& labels, const RowMatrix& centers) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
        sse += kernels::squared_distance(points.row(i).data(), centers.row(labels[i]).data(), points.cols);
    }
    return sse;
}

void format_double(std::string& out, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out += buf;
}

}  // namespace

ClusterAssignment lloyd_once(const RowMatrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iters,
                             LloydTrace* trace) {
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    if (k == 0 || k > n) {
        throw Error("K=" + std::to_string(k) + " clusters requested for " + std::to_string(n) + " points");
    }

    std::mt19937_64 rng(seed);
    const std::vector<std::size_t> init = sample_without_replacement(rng, n, k);

    ClusterAssignment result;
    result.centers = RowMatrix(k, dim);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(points.row(init[c]).begin(), dim, result.centers.row(c).begin());
    }
    result.labels.assign(n, 0);

    std::vector<std::size_t> previous;
    std::vector<std::size_t> members(k, 0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < n; ++i) result.labels[i] = nearest_center(points, i, result.centers);
        if (result.labels == previous) break;
        previous = result.labels;

        // Update step: means of the assigned points.
        std::fill(result.centers.values.begin(), result.centers.values.end(), 0.0);
        std::fill(members.begin(), members.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto center = result.centers.row(result.labels[i]);
            const auto point = points.row(i);
            for (std::size_t d = 0; d < dim; ++d) center[d] += point[d];
            ++members[result.labels[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (members[c] > 0) {
                kernels::scale(result.centers.row(c).data(), dim, 1.0 / static_cast<double>(members[c]));
            }
        }
        // Reseed empty clusters with the point currently farthest from its
        // own center (ties to the lower point index).
        for (std::size_t c = 0; c < k; ++c) {
            if (members[c] > 0) continue;
            std::size_t farthest = 0;
            double worst = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (members[result.labels[i]] <= 1) continue;  // do not empty another cluster
                const double d = kernels::squared_distance(points.row(i).data(),
                                                           result.centers.row(result.labels[i]).data(), dim);
                if (d > worst) {
                    worst = d;
                    farthest = i;
                }
            }
            if (worst < 0.0) continue;  // nothing reassignable; K > distinct points
            --members[result.labels[farthest]];
            std::copy_n(points.row(farthest).begin(), dim, result.centers.row(c).begin());
            result.labels[farthest] = c;
            ++members[c];
        }

        if (trace != nullptr) {
            trace->sse_per_iteration.push_back(assignment_sse(points, result.labels, result.centers));
        }
    }

    // Final consistency: centers are the means of their assigned rows
    // (clusters that ended up empty keep their last center).
    RowMatrix means(k, dim);
    std::fill(members.begin(), members.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto center = means.row(result.labels[i]);
        const auto point = points.row(i);
        for (std::size_t d = 0; d < dim; ++d) center[d] += point[d];
        ++members[result.labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (members[c] > 0) {
            kernels::scale(means.row(c).data(), dim, 1.0 / static_cast<double>(members[c]));
            std::copy_n(means.row(c).begin(), dim, result.centers.row(c).begin());
        }
    }
    result.sse = assignment_sse(points, result.labels, result.centers);
    return result;
}

ClusterAssignment kmeans(const RowMatrix& points, std::size_t k, std::size_t restarts, std::size_t max_iters,
                         std::uint64_t seed, unsigned threads) {
    if (restarts < 1) throw Error("kmeans needs at least one restart");

    // Record every restart's objective, then redo the winner. Selection is
    // min by (sse, restart index), so the outcome is independent of the
    // thread schedule.
    std::vector<double> sse_per_restart(restarts);
    parallel_chunks(0, restarts, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            sse_per_restart[r] = lloyd_once(points, k, mix_seed(seed, r), max_iters).sse;
        }
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r) {
        if (sse_per_restart[r] < sse_per_restart[best]) best = r;
    }
    return lloyd_once(points, k, mix_seed(seed, best), max_iters);
}

std::vector<std::string> LabeledSet::classes() const {
    std::set<std::string> unique(labels.begin(), labels.end());
    return {unique.begin(), unique.end()};
}

std::vector<std::string> knn_classify(const RowMatrix& rows, const LabeledSet& train, std::size_t k_nn) {
    const std::size_t n = rows.rows;
    if (train.indices.size() != train.labels.size() || train.indices.empty()) {
        throw Error("knn: malformed training set");
    }
    if (k_nn < 1 || k_nn > train.indices.size()) {
        throw Error("knn: K=" + std::to_string(k_nn) + " exceeds the training set size of " +
                    std::to_string(train.indices.size()));
    }
    {
        std::set<std::size_t> unique(train.indices.begin(), train.indices.end());
        if (unique.size() != train.indices.size()) throw Error("knn: duplicate training indices");
        if (*unique.rbegin() >= n) {
            throw Error("knn: training index " + std::to_string(*unique.rbegin()) + " out of range");
        }
    }

    const std::vector<std::string> class_order = train.classes();
    std::vector<std::string> predicted(n);

    for (std::size_t i = 0; i < n; ++i) {
        // All training candidates except the query itself, nearest first;
        // distance ties break toward the lower training position.
        std::vector<std::pair<double, std::size_t>> candidates;  // (distance, train position)
        candidates.reserve(train.indices.size());
        for (std::size_t t = 0; t < train.indices.size(); ++t) {
            if (train.indices[t] == i) continue;
            const double d = std::sqrt(
                kernels::squared_distance(rows.row(i).data(), rows.row(train.indices[t]).data(), rows.cols));
            candidates.emplace_back(d, t);
        }
        std::sort(candidates.begin(), candidates.end());
        // A training query excludes itself, which can leave k_nn - 1
        // candidates when k_nn spans the whole training set.
        const std::size_t effective_k = std::min(k_nn, candidates.size());

        std::vector<std::size_t> votes(class_order.size(), 0);
        std::vector<double> summed_distance(class_order.size(), 0.0);
        for (std::size_t k = 0; k < effective_k; ++k) {
            const auto& label = train.labels[candidates[k].second];
            const auto cls = static_cast<std::size_t>(
                std::lower_bound(class_order.begin(), class_order.end(), label) - class_order.begin());
            ++votes[cls];
            summed_distance[cls] += candidates[k].first;
        }

        // Majority; ties by smaller summed distance, then class order.
        std::size_t best = 0;
        for (std::size_t c = 1; c < class_order.size(); ++c) {
            if (votes[c] > votes[best] ||
                (votes[c] == votes[best] && summed_distance[c] < summed_distance[best])) {
                best = c;
            }
        }
        predicted[i] = class_order[best];
    }
    return predicted;
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::diagonal() const {
    std::int64_t trace = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) trace += at(c, c);
    return trace;
}

ConfusionMatrix confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                          std::span<const std::string> class_order) {
    if (truth.size() != predicted.size()) throw Error("confusion: label sequences differ in length");

    ConfusionMatrix matrix;
    matrix.classes.assign(class_order.begin(), class_order.end());
    matrix.counts.assign(matrix.classes.size() * matrix.classes.size(), 0);
    const auto index_of = [&](const std::string& label) {
        const auto it = std::find(matrix.classes.begin(), matrix.classes.end(), label);
        if (it == matrix.classes.end()) throw Error("confusion: label '" + label + "' not in the class order");
        return static_cast<std::size_t>(it - matrix.classes.begin());
    };
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++matrix.counts[index_of(truth[i]) * matrix.classes.size() + index_of(predicted[i])];
    }
    return matrix;
}

double accuracy(const ConfusionMatrix& matrix) {
    const std::int64_t total = matrix.total();
    if (total == 0) throw Error("accuracy of an empty confusion matrix is undefined");
    return static_cast<double>(matrix.diagonal()) / static_cast<double>(total);
}

ClusterAlignment align_clusters(const ClusterAssignment& assignment, std::span<const std::string> truth) {
    if (assignment.labels.size() != truth.size()) {
        throw Error("align_clusters: assignment and truth differ in length");
    }
    const std::size_t k = assignment.centers.rows;
    if (k > 8) throw Error("align_clusters supports at most 8 clusters, got " + std::to_string(k));

    std::vector<std::string> classes(truth.begin(), truth.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() != k) {
        throw Error("align_clusters: " + std::to_string(k) + " clusters vs " + std::to_string(classes.size()) +
                    " classes; a bijection requires equal counts");
    }

    std::vector<std::size_t> truth_index(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth_index[i] = static_cast<std::size_t>(
            std::lower_bound(classes.begin(), classes.end(), truth[i]) - classes.begin());
    }

    std::vector<std::size_t> permutation(k);
    std::iota(permutation.begin(), permutation.end(), std::size_t{0});
    ClusterAlignment best;
    best.accuracy = -1.0;
    do {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (permutation[assignment.labels[i]] == truth_index[i]) ++hits;
        }
        const double acc = static_cast<double>(hits) / static_cast<double>(truth.size());
        if (acc > best.accuracy) {
            best.accuracy = acc;
            best.cluster_to_class = permutation;
        }
    } while (std::next_permutation(permutation.begin(), permutation.end()));
    return best;
}

void save_predictions_csv(std::span<const double> window_times_s, std::span<const std::string> truth,
                          std::span<const std::string> predicted, const std::filesystem::path& path) {
    if (window_times_s.size() != truth.size() || truth.size() != predicted.size()) {
        throw Error("predictions CSV: column lengths differ");
    }
    std::string out = "window_index,time_s,true_label,predicted_label\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        format_double(out, window_times_s[i]);
        out += ',';
        out += truth[i];
        out += ',';
        out += predicted[i];
        out += '\n';
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write predictions CSV: " + path.string());
    file << out;
    if (!file) throw Error("failed writing predictions CSV: " + path.string());
}

LoadedPredictions load_predictions_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw Error("cannot open predictions CSV: " + path.string());
    std::string line;
    if (!std::getline(file, line)) throw Error("empty predictions CSV: " + path.string());

    LoadedPredictions loaded;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string window_index, time_s, truth, predicted;
        if (!std::getline(row, window_index, ',') || !std::getline(row, time_s, ',') ||
            !std::getline(row, truth, ',') || !std::getline(row, predicted, ',')) {
            throw Error("malformed predictions CSV row in " + path.string());
        }
        loaded.truth.push_back(truth);
        loaded.predicted.push_back(predicted);
    }
    if (loaded.truth.empty()) throw Error("predictions CSV has no data rows: " + path.string());
    return loaded;
}

void save_confusion_json(const ConfusionMatrix& matrix, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["classes"] = matrix.classes;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t a = 0; a < matrix.classes.size(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t b = 0; b < matrix.classes.size(); ++b) row.push_back(matrix.at(a, b));
        rows.push_back(std::move(row));
    }
    doc["counts"] = std::move(rows);
    doc["accuracy"] = accuracy(matrix);
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write confusion JSON: " + path.string());
    file << doc.dump(2) << '\n';
    if (!file) throw Error("failed writing confusion JSON: " + path.string());
}

}  // namespace sva
