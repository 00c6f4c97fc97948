#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "sva/classify.hpp"
#include "sva/error.hpp"
#include "sva/rng.hpp"
#include "temp_dir.hpp"

using namespace sva;

namespace {

/// Two tight blobs separated by ~100x their radius.
RowMatrix two_blobs(std::mt19937_64& rng, std::size_t per_blob, double separation = 100.0) {
    RowMatrix points(2 * per_blob, 2);
    for (std::size_t i = 0; i < 2 * per_blob; ++i) {
        const double cx = i < per_blob ? 0.0 : separation;
        points.at(i, 0) = cx + normal(rng);
        points.at(i, 1) = normal(rng);
    }
    return points;
}

RowMatrix random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim, double scale = 1.0) {
    RowMatrix points(n, dim);
    for (auto& v : points.values) v = scale * (2.0 * uniform_unit(rng) - 1.0);
    return points;
}

}  // namespace

TEST_CASE("kmeans finds the optimal two-blob partition") {
    std::mt19937_64 rng(51);
    const RowMatrix points = two_blobs(rng, 10);
    const ClusterAssignment result = kmeans(points, 2, 20, 100, 7);

    // Clusters coincide with blob membership.
    for (std::size_t i = 1; i < 10; ++i) CHECK(result.labels[i] == result.labels[0]);
    for (std::size_t i = 11; i < 20; ++i) CHECK(result.labels[i] == result.labels[10]);
    CHECK(result.labels[0] != result.labels[10]);

    // And the objective matches the exhaustive-partition oracle.
    const auto best = oracle::exhaustive_two_partition(points);
    CHECK(result.sse == doctest::Approx(best.sse).epsilon(1e-9));
}

TEST_CASE("kmeans with K = n drives the objective to zero") {
    std::mt19937_64 rng(52);
    const RowMatrix points = random_points(rng, 12, 3);
    const ClusterAssignment result = kmeans(points, 12, 5, 50, 3);
    CHECK(result.sse == doctest::Approx(0.0));
    std::set<std::size_t> used(result.labels.begin(), result.labels.end());
    CHECK(used.size() == 12);
}

TEST_CASE("best-of-restarts is no worse than any recorded single run") {
    std::mt19937_64 rng(53);
    const RowMatrix points = random_points(rng, 40, 4);
    const std::uint64_t seed = 99;
    const std::size_t restarts = 32;
    const ClusterAssignment best = kmeans(points, 5, restarts, 100, seed);
    for (std::size_t r = 0; r < restarts; ++r) {
        const ClusterAssignment single = lloyd_once(points, 5, mix_seed(seed, r), 100);
        REQUIRE(best.sse <= single.sse * (1.0 + 1e-12));
    }
}

TEST_CASE("lloyd objective is non-increasing every iteration") {
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 10; ++trial) {
        const RowMatrix points = random_points(rng, 50, 3);
        LloydTrace trace;
        lloyd_once(points, 4, 1000 + static_cast<std::uint64_t>(trial), 100, &trace);
        REQUIRE(!trace.sse_per_iteration.empty());
        for (std::size_t i = 1; i < trace.sse_per_iteration.size(); ++i) {
            REQUIRE(trace.sse_per_iteration[i] <=
                    trace.sse_per_iteration[i - 1] * (1.0 + 1e-12) + 1e-12);
        }
    }
}

TEST_CASE("kmeans is deterministic and thread-count independent") {
    std::mt19937_64 rng(55);
    const RowMatrix points = random_points(rng, 30, 2);
    const ClusterAssignment a = kmeans(points, 3, 25, 100, 42, 1);
    const ClusterAssignment b = kmeans(points, 3, 25, 100, 42, 2);
    const ClusterAssignment c = kmeans(points, 3, 25, 100, 42, 7);
    CHECK(a.labels == b.labels);
    CHECK(a.labels == c.labels);
    CHECK(a.sse == b.sse);
    CHECK(a.centers.values == c.centers.values);
}

TEST_CASE("kmeans invariants on the result") {
    std::mt19937_64 rng(56);
    const RowMatrix points = random_points(rng, 35, 3);
    const ClusterAssignment result = kmeans(points, 4, 10, 100, 5);

    // sse recomputes from labels and centers.
    double sse = 0.0;
    std::vector<std::vector<double>> sums(4, std::vector<double>(3, 0.0));
    std::vector<std::size_t> counts(4, 0);
    for (std::size_t i = 0; i < points.rows; ++i) {
        REQUIRE(result.labels[i] < 4);
        for (std::size_t d = 0; d < 3; ++d) {
            const double diff = points.at(i, d) - result.centers.at(result.labels[i], d);
            sse += diff * diff;
            sums[result.labels[i]][d] += points.at(i, d);
        }
        ++counts[result.labels[i]];
    }
    CHECK(result.sse == doctest::Approx(sse).epsilon(1e-9));

    // Centers are the means of their members (final Lloyd fixed point).
    for (std::size_t c = 0; c < 4; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(result.centers.at(c, d) ==
                  doctest::Approx(sums[c][d] / static_cast<double>(counts[c])).epsilon(1e-9));
        }
    }
}

TEST_CASE("kmeans handles all-identical points without erroring") {
    RowMatrix points(6, 2);
    for (auto& v : points.values) v = 1.5;
    const ClusterAssignment result = kmeans(points, 3, 4, 50, 11);
    CHECK(result.sse == doctest::Approx(0.0));
    for (const std::size_t label : result.labels) CHECK(label < 3);
    CHECK_THROWS_AS(kmeans(points, 7, 1, 50, 1), Error);  // K > n stays an error
}

TEST_CASE("knn nearest-neighbor rule at K=1") {
    RowMatrix rows(5, 1);
    rows.at(0, 0) = 0.0;
    rows.at(1, 0) = 1.0;
    rows.at(2, 0) = 4.9;
    rows.at(3, 0) = 5.0;
    rows.at(4, 0) = 10.0;
    LabeledSet train;
    train.indices = {1, 3};
    train.labels = {"near", "far"};
    const auto predicted = knn_classify(rows, train, 1);
    CHECK(predicted[0] == "near");
    CHECK(predicted[1] == "far");  // training point: self excluded, the only other training point wins
    CHECK(predicted[2] == "far");
    CHECK(predicted[3] == "near");
    CHECK(predicted[4] == "far");
}

TEST_CASE("a training point can be classified outside its own class") {
    // Training point of class "a" surrounded by three "b" training points.
    RowMatrix rows(4, 1);
    rows.at(0, 0) = 0.0;   // class a
    rows.at(1, 0) = 0.1;   // class b
    rows.at(2, 0) = -0.1;  // class b
    rows.at(3, 0) = 0.2;   // class b
    LabeledSet train;
    train.indices = {0, 1, 2, 3};
    train.labels = {"a", "b", "b", "b"};
    const auto predicted = knn_classify(rows, train, 3);
    CHECK(predicted[0] == "b");
}

TEST_CASE("knn matches the exhaustive-scan oracle on random instances") {
    std::mt19937_64 rng(57);
    const std::vector<std::string> classes{"alpha", "beta", "gamma"};
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 10 + static_cast<std::size_t>(uniform_below(rng, 21));  // up to 30
        const RowMatrix rows = random_points(rng, n, 1 + static_cast<std::size_t>(uniform_below(rng, 4)));

        LabeledSet train;
        const auto train_size = 3 + static_cast<std::size_t>(uniform_below(rng, n - 3));
        const auto picks = sample_without_replacement(rng, n, train_size);
        for (const std::size_t idx : picks) {
            train.indices.push_back(idx);
            train.labels.push_back(classes[uniform_below(rng, 3)]);
        }
        const std::size_t k_nn = 1 + static_cast<std::size_t>(uniform_below(rng, train_size));

        const auto got = knn_classify(rows, train, k_nn);
        const auto want = oracle::brute_knn(rows, train.indices, train.labels, k_nn);
        REQUIRE(got == want);
    }
}

TEST_CASE("knn predictions follow class relabelings") {
    std::mt19937_64 rng(58);
    const RowMatrix rows = random_points(rng, 20, 3);
    LabeledSet train;
    train.indices = {0, 3, 7, 11, 15};
    train.labels = {"x", "y", "x", "z", "y"};
    const auto base = knn_classify(rows, train, 3);

    LabeledSet renamed = train;
    const auto rename = [](const std::string& label) {
        if (label == "x") return std::string("pq");
        if (label == "y") return std::string("rs");
        return std::string("tu");
    };
    for (auto& label : renamed.labels) label = rename(label);
    const auto mapped = knn_classify(rows, renamed, 3);
    for (std::size_t i = 0; i < base.size(); ++i) REQUIRE(mapped[i] == rename(base[i]));
}

TEST_CASE("knn is invariant under global rotations of the embedding") {
    std::mt19937_64 rng(59);
    const std::size_t dim = 3;
    const RowMatrix rows = random_points(rng, 25, dim);

    // Random orthogonal matrix via Gram-Schmidt on a random basis.
    std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
    for (auto& row : q) {
        for (auto& v : row) v = normal(rng);
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double proj = 0.0;
            for (std::size_t d = 0; d < dim; ++d) proj += q[i][d] * q[j][d];
            for (std::size_t d = 0; d < dim; ++d) q[i][d] -= proj * q[j][d];
        }
        double norm = 0.0;
        for (std::size_t d = 0; d < dim; ++d) norm += q[i][d] * q[i][d];
        norm = std::sqrt(norm);
        for (std::size_t d = 0; d < dim; ++d) q[i][d] /= norm;
    }
    RowMatrix rotated(rows.rows, dim);
    for (std::size_t i = 0; i < rows.rows; ++i) {
        for (std::size_t a = 0; a < dim; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < dim; ++b) acc += q[a][b] * rows.at(i, b);
            rotated.at(i, a) = acc;
        }
    }

    LabeledSet train;
    train.indices = {1, 4, 9, 16, 22};
    train.labels = {"u", "v", "u", "w", "v"};
    CHECK(knn_classify(rows, train, 3) == knn_classify(rotated, train, 3));
}

TEST_CASE("knn parameter validation") {
    std::mt19937_64 rng(60);
    const RowMatrix rows = random_points(rng, 10, 2);
    LabeledSet train;
    train.indices = {0, 1, 2};
    train.labels = {"a", "b", "a"};
    CHECK_THROWS_AS(knn_classify(rows, train, 4), Error);   // K > training set
    CHECK_THROWS_AS(knn_classify(rows, train, 0), Error);
    LabeledSet dup = train;
    dup.indices = {0, 0, 2};
    CHECK_THROWS_AS(knn_classify(rows, dup, 2), Error);
}

TEST_CASE("confusion matrix") {
    const std::vector<std::string> order{"v1", "v2", "v3"};

    SUBCASE("perfect prediction is diagonal") {
        const std::vector<std::string> truth{"v1", "v1", "v2", "v3", "v3", "v3"};
        const ConfusionMatrix matrix = confusion(truth, truth, order);
        CHECK(matrix.at(0, 0) == 2);
        CHECK(matrix.at(1, 1) == 1);
        CHECK(matrix.at(2, 2) == 3);
        CHECK(matrix.total() == 6);
        CHECK(matrix.diagonal() == 6);
        CHECK(accuracy(matrix) == doctest::Approx(1.0));
    }

    SUBCASE("column permutation follows a predicted-label relabeling") {
        const std::vector<std::string> truth{"v1", "v2", "v3", "v1"};
        const std::vector<std::string> predicted{"v2", "v3", "v1", "v1"};
        const ConfusionMatrix base = confusion(truth, predicted, order);

        // Swap v2 <-> v3 in the predictions; columns 1 and 2 swap.
        std::vector<std::string> swapped = predicted;
        for (auto& label : swapped) {
            if (label == "v2") label = "v3";
            else if (label == "v3") label = "v2";
        }
        const ConfusionMatrix perm = confusion(truth, swapped, order);
        for (std::size_t a = 0; a < 3; ++a) {
            CHECK(perm.at(a, 1) == base.at(a, 2));
            CHECK(perm.at(a, 2) == base.at(a, 1));
            CHECK(perm.at(a, 0) == base.at(a, 0));
        }
    }

    SUBCASE("unknown labels are an error") {
        const std::vector<std::string> truth{"v1"};
        const std::vector<std::string> predicted{"mystery"};
        CHECK_THROWS_AS(confusion(truth, predicted, order), Error);
    }

    SUBCASE("accuracy edge cases") {
        const std::vector<std::string> order2{"a", "b"};
        const ConfusionMatrix diag = confusion(std::vector<std::string>{"a", "a", "b", "b"},
                                               std::vector<std::string>{"a", "a", "b", "b"}, order2);
        CHECK(accuracy(diag) == 1.0);
        const ConfusionMatrix off = confusion(std::vector<std::string>{"a", "b"},
                                              std::vector<std::string>{"b", "a"}, order2);
        CHECK(accuracy(off) == 0.0);
        ConfusionMatrix empty;
        empty.classes = {"a"};
        empty.counts = {0};
        CHECK_THROWS_AS(accuracy(empty), Error);
    }
}

TEST_CASE("accuracy(confusion) equals the plain agreement rate") {
    std::mt19937_64 rng(61);
    const std::vector<std::string> classes{"a", "b", "c"};
    std::vector<std::string> truth(50), predicted(50);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        truth[i] = classes[uniform_below(rng, 3)];
        predicted[i] = classes[uniform_below(rng, 3)];
        if (truth[i] == predicted[i]) ++agree;
    }
    const ConfusionMatrix matrix = confusion(truth, predicted, classes);
    CHECK(accuracy(matrix) == static_cast<double>(agree) / 50.0);
}

TEST_CASE("cluster alignment") {
    SUBCASE("already aligned is the identity") {
        ClusterAssignment assignment;
        assignment.labels = {0, 0, 1, 1, 2};
        assignment.centers = RowMatrix(3, 1);
        const std::vector<std::string> truth{"a", "a", "b", "b", "c"};
        const ClusterAlignment alignment = align_clusters(assignment, truth);
        CHECK(alignment.accuracy == doctest::Approx(1.0));
        CHECK(alignment.cluster_to_class == std::vector<std::size_t>{0, 1, 2});
    }

    SUBCASE("a known shuffle is recovered") {
        ClusterAssignment assignment;
        assignment.labels = {2, 2, 0, 0, 1, 1};
        assignment.centers = RowMatrix(3, 1);
        const std::vector<std::string> truth{"a", "a", "b", "b", "c", "c"};
        const ClusterAlignment alignment = align_clusters(assignment, truth);
        CHECK(alignment.accuracy == doctest::Approx(1.0));
        // cluster 2 -> a(0), cluster 0 -> b(1), cluster 1 -> c(2)
        CHECK(alignment.cluster_to_class == std::vector<std::size_t>{1, 2, 0});
    }

    SUBCASE("random labelings match the enumeration oracle") {
        std::mt19937_64 rng(62);
        const std::vector<std::string> classes{"a", "b", "c"};
        for (int trial = 0; trial < 25; ++trial) {
            ClusterAssignment assignment;
            assignment.centers = RowMatrix(3, 1);
            std::vector<std::string> truth(12);
            assignment.labels.resize(12);
            for (std::size_t i = 0; i < 12; ++i) {
                assignment.labels[i] = uniform_below(rng, 3);
                // Keep all three classes present so a bijection exists.
                truth[i] = i < 3 ? classes[i] : classes[uniform_below(rng, 3)];
            }
            const ClusterAlignment got = align_clusters(assignment, truth);
            const auto want = oracle::enumerate_alignments(assignment.labels, 3, truth);
            REQUIRE(got.accuracy == doctest::Approx(want.accuracy));
        }
    }

    SUBCASE("errors") {
        ClusterAssignment assignment;
        assignment.labels = {0, 1};
        assignment.centers = RowMatrix(2, 1);
        const std::vector<std::string> three{"a", "b"};
        CHECK_NOTHROW(align_clusters(assignment, three));
        const std::vector<std::string> mismatch{"a", "a"};
        CHECK_THROWS_AS(align_clusters(assignment, mismatch), Error);
        ClusterAssignment big;
        big.labels.assign(9, 0);
        big.centers = RowMatrix(9, 1);
        const std::vector<std::string> many{"a", "b", "c", "d", "e", "f", "g", "h", "i"};
        CHECK_THROWS_AS(align_clusters(big, many), Error);
    }
}

TEST_CASE("prediction CSV and confusion JSON artifacts") {
    TempDir tmp("classify");
    const std::vector<double> times{0.0, 0.125, 0.25};
    const std::vector<std::string> truth{"v1", "v2", "v2"};
    const std::vector<std::string> predicted{"v1", "v2", "v1"};
    save_predictions_csv(times, truth, predicted, tmp.path / "p.csv");
    const LoadedPredictions loaded = load_predictions_csv(tmp.path / "p.csv");
    CHECK(loaded.truth == truth);
    CHECK(loaded.predicted == predicted);

    const std::vector<std::string> order{"v1", "v2"};
    save_confusion_json(confusion(truth, predicted, order), tmp.path / "c.json");
    std::ifstream in(tmp.path / "c.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"classes\"") != std::string::npos);
    CHECK(text.find("\"counts\"") != std::string::npos);
}
