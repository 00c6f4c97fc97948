#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <vector>

#include "sva/error.hpp"
#include "sva/graph.hpp"
#include "sva/rng.hpp"
#include "temp_dir.hpp"

using namespace sva;

namespace {

FeatureMatrix features_from_rows(const std::vector<std::vector<double>>& rows) {
    FeatureMatrix features;
    features.X = RowMatrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), features.X.row(i).begin());
    }
    features.window_times_s.assign(rows.size(), 0.0);
    return features;
}

/// Euclidean distances between scalar coordinates, injected as a test
/// distance matrix.
DistanceMatrix euclidean_line(const std::vector<double>& coords) {
    DistanceMatrix d(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        for (std::size_t j = 0; j < coords.size(); ++j) d.at(i, j) = std::abs(coords[i] - coords[j]);
    }
    return d;
}

}  // namespace

TEST_CASE("cosine distance closed forms") {
    const FeatureMatrix features = features_from_rows({{1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {2.0, 2.0}});
    const DistanceMatrix d = cosine_distances(features);

    CHECK(d.at(0, 3) == doctest::Approx(0.0).epsilon(1e-12));   // parallel rows
    CHECK(d.at(1, 2) == doctest::Approx(1.0));                   // orthogonal
    CHECK(d.at(0, 1) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
    for (std::size_t i = 0; i < d.n; ++i) CHECK(d.at(i, i) == 0.0);
}

TEST_CASE("cosine distances are exactly symmetric and scale invariant") {
    std::mt19937_64 rng(31);
    FeatureMatrix features;
    features.X = RowMatrix(20, 40);
    for (auto& v : features.X.values) v = uniform_unit(rng) + 0.01;
    features.window_times_s.assign(20, 0.0);

    const DistanceMatrix d = cosine_distances(features, 2);
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 0; j < 20; ++j) {
            REQUIRE(d.at(i, j) == d.at(j, i));
            REQUIRE(d.at(i, j) >= 0.0);
            REQUIRE(d.at(i, j) <= 2.0);
        }
    }

    FeatureMatrix scaled = features;
    for (std::size_t j = 0; j < 40; ++j) scaled.X.at(4, j) *= 731.5;
    const DistanceMatrix d2 = cosine_distances(scaled);
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 0; j < 20; ++j) {
            REQUIRE(std::abs(d2.at(i, j) - d.at(i, j)) < 1e-12);
        }
    }
}

TEST_CASE("zero-norm rows are reported with their index") {
    FeatureMatrix features = features_from_rows({{1.0, 0.0}, {0.0, 0.0}, {0.0, 1.0}});
    try {
        cosine_distances(features);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("window 1") != std::string::npos);
    }
}

TEST_CASE("adaptive similarities on the line 0,1,2,3,10 with N=2") {
    const DistanceMatrix d = euclidean_line({0.0, 1.0, 2.0, 3.0, 10.0});
    const SimilarityGraph graph = adaptive_similarities(d, 2);

    // Hand-enumerated bandwidths (distance to the 2nd nearest neighbor).
    CHECK(graph.sigma[0] == doctest::Approx(2.0));
    CHECK(graph.sigma[1] == doctest::Approx(1.0));
    CHECK(graph.sigma[2] == doctest::Approx(1.0));
    CHECK(graph.sigma[3] == doctest::Approx(2.0));
    CHECK(graph.sigma[4] == doctest::Approx(8.0));

    // Hand-enumerated union edge set and max-combined weights.
    const std::set<std::pair<std::size_t, std::size_t>> expected{
        {0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {2, 4}, {3, 4}};
    std::set<std::pair<std::size_t, std::size_t>> actual;
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t k = graph.row_begin[i]; k < graph.row_begin[i + 1]; ++k) {
            const std::size_t j = graph.column[k];
            actual.insert({std::min(i, j), std::max(i, j)});
        }
    }
    CHECK(actual == expected);

    CHECK(graph.at(0, 1) == doctest::Approx(std::exp(-0.25)));        // from sigma_0 = 2
    CHECK(graph.at(0, 2) == doctest::Approx(std::exp(-1.0)));
    CHECK(graph.at(1, 2) == doctest::Approx(std::exp(-1.0)));
    CHECK(graph.at(2, 3) == doctest::Approx(std::exp(-0.25)));        // from sigma_3 = 2
    CHECK(graph.at(1, 3) == doctest::Approx(std::exp(-1.0)));
    CHECK(graph.at(3, 4) == doctest::Approx(std::exp(-49.0 / 64.0)));
    CHECK(graph.at(2, 4) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("exactly the N-th neighbor gets weight e^-1 and zero distance gets 1") {
    const DistanceMatrix d = euclidean_line({0.0, 1.0, 3.0, 7.0});
    const SimilarityGraph graph = adaptive_similarities(d, 2);
    // sigma_0 = 3 (neighbors 1 then 2); the 2nd neighbor sits at d = sigma.
    CHECK(graph.at(0, 2) == doctest::Approx(std::exp(-1.0)));

    // Parallel feature rows give d = 0 and weight exactly 1.
    const FeatureMatrix features = features_from_rows({{1.0, 1.0}, {2.0, 2.0}, {1.0, 0.0}, {0.0, 1.0}});
    const SimilarityGraph graph2 = adaptive_similarities(cosine_distances(features), 2);
    CHECK(graph2.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("N-fold duplicates make the bandwidth collapse") {
    const DistanceMatrix d = euclidean_line({0.0, 0.0, 0.0, 5.0});
    try {
        adaptive_similarities(d, 2);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("point 0") != std::string::npos);
    }
    CHECK_THROWS_AS(adaptive_similarities(d, 4), Error);  // N >= n
}

TEST_CASE("graph structure invariants on random data") {
    std::mt19937_64 rng(32);
    const std::size_t n = 60;
    FeatureMatrix features;
    features.X = RowMatrix(n, 10);
    for (auto& v : features.X.values) v = uniform_unit(rng) + 1e-3;
    features.window_times_s.assign(n, 0.0);

    const DistanceMatrix distances = cosine_distances(features);
    for (const std::size_t N : {1ul, 5ul, 15ul}) {
        const SimilarityGraph graph = adaptive_similarities(distances, N);

        // Sparsity bound, exact symmetry, weight range, positive degrees.
        // Per-row counts sit between N (own neighbors survive the union) and
        // n-1 (a hub can appear in every other neighbor list); the 2nN bound
        // is on the total.
        CHECK(graph.nonzeros() <= 2 * n * N);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(graph.degrees[i] > 0.0);
            std::size_t row_nnz = graph.row_begin[i + 1] - graph.row_begin[i];
            CHECK(row_nnz >= N);
            for (std::size_t k = graph.row_begin[i]; k < graph.row_begin[i + 1]; ++k) {
                const std::size_t j = graph.column[k];
                REQUIRE(j != i);
                REQUIRE(graph.value[k] > 0.0);
                REQUIRE(graph.value[k] <= 1.0);
                REQUIRE(graph.at(j, i) == graph.value[k]);
            }
        }

        // Row-wise monotonicity of the similarity formula: among the N
        // nearest neighbors of i, exp(-d^2/sigma_i^2) decreases as d grows.
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> others;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) others.push_back(distances.at(i, j));
            }
            std::sort(others.begin(), others.end());
            for (std::size_t k = 0; k + 1 < N; ++k) {
                const double s_near = std::exp(-(others[k] * others[k]) / (graph.sigma[i] * graph.sigma[i]));
                const double s_far = std::exp(-(others[k + 1] * others[k + 1]) / (graph.sigma[i] * graph.sigma[i]));
                if (others[k] < others[k + 1]) REQUIRE(s_near > s_far);
            }
        }
    }
}

TEST_CASE("graph dump is sorted by (i, j)") {
    TempDir tmp("graph");
    const DistanceMatrix d = euclidean_line({0.0, 1.0, 2.0, 3.0, 10.0});
    const SimilarityGraph graph = adaptive_similarities(d, 2);
    save_graph(graph, tmp.path / "graph.txt");

    std::ifstream in(tmp.path / "graph.txt");
    std::size_t last_i = 0, last_j = 0;
    std::size_t i, j;
    double s;
    std::size_t lines = 0;
    bool sorted = true;
    while (in >> i >> j >> s) {
        if (lines > 0 && (i < last_i || (i == last_i && j <= last_j))) sorted = false;
        last_i = i;
        last_j = j;
        ++lines;
    }
    CHECK(lines == graph.nonzeros());
    CHECK(sorted);
}
