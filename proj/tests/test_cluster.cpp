#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mcdc/cluster.hpp"
#include "support/oracles.hpp"
#include "support/test_helpers.hpp"

using namespace mcdc;
using mcdc::testing::accuracy_by_exhaustive_permutations;
using mcdc::testing::min_inertia_by_enumeration;
using mcdc::testing::nmi_by_joint_histogram;
using mcdc::testing::random_tensor;

namespace {

double column_variance(const Tensor64& X, size_t col) {
    const size_t n = X.dim(0);
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += X.at2(i, col);
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = X.at2(i, col) - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(n - 1);
}

} // namespace

TEST_CASE("pca_fit on axis-aligned degenerate data") {
    // all variance on the first axis
    Tensor64 X({4, 3});
    const double xs[4] = {-3.0, -1.0, 1.0, 3.0};
    for (size_t i = 0; i < 4; ++i) X.at2(i, 0) = xs[i];
    const PcaBasis b = pca_fit(X);
    CHECK(b.components.at2(0, 0) == doctest::Approx(1.0).epsilon(1e-10)); // sign convention
    CHECK(std::abs(b.components.at2(0, 1)) < 1e-10);
    const double sample_var = (9 + 1 + 1 + 9) / 3.0;
    CHECK(b.eigenvalues[0] == doctest::Approx(sample_var).epsilon(1e-10));
    CHECK(b.eigenvalues[1] == doctest::Approx(0.0));
    CHECK(b.eigenvalues[2] == doctest::Approx(0.0));
}

TEST_CASE("pca_fit spectral identity reconstructs the covariance") {
    RngStream rng(1);
    const Tensor64 X = random_tensor<double>({40, 5}, rng);
    const PcaBasis b = pca_fit(X);

    // covariance from the definition
    std::vector<double> mean(5, 0.0);
    for (size_t i = 0; i < 40; ++i)
        for (size_t j = 0; j < 5; ++j) mean[j] += X.at2(i, j) / 40.0;
    Tensor64 cov({5, 5});
    for (size_t i = 0; i < 40; ++i)
        for (size_t a = 0; a < 5; ++a)
            for (size_t bb = 0; bb < 5; ++bb)
                cov.at2(a, bb) += (X.at2(i, a) - mean[a]) * (X.at2(i, bb) - mean[bb]) / 39.0;

    // components^T diag(lambda) components
    for (size_t a = 0; a < 5; ++a)
        for (size_t c = 0; c < 5; ++c) {
            double acc = 0.0;
            for (size_t r = 0; r < 5; ++r)
                acc += b.components.at2(r, a) * b.eigenvalues[r] * b.components.at2(r, c);
            CHECK(acc == doctest::Approx(cov.at2(a, c)).epsilon(1e-8));
        }

    // orthonormal rows
    for (size_t r = 0; r < 5; ++r)
        for (size_t s = 0; s < 5; ++s) {
            double dot = 0.0;
            for (size_t j = 0; j < 5; ++j) dot += b.components.at2(r, j) * b.components.at2(s, j);
            CHECK(dot == doctest::Approx(r == s ? 1.0 : 0.0).epsilon(1e-8));
        }
}

TEST_CASE("pca_fit on isotropic data finds near-equal eigenvalues") {
    RngStream rng(2);
    const Tensor64 X = random_tensor<double>({4000, 2}, rng);
    const PcaBasis b = pca_fit(X);
    CHECK(b.eigenvalues[0] / b.eigenvalues[1] < 1.2); // 20% tolerance, seeded sample
    CHECK_THROWS_AS(pca_fit(Tensor64({1, 2})), std::invalid_argument);
}

TEST_CASE("pca_whiten normalizes per-direction variances") {
    // exact sample covariance diag(4,1)
    Tensor64 X({4, 2});
    X.at2(0, 0) = std::sqrt(6.0);
    X.at2(1, 0) = -std::sqrt(6.0);
    X.at2(2, 1) = std::sqrt(1.5);
    X.at2(3, 1) = -std::sqrt(1.5);
    const PcaBasis b = pca_fit(X);
    CHECK(b.eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(b.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-10));
    const Tensor64 W = pca_whiten(X, b, 1e-8);
    CHECK(column_variance(W, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(column_variance(W, 1) == doctest::Approx(1.0).epsilon(1e-6));

    Tensor64 wrong({4, 3});
    CHECK_THROWS_AS(pca_whiten(wrong, b, 1e-8), ShapeError);
}

TEST_CASE("pca_whiten eps guard keeps zero-variance directions finite") {
    Tensor64 X({4, 2});
    for (size_t i = 0; i < 4; ++i) X.at2(i, 0) = static_cast<double>(i);
    const PcaBasis b = pca_fit(X);
    const Tensor64 W = pca_whiten(X, b, 1e-8);
    CHECK(W.all_finite());
    CHECK(column_variance(W, 1) == doctest::Approx(0.0));
}

TEST_CASE("whitened data re-fits to unit eigenvalues") {
    RngStream rng(3);
    Tensor64 X = random_tensor<double>({300, 4}, rng);
    for (size_t i = 0; i < 300; ++i) {
        X.at2(i, 0) *= 5.0; // anisotropic
        X.at2(i, 2) *= 0.3;
    }
    const PcaBasis b = pca_fit(X);
    const Tensor64 W = pca_whiten(X, b, 1e-12);
    const PcaBasis b2 = pca_fit(W);
    for (size_t r = 0; r < 4; ++r)
        CHECK(b2.eigenvalues[r] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kmeans recovers the 4-point optimum confirmed by brute force") {
    Tensor64 X({4, 2});
    X.at2(0, 0) = 0;  X.at2(0, 1) = 0;
    X.at2(1, 0) = 0;  X.at2(1, 1) = 1;
    X.at2(2, 0) = 10; X.at2(2, 1) = 0;
    X.at2(3, 0) = 10; X.at2(3, 1) = 1;

    CHECK(min_inertia_by_enumeration(X, 2) == doctest::Approx(1.0).epsilon(1e-12));

    RngStream rng(4);
    const ClusterResult r = kmeans(X, 2, 20, 300, rng);
    CHECK(r.inertia == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.assignments[0] == r.assignments[1]);
    CHECK(r.assignments[2] == r.assignments[3]);
    CHECK(r.assignments[0] != r.assignments[2]);
}

TEST_CASE("kmeans degenerate settings") {
    RngStream rng(5);
    const Tensor64 X = random_tensor<double>({6, 3}, rng);

    SUBCASE("k == N gives zero inertia") {
        RngStream r2(6);
        const ClusterResult r = kmeans(X, 6, 5, 300, r2);
        CHECK(r.inertia == doctest::Approx(0.0));
    }
    SUBCASE("k == 1 returns the sample mean") {
        RngStream r2(7);
        const ClusterResult r = kmeans(X, 1, 1, 300, r2);
        for (size_t j = 0; j < 3; ++j) {
            double mean = 0.0;
            for (size_t i = 0; i < 6; ++i) mean += X.at2(i, j) / 6.0;
            CHECK(r.centroids.at2(0, j) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
    SUBCASE("invalid k") {
        RngStream r2(8);
        CHECK_THROWS_AS(kmeans(X, 0, 1, 300, r2), std::invalid_argument);
        CHECK_THROWS_AS(kmeans(X, 7, 1, 300, r2), std::invalid_argument);
    }
}

TEST_CASE("kmeans inertia traces are non-increasing and bound the result") {
    RngStream data_rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        const size_t n = 10 + data_rng.uniform_index(30);
        const size_t k = 2 + data_rng.uniform_index(4);
        const Tensor64 X = random_tensor<double>({n, 2}, data_rng);
        RngStream rng(100 + static_cast<uint64_t>(rep));
        std::vector<std::vector<double>> traces;
        const ClusterResult r = kmeans(X, k, 5, 300, rng, &traces);
        for (const auto& trace : traces)
            for (size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] <= trace[t - 1]);
        for (const auto& trace : traces)
            for (double v : trace) CHECK(r.inertia <= v + 1e-12);
    }
}

TEST_CASE("kmeans is deterministic under the stream seed") {
    RngStream data_rng(10);
    const Tensor64 X = random_tensor<double>({25, 3}, data_rng);
    RngStream a(55), b(55);
    const ClusterResult ra = kmeans(X, 3, 10, 300, a);
    const ClusterResult rb = kmeans(X, 3, 10, 300, b);
    CHECK(ra.inertia == rb.inertia);
    CHECK(ra.assignments == rb.assignments);
}

TEST_CASE("hungarian_accuracy examples") {
    const std::vector<int> y{0, 0, 1, 1};
    CHECK(hungarian_accuracy(y, std::vector<int>{1, 1, 0, 0}) == 1.0); // relabeling symmetry
    CHECK(hungarian_accuracy(y, y) == 1.0);
    CHECK(hungarian_accuracy(y, std::vector<int>{0, 1, 0, 1}) == 0.5);
    CHECK_THROWS_AS(hungarian_accuracy(y, std::vector<int>{0, 1}), ShapeError);
}

TEST_CASE("hungarian_accuracy equals exhaustive permutation search") {
    RngStream rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const size_t n = 2 + rng.uniform_index(30);
        const int ky = 1 + static_cast<int>(rng.uniform_index(5));
        const int kc = 1 + static_cast<int>(rng.uniform_index(5));
        std::vector<int> y(n), c(n);
        for (auto& v : y) v = static_cast<int>(rng.uniform_index(ky));
        for (auto& v : c) v = static_cast<int>(rng.uniform_index(kc));
        CHECK(hungarian_accuracy(y, c) == accuracy_by_exhaustive_permutations(y, c));
    }
}

TEST_CASE("nmi examples") {
    const std::vector<int> a{0, 0, 1, 1};
    CHECK(nmi(a, a).nmi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nmi(a, std::vector<int>{0, 1, 0, 1}).nmi == doctest::Approx(0.0));
    CHECK(nmi(std::vector<int>{0, 0}, std::vector<int>{0, 0}).nmi == 1.0); // degenerate rule
    CHECK_THROWS_AS(nmi(a, std::vector<int>{0}), ShapeError);

    const NmiResult r = nmi(a, a);
    CHECK(r.mutual_information == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.entropy_y == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.nmi == doctest::Approx(r.mutual_information / (0.5 * (r.entropy_y + r.entropy_c))));
}

TEST_CASE("nmi matches the joint-histogram oracle, is symmetric, stays in range") {
    RngStream rng(12);
    for (int rep = 0; rep < 50; ++rep) {
        const size_t n = 2 + rng.uniform_index(60);
        const int ky = 1 + static_cast<int>(rng.uniform_index(6));
        const int kc = 1 + static_cast<int>(rng.uniform_index(6));
        std::vector<int> y(n), c(n);
        for (auto& v : y) v = static_cast<int>(rng.uniform_index(ky));
        for (auto& v : c) v = static_cast<int>(rng.uniform_index(kc));
        const double mine = nmi(y, c).nmi;
        CHECK(mine == doctest::Approx(nmi_by_joint_histogram(y, c)).epsilon(1e-9));
        CHECK(mine == nmi(c, y).nmi);
        CHECK(mine >= 0.0);
        CHECK(mine <= 1.0);
    }
}

TEST_CASE("evaluate_clustering bundles the metrics consistently") {
    const std::vector<int> y{0, 0, 1, 1, 2, 2};
    const std::vector<int> c{1, 1, 0, 0, 2, 0};
    const ClusterMetrics m = evaluate_clustering(y, c, 3.5);
    CHECK(m.acc == hungarian_accuracy(y, c));
    CHECK(m.inertia == 3.5);
    CHECK(m.nmi ==
          doctest::Approx(m.mutual_information / (0.5 * (m.entropy_y + m.entropy_c))).epsilon(1e-12));
}

TEST_CASE("acc and nmi are invariant under relabeling") {
    RngStream rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        const size_t n = 4 + rng.uniform_index(40);
        const int k = 2 + static_cast<int>(rng.uniform_index(4));
        std::vector<int> y(n), c(n);
        for (auto& v : y) v = static_cast<int>(rng.uniform_index(k));
        for (auto& v : c) v = static_cast<int>(rng.uniform_index(k));

        // random permutations of each label set
        std::vector<int> py(k), pc(k);
        std::iota(py.begin(), py.end(), 0);
        std::iota(pc.begin(), pc.end(), 0);
        for (int i = k; i > 1; --i) {
            std::swap(py[i - 1], py[rng.uniform_index(static_cast<uint64_t>(i))]);
            std::swap(pc[i - 1], pc[rng.uniform_index(static_cast<uint64_t>(i))]);
        }
        std::vector<int> y2(n), c2(n);
        for (size_t i = 0; i < n; ++i) {
            y2[i] = py[static_cast<size_t>(y[i])];
            c2[i] = pc[static_cast<size_t>(c[i])];
        }
        CHECK(hungarian_accuracy(y, c) == doctest::Approx(hungarian_accuracy(y2, c2)).epsilon(1e-12));
        CHECK(nmi(y, c).nmi == doctest::Approx(nmi(y2, c2).nmi).epsilon(1e-12));
    }
}
