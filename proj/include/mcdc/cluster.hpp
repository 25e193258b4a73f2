#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcdc/rng.hpp"
#include "mcdc/tensor.hpp"

namespace mcdc {

// Evaluation runs in double precision regardless of the training dtype.

struct PcaBasis {
    std::vector<double> mean;   // [D]
    Tensor64 components;        // [D, D], orthonormal rows, descending eigenvalue order
    std::vector<double> eigenvalues; // [D], descending, clamped at 0
};

// Eigendecomposition of the sample covariance (divisor N-1) via cyclic
// Jacobi rotations. Sign convention: each component's largest-magnitude
// entry is positive.
PcaBasis pca_fit(const Tensor64& X);

// Rows mapped to components * (x - mean), each direction scaled by
// 1/sqrt(eigenvalue + eps).
Tensor64 pca_whiten(const Tensor64& X, const PcaBasis& basis, double eps = 1e-8);

struct ClusterResult {
    std::vector<int> assignments; // [N], ids in [0,k)
    Tensor64 centroids;           // [k, D]
    double inertia = 0.0;         // sum of squared distances to assigned centroid
    int restarts_run = 0;
};

// Lloyd's algorithm, `n_init` restarts seeded from k distinct data points,
// best (lowest) inertia wins with ties broken by lowest restart index.
// Within a restart, empty clusters are re-seeded from the farthest point.
// `inertia_trace`, when given, receives the per-iteration inertia of every
// restart (used by the monotonicity checks).
ClusterResult kmeans(const Tensor64& X, size_t k, size_t n_init, size_t max_iter, RngStream& rng,
                     std::vector<std::vector<double>>* inertia_trace = nullptr);

// Clustering accuracy under the best one-to-one mapping of cluster ids to
// class labels (assignment problem on the contingency matrix).
double hungarian_accuracy(std::span<const int> y, std::span<const int> c);

struct NmiResult {
    double nmi = 0.0;
    double mutual_information = 0.0; // nats
    double entropy_y = 0.0;
    double entropy_c = 0.0;
};

// NMI = I(Y,C) / (0.5 * (H(Y) + H(C))), natural log, 0*log(0) := 0.
// Degenerate case (both partitions single-block): 1 if the partitions are
// identical as set partitions, else 0.
NmiResult nmi(std::span<const int> y, std::span<const int> c);

struct ClusterMetrics {
    double acc = 0.0;
    double nmi = 0.0;
    double mutual_information = 0.0;
    double entropy_y = 0.0;
    double entropy_c = 0.0;
    double inertia = 0.0;
};

// Bundles accuracy, NMI components, and the clustering inertia for a
// labeled clustering result.
ClusterMetrics evaluate_clustering(std::span<const int> y, std::span<const int> c, double inertia);

// Jacobi eigendecomposition of a symmetric matrix; returns eigenvalues
// (descending) and matching eigenvectors as rows. Exposed for tests.
void symmetric_eigen(const Tensor64& a, std::vector<double>& eigenvalues, Tensor64& eigenvectors);

} // namespace mcdc
