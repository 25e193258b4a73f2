#include "mcdc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mcdc/errors.hpp"

namespace mcdc {

void symmetric_eigen(const Tensor64& a_in, std::vector<double>& eigenvalues, Tensor64& eigenvectors) {
    if (a_in.rank() != 2 || a_in.dim(0) != a_in.dim(1))
        throw ShapeError("symmetric_eigen: expected a square matrix");
    const size_t d = a_in.dim(0);
    Tensor64 a = a_in;
    Tensor64 v({d, d});
    for (size_t i = 0; i < d; ++i) v.at2(i, i) = 1.0;

    double norm = 0.0;
    for (double x : a.data) norm += x * x;
    norm = std::sqrt(norm);
    const double tol = 1e-12 * std::max(1.0, norm);

    // Cyclic sweeps over the upper triangle in fixed (p,q) order.
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t p = 0; p < d; ++p)
            for (size_t q = p + 1; q < d; ++q) off += a.at2(p, q) * a.at2(p, q);
        if (std::sqrt(2.0 * off) <= tol) break;
        for (size_t p = 0; p < d; ++p)
            for (size_t q = p + 1; q < d; ++q) {
                const double apq = a.at2(p, q);
                if (std::abs(apq) <= tol / static_cast<double>(d * d)) continue;
                const double app = a.at2(p, p), aqq = a.at2(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (size_t i = 0; i < d; ++i) {
                    const double aip = a.at2(i, p), aiq = a.at2(i, q);
                    a.at2(i, p) = c * aip - s * aiq;
                    a.at2(i, q) = s * aip + c * aiq;
                }
                for (size_t i = 0; i < d; ++i) {
                    const double api = a.at2(p, i), aqi = a.at2(q, i);
                    a.at2(p, i) = c * api - s * aqi;
                    a.at2(q, i) = s * api + c * aqi;
                }
                for (size_t i = 0; i < d; ++i) {
                    const double vip = v.at2(i, p), viq = v.at2(i, q);
                    v.at2(i, p) = c * vip - s * viq;
                    v.at2(i, q) = s * vip + c * viq;
                }
            }
    }

    std::vector<size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t i, size_t j) { return a.at2(i, i) > a.at2(j, j); });
    eigenvalues.resize(d);
    eigenvectors = Tensor64({d, d});
    for (size_t r = 0; r < d; ++r) {
        eigenvalues[r] = a.at2(idx[r], idx[r]);
        for (size_t i = 0; i < d; ++i) eigenvectors.at2(r, i) = v.at2(i, idx[r]);
    }
}

PcaBasis pca_fit(const Tensor64& X) {
    if (X.rank() != 2) throw ShapeError("pca_fit: expected [N,D]");
    const size_t n = X.dim(0), d = X.dim(1);
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 samples");

    PcaBasis basis;
    basis.mean.assign(d, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) basis.mean[j] += X.at2(i, j);
    for (double& v : basis.mean) v /= static_cast<double>(n);

    Tensor64 cov({d, d});
    for (size_t i = 0; i < n; ++i)
        for (size_t a = 0; a < d; ++a) {
            const double xa = X.at2(i, a) - basis.mean[a];
            for (size_t b = a; b < d; ++b)
                cov.at2(a, b) += xa * (X.at2(i, b) - basis.mean[b]);
        }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (size_t a = 0; a < d; ++a)
        for (size_t b = a; b < d; ++b) {
            cov.at2(a, b) *= inv;
            cov.at2(b, a) = cov.at2(a, b);
        }

    symmetric_eigen(cov, basis.eigenvalues, basis.components);
    for (double& ev : basis.eigenvalues)
        if (ev < 0.0) ev = 0.0; // covariance is PSD; tiny negatives are rounding

    // Deterministic sign: the largest-magnitude entry of each component is
    // positive (first index wins ties).
    for (size_t r = 0; r < d; ++r) {
        size_t arg = 0;
        double best = -1.0;
        for (size_t i = 0; i < d; ++i) {
            const double mag = std::abs(basis.components.at2(r, i));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (basis.components.at2(r, arg) < 0.0)
            for (size_t i = 0; i < d; ++i) basis.components.at2(r, i) = -basis.components.at2(r, i);
    }
    return basis;
}

Tensor64 pca_whiten(const Tensor64& X, const PcaBasis& basis, double eps) {
    if (X.rank() != 2 || X.dim(1) != basis.mean.size())
        throw ShapeError("pca_whiten: dimensionality does not match the fitted basis");
    const size_t n = X.dim(0), d = X.dim(1);
    std::vector<double> scale(d);
    for (size_t r = 0; r < d; ++r) scale[r] = 1.0 / std::sqrt(basis.eigenvalues[r] + eps);
    Tensor64 out({n, d});
    std::vector<double> centered(d);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < d; ++j) centered[j] = X.at2(i, j) - basis.mean[j];
        for (size_t r = 0; r < d; ++r) {
            double acc = 0.0;
            for (size_t j = 0; j < d; ++j) acc += basis.components.at2(r, j) * centered[j];
            out.at2(i, r) = acc * scale[r];
        }
    }
    return out;
}

namespace {

double squared_distance(const Tensor64& X, size_t row, const Tensor64& centroids, size_t cid) {
    const size_t d = X.dim(1);
    const double* x = &X.data[row * d];
    const double* c = &centroids.data[cid * d];
    double acc = 0.0;
    for (size_t j = 0; j < d; ++j) {
        const double diff = x[j] - c[j];
        acc += diff * diff;
    }
    return acc;
}

// One Lloyd run from the given initial centroids. Appends per-iteration
// inertia to `trace` when given.
void lloyd(const Tensor64& X, size_t k, size_t max_iter, Tensor64& centroids,
           std::vector<int>& assign, double& inertia, std::vector<double>* trace) {
    const size_t n = X.dim(0), d = X.dim(1);
    assign.assign(n, -1);
    std::vector<size_t> counts(k);
    std::vector<double> dist_to_own(n);

    for (size_t iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(X, i, centroids, 0);
            for (size_t c = 1; c < k; ++c) {
                const double dd = squared_distance(X, i, centroids, c);
                if (dd < best_d) {
                    best_d = dd;
                    best = static_cast<int>(c);
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
            dist_to_own[i] = best_d;
            total += best_d;
        }

        // Re-seed empty clusters from the farthest point (ascending cluster
        // id, each steals a distinct point).
        std::fill(counts.begin(), counts.end(), 0);
        for (int a : assign) counts[static_cast<size_t>(a)]++;
        for (size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            size_t far = 0;
            double far_d = -1.0;
            for (size_t i = 0; i < n; ++i)
                if (counts[static_cast<size_t>(assign[i])] > 1 && dist_to_own[i] > far_d) {
                    far_d = dist_to_own[i];
                    far = i;
                }
            counts[static_cast<size_t>(assign[far])]--;
            assign[far] = static_cast<int>(c);
            counts[c] = 1;
            dist_to_own[far] = 0.0;
            changed = true;
        }

        if (trace) trace->push_back(total);
        if (!changed && iter > 0) {
            inertia = total;
            return;
        }

        for (size_t c = 0; c < k; ++c)
            for (size_t j = 0; j < d; ++j) centroids.at2(c, j) = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const size_t c = static_cast<size_t>(assign[i]);
            for (size_t j = 0; j < d; ++j) centroids.at2(c, j) += X.at2(i, j);
        }
        for (size_t c = 0; c < k; ++c)
            for (size_t j = 0; j < d; ++j) centroids.at2(c, j) /= static_cast<double>(counts[c]);
        inertia = total;
    }
    // max_iter reached: recompute final inertia against the last centroids.
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double best_d = squared_distance(X, i, centroids, static_cast<size_t>(assign[i]));
        total += best_d;
    }
    inertia = std::min(inertia, total);
}

} // namespace

ClusterResult kmeans(const Tensor64& X, size_t k, size_t n_init, size_t max_iter, RngStream& rng,
                     std::vector<std::vector<double>>* inertia_trace) {
    if (X.rank() != 2) throw ShapeError("kmeans: expected [N,D]");
    const size_t n = X.dim(0), d = X.dim(1);
    if (k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
    if (k > n) throw std::invalid_argument("kmeans: k exceeds the number of samples");
    if (n_init == 0) throw std::invalid_argument("kmeans: n_init must be >= 1");

    ClusterResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::vector<size_t> pick;
    for (size_t restart = 0; restart < n_init; ++restart) {
        // k distinct data points as initial centroids
        pick.clear();
        while (pick.size() < k) {
            const size_t cand = rng.uniform_index(n);
            if (std::find(pick.begin(), pick.end(), cand) == pick.end()) pick.push_back(cand);
        }
        Tensor64 centroids({k, d});
        for (size_t c = 0; c < k; ++c)
            for (size_t j = 0; j < d; ++j) centroids.at2(c, j) = X.at2(pick[c], j);

        std::vector<int> assign;
        double inertia = 0.0;
        std::vector<double>* trace = nullptr;
        if (inertia_trace) {
            inertia_trace->emplace_back();
            trace = &inertia_trace->back();
        }
        lloyd(X, k, max_iter, centroids, assign, inertia, trace);

        if (inertia < best.inertia) { // strict: ties keep the lowest restart index
            best.inertia = inertia;
            best.assignments = std::move(assign);
            best.centroids = std::move(centroids);
        }
    }
    best.restarts_run = static_cast<int>(n_init);
    return best;
}

namespace {

// Minimum-cost assignment on a square matrix (potentials + shortest
// augmenting path, O(n^3)). Returns the column matched to each row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const size_t n = cost.size();
    std::vector<double> u(n + 1), v(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        p[0] = static_cast<int>(i);
        size_t j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const size_t i0 = static_cast<size_t>(p[j0]);
            double delta = std::numeric_limits<double>::infinity();
            size_t j1 = 0;
            for (size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = static_cast<int>(j0);
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[static_cast<size_t>(p[j])] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const size_t j1 = static_cast<size_t>(way[j0]);
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (size_t j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[static_cast<size_t>(p[j]) - 1] = static_cast<int>(j) - 1;
    return row_to_col;
}

int max_label(std::span<const int> v) {
    int m = -1;
    for (int x : v) {
        if (x < 0) throw std::invalid_argument("labels must be non-negative");
        m = std::max(m, x);
    }
    return m;
}

} // namespace

double hungarian_accuracy(std::span<const int> y, std::span<const int> c) {
    if (y.size() != c.size()) throw ShapeError("hungarian_accuracy: length mismatch");
    if (y.empty()) throw std::invalid_argument("hungarian_accuracy: empty input");
    const size_t n = y.size();
    const size_t classes = static_cast<size_t>(max_label(y)) + 1;
    const size_t clusters = static_cast<size_t>(max_label(c)) + 1;
    const size_t k = std::max(classes, clusters); // padded square
    std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
    for (size_t i = 0; i < n; ++i)
        cost[static_cast<size_t>(c[i])][static_cast<size_t>(y[i])] -= 1.0; // maximize matches
    const std::vector<int> match = solve_assignment(cost);
    double matched = 0.0;
    for (size_t cid = 0; cid < k; ++cid)
        if (match[cid] >= 0) matched -= cost[cid][static_cast<size_t>(match[cid])];
    return matched / static_cast<double>(n);
}

NmiResult nmi(std::span<const int> y, std::span<const int> c) {
    if (y.size() != c.size()) throw ShapeError("nmi: length mismatch");
    if (y.empty()) throw std::invalid_argument("nmi: empty input");
    const size_t n = y.size();
    const size_t ky = static_cast<size_t>(max_label(y)) + 1;
    const size_t kc = static_cast<size_t>(max_label(c)) + 1;
    std::vector<double> joint(ky * kc, 0.0), py(ky, 0.0), pc(kc, 0.0);
    const double inv = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        joint[static_cast<size_t>(y[i]) * kc + static_cast<size_t>(c[i])] += inv;
        py[static_cast<size_t>(y[i])] += inv;
        pc[static_cast<size_t>(c[i])] += inv;
    }
    NmiResult r;
    for (double p : py)
        if (p > 0.0) r.entropy_y -= p * std::log(p);
    for (double p : pc)
        if (p > 0.0) r.entropy_c -= p * std::log(p);
    // summing the terms in sorted order makes nmi(y,c) == nmi(c,y) exact:
    // the term multiset is invariant under the argument swap
    std::vector<double> terms;
    terms.reserve(ky * kc);
    for (size_t a = 0; a < ky; ++a)
        for (size_t b = 0; b < kc; ++b) {
            const double p = joint[a * kc + b];
            if (p > 0.0) terms.push_back(p * std::log(p / (py[a] * pc[b])));
        }
    std::sort(terms.begin(), terms.end());
    for (double t : terms) r.mutual_information += t;
    r.mutual_information = std::max(0.0, r.mutual_information);

    const double denom = 0.5 * (r.entropy_y + r.entropy_c);
    if (denom > 0.0) {
        r.nmi = std::min(1.0, r.mutual_information / denom);
    } else {
        // Both partitions are single blocks: identical as set partitions.
        r.nmi = 1.0;
    }
    return r;
}

ClusterMetrics evaluate_clustering(std::span<const int> y, std::span<const int> c, double inertia) {
    ClusterMetrics m;
    m.acc = hungarian_accuracy(y, c);
    const NmiResult r = nmi(y, c);
    m.nmi = r.nmi;
    m.mutual_information = r.mutual_information;
    m.entropy_y = r.entropy_y;
    m.entropy_c = r.entropy_c;
    m.inertia = inertia;
    return m;
}

} // namespace mcdc
