#include <lapnet/spectral.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace lapnet {

namespace {

double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Clustering {
    std::vector<int> labels;
    double inertia = std::numeric_limits<double>::infinity();
};

Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& pts, int k, std::mt19937_64& rng)
{
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd centers(k, pts.cols());
    std::vector<bool> chosen(n, false);

    auto first = static_cast<Eigen::Index>(unit_uniform(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centers.row(0) = pts.row(first);
    chosen[first] = true;

    Eigen::VectorXd dist2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = unit_uniform(rng) * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dist2[i];
                if (dist2[i] > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                // Rounding left target beyond the final partial sum.
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (dist2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(c) = pts.row(pick);
        chosen[pick] = true;
        dist2 = dist2.cwiseMin((pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    return centers;
}

Clustering lloyd(const Eigen::MatrixXd& pts, Eigen::MatrixXd centers, int max_iterations)
{
    const Eigen::Index n = pts.rows();
    const int k = static_cast<int>(centers.rows());
    Clustering result;
    result.labels.assign(n, -1);
    std::vector<double> dist(n, 0.0);
    std::vector<int> counts(k, 0);

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (pts.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (pts.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            changed |= result.labels[i] != best;
            result.labels[i] = best;
            dist[i] = best_d;
            ++counts[best];
        }

        // Empty-cluster repair: hand each empty cluster the point farthest
        // from its centroid, taken from a cluster that can spare it.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                continue;
            }
            Eigen::Index far = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (counts[result.labels[i]] > 1 && (far < 0 || dist[i] > dist[far])) {
                    far = i;
                }
            }
            --counts[result.labels[far]];
            result.labels[far] = c;
            counts[c] = 1;
            dist[far] = 0.0;
            centers.row(c) = pts.row(far);
            changed = true;
        }

        if (!changed && iter > 0) {
            break;
        }
        centers.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            centers.row(result.labels[i]) += pts.row(i);
        }
        for (int c = 0; c < k; ++c) {
            centers.row(c) /= static_cast<double>(counts[c]);
        }
    }

    result.inertia = kmeans_inertia(pts, result.labels, k);
    return result;
}

} // namespace

double kmeans_inertia(const Eigen::MatrixXd& points, const std::vector<int>& mask, int k)
{
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        centers.row(mask[i]) += points.row(i);
        ++counts[mask[i]];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) {
            centers.row(c) /= static_cast<double>(counts[c]);
        }
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        total += (points.row(i) - centers.row(mask[i])).squaredNorm();
    }
    return total;
}

std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options)
{
    const Eigen::Index n = points.rows();
    if (points.cols() < 1) {
        throw ArgumentError("k-means needs at least one feature column");
    }
    if (k < 1 || k > n) {
        throw ArgumentError("k-means with k=" + std::to_string(k) + " on " + std::to_string(n) + " points");
    }

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < points.cols(); ++c) {
            if (points(a, c) != points(b, c)) {
                return points(a, c) < points(b, c);
            }
        }
        return false;
    });
    Eigen::MatrixXd canonical(n, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        canonical.row(i) = points.row(order[i]);
    }

    Clustering best;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r));
        Clustering run = lloyd(canonical, seed_centers(canonical, k, rng), options.max_iterations);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }

    std::vector<int> mask(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mask[order[i]] = best.labels[i];
    }
    return mask;
}

} // namespace lapnet
