#include "coreselect/kmedoids.hpp"

#include "coreselect/error.hpp"
#include "coreselect/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coreselect {

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "manhattan") return Metric::manhattan;
    fail(Errc::config, "unknown metric '" + name + "' (expected euclidean or manhattan)");
}

const char* metric_name(Metric metric) noexcept {
    return metric == Metric::euclidean ? "euclidean" : "manhattan";
}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> values, Metric metric)
    : n_(n), values_(std::move(values)), metric_(metric) {
    require(values_.size() == n_ * n_, Errc::shape, "distance matrix needs n*n values");
    for (std::size_t i = 0; i < n_; ++i) {
        require((*this)(i, i) == 0.0, Errc::data, "distance matrix diagonal must be zero");
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double v = (*this)(i, j);
            require(std::isfinite(v) && v >= 0.0, Errc::data, "distances must be finite and non-negative");
            require(v == (*this)(j, i), Errc::data, "distance matrix must be symmetric");
        }
    }
}

DistanceMatrix pairwise_distances(const EmbeddingMatrix& m, Metric metric) {
    const std::size_t n = m.size();
    require(n >= 2, Errc::size, "pairwise distances need at least two points");
    std::vector<double> values(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = metric == Metric::euclidean ? euclidean_distance(m.row(i), m.row(j))
                                                         : manhattan_distance(m.row(i), m.row(j));
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    return DistanceMatrix(n, std::move(values), metric);
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto c : assignment) ++sizes[c];
    return sizes;
}

std::vector<std::uint32_t> assign_to_medoids(const DistanceMatrix& d, std::span<const std::size_t> medoids) {
    const std::size_t n = d.size();
    std::vector<std::uint32_t> assignment(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < medoids.size(); ++c) {
            const double dist = d(j, medoids[c]);
            if (dist < best) {
                best = dist;
                assignment[j] = static_cast<std::uint32_t>(c);
            }
        }
    }
    for (std::size_t c = 0; c < medoids.size(); ++c) assignment[medoids[c]] = static_cast<std::uint32_t>(c);
    return assignment;
}

namespace {

double configuration_cost(const DistanceMatrix& d, std::span<const std::size_t> medoids) {
    double cost = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m : medoids) best = std::min(best, d(j, m));
        cost += best;
    }
    return cost;
}

std::vector<std::size_t> build(const DistanceMatrix& d, std::size_t k) {
    const std::size_t n = d.size();
    std::vector<std::size_t> medoids;
    std::vector<bool> is_medoid(n, false);

    std::size_t first = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = d.row(i);
        const double sum = std::accumulate(r.begin(), r.end(), 0.0);
        if (sum < best_sum) {
            best_sum = sum;
            first = i;
        }
    }
    medoids.push_back(first);
    is_medoid[first] = true;
    std::vector<double> nearest(d.row(first).begin(), d.row(first).end());

    while (medoids.size() < k) {
        std::size_t pick = n;
        double best_gain = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_medoid[i]) continue;
            double gain = 0.0;
            for (std::size_t j = 0; j < n; ++j) gain += std::max(0.0, nearest[j] - d(i, j));
            if (gain > best_gain) {
                best_gain = gain;
                pick = i;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = true;
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(pick, j));
    }
    return medoids;
}

Clustering swap_phase(const DistanceMatrix& d, std::vector<std::size_t> medoids, std::size_t max_iter) {
    const std::size_t n = d.size();
    const std::size_t k = medoids.size();
    std::vector<bool> is_medoid(n, false);
    for (auto m : medoids) is_medoid[m] = true;

    Clustering out;
    out.k = k;
    double cost = configuration_cost(d, medoids);
    out.deviation_trace.push_back(cost);

    std::vector<double> near1(n), near2(n);
    std::vector<std::size_t> near_slot(n);
    while (out.iterations < max_iter && k < n) {
        ++out.iterations;
        for (std::size_t j = 0; j < n; ++j) {
            near1[j] = near2[j] = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < k; ++s) {
                const double dist = d(j, medoids[s]);
                if (dist < near1[j]) {
                    near2[j] = near1[j];
                    near1[j] = dist;
                    near_slot[j] = s;
                } else if (dist < near2[j]) {
                    near2[j] = dist;
                }
            }
        }

        double best_cost = cost;
        std::size_t best_slot = k;
        std::size_t best_candidate = n;
        for (std::size_t s = 0; s < k; ++s) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                double candidate = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double keep = near_slot[j] == s ? near2[j] : near1[j];
                    candidate += std::min(keep, d(h, j));
                }
                if (candidate < best_cost) {
                    best_cost = candidate;
                    best_slot = s;
                    best_candidate = h;
                }
            }
        }
        // Require a real improvement, not summation-order noise.
        if (best_slot == k || best_cost >= cost - 1e-12 * std::max(cost, 1.0)) break;

        is_medoid[medoids[best_slot]] = false;
        medoids[best_slot] = best_candidate;
        is_medoid[best_candidate] = true;
        cost = configuration_cost(d, medoids);
        out.deviation_trace.push_back(cost);
    }

    out.medoids = std::move(medoids);
    out.assignment = assign_to_medoids(d, out.medoids);
    out.total_deviation = 0.0;
    for (std::size_t j = 0; j < n; ++j) out.total_deviation += d(j, out.medoids[out.assignment[j]]);
    return out;
}

std::vector<std::size_t> random_medoids(std::size_t n, std::size_t k, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(perm[i], perm[i + rng.index(n - i)]);
    perm.resize(k);
    return perm;
}

}  // namespace

Clustering kmedoids_fit(const DistanceMatrix& d, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                        std::size_t restarts) {
    const std::size_t n = d.size();
    require(k >= 1 && k <= n, Errc::parameter,
            "k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    require(max_iter >= 1, Errc::parameter, "max_iter must be >= 1");

    Clustering best = swap_phase(d, build(d, k), max_iter);
    if (k == 1 || k == n) return best;
    for (std::size_t r = 0; r < restarts; ++r) {
        auto candidate = swap_phase(d, random_medoids(n, k, derive_seed(seed, r)), max_iter);
        if (candidate.total_deviation < best.total_deviation - 1e-12 * std::max(best.total_deviation, 1.0))
            best = std::move(candidate);
    }
    return best;
}

SilhouetteReport silhouette(const DistanceMatrix& d, std::span<const std::uint32_t> assignment) {
    const std::size_t n = d.size();
    require(assignment.size() == n, Errc::shape, "assignment length differs from distance matrix size");
    std::size_t k = 0;
    for (auto c : assignment) k = std::max<std::size_t>(k, c + 1);
    require(k >= 2, Errc::undefined, "silhouette is undefined for a single cluster");
    std::vector<std::size_t> sizes(k, 0);
    for (auto c : assignment) ++sizes[c];
    for (std::size_t c = 0; c < k; ++c)
        require(sizes[c] > 0, Errc::parameter, "cluster " + std::to_string(c) + " is empty");

    SilhouetteReport report;
    report.per_point.assign(n, 0.0);
    report.per_cluster_mean.assign(k, 0.0);
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = assignment[i];
        if (sizes[own] == 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) sums[assignment[j]] += d(i, j);
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        const double denom = std::max(a, b);
        report.per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) report.per_cluster_mean[assignment[i]] += report.per_point[i];
    for (std::size_t c = 0; c < k; ++c) report.per_cluster_mean[c] /= static_cast<double>(sizes[c]);
    report.mean = std::accumulate(report.per_point.begin(), report.per_point.end(), 0.0) / static_cast<double>(n);
    return report;
}

KSelectionResult select_k(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                          std::size_t max_iter) {
    const std::size_t n = d.size();
    require(k_min >= 2 && k_min <= k_max && k_max + 1 <= n, Errc::parameter,
            "k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) + "] invalid for n = " +
                std::to_string(n));

    KSelectionResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto clustering = kmedoids_fit(d, k, seed, max_iter);
        const double score = silhouette(d, clustering.assignment).mean;
        result.scores.emplace(k, score);
        result.clusterings.emplace(k, std::move(clustering));
        if (score > best) {
            best = score;
            result.chosen_k = k;
        }
    }
    return result;
}

std::vector<std::size_t> ClassClustering::frequencies() const {
    std::vector<std::size_t> freq(k, 0);
    for (auto c : assignment) ++freq[c];
    return freq;
}

std::vector<std::vector<SampleId>> ClassClustering::members() const {
    std::vector<std::vector<SampleId>> out(k);
    for (std::size_t i = 0; i < ids.size(); ++i) out[assignment[i]].push_back(ids[i]);
    return out;
}

ClassClusterResult cluster_class(const EmbeddingMatrix& m, const ClusterConfig& config) {
    const ClassIndex cls = m.labels().front();
    for (ClassIndex c : m.labels())
        require(c == cls, Errc::consistency, "cluster_class expects a single-class matrix");
    require(config.k_min >= 2 && config.k_min <= config.k_max, Errc::parameter, "invalid k range");

    ClassClusterResult result;
    auto& out = result.clustering;
    out.class_index = cls;
    out.ids = m.ids();
    const std::size_t n = m.size();

    if (n < config.k_min + 1) {
        out.fallback = true;
        out.k = 1;
        out.assignment.assign(n, 0);
        out.cluster_silhouette.assign(1, 0.0);
        std::size_t medoid = 0;
        if (n >= 2) medoid = kmedoids_fit(pairwise_distances(m, config.metric), 1, config.seed, 1).medoids[0];
        out.medoid_ids = {m.ids()[medoid]};
        return result;
    }

    const auto distances = pairwise_distances(m, config.metric);
    auto selection = select_k(distances, config.k_min, std::min(config.k_max, n - 1), config.seed, config.max_iter);
    const auto& chosen = selection.chosen();
    out.k = chosen.k;
    out.assignment = chosen.assignment;
    for (auto idx : chosen.medoids) out.medoid_ids.push_back(m.ids()[idx]);
    out.silhouette_scores = selection.scores;
    out.cluster_silhouette = silhouette(distances, chosen.assignment).per_cluster_mean;
    result.selection = std::move(selection);
    return result;
}

}  // namespace coreselect
