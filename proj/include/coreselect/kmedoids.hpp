#pragma once

#include "coreselect/dataset.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coreselect {

enum class Metric { euclidean, manhattan };

Metric parse_metric(const std::string& name);
const char* metric_name(Metric metric) noexcept;

/// Symmetric n x n dissimilarities with a zero diagonal.
class DistanceMatrix {
public:
    /// Takes ownership of a full row-major n*n array; validates symmetry and finiteness.
    DistanceMatrix(std::size_t n, std::vector<double> values, Metric metric = Metric::euclidean);

    std::size_t size() const noexcept { return n_; }
    Metric metric() const noexcept { return metric_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const noexcept { return {values_.data() + i * n_, n_}; }

private:
    std::size_t n_;
    std::vector<double> values_;
    Metric metric_;
};

DistanceMatrix pairwise_distances(const EmbeddingMatrix& m, Metric metric = Metric::euclidean);

struct Clustering {
    std::size_t k = 0;
    std::vector<std::uint32_t> assignment;  // point -> cluster in [0, k)
    std::vector<std::size_t> medoids;       // cluster -> point index
    double total_deviation = 0.0;
    std::size_t iterations = 0;
    std::vector<double> deviation_trace;  // after BUILD, then after each applied swap

    std::vector<std::size_t> cluster_sizes() const;
};

inline constexpr std::size_t kDefaultRestarts = 8;

/// PAM: greedy BUILD seeding followed by SWAP iterations. Each iteration evaluates every
/// (medoid, non-medoid) exchange and applies the single best strictly improving one.
/// SWAP is then repeated from `restarts` random medoid sets drawn from `seed`, and the
/// lowest total deviation wins (earliest start on ties, BUILD first). Ties inside a run
/// go to the lowest index. Valid k: 1..n.
Clustering kmedoids_fit(const DistanceMatrix& d, std::size_t k, std::uint64_t seed = 0,
                        std::size_t max_iter = 100, std::size_t restarts = kDefaultRestarts);

/// Assignment of every point to its nearest medoid (ties to the lower cluster index);
/// medoids always belong to their own cluster.
std::vector<std::uint32_t> assign_to_medoids(const DistanceMatrix& d, std::span<const std::size_t> medoids);

struct SilhouetteReport {
    std::vector<double> per_point;
    double mean = 0.0;
    std::vector<double> per_cluster_mean;
};

/// s_i = (b_i - a_i) / max(a_i, b_i) with a_i the mean distance to the other members of
/// i's cluster and b_i the smallest mean distance to another cluster. Points in
/// singleton clusters, and points with a_i = b_i = 0, score 0.
SilhouetteReport silhouette(const DistanceMatrix& d, std::span<const std::uint32_t> assignment);

struct KSelectionResult {
    std::size_t chosen_k = 0;
    std::map<std::size_t, double> scores;
    std::map<std::size_t, Clustering> clusterings;

    const Clustering& chosen() const { return clusterings.at(chosen_k); }
};

/// Fits every k in [k_min, k_max] and keeps the highest mean silhouette (ties: smaller k).
KSelectionResult select_k(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max,
                          std::uint64_t seed = 0, std::size_t max_iter = 100);

struct ClusterConfig {
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    Metric metric = Metric::euclidean;
    std::uint64_t seed = 0;
    std::size_t max_iter = 100;
};

/// Clustering of one class, in terms of the class's own sample ids.
struct ClassClustering {
    ClassIndex class_index = 0;
    std::vector<SampleId> ids;               // class members, in class-matrix row order
    std::vector<std::uint32_t> assignment;   // parallel to ids
    std::vector<SampleId> medoid_ids;        // cluster -> medoid sample
    std::size_t k = 1;
    bool fallback = false;                   // too small to search, kept as one cluster
    std::map<std::size_t, double> silhouette_scores;
    std::vector<double> cluster_silhouette;  // per-cluster mean silhouette (0 on fallback)

    /// Sample count per cluster (the class's cluster frequency table).
    std::vector<std::size_t> frequencies() const;
    /// Member ids of each cluster, in row order.
    std::vector<std::vector<SampleId>> members() const;
};

struct ClassClusterResult {
    std::optional<KSelectionResult> selection;  // empty on fallback
    ClassClustering clustering;
};

/// Distances + k selection for one class. A class with fewer than k_min + 1 samples
/// becomes a single cluster around its 1-medoid and is flagged as a fallback. k_max is
/// clamped to n - 1.
ClassClusterResult cluster_class(const EmbeddingMatrix& m, const ClusterConfig& config);

}  // namespace coreselect
