#pragma once

#include "coreselect/dataset.hpp"
#include "coreselect/kmedoids.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace coreselect {

enum class SamplingMethod { random, intelligent };
/// How a class quota is spread over that class's clusters.
enum class ClusterAllocation { equal, proportional_floor };
/// How the total coreset size is spread over classes (intelligent sampling only).
enum class ClassAllocation { proportional, equal };

SamplingMethod parse_method(const std::string& name);
const char* method_name(SamplingMethod method) noexcept;
ClusterAllocation parse_cluster_allocation(const std::string& name);
const char* allocation_name(ClusterAllocation allocation) noexcept;
ClassAllocation parse_class_allocation(const std::string& name);
const char* allocation_name(ClassAllocation allocation) noexcept;

/// Coreset size given either as a fraction of the source or as an absolute count.
class CoresetSize {
public:
    static CoresetSize fraction(double f);
    static CoresetSize absolute(std::size_t n);

    /// Fractions resolve to round_half_up(f * total), at least 1. Throws when the result
    /// falls outside [1, total].
    std::size_t resolve(std::size_t total) const;

    bool is_fraction() const noexcept { return std::holds_alternative<double>(value_); }
    double fraction_value() const { return std::get<double>(value_); }
    std::size_t absolute_value() const { return std::get<std::size_t>(value_); }

    bool operator==(const CoresetSize&) const = default;

private:
    explicit CoresetSize(std::variant<double, std::size_t> v) : value_(v) {}
    std::variant<double, std::size_t> value_;
};

struct CoresetSpec {
    CoresetSize size = CoresetSize::fraction(0.2);
    SamplingMethod method = SamplingMethod::intelligent;
    std::uint64_t seed = 0;
    ClusterAllocation allocation = ClusterAllocation::equal;
    ClassAllocation class_allocation = ClassAllocation::proportional;
};

using ClusterKey = std::pair<ClassIndex, std::uint32_t>;

struct CoresetSelection {
    std::vector<SampleId> ids;  // source row order
    std::map<ClassIndex, std::size_t> per_class;
    std::map<ClusterKey, std::size_t> per_cluster;  // filled when clusterings are known
    CoresetSpec spec;
};

/// Sample id -> (class, cluster) for a set of class clusterings.
std::unordered_map<SampleId, ClusterKey> cluster_lookup(std::span<const ClassClustering> clusterings);

/// Global uniform sample without replacement: a partial Fisher-Yates shuffle whose
/// swap positions come from inverting the discrete uniform CDF on a xoshiro stream.
CoresetSelection random_sample(const EmbeddingMatrix& m, std::size_t n, std::uint64_t seed,
                               std::span<const ClassClustering> clusterings = {});

/// Class quotas by `class_allocation`, then cluster quotas by `allocation`, then a
/// uniform draw inside each cluster. Clusters too small for their quota are taken whole
/// and the shortfall is spread over the clusters that still have members.
CoresetSelection intelligent_sample(const EmbeddingMatrix& m, std::span<const ClassClustering> clusterings,
                                    std::size_t n, ClusterAllocation allocation, std::uint64_t seed,
                                    ClassAllocation class_allocation = ClassAllocation::proportional);

CoresetSelection select_coreset(const EmbeddingMatrix& m, std::span<const ClassClustering> clusterings,
                                const CoresetSpec& spec);

std::vector<std::size_t> allocate_classes(std::span<const std::size_t> class_sizes, std::size_t n,
                                          ClassAllocation mode);
std::vector<std::size_t> allocate_clusters(std::span<const std::size_t> cluster_sizes, std::size_t quota,
                                           ClusterAllocation mode);

struct MultinomialModel {
    std::vector<double> probabilities;
    std::size_t draws = 0;

    void validate() const;
};

/// N_S! / (n_1! ... n_K!) * prod p_k^{n_k}, evaluated in log space.
double multinomial_pmf(const MultinomialModel& model, std::span<const std::size_t> counts);

/// Expected per-cluster counts of a uniform draw of n: n * size_k / sum(size).
std::vector<double> rs_expected_counts(std::span<const std::size_t> cluster_sizes, std::size_t n);

struct RepresentationRow {
    ClassIndex class_index = 0;
    std::uint32_t cluster = 0;
    std::size_t source_size = 0;
    std::size_t selected = 0;
    double rate = 0.0;
    double rs_expected = 0.0;
};

std::vector<RepresentationRow> representation_report(const CoresetSelection& selection,
                                                     std::span<const ClassClustering> clusterings);

// class,cluster,source_size,selected,rate,rs_expected
void write_representation_csv(std::ostream& out, std::span<const RepresentationRow> rows,
                              const std::vector<std::string>& class_names);

struct SelectionEntry {
    SampleId id{};
    std::string class_name;
    std::optional<std::uint32_t> cluster;  // empty when written without clusterings
};

// id,class,cluster
void write_selection_csv(std::ostream& out, const CoresetSelection& selection, const EmbeddingMatrix& source,
                         std::span<const ClassClustering> clusterings);
std::vector<SelectionEntry> read_selection_csv(std::istream& in);

/// JSON sidecar: spec plus per-class and per-cluster allocation tables.
std::string selection_sidecar_json(const CoresetSelection& selection, const std::vector<std::string>& class_names);

}  // namespace coreselect
