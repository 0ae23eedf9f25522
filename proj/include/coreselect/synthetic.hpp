#pragma once

#include "coreselect/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace coreselect {

struct ClusterSpec {
    double weight = 1.0;
    std::vector<double> center;
    double stddev = 1.0;
};

struct ClassSpec {
    std::string name;
    std::vector<ClusterSpec> clusters;
    std::size_t count = 0;
};

/// Labeled isotropic Gaussian mixture. With `exact_counts`, per-cluster sizes are the
/// largest-remainder apportionment of `count` by weight; otherwise each sample's cluster
/// is a categorical draw.
struct MixtureSpec {
    std::vector<ClassSpec> classes;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    bool exact_counts = false;

    /// Throws Errc::spec on any violated constraint.
    void validate() const;
};

struct GeneratedDataset {
    EmbeddingMatrix embeddings;
    std::map<SampleId, std::uint32_t> ground_truth;  // sample -> cluster index within its class
};

/// Ids run 0..N-1 class by class. Normal deviates come from the inverse normal CDF
/// applied to xoshiro256** uniforms, one sub-stream per class.
GeneratedDataset generate(const MixtureSpec& spec);

/// Per-cluster sample counts a class would get under exact_counts.
std::vector<std::size_t> exact_cluster_counts(const ClassSpec& cls);

/// Standard normal quantile.
double normal_quantile(double u);

MixtureSpec load_mixture_spec(const std::filesystem::path& path);
MixtureSpec parse_mixture_spec(const std::string& json_text);

}  // namespace coreselect
