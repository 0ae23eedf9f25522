#pragma once

#include "coreselect/embedding_io.hpp"
#include "coreselect/eval.hpp"
#include "coreselect/kmedoids.hpp"
#include "coreselect/pca.hpp"
#include "coreselect/synthetic.hpp"
#include "coreselect/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace coreselect {

/// 64-bit FNV-1a, hex encoded. Used for stage digests, not for security.
std::string digest_bytes(std::string_view bytes);
std::string digest_file(const std::filesystem::path& path);

struct PipelineConfig {
    std::filesystem::path manifest;
    std::filesystem::path out_dir = "out";
    double pca_threshold = kDefaultVarianceThreshold;
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    Metric metric = Metric::euclidean;
    std::size_t max_iter = 100;
    std::uint64_t cluster_seed = 0;
    double split_fraction = 0.7;
    std::uint64_t split_seed = 0;
    std::vector<double> fractions{0.1, 0.2, 0.5, 1.0};
    std::vector<SamplingMethod> methods{SamplingMethod::random, SamplingMethod::intelligent};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    ClusterAllocation allocation = ClusterAllocation::equal;
    ClassAllocation class_allocation = ClassAllocation::proportional;
    ClassifierConfig classifier;
    std::size_t workers = 1;  // not part of any digest

    /// Throws Errc::config on out-of-range values or an unreadable manifest.
    void validate() const;
};

/// Relative paths in the file resolve against the config file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::ordered_json to_json(const PipelineConfig& config);

/// Persisted clusterings (clusterings.json).
nlohmann::ordered_json clusterings_json(std::span<const ClassClustering> clusterings,
                                        const std::vector<std::string>& class_names);
std::vector<ClassClustering> parse_clusterings_json(const nlohmann::json& j,
                                                    const std::vector<std::string>& class_names);

// class,cluster,size,medoid_id,mean_silhouette
void write_cluster_report_csv(std::ostream& out, std::span<const ClassClustering> clusterings,
                              const std::vector<std::string>& class_names);

inline constexpr int kStateVersion = 1;

struct StageResult {
    bool skipped = false;  // inputs and outputs matched the recorded digests
    std::vector<std::string> lines;  // human-readable summary
};

/// Staged pipeline over an output directory holding `state.json` plus the binary and
/// CSV artifacts of each stage. A stage whose input digest and output files match the
/// recorded state is skipped.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    StageResult reduce();
    StageResult cluster();
    StageResult sample();
    StageResult evaluate();
    std::vector<StageResult> run_all();

    const PipelineConfig& config() const noexcept { return config_; }
    std::filesystem::path state_path() const { return config_.out_dir / "state.json"; }

private:
    bool up_to_date(const std::string& stage, const std::string& input_digest) const;
    void record(const std::string& stage, const std::string& input_digest, const std::vector<std::string>& outputs,
                nlohmann::ordered_json extra = {});
    const nlohmann::ordered_json& stage(const std::string& name) const;
    void load_state();
    void save_state() const;

    EmbeddingMatrix load_split(const char* which) const;
    std::vector<ClassClustering> load_clusterings(const std::vector<std::string>& class_names) const;

    PipelineConfig config_;
    nlohmann::ordered_json state_;
};

/// Reads `state.json` under `out_dir`; throws Errc::state when corrupted or of another version.
nlohmann::ordered_json read_state(const std::filesystem::path& out_dir);

/// Human-readable summary of the state under `out_dir`.
std::string inspect_state(const std::filesystem::path& out_dir);

/// Writes embeddings, manifest.json and ground_truth.csv for a mixture spec into `out_dir`.
/// Returns the manifest path.
std::filesystem::path generate_dataset(const MixtureSpec& spec, const std::filesystem::path& out_dir,
                                       EmbeddingFormat format, const std::string& name = "synthetic");

}  // namespace coreselect
