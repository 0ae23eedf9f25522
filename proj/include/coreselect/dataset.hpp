#pragma once

#include "coreselect/matrix.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace coreselect {

/// Identifier of one sample; unique within a dataset and stable across pipeline stages.
enum class SampleId : std::uint64_t {};

constexpr std::uint64_t to_u64(SampleId id) noexcept { return static_cast<std::uint64_t>(id); }

using ClassIndex = std::uint32_t;

/// True when `name` matches [A-Za-z0-9_-]+.
bool is_valid_class_name(const std::string& name);

/// Per-sample string labels plus provenance, as found at the I/O boundary.
struct LabeledDataset {
    std::vector<std::pair<SampleId, std::string>> samples;
    std::vector<std::string> class_names;
    std::string source;

    /// Throws Errc::data when a label is unknown, a class is empty or names repeat.
    void validate() const;
};

/// N x d embedding matrix: row i holds the feature vector of sample ids[i], whose class
/// is class_names[labels[i]]. Validated on construction and immutable afterwards.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(std::vector<SampleId> ids, std::vector<ClassIndex> labels, Matrix data,
                    std::vector<std::string> class_names);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return data_.cols(); }
    std::size_t class_count() const noexcept { return class_names_.size(); }

    const std::vector<SampleId>& ids() const noexcept { return ids_; }
    const std::vector<ClassIndex>& labels() const noexcept { return labels_; }
    const Matrix& data() const noexcept { return data_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }

    std::span<const double> row(std::size_t i) const noexcept { return data_.row(i); }

    /// Sub-matrix made of the given rows, in the given order.
    EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const;

    /// Same ids/labels/classes with new row data (used by projections).
    EmbeddingMatrix with_data(Matrix data) const;

    /// Number of rows per class index (length class_count()).
    std::vector<std::size_t> class_sizes() const;

    LabeledDataset to_labeled(std::string source) const;

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    std::vector<SampleId> ids_;
    std::vector<ClassIndex> labels_;
    Matrix data_;
    std::vector<std::string> class_names_;
};

std::unordered_map<SampleId, std::size_t> row_index(const EmbeddingMatrix& m);

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    EmbeddingMatrix train;
    EmbeddingMatrix test;
};

/// Seeded train/test split. Both sides keep the source row order. Stratified splits
/// round each class's train count half up, then nudge the largest classes by one to
/// hit round_half_up(fraction * N) overall; every class keeps >= 1 sample per side.
Split split(const EmbeddingMatrix& m, const SplitSpec& spec);

/// Rows grouped by class index, each group in original relative order.
std::map<ClassIndex, EmbeddingMatrix> partition_by_class(const EmbeddingMatrix& m);

}  // namespace coreselect
