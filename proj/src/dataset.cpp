#include "coreselect/dataset.hpp"

#include "coreselect/apportion.hpp"
#include "coreselect/error.hpp"
#include "coreselect/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace coreselect {

bool is_valid_class_name(const std::string& name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '-';
    });
}

void LabeledDataset::validate() const {
    require(!class_names.empty(), Errc::data, "dataset has no classes");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& name : class_names) {
        require(counts.emplace(name, 0).second, Errc::data, "duplicate class name '" + name + "'");
    }
    std::unordered_set<SampleId> seen;
    for (const auto& [id, label] : samples) {
        auto it = counts.find(label);
        require(it != counts.end(), Errc::data, "sample " + std::to_string(to_u64(id)) +
                                                    " has unknown label '" + label + "'");
        ++it->second;
        require(seen.insert(id).second, Errc::duplicate_id,
                "duplicate sample id " + std::to_string(to_u64(id)));
    }
    for (const auto& name : class_names)
        require(counts[name] > 0, Errc::data, "class '" + name + "' has no samples");
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<SampleId> ids, std::vector<ClassIndex> labels, Matrix data,
                                 std::vector<std::string> class_names)
    : ids_(std::move(ids)), labels_(std::move(labels)), data_(std::move(data)),
      class_names_(std::move(class_names)) {
    require(!ids_.empty(), Errc::size, "embedding matrix needs at least one row");
    require(data_.cols() >= 1, Errc::shape, "embedding dimension must be >= 1");
    require(labels_.size() == ids_.size() && data_.rows() == ids_.size(), Errc::shape,
            "ids, labels and rows differ in length");
    require(!class_names_.empty(), Errc::data, "embedding matrix has no class names");

    std::unordered_set<std::string> names;
    for (const auto& name : class_names_) {
        require(is_valid_class_name(name), Errc::data, "invalid class name '" + name + "'");
        require(names.insert(name).second, Errc::data, "duplicate class name '" + name + "'");
    }
    std::unordered_set<SampleId> seen;
    seen.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        require(seen.insert(ids_[i]).second, Errc::duplicate_id,
                "duplicate sample id " + std::to_string(to_u64(ids_[i])));
        require(labels_[i] < class_names_.size(), Errc::data,
                "row " + std::to_string(i) + " has label index out of range");
        const auto r = data_.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            require(std::isfinite(r[j]), Errc::data,
                    "non-finite value at row " + std::to_string(i) + ", column f" + std::to_string(j));
        }
    }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<SampleId> ids;
    std::vector<ClassIndex> labels;
    std::vector<double> values;
    ids.reserve(rows.size());
    labels.reserve(rows.size());
    values.reserve(rows.size() * dim());
    for (std::size_t r : rows) {
        require(r < size(), Errc::parameter, "row index out of range");
        ids.push_back(ids_[r]);
        labels.push_back(labels_[r]);
        const auto src = data_.row(r);
        values.insert(values.end(), src.begin(), src.end());
    }
    return EmbeddingMatrix(std::move(ids), std::move(labels), Matrix(rows.size(), dim(), std::move(values)),
                           class_names_);
}

EmbeddingMatrix EmbeddingMatrix::with_data(Matrix data) const {
    return EmbeddingMatrix(ids_, labels_, std::move(data), class_names_);
}

std::vector<std::size_t> EmbeddingMatrix::class_sizes() const {
    std::vector<std::size_t> sizes(class_names_.size(), 0);
    for (ClassIndex c : labels_) ++sizes[c];
    return sizes;
}

LabeledDataset EmbeddingMatrix::to_labeled(std::string source) const {
    LabeledDataset out;
    out.class_names = class_names_;
    out.source = std::move(source);
    out.samples.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.samples.emplace_back(ids_[i], class_names_[labels_[i]]);
    return out;
}

std::unordered_map<SampleId, std::size_t> row_index(const EmbeddingMatrix& m) {
    std::unordered_map<SampleId, std::size_t> index;
    index.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) index.emplace(m.ids()[i], i);
    return index;
}

namespace {

// First `take` entries of a seeded partial Fisher-Yates shuffle of `rows`.
std::vector<std::size_t> draw_rows(std::vector<std::size_t> rows, std::size_t take, Xoshiro256& rng) {
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.index(rows.size() - i);
        std::swap(rows[i], rows[j]);
    }
    rows.resize(take);
    return rows;
}

Split assemble(const EmbeddingMatrix& m, std::vector<bool> in_train) {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (std::size_t i = 0; i < m.size(); ++i) (in_train[i] ? train_rows : test_rows).push_back(i);
    return {m.select_rows(train_rows), m.select_rows(test_rows)};
}

}  // namespace

Split split(const EmbeddingMatrix& m, const SplitSpec& spec) {
    require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, Errc::parameter,
            "train fraction must lie in (0, 1)");
    require(m.size() >= 2, Errc::split, "cannot split fewer than two samples");

    Xoshiro256 rng(spec.seed);
    std::vector<bool> in_train(m.size(), false);
    const std::size_t n = m.size();

    if (!spec.stratified) {
        const std::size_t take = std::clamp<std::size_t>(round_half_up(spec.train_fraction * n), 1, n - 1);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        for (std::size_t r : draw_rows(std::move(rows), take, rng)) in_train[r] = true;
        return assemble(m, std::move(in_train));
    }

    const auto sizes = m.class_sizes();
    std::vector<std::size_t> quota(sizes.size(), 0);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] == 0) continue;
        require(sizes[c] >= 2, Errc::split,
                "class '" + m.class_names()[c] + "' has a single sample; stratified split needs two");
        quota[c] = std::clamp<std::size_t>(round_half_up(spec.train_fraction * sizes[c]), 1, sizes[c] - 1);
        assigned += quota[c];
    }

    // Reconcile with the global target, largest classes first.
    const std::size_t target = round_half_up(spec.train_fraction * n);
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sizes[a] > sizes[b]; });
    bool moved = true;
    while (assigned != target && moved) {
        moved = false;
        for (std::size_t c : order) {
            if (assigned == target) break;
            if (sizes[c] == 0) continue;
            if (assigned < target && quota[c] + 1 <= sizes[c] - 1) {
                ++quota[c];
                ++assigned;
                moved = true;
            } else if (assigned > target && quota[c] > 1) {
                --quota[c];
                --assigned;
                moved = true;
            }
        }
    }

    std::vector<std::vector<std::size_t>> members(sizes.size());
    for (std::size_t i = 0; i < n; ++i) members[m.labels()[i]].push_back(i);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (members[c].empty()) continue;
        Xoshiro256 class_rng(derive_seed(spec.seed, c));
        for (std::size_t r : draw_rows(members[c], quota[c], class_rng)) in_train[r] = true;
    }
    return assemble(m, std::move(in_train));
}

std::map<ClassIndex, EmbeddingMatrix> partition_by_class(const EmbeddingMatrix& m) {
    std::map<ClassIndex, std::vector<std::size_t>> rows;
    for (std::size_t i = 0; i < m.size(); ++i) rows[m.labels()[i]].push_back(i);
    std::map<ClassIndex, EmbeddingMatrix> out;
    for (const auto& [c, r] : rows) out.emplace(c, m.select_rows(r));
    return out;
}

}  // namespace coreselect
