#pragma once

#include "coreselect/dataset.hpp"
#include "coreselect/kmedoids.hpp"
#include "coreselect/sampler.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace coreselect {

/// Majority vote among the k nearest training rows (euclidean; distance ties go to the
/// lower row). Vote ties go to the smallest class index.
std::vector<ClassIndex> knn_classify(const EmbeddingMatrix& train, const EmbeddingMatrix& test, std::size_t k);

struct Prototype {
    ClassIndex class_index = 0;
    std::vector<double> vector;
};

/// Class of the nearest prototype; ties go to the smallest class index.
std::vector<ClassIndex> nearest_medoid_classify(std::span<const Prototype> prototypes, const EmbeddingMatrix& test);

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

    void add(ClassIndex truth, ClassIndex predicted, std::size_t count = 1);

    std::size_t classes() const noexcept { return classes_; }
    std::size_t operator()(std::size_t truth, std::size_t predicted) const noexcept {
        return counts_[truth * classes_ + predicted];
    }
    std::size_t total() const noexcept;
    std::size_t row_sum(std::size_t truth) const noexcept;
    std::size_t column_sum(std::size_t predicted) const noexcept;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t classes_ = 0;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted,
                          std::size_t classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Accuracy plus one-vs-rest precision/recall/F1, macro-averaged with equal class
/// weight. A vanishing denominator yields 0.
struct Metrics {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    std::vector<ClassMetrics> per_class;
};

Metrics compute_metrics(const ConfusionMatrix& cm);

enum class ClassifierKind { knn, nearest_medoid };

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::knn;
    std::size_t k = 5;
};

std::string describe(const ClassifierConfig& config);

struct EvalReport {
    ConfusionMatrix confusion;
    Metrics metrics;
    ClassifierConfig classifier;  // as applied, with the effective k
    CoresetSpec coreset_spec;
};

/// Trains the classifier on the selected training rows and scores it on `test`.
/// k-NN uses min(k, |coreset|), rounded down to an odd number. The nearest-medoid
/// classifier uses the 1-medoid of the selected members of every (class, cluster).
EvalReport evaluate_selection(const EmbeddingMatrix& train, const EmbeddingMatrix& test,
                              const CoresetSelection& selection, std::span<const ClassClustering> clusterings,
                              const ClassifierConfig& classifier);

struct CompareConfig {
    std::vector<double> fractions{0.2};
    std::vector<std::uint64_t> seeds{0};
    std::vector<SamplingMethod> methods{SamplingMethod::random, SamplingMethod::intelligent};
    ClusterAllocation allocation = ClusterAllocation::equal;
    ClassAllocation class_allocation = ClassAllocation::proportional;
    ClassifierConfig classifier;
    std::size_t workers = 1;
};

struct ComparisonRow {
    SamplingMethod method = SamplingMethod::random;
    double fraction = 0.0;
    std::uint64_t seed = 0;
    EvalReport report;
};

struct SummaryRow {
    SamplingMethod method = SamplingMethod::random;
    double fraction = 0.0;
    std::size_t runs = 0;
    Metrics mean;    // per_class left empty
    Metrics stddev;  // sample standard deviation; 0 for a single run
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;  // fraction-major, then seed, then method
    std::vector<SummaryRow> summary;  // fraction-major, then method
};

/// For each fraction x seed x method: build the coreset from `train`, fit the
/// classifier on it, score on `test`.
ComparisonTable compare(const EmbeddingMatrix& train, const EmbeddingMatrix& test,
                        std::span<const ClassClustering> clusterings, const CompareConfig& config);

std::vector<SummaryRow> summarize(std::span<const ComparisonRow> rows);

// method,fraction,seed,accuracy,precision_macro,recall_macro,f1_macro
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);
// method,fraction,metric,mean,stddev,runs (long format for accuracy-vs-fraction curves)
void write_curve_csv(std::ostream& out, std::span<const SummaryRow> summary);
std::string comparison_json(const ComparisonTable& table, const std::vector<std::string>& class_names);

}  // namespace coreselect
