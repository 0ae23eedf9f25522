#include "coreselect/eval.hpp"

#include "coreselect/embedding_io.hpp"
#include "coreselect/error.hpp"
#include "coreselect/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

namespace coreselect {

std::vector<ClassIndex> knn_classify(const EmbeddingMatrix& train, const EmbeddingMatrix& test, std::size_t k) {
    require(train.dim() == test.dim(), Errc::shape,
            "train dimension " + std::to_string(train.dim()) + " vs test dimension " + std::to_string(test.dim()));
    require(k >= 1 && k <= train.size(), Errc::parameter,
            "k = " + std::to_string(k) + " outside [1, " + std::to_string(train.size()) + "]");

    const std::size_t classes = std::max(train.class_count(), test.class_count());
    std::vector<ClassIndex> predictions(test.size());
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    std::vector<std::size_t> votes(classes);
    for (std::size_t q = 0; q < test.size(); ++q) {
        for (std::size_t i = 0; i < train.size(); ++i) dist[i] = {squared_distance(test.row(q), train.row(i)), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t i = 0; i < k; ++i) ++votes[train.labels()[dist[i].second]];
        // max_element returns the first maximum: the smallest class index on ties.
        predictions[q] = static_cast<ClassIndex>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    return predictions;
}

std::vector<ClassIndex> nearest_medoid_classify(std::span<const Prototype> prototypes, const EmbeddingMatrix& test) {
    require(!prototypes.empty(), Errc::parameter, "nearest-medoid classifier needs at least one medoid");
    for (const auto& p : prototypes)
        require(p.vector.size() == test.dim(), Errc::shape, "medoid dimension differs from test dimension");

    std::vector<ClassIndex> predictions(test.size());
    for (std::size_t q = 0; q < test.size(); ++q) {
        double best = std::numeric_limits<double>::infinity();
        ClassIndex best_class = 0;
        for (const auto& p : prototypes) {
            const double d = squared_distance(test.row(q), p.vector);
            if (d < best || (d == best && p.class_index < best_class)) {
                best = d;
                best_class = p.class_index;
            }
        }
        predictions[q] = best_class;
    }
    return predictions;
}

void ConfusionMatrix::add(ClassIndex truth, ClassIndex predicted, std::size_t count) {
    require(truth < classes_ && predicted < classes_, Errc::parameter, "class index outside confusion matrix");
    counts_[truth * classes_ + predicted] += count;
}

std::size_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const noexcept {
    std::size_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += (*this)(truth, p);
    return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const noexcept {
    std::size_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += (*this)(t, predicted);
    return s;
}

ConfusionMatrix confusion(std::span<const ClassIndex> truth, std::span<const ClassIndex> predicted,
                          std::size_t classes) {
    require(truth.size() == predicted.size(), Errc::shape, "truth and prediction lengths differ");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
    return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics compute_metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    require(cm.classes() >= 1 && total >= 1, Errc::parameter, "confusion matrix is empty");

    Metrics m;
    std::size_t trace = 0;
    for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm(c, c);
    m.accuracy = ratio(trace, total);

    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const std::size_t tp = cm(c, c);
        const std::size_t fp = cm.column_sum(c) - tp;
        const std::size_t fn = cm.row_sum(c) - tp;
        ClassMetrics cls;
        cls.precision = ratio(tp, tp + fp);
        cls.recall = ratio(tp, tp + fn);
        cls.f1 = ratio(2 * tp, 2 * tp + fp + fn);
        m.precision_macro += cls.precision;
        m.recall_macro += cls.recall;
        m.f1_macro += cls.f1;
        m.per_class.push_back(cls);
    }
    const double c = static_cast<double>(cm.classes());
    m.precision_macro /= c;
    m.recall_macro /= c;
    m.f1_macro /= c;
    return m;
}

std::string describe(const ClassifierConfig& config) {
    if (config.kind == ClassifierKind::knn) return "knn(k=" + std::to_string(config.k) + ")";
    return "nearest_medoid";
}

EvalReport evaluate_selection(const EmbeddingMatrix& train, const EmbeddingMatrix& test,
                              const CoresetSelection& selection, std::span<const ClassClustering> clusterings,
                              const ClassifierConfig& classifier) {
    require(!selection.ids.empty(), Errc::parameter, "empty coreset");
    const auto rows_by_id = row_index(train);
    std::vector<std::size_t> rows;
    rows.reserve(selection.ids.size());
    for (SampleId id : selection.ids) {
        auto it = rows_by_id.find(id);
        require(it != rows_by_id.end(), Errc::consistency,
                "coreset id " + std::to_string(to_u64(id)) + " not in the training set");
        rows.push_back(it->second);
    }
    const EmbeddingMatrix coreset = train.select_rows(rows);

    std::vector<ClassIndex> predicted;
    ClassifierConfig effective = classifier;
    if (classifier.kind == ClassifierKind::knn) {
        std::size_t k = std::min(classifier.k, coreset.size());
        if (k % 2 == 0 && k > 1) --k;
        effective.k = k;
        predicted = knn_classify(coreset, test, k);
    } else {
        const auto lookup = cluster_lookup(clusterings);
        std::map<ClusterKey, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < coreset.size(); ++i) {
            auto it = lookup.find(coreset.ids()[i]);
            const ClusterKey key = it != lookup.end() ? it->second : ClusterKey{coreset.labels()[i], 0};
            groups[key].push_back(i);
        }
        std::vector<Prototype> prototypes;
        for (const auto& [key, members] : groups) {
            std::size_t best = members.front();
            double best_sum = std::numeric_limits<double>::infinity();
            for (std::size_t a : members) {
                double sum = 0.0;
                for (std::size_t b : members) sum += euclidean_distance(coreset.row(a), coreset.row(b));
                if (sum < best_sum) {
                    best_sum = sum;
                    best = a;
                }
            }
            const auto r = coreset.row(best);
            prototypes.push_back({key.first, std::vector<double>(r.begin(), r.end())});
        }
        predicted = nearest_medoid_classify(prototypes, test);
    }

    const std::size_t classes = std::max(train.class_count(), test.class_count());
    EvalReport report{confusion(test.labels(), predicted, classes), {}, effective, selection.spec};
    report.metrics = compute_metrics(report.confusion);
    return report;
}

std::vector<SummaryRow> summarize(std::span<const ComparisonRow> rows) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<const ComparisonRow*>> groups;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
            return s.method == row.method && s.fraction == row.fraction;
        });
        if (it == out.end()) {
            out.push_back({row.method, row.fraction, 0, {}, {}});
            groups.emplace_back();
            it = out.end() - 1;
        }
        groups[static_cast<std::size_t>(it - out.begin())].push_back(&row);
    }

    using Field = double Metrics::*;
    constexpr Field fields[] = {&Metrics::accuracy, &Metrics::precision_macro, &Metrics::recall_macro,
                                &Metrics::f1_macro};
    for (std::size_t g = 0; g < out.size(); ++g) {
        const auto& members = groups[g];
        const double n = static_cast<double>(members.size());
        out[g].runs = members.size();
        for (Field f : fields) {
            double mean = 0.0;
            for (const auto* r : members) mean += r->report.metrics.*f;
            mean /= n;
            double var = 0.0;
            for (const auto* r : members) var += (r->report.metrics.*f - mean) * (r->report.metrics.*f - mean);
            out[g].mean.*f = mean;
            out[g].stddev.*f = members.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        }
    }
    return out;
}

ComparisonTable compare(const EmbeddingMatrix& train, const EmbeddingMatrix& test,
                        std::span<const ClassClustering> clusterings, const CompareConfig& config) {
    require(!config.fractions.empty() && !config.seeds.empty() && !config.methods.empty(), Errc::config,
            "comparison needs at least one fraction, seed and method");

    ComparisonTable table;
    for (double f : config.fractions)
        for (auto seed : config.seeds)
            for (auto method : config.methods) table.rows.push_back({method, f, seed, {}});

    parallel_for(table.rows.size(), config.workers, [&](std::size_t i) {
        auto& row = table.rows[i];
        CoresetSpec spec;
        spec.size = CoresetSize::fraction(row.fraction);
        spec.method = row.method;
        spec.seed = row.seed;
        spec.allocation = config.allocation;
        spec.class_allocation = config.class_allocation;
        const auto selection = select_coreset(train, clusterings, spec);
        row.report = evaluate_selection(train, test, selection, clusterings, config.classifier);
    });
    table.summary = summarize(table.rows);
    return table;
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
    out << "method,fraction,seed,accuracy,precision_macro,recall_macro,f1_macro\n";
    for (const auto& r : rows) {
        const auto& m = r.report.metrics;
        out << method_name(r.method) << ',' << format_double(r.fraction) << ',' << r.seed << ','
            << format_double(m.accuracy) << ',' << format_double(m.precision_macro) << ','
            << format_double(m.recall_macro) << ',' << format_double(m.f1_macro) << '\n';
    }
}

void write_curve_csv(std::ostream& out, std::span<const SummaryRow> summary) {
    out << "method,fraction,metric,mean,stddev,runs\n";
    const std::pair<const char*, double Metrics::*> fields[] = {{"accuracy", &Metrics::accuracy},
                                                                {"precision_macro", &Metrics::precision_macro},
                                                                {"recall_macro", &Metrics::recall_macro},
                                                                {"f1_macro", &Metrics::f1_macro}};
    for (const auto& s : summary) {
        for (const auto& [name, f] : fields) {
            out << method_name(s.method) << ',' << format_double(s.fraction) << ',' << name << ','
                << format_double(s.mean.*f) << ',' << format_double(s.stddev.*f) << ',' << s.runs << '\n';
        }
    }
}

std::string comparison_json(const ComparisonTable& table, const std::vector<std::string>& class_names) {
    using nlohmann::ordered_json;
    auto metrics_json = [](const Metrics& m) {
        return ordered_json{{"accuracy", m.accuracy},
                            {"precision_macro", m.precision_macro},
                            {"recall_macro", m.recall_macro},
                            {"f1_macro", m.f1_macro}};
    };

    ordered_json runs = ordered_json::array();
    for (const auto& r : table.rows) {
        const auto& rep = r.report;
        ordered_json cm = ordered_json::array();
        for (std::size_t t = 0; t < rep.confusion.classes(); ++t) {
            ordered_json row = ordered_json::array();
            for (std::size_t p = 0; p < rep.confusion.classes(); ++p) row.push_back(rep.confusion(t, p));
            cm.push_back(row);
        }
        ordered_json per_class = ordered_json::array();
        for (std::size_t c = 0; c < rep.metrics.per_class.size(); ++c) {
            const auto& pc = rep.metrics.per_class[c];
            per_class.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                                 {"precision", pc.precision},
                                 {"recall", pc.recall},
                                 {"f1", pc.f1}});
        }
        auto entry = metrics_json(rep.metrics);
        ordered_json run{{"method", method_name(r.method)}, {"fraction", r.fraction}, {"seed", r.seed}};
        run["classifier"] = describe(rep.classifier);
        run["metrics"] = entry;
        run["per_class"] = per_class;
        run["confusion"] = cm;
        runs.push_back(run);
    }

    ordered_json summary = ordered_json::array();
    for (const auto& s : table.summary) {
        summary.push_back({{"method", method_name(s.method)},
                           {"fraction", s.fraction},
                           {"runs", s.runs},
                           {"mean", metrics_json(s.mean)},
                           {"stddev", metrics_json(s.stddev)}});
    }
    ordered_json j{{"class_names", class_names}, {"runs", runs}, {"summary", summary}};
    return j.dump(2) + "\n";
}

}  // namespace coreselect
