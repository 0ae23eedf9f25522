#include "coreselect/sampler.hpp"

#include "coreselect/apportion.hpp"
#include "coreselect/embedding_io.hpp"
#include "coreselect/error.hpp"
#include "coreselect/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <istream>
#include <set>

namespace coreselect {

SamplingMethod parse_method(const std::string& name) {
    if (name == "random" || name == "rs") return SamplingMethod::random;
    if (name == "intelligent" || name == "is") return SamplingMethod::intelligent;
    fail(Errc::config, "unknown sampling method '" + name + "' (expected random or intelligent)");
}

const char* method_name(SamplingMethod method) noexcept {
    return method == SamplingMethod::random ? "random" : "intelligent";
}

ClusterAllocation parse_cluster_allocation(const std::string& name) {
    if (name == "equal") return ClusterAllocation::equal;
    if (name == "proportional_floor") return ClusterAllocation::proportional_floor;
    fail(Errc::config, "unknown cluster allocation '" + name + "' (expected equal or proportional_floor)");
}

const char* allocation_name(ClusterAllocation allocation) noexcept {
    return allocation == ClusterAllocation::equal ? "equal" : "proportional_floor";
}

ClassAllocation parse_class_allocation(const std::string& name) {
    if (name == "proportional") return ClassAllocation::proportional;
    if (name == "equal") return ClassAllocation::equal;
    fail(Errc::config, "unknown class allocation '" + name + "' (expected proportional or equal)");
}

const char* allocation_name(ClassAllocation allocation) noexcept {
    return allocation == ClassAllocation::proportional ? "proportional" : "equal";
}

CoresetSize CoresetSize::fraction(double f) {
    require(f > 0.0 && f <= 1.0, Errc::parameter, "coreset fraction must lie in (0, 1]");
    return CoresetSize(f);
}

CoresetSize CoresetSize::absolute(std::size_t n) {
    require(n >= 1, Errc::parameter, "coreset size must be >= 1");
    return CoresetSize(n);
}

std::size_t CoresetSize::resolve(std::size_t total) const {
    std::size_t n = is_fraction() ? std::max<std::size_t>(1, round_half_up(fraction_value() * total))
                                  : absolute_value();
    require(n >= 1 && n <= total, Errc::size,
            "coreset size " + std::to_string(n) + " exceeds source size " + std::to_string(total));
    return n;
}

std::unordered_map<SampleId, ClusterKey> cluster_lookup(std::span<const ClassClustering> clusterings) {
    std::unordered_map<SampleId, ClusterKey> lookup;
    for (const auto& cc : clusterings)
        for (std::size_t i = 0; i < cc.ids.size(); ++i)
            lookup.emplace(cc.ids[i], ClusterKey{cc.class_index, cc.assignment[i]});
    return lookup;
}

namespace {

// Partial Fisher-Yates: first `take` entries of a uniform random permutation.
void draw_prefix(std::vector<std::size_t>& pool, std::size_t take, Xoshiro256& rng) {
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
}

CoresetSelection finish(const EmbeddingMatrix& m, std::vector<std::size_t> rows, CoresetSpec spec,
                        std::span<const ClassClustering> clusterings) {
    std::sort(rows.begin(), rows.end());
    CoresetSelection sel;
    sel.spec = spec;
    sel.ids.reserve(rows.size());
    const auto lookup = cluster_lookup(clusterings);
    for (std::size_t r : rows) {
        const SampleId id = m.ids()[r];
        sel.ids.push_back(id);
        ++sel.per_class[m.labels()[r]];
        if (!clusterings.empty()) {
            auto it = lookup.find(id);
            require(it != lookup.end(), Errc::consistency,
                    "sample " + std::to_string(to_u64(id)) + " is not covered by the clusterings");
            ++sel.per_cluster[it->second];
        }
    }
    return sel;
}

}  // namespace

CoresetSelection random_sample(const EmbeddingMatrix& m, std::size_t n, std::uint64_t seed,
                               std::span<const ClassClustering> clusterings) {
    require(n >= 1 && n <= m.size(), Errc::size,
            "random sample of " + std::to_string(n) + " from " + std::to_string(m.size()) + " samples");
    std::vector<std::size_t> pool(m.size());
    std::iota(pool.begin(), pool.end(), 0);
    Xoshiro256 rng(seed);
    draw_prefix(pool, n, rng);

    CoresetSpec spec;
    spec.size = CoresetSize::absolute(n);
    spec.method = SamplingMethod::random;
    spec.seed = seed;
    return finish(m, std::move(pool), spec, clusterings);
}

std::vector<std::size_t> allocate_classes(std::span<const std::size_t> class_sizes, std::size_t n,
                                          ClassAllocation mode) {
    if (mode == ClassAllocation::equal) return water_fill(class_sizes, n);
    std::vector<double> weights(class_sizes.begin(), class_sizes.end());
    auto counts = largest_remainder(weights, n);
    std::size_t shortfall = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > class_sizes[c]) {
            shortfall += counts[c] - class_sizes[c];
            counts[c] = class_sizes[c];
        }
    }
    return shortfall == 0 ? counts : water_fill(class_sizes, shortfall, std::move(counts));
}

std::vector<std::size_t> allocate_clusters(std::span<const std::size_t> cluster_sizes, std::size_t quota,
                                           ClusterAllocation mode) {
    const std::size_t k = cluster_sizes.size();
    if (mode == ClusterAllocation::equal) return water_fill(cluster_sizes, quota);

    std::vector<std::size_t> counts(k, 0);
    if (quota < k) {
        // Not enough for one each: the largest clusters win.
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return cluster_sizes[a] > cluster_sizes[b]; });
        for (std::size_t i = 0; i < quota; ++i) counts[order[i]] = 1;
        return counts;
    }
    std::vector<double> weights(cluster_sizes.begin(), cluster_sizes.end());
    const auto extra = largest_remainder(weights, quota - k);
    std::size_t shortfall = 0;
    for (std::size_t c = 0; c < k; ++c) {
        counts[c] = 1 + extra[c];
        if (counts[c] > cluster_sizes[c]) {
            shortfall += counts[c] - cluster_sizes[c];
            counts[c] = cluster_sizes[c];
        }
    }
    return shortfall == 0 ? counts : water_fill(cluster_sizes, shortfall, std::move(counts));
}

CoresetSelection intelligent_sample(const EmbeddingMatrix& m, std::span<const ClassClustering> clusterings,
                                    std::size_t n, ClusterAllocation allocation, std::uint64_t seed,
                                    ClassAllocation class_allocation) {
    require(n >= 1 && n <= m.size(), Errc::size,
            "coreset of " + std::to_string(n) + " from " + std::to_string(m.size()) + " samples");

    const auto sizes = m.class_sizes();
    const auto rows_by_id = row_index(m);
    std::vector<const ClassClustering*> by_class(sizes.size(), nullptr);
    for (const auto& cc : clusterings) {
        require(cc.class_index < sizes.size(), Errc::consistency, "clustering for unknown class");
        require(by_class[cc.class_index] == nullptr, Errc::consistency,
                "two clusterings for class '" + m.class_names()[cc.class_index] + "'");
        by_class[cc.class_index] = &cc;
    }
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] == 0) continue;
        const auto* cc = by_class[c];
        const std::string name = m.class_names()[c];
        require(cc != nullptr && cc->k >= 1 && !cc->ids.empty(), Errc::consistency,
                "no clustering for class '" + name + "'");
        require(cc->ids.size() == sizes[c], Errc::consistency,
                "clustering of class '" + name + "' covers " + std::to_string(cc->ids.size()) + " of " +
                    std::to_string(sizes[c]) + " samples");
        for (std::size_t i = 0; i < cc->ids.size(); ++i) {
            auto it = rows_by_id.find(cc->ids[i]);
            require(it != rows_by_id.end() && m.labels()[it->second] == c, Errc::consistency,
                    "clustering of class '" + name + "' references a sample outside the class");
            require(cc->assignment[i] < cc->k, Errc::consistency, "cluster index out of range");
        }
    }

    const auto class_quota = allocate_classes(sizes, n, class_allocation);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (class_quota[c] == 0) continue;
        const auto& cc = *by_class[c];
        std::vector<std::vector<std::size_t>> members(cc.k);
        for (std::size_t i = 0; i < cc.ids.size(); ++i) members[cc.assignment[i]].push_back(rows_by_id.at(cc.ids[i]));
        std::vector<std::size_t> cluster_sizes;
        for (auto& rows : members) {
            require(!rows.empty(), Errc::consistency, "empty cluster in class '" + m.class_names()[c] + "'");
            std::sort(rows.begin(), rows.end());
            cluster_sizes.push_back(rows.size());
        }
        const auto quota = allocate_clusters(cluster_sizes, class_quota[c], allocation);
        for (std::size_t k = 0; k < cc.k; ++k) {
            Xoshiro256 rng(derive_seed(seed, c, k));
            draw_prefix(members[k], quota[k], rng);
            chosen.insert(chosen.end(), members[k].begin(), members[k].end());
        }
    }

    CoresetSpec spec;
    spec.size = CoresetSize::absolute(n);
    spec.method = SamplingMethod::intelligent;
    spec.seed = seed;
    spec.allocation = allocation;
    spec.class_allocation = class_allocation;
    return finish(m, std::move(chosen), spec, clusterings);
}

CoresetSelection select_coreset(const EmbeddingMatrix& m, std::span<const ClassClustering> clusterings,
                                const CoresetSpec& spec) {
    const std::size_t n = spec.size.resolve(m.size());
    auto sel = spec.method == SamplingMethod::random
                   ? random_sample(m, n, spec.seed, clusterings)
                   : intelligent_sample(m, clusterings, n, spec.allocation, spec.seed, spec.class_allocation);
    sel.spec = spec;
    return sel;
}

void MultinomialModel::validate() const {
    require(!probabilities.empty(), Errc::parameter, "multinomial model has no categories");
    double sum = 0.0;
    for (double p : probabilities) {
        require(p >= 0.0 && std::isfinite(p), Errc::parameter, "multinomial probabilities must be >= 0");
        sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-12, Errc::parameter, "multinomial probabilities must sum to 1");
}

double multinomial_pmf(const MultinomialModel& model, std::span<const std::size_t> counts) {
    model.validate();
    require(counts.size() == model.probabilities.size(), Errc::parameter,
            "count vector length differs from category count");
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    require(total == model.draws, Errc::parameter,
            "counts sum to " + std::to_string(total) + " but draws = " + std::to_string(model.draws));

    double log_p = std::lgamma(static_cast<double>(total) + 1.0);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) continue;
        const double p = model.probabilities[k];
        if (p == 0.0) return 0.0;
        const double nk = static_cast<double>(counts[k]);
        log_p += nk * std::log(p) - std::lgamma(nk + 1.0);
    }
    return std::exp(log_p);
}

std::vector<double> rs_expected_counts(std::span<const std::size_t> cluster_sizes, std::size_t n) {
    const double total = static_cast<double>(std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0}));
    std::vector<double> out;
    out.reserve(cluster_sizes.size());
    for (std::size_t s : cluster_sizes) out.push_back(static_cast<double>(n) * static_cast<double>(s) / total);
    return out;
}

std::vector<RepresentationRow> representation_report(const CoresetSelection& selection,
                                                     std::span<const ClassClustering> clusterings) {
    const auto lookup = cluster_lookup(clusterings);
    std::map<ClusterKey, std::size_t> selected;
    for (SampleId id : selection.ids) {
        auto it = lookup.find(id);
        require(it != lookup.end(), Errc::consistency,
                "selected sample " + std::to_string(to_u64(id)) + " missing from clusterings");
        ++selected[it->second];
    }

    std::size_t total = 0;
    for (const auto& cc : clusterings) total += cc.ids.size();
    const double n_s = static_cast<double>(selection.ids.size());

    std::vector<RepresentationRow> rows;
    std::vector<const ClassClustering*> ordered;
    for (const auto& cc : clusterings) ordered.push_back(&cc);
    std::sort(ordered.begin(), ordered.end(),
              [](auto* a, auto* b) { return a->class_index < b->class_index; });
    for (const auto* cc : ordered) {
        const auto freq = cc->frequencies();
        for (std::uint32_t k = 0; k < freq.size(); ++k) {
            RepresentationRow row;
            row.class_index = cc->class_index;
            row.cluster = k;
            row.source_size = freq[k];
            auto it = selected.find({cc->class_index, k});
            row.selected = it == selected.end() ? 0 : it->second;
            row.rate = static_cast<double>(row.selected) / static_cast<double>(row.source_size);
            row.rs_expected = n_s * static_cast<double>(row.source_size) / static_cast<double>(total);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_representation_csv(std::ostream& out, std::span<const RepresentationRow> rows,
                              const std::vector<std::string>& class_names) {
    out << "class,cluster,source_size,selected,rate,rs_expected\n";
    for (const auto& r : rows) {
        out << class_names.at(r.class_index) << ',' << r.cluster << ',' << r.source_size << ',' << r.selected << ','
            << format_double(r.rate) << ',' << format_double(r.rs_expected) << '\n';
    }
}

void write_selection_csv(std::ostream& out, const CoresetSelection& selection, const EmbeddingMatrix& source,
                         std::span<const ClassClustering> clusterings) {
    const auto rows = row_index(source);
    const auto lookup = cluster_lookup(clusterings);
    out << "id,class,cluster\n";
    for (SampleId id : selection.ids) {
        auto r = rows.find(id);
        require(r != rows.end(), Errc::consistency, "selected id missing from source");
        out << to_u64(id) << ',' << source.class_names()[source.labels()[r->second]] << ',';
        if (auto it = lookup.find(id); it != lookup.end()) out << it->second.second;
        out << '\n';
    }
}

std::vector<SelectionEntry> read_selection_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), Errc::format, "line 1: missing selection header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "id,class,cluster", Errc::format, "line 1: expected header id,class,cluster");

    std::vector<SelectionEntry> entries;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        require(c2 != std::string::npos && line.find(',', c2 + 1) == std::string::npos, Errc::format,
                "line " + std::to_string(line_no) + ": expected 3 fields");
        SelectionEntry e;
        std::uint64_t id = 0;
        auto [p, ec] = std::from_chars(line.data(), line.data() + c1, id);
        require(ec == std::errc{} && p == line.data() + c1, Errc::format,
                "line " + std::to_string(line_no) + ": invalid id");
        e.id = static_cast<SampleId>(id);
        e.class_name = line.substr(c1 + 1, c2 - c1 - 1);
        if (c2 + 1 < line.size()) {
            std::uint32_t cluster = 0;
            auto [q, ec2] = std::from_chars(line.data() + c2 + 1, line.data() + line.size(), cluster);
            require(ec2 == std::errc{} && q == line.data() + line.size(), Errc::format,
                    "line " + std::to_string(line_no) + ": invalid cluster");
            e.cluster = cluster;
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string selection_sidecar_json(const CoresetSelection& selection, const std::vector<std::string>& class_names) {
    using nlohmann::ordered_json;
    ordered_json spec;
    spec["method"] = method_name(selection.spec.method);
    if (selection.spec.size.is_fraction())
        spec["fraction"] = selection.spec.size.fraction_value();
    else
        spec["size"] = selection.spec.size.absolute_value();
    spec["seed"] = selection.spec.seed;
    spec["allocation"] = allocation_name(selection.spec.allocation);
    spec["class_allocation"] = allocation_name(selection.spec.class_allocation);

    ordered_json per_class = ordered_json::array();
    for (const auto& [c, count] : selection.per_class)
        per_class.push_back({{"class", class_names.at(c)}, {"count", count}});
    ordered_json per_cluster = ordered_json::array();
    for (const auto& [key, count] : selection.per_cluster)
        per_cluster.push_back({{"class", class_names.at(key.first)}, {"cluster", key.second}, {"count", count}});

    ordered_json j;
    j["spec"] = spec;
    j["size"] = selection.ids.size();
    j["per_class"] = per_class;
    j["per_cluster"] = per_cluster;
    return j.dump(2) + "\n";
}

}  // namespace coreselect
