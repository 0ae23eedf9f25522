#include "coreselect/pipeline.hpp"

#include "coreselect/error.hpp"
#include "coreselect/log.hpp"
#include "coreselect/parallel.hpp"

#include <fstream>
#include <sstream>

namespace coreselect {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string digest_bytes(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& contents) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(out.good(), Errc::io, "cannot write '" + path.string() + "'");
    out << contents;
    out.flush();
    require(out.good(), Errc::io, "write failed for '" + path.string() + "'");
}

std::string combine(std::initializer_list<std::string_view> parts) {
    std::string joined;
    for (auto p : parts) {
        joined += p;
        joined += '\x1f';
    }
    return digest_bytes(joined);
}

std::string fraction_tag(double f) { return format_double(f); }

std::string selection_stem(SamplingMethod method, double fraction, std::uint64_t seed) {
    return std::string(method_name(method)) + "_f" + fraction_tag(fraction) + "_s" + std::to_string(seed);
}

}  // namespace

std::string digest_file(const fs::path& path) { return digest_bytes(read_file(path)); }

void PipelineConfig::validate() const {
    require(pca_threshold > 0.0 && pca_threshold <= 1.0, Errc::config, "pca_threshold must lie in (0, 1]");
    require(k_min >= 2 && k_min <= k_max, Errc::config, "k_range must satisfy 2 <= k_min <= k_max");
    require(max_iter >= 1, Errc::config, "max_iter must be >= 1");
    require(split_fraction > 0.0 && split_fraction < 1.0, Errc::config, "split_fraction must lie in (0, 1)");
    require(!fractions.empty(), Errc::config, "at least one coreset fraction is required");
    for (double f : fractions) require(f > 0.0 && f <= 1.0, Errc::config, "coreset fractions must lie in (0, 1]");
    require(!methods.empty(), Errc::config, "at least one sampling method is required");
    require(!seeds.empty(), Errc::config, "at least one seed is required");
    require(classifier.k >= 1, Errc::config, "classifier k must be >= 1");
    require(!manifest.empty(), Errc::config, "config has no manifest path");
    require(fs::exists(manifest), Errc::config, "manifest '" + manifest.string() + "' does not exist");
}

PipelineConfig parse_pipeline_config(const json& j, const fs::path& base_dir) {
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_relative() ? base_dir / path : path;
    };
    try {
        PipelineConfig c;
        if (j.contains("manifest")) c.manifest = resolve(j.at("manifest").get<std::string>());
        if (j.contains("out")) c.out_dir = resolve(j.at("out").get<std::string>());
        c.pca_threshold = j.value("pca_threshold", c.pca_threshold);
        if (j.contains("k_range")) {
            const auto range = j.at("k_range").get<std::vector<std::size_t>>();
            require(range.size() == 2, Errc::config, "k_range must be [k_min, k_max]");
            c.k_min = range[0];
            c.k_max = range[1];
        }
        if (j.contains("metric")) c.metric = parse_metric(j.at("metric").get<std::string>());
        c.max_iter = j.value("max_iter", c.max_iter);
        c.cluster_seed = j.value("cluster_seed", c.cluster_seed);
        c.split_fraction = j.value("split_fraction", c.split_fraction);
        c.split_seed = j.value("split_seed", c.split_seed);
        if (j.contains("fractions")) c.fractions = j.at("fractions").get<std::vector<double>>();
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("allocation")) c.allocation = parse_cluster_allocation(j.at("allocation").get<std::string>());
        if (j.contains("class_allocation"))
            c.class_allocation = parse_class_allocation(j.at("class_allocation").get<std::string>());
        if (j.contains("classifier")) {
            const auto& jc = j.at("classifier");
            const auto type = jc.value("type", std::string("knn"));
            if (type == "knn")
                c.classifier.kind = ClassifierKind::knn;
            else if (type == "nearest_medoid")
                c.classifier.kind = ClassifierKind::nearest_medoid;
            else
                fail(Errc::config, "unknown classifier type '" + type + "'");
            c.classifier.k = jc.value("k", c.classifier.k);
        }
        c.workers = j.value("workers", default_workers());
        return c;
    } catch (const json::exception& e) {
        fail(Errc::config, std::string("config: ") + e.what());
    }
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Errc::config, "config '" + path.string() + "': " + e.what());
    }
    return parse_pipeline_config(j, path.parent_path());
}

ordered_json to_json(const PipelineConfig& c) {
    ordered_json methods = ordered_json::array();
    for (auto m : c.methods) methods.push_back(method_name(m));
    return ordered_json{
        {"manifest", c.manifest.string()},
        {"out", c.out_dir.string()},
        {"pca_threshold", c.pca_threshold},
        {"k_range", {c.k_min, c.k_max}},
        {"metric", metric_name(c.metric)},
        {"max_iter", c.max_iter},
        {"cluster_seed", c.cluster_seed},
        {"split_fraction", c.split_fraction},
        {"split_seed", c.split_seed},
        {"fractions", c.fractions},
        {"methods", methods},
        {"seeds", c.seeds},
        {"allocation", allocation_name(c.allocation)},
        {"class_allocation", allocation_name(c.class_allocation)},
        {"classifier",
         {{"type", c.classifier.kind == ClassifierKind::knn ? "knn" : "nearest_medoid"}, {"k", c.classifier.k}}},
    };
}

ordered_json clusterings_json(std::span<const ClassClustering> clusterings, const std::vector<std::string>& class_names) {
    ordered_json out = ordered_json::array();
    for (const auto& cc : clusterings) {
        ordered_json scores = ordered_json::object();
        for (const auto& [k, s] : cc.silhouette_scores) scores[std::to_string(k)] = s;
        ordered_json medoids = ordered_json::array();
        for (auto id : cc.medoid_ids) medoids.push_back(to_u64(id));
        ordered_json assignment = ordered_json::array();
        for (std::size_t i = 0; i < cc.ids.size(); ++i) assignment.push_back({to_u64(cc.ids[i]), cc.assignment[i]});
        out.push_back({{"class", class_names.at(cc.class_index)},
                       {"k", cc.k},
                       {"fallback", cc.fallback},
                       {"silhouette_scores", scores},
                       {"cluster_silhouette", cc.cluster_silhouette},
                       {"medoid_ids", medoids},
                       {"assignment", assignment}});
    }
    return out;
}

std::vector<ClassClustering> parse_clusterings_json(const json& j, const std::vector<std::string>& class_names) {
    std::vector<ClassClustering> out;
    try {
        for (const auto& jc : j) {
            ClassClustering cc;
            const auto name = jc.at("class").get<std::string>();
            const auto it = std::find(class_names.begin(), class_names.end(), name);
            require(it != class_names.end(), Errc::consistency, "clustering for unknown class '" + name + "'");
            cc.class_index = static_cast<ClassIndex>(it - class_names.begin());
            cc.k = jc.at("k").get<std::size_t>();
            cc.fallback = jc.at("fallback").get<bool>();
            for (const auto& [k, s] : jc.at("silhouette_scores").items())
                cc.silhouette_scores.emplace(std::stoul(k), s.get<double>());
            cc.cluster_silhouette = jc.at("cluster_silhouette").get<std::vector<double>>();
            for (auto id : jc.at("medoid_ids").get<std::vector<std::uint64_t>>())
                cc.medoid_ids.push_back(static_cast<SampleId>(id));
            for (const auto& pair : jc.at("assignment")) {
                cc.ids.push_back(static_cast<SampleId>(pair.at(0).get<std::uint64_t>()));
                const auto c = pair.at(1).get<std::uint32_t>();
                require(c < cc.k, Errc::format, "cluster index out of range in clusterings");
                cc.assignment.push_back(c);
            }
            require(cc.medoid_ids.size() == cc.k, Errc::format, "medoid count differs from k in clusterings");
            out.push_back(std::move(cc));
        }
    } catch (const json::exception& e) {
        fail(Errc::format, std::string("clusterings: ") + e.what());
    }
    return out;
}

void write_cluster_report_csv(std::ostream& out, std::span<const ClassClustering> clusterings,
                              const std::vector<std::string>& class_names) {
    out << "class,cluster,size,medoid_id,mean_silhouette\n";
    for (const auto& cc : clusterings) {
        const auto freq = cc.frequencies();
        for (std::size_t k = 0; k < cc.k; ++k) {
            out << class_names.at(cc.class_index) << ',' << k << ',' << freq[k] << ',' << to_u64(cc.medoid_ids[k]) << ','
                << format_double(k < cc.cluster_silhouette.size() ? cc.cluster_silhouette[k] : 0.0) << '\n';
        }
    }
}

ordered_json read_state(const fs::path& out_dir) {
    const fs::path path = out_dir / "state.json";
    if (!fs::exists(path)) return ordered_json{{"format", "coreselect-state"}, {"version", kStateVersion}, {"stages", ordered_json::object()}};
    ordered_json state;
    try {
        state = ordered_json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(Errc::state, "state file '" + path.string() + "' is corrupted: " + e.what());
    }
    require(state.is_object() && state.value("format", std::string()) == "coreselect-state", Errc::state,
            "state file '" + path.string() + "' is not a pipeline state");
    require(state.contains("version") && state["version"].is_number_integer() &&
                state["version"].get<int>() == kStateVersion,
            Errc::state, "state file '" + path.string() + "' has an unsupported version");
    require(state.contains("stages") && state["stages"].is_object(), Errc::state,
            "state file '" + path.string() + "' has no stage table");
    return state;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    load_state();
}

void Pipeline::load_state() { state_ = read_state(config_.out_dir); }

void Pipeline::save_state() const {
    const fs::path tmp = config_.out_dir / "state.json.tmp";
    write_file(tmp, state_.dump(2) + "\n");
    fs::rename(tmp, state_path());
}

const ordered_json& Pipeline::stage(const std::string& name) const {
    const auto& stages = state_["stages"];
    require(stages.contains(name), Errc::state, "stage '" + name + "' has not been run yet");
    return stages[name];
}

bool Pipeline::up_to_date(const std::string& name, const std::string& input_digest) const {
    const auto& stages = state_["stages"];
    if (!stages.contains(name)) return false;
    const auto& s = stages[name];
    if (s.value("input_digest", std::string()) != input_digest) return false;
    for (const auto& [file, digest] : s.at("outputs").items()) {
        const fs::path path = config_.out_dir / file;
        if (!fs::exists(path) || digest_file(path) != digest.get<std::string>()) return false;
    }
    return true;
}

void Pipeline::record(const std::string& name, const std::string& input_digest, const std::vector<std::string>& outputs,
                      ordered_json extra) {
    ordered_json files = ordered_json::object();
    for (const auto& f : outputs) files[f] = digest_file(config_.out_dir / f);
    ordered_json entry{{"input_digest", input_digest}, {"outputs", files}};
    if (!extra.is_null()) entry["summary"] = std::move(extra);
    state_["stages"][name] = std::move(entry);
    save_state();
}

EmbeddingMatrix Pipeline::load_split(const char* which) const {
    return load_embeddings(config_.out_dir / (std::string(which) + ".csel"), EmbeddingFormat::binary);
}

std::vector<ClassClustering> Pipeline::load_clusterings(const std::vector<std::string>& class_names) const {
    json j;
    try {
        j = json::parse(read_file(config_.out_dir / "clusterings.json"));
    } catch (const json::parse_error& e) {
        fail(Errc::format, std::string("clusterings.json: ") + e.what());
    }
    return parse_clusterings_json(j, class_names);
}

StageResult Pipeline::reduce() {
    const Manifest manifest = load_manifest(config_.manifest);
    fs::path embedding_path = manifest.embedding_path;
    if (embedding_path.is_relative()) embedding_path = config_.manifest.parent_path() / embedding_path;
    const std::string dataset_digest = combine({read_file(config_.manifest), read_file(embedding_path)});
    const ordered_json params{{"split_fraction", config_.split_fraction},
                              {"split_seed", config_.split_seed},
                              {"pca_threshold", config_.pca_threshold}};
    const std::string input_digest = combine({"reduce", dataset_digest, params.dump()});

    StageResult result;
    if (up_to_date("reduce", input_digest)) {
        result.skipped = true;
        result.lines.push_back("reduce: up to date");
        return result;
    }

    const EmbeddingMatrix data = load_manifest_embeddings(config_.manifest);
    const auto parts = split(data, {config_.split_fraction, config_.split_seed, true});
    fs::create_directories(config_.out_dir / "pca");
    fs::create_directories(config_.out_dir / "reduced");
    save_embeddings(parts.train, config_.out_dir / "train.csel", EmbeddingFormat::binary);
    save_embeddings(parts.test, config_.out_dir / "test.csel", EmbeddingFormat::binary);
    std::vector<std::string> outputs{"train.csel", "test.csel"};
    result.lines.push_back("split: train=" + std::to_string(parts.train.size()) +
                           " test=" + std::to_string(parts.test.size()));

    ordered_json per_class = ordered_json::array();
    for (const auto& [c, members] : partition_by_class(parts.train)) {
        const std::string& name = data.class_names()[c];
        const std::string reduced_file = "reduced/" + name + ".csel";
        if (members.size() < 2) {
            // Nothing to fit; clustering falls back to a single cluster anyway.
            save_embeddings(members, config_.out_dir / reduced_file, EmbeddingFormat::binary);
            outputs.push_back(reduced_file);
            per_class.push_back({{"class", name}, {"n", members.size()}, {"k", nullptr}});
            log::warn("class '" + name + "' has a single training sample; PCA skipped");
            continue;
        }
        auto [model, reduced] = fit_transform(members, config_.pca_threshold);
        const std::string pca_file = "pca/" + name + ".cpca";
        {
            std::ostringstream buffer;
            write_pca(buffer, model);
            write_file(config_.out_dir / pca_file, buffer.str());
        }
        save_embeddings(reduced, config_.out_dir / reduced_file, EmbeddingFormat::binary);
        outputs.push_back(pca_file);
        outputs.push_back(reduced_file);
        const double ratio = model.explained_ratio.back();
        result.lines.push_back("class " + name + ": n=" + std::to_string(members.size()) + " d=" +
                               std::to_string(model.input_dim()) + " k=" + std::to_string(model.retained()) +
                               " cumulative_variance=" + format_double(ratio));
        per_class.push_back({{"class", name}, {"n", members.size()}, {"k", model.retained()}, {"cumulative_variance", ratio}});
    }

    record("reduce", input_digest, outputs,
           ordered_json{{"dataset_digest", dataset_digest},
                        {"class_names", data.class_names()},
                        {"train", parts.train.size()},
                        {"test", parts.test.size()},
                        {"classes", per_class}});
    state_["dataset_digest"] = dataset_digest;
    save_state();
    return result;
}

StageResult Pipeline::cluster() {
    const auto reduce_stage = stage("reduce");
    const ordered_json params{{"k_range", {config_.k_min, config_.k_max}},
                              {"metric", metric_name(config_.metric)},
                              {"max_iter", config_.max_iter},
                              {"seed", config_.cluster_seed}};
    const std::string input_digest =
        combine({"cluster", reduce_stage.at("input_digest").get<std::string>(), params.dump()});

    StageResult result;
    if (up_to_date("cluster", input_digest)) {
        result.skipped = true;
        result.lines.push_back("cluster: up to date");
        return result;
    }

    const auto class_names = reduce_stage.at("summary").at("class_names").get<std::vector<std::string>>();
    std::vector<std::string> present;
    for (const auto& entry : reduce_stage.at("summary").at("classes")) present.push_back(entry.at("class").get<std::string>());

    ClusterConfig cfg{config_.k_min, config_.k_max, config_.metric, config_.cluster_seed, config_.max_iter};
    std::vector<ClassClustering> clusterings(present.size());
    parallel_for(present.size(), config_.workers, [&](std::size_t i) {
        const auto reduced = load_embeddings(config_.out_dir / ("reduced/" + present[i] + ".csel"), EmbeddingFormat::binary);
        clusterings[i] = cluster_class(reduced, cfg).clustering;
    });

    ordered_json summary = ordered_json::array();
    for (const auto& cc : clusterings) {
        const auto& name = class_names.at(cc.class_index);
        if (cc.fallback)
            log::warn("class '" + name + "' has " + std::to_string(cc.ids.size()) +
                      " samples, fewer than k_min + 1; kept as a single cluster");
        std::string sizes;
        for (auto s : cc.frequencies()) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
        result.lines.push_back("class " + name + ": k=" + std::to_string(cc.k) + " sizes=[" + sizes + "]" +
                               (cc.fallback ? " (fallback)" : ""));
        summary.push_back({{"class", name}, {"k", cc.k}, {"fallback", cc.fallback}});
    }

    write_file(config_.out_dir / "clusterings.json", clusterings_json(clusterings, class_names).dump(2) + "\n");
    std::ostringstream report;
    write_cluster_report_csv(report, clusterings, class_names);
    write_file(config_.out_dir / "cluster_report.csv", report.str());
    record("cluster", input_digest, {"clusterings.json", "cluster_report.csv"}, summary);
    return result;
}

StageResult Pipeline::sample() {
    const auto reduce_stage = stage("reduce");
    const bool need_clusters = std::find(config_.methods.begin(), config_.methods.end(),
                                         SamplingMethod::intelligent) != config_.methods.end();
    const bool have_clusters = state_["stages"].contains("cluster");
    require(have_clusters || !need_clusters, Errc::state, "stage 'cluster' has not been run yet");
    const std::string upstream = have_clusters ? stage("cluster").at("input_digest").get<std::string>()
                                               : reduce_stage.at("input_digest").get<std::string>();

    ordered_json params = to_json(config_);
    for (const char* key : {"manifest", "out", "classifier"}) params.erase(key);
    const std::string input_digest = combine({"sample", upstream, params.dump()});

    StageResult result;
    if (up_to_date("sample", input_digest)) {
        result.skipped = true;
        result.lines.push_back("sample: up to date");
        return result;
    }

    const auto class_names = reduce_stage.at("summary").at("class_names").get<std::vector<std::string>>();
    const EmbeddingMatrix train = load_split("train");
    const auto clusterings = have_clusters ? load_clusterings(class_names) : std::vector<ClassClustering>{};

    fs::create_directories(config_.out_dir / "selections");
    std::vector<std::string> outputs;
    ordered_json selections = ordered_json::array();
    for (double fraction : config_.fractions) {
        for (auto seed : config_.seeds) {
            for (auto method : config_.methods) {
                CoresetSpec spec;
                spec.size = CoresetSize::fraction(fraction);
                spec.method = method;
                spec.seed = seed;
                spec.allocation = config_.allocation;
                spec.class_allocation = config_.class_allocation;
                const auto sel = select_coreset(train, clusterings, spec);

                const std::string stem = "selections/" + selection_stem(method, fraction, seed);
                std::ostringstream csv;
                write_selection_csv(csv, sel, train, clusterings);
                write_file(config_.out_dir / (stem + ".csv"), csv.str());
                write_file(config_.out_dir / (stem + ".json"), selection_sidecar_json(sel, class_names));
                outputs.push_back(stem + ".csv");
                outputs.push_back(stem + ".json");
                if (!clusterings.empty()) {
                    std::ostringstream rep;
                    write_representation_csv(rep, representation_report(sel, clusterings), class_names);
                    write_file(config_.out_dir / (stem + "_representation.csv"), rep.str());
                    outputs.push_back(stem + "_representation.csv");
                }
                selections.push_back({{"method", method_name(method)},
                                      {"fraction", fraction},
                                      {"seed", seed},
                                      {"size", sel.ids.size()},
                                      {"file", stem + ".csv"}});
                log::debug(stem + ": " + std::to_string(sel.ids.size()) + " samples");
            }
        }
    }
    result.lines.push_back("sample: wrote " + std::to_string(selections.size()) + " selections");
    record("sample", input_digest, outputs, selections);
    return result;
}

StageResult Pipeline::evaluate() {
    const auto sample_stage = stage("sample");
    const ordered_json params{{"classifier",
                               {{"type", config_.classifier.kind == ClassifierKind::knn ? "knn" : "nearest_medoid"},
                                {"k", config_.classifier.k}}}};
    const std::string input_digest =
        combine({"evaluate", sample_stage.at("input_digest").get<std::string>(), params.dump()});

    StageResult result;
    if (up_to_date("evaluate", input_digest)) {
        result.skipped = true;
        result.lines.push_back("evaluate: up to date");
        return result;
    }

    const auto class_names = stage("reduce").at("summary").at("class_names").get<std::vector<std::string>>();
    const EmbeddingMatrix train = load_split("train");
    const EmbeddingMatrix test = load_split("test");
    const bool have_clusters = state_["stages"].contains("cluster");
    const auto clusterings = have_clusters ? load_clusterings(class_names) : std::vector<ClassClustering>{};

    const auto& entries = sample_stage.at("summary");
    ComparisonTable table;
    table.rows.resize(entries.size());
    std::vector<CoresetSelection> selections(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        auto& sel = selections[i];
        std::ifstream in(config_.out_dir / e.at("file").get<std::string>());
        require(in.good(), Errc::io, "cannot open selection " + e.at("file").get<std::string>());
        for (const auto& entry : read_selection_csv(in)) sel.ids.push_back(entry.id);
        sel.spec.method = parse_method(e.at("method").get<std::string>());
        sel.spec.size = CoresetSize::fraction(e.at("fraction").get<double>());
        sel.spec.seed = e.at("seed").get<std::uint64_t>();
        sel.spec.allocation = config_.allocation;
        sel.spec.class_allocation = config_.class_allocation;
        table.rows[i].method = sel.spec.method;
        table.rows[i].fraction = sel.spec.size.fraction_value();
        table.rows[i].seed = sel.spec.seed;
    }
    parallel_for(entries.size(), config_.workers, [&](std::size_t i) {
        table.rows[i].report = evaluate_selection(train, test, selections[i], clusterings, config_.classifier);
    });
    table.summary = summarize(table.rows);

    std::ostringstream csv, curves;
    write_comparison_csv(csv, table.rows);
    write_curve_csv(curves, table.summary);
    write_file(config_.out_dir / "evaluation.csv", csv.str());
    write_file(config_.out_dir / "evaluation.json", comparison_json(table, class_names));
    write_file(config_.out_dir / "curves.csv", curves.str());

    for (const auto& s : table.summary) {
        result.lines.push_back(std::string(method_name(s.method)) + " fraction=" + format_double(s.fraction) +
                               " accuracy=" + format_double(s.mean.accuracy) +
                               " recall_macro=" + format_double(s.mean.recall_macro) +
                               " f1_macro=" + format_double(s.mean.f1_macro));
    }
    record("evaluate", input_digest, {"evaluation.csv", "evaluation.json", "curves.csv"});
    return result;
}

std::vector<StageResult> Pipeline::run_all() {
    return {reduce(), cluster(), sample(), evaluate()};
}

std::string inspect_state(const fs::path& out_dir) {
    require(fs::exists(out_dir / "state.json"), Errc::state, "no pipeline state in '" + out_dir.string() + "'");
    const auto state = read_state(out_dir);
    std::ostringstream out;
    out << "state: " << (out_dir / "state.json").string() << " (version " << state["version"].get<int>() << ")\n";
    if (state.contains("dataset_digest")) out << "dataset digest: " << state["dataset_digest"].get<std::string>() << '\n';
    for (const std::string name : {"reduce", "cluster", "sample", "evaluate"}) {
        if (!state["stages"].contains(name)) {
            out << name << ": not run\n";
            continue;
        }
        const auto& s = state["stages"][name];
        out << name << ": input " << s.at("input_digest").get<std::string>() << ", " << s.at("outputs").size()
            << " output file(s)\n";
        if (!s.contains("summary")) continue;
        if (name == "sample")
            out << "  " << s["summary"].size() << " selections\n";
        else
            out << "  " << s["summary"].dump() << '\n';
    }
    return out.str();
}

fs::path generate_dataset(const MixtureSpec& spec, const fs::path& out_dir, EmbeddingFormat format,
                          const std::string& name) {
    const auto generated = generate(spec);
    fs::create_directories(out_dir);
    const std::string file = format == EmbeddingFormat::csv ? "embeddings.csv" : "embeddings.csel";
    save_embeddings(generated.embeddings, out_dir / file, format);

    std::ostringstream truth;
    truth << "id,class,cluster\n";
    for (std::size_t i = 0; i < generated.embeddings.size(); ++i) {
        const SampleId id = generated.embeddings.ids()[i];
        truth << to_u64(id) << ',' << generated.embeddings.class_names()[generated.embeddings.labels()[i]] << ','
              << generated.ground_truth.at(id) << '\n';
    }
    write_file(out_dir / "ground_truth.csv", truth.str());

    Manifest manifest;
    manifest.name = name;
    manifest.class_names = generated.embeddings.class_names();
    manifest.embedding_path = file;
    manifest.format = format;
    manifest.dim = generated.embeddings.dim();
    manifest.count = generated.embeddings.size();
    manifest.provenance = "synthetic gaussian mixture, seed " + std::to_string(spec.seed);
    const fs::path manifest_path = out_dir / "manifest.json";
    save_manifest(manifest, manifest_path);
    return manifest_path;
}

}  // namespace coreselect
