#include "coreselect/embedding_io.hpp"
#include "coreselect/pca.hpp"
#include "coreselect/pipeline.hpp"
#include "coreselect/sampler.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

using namespace coreselect;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const auto err_file = dir / "stderr.txt";
    const std::string cmd = std::string(CORESELECT_CLI_PATH) + " " + args + " > /dev/null 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err_file)};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::vector<std::string> csv_lines(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream s(line);
    for (std::string f; std::getline(s, f, ',');) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return files;
}

// Class "a" has four planted clusters of 80/60/40/20; class "b" is one blob.
const char* kMixture = R"({
  "dim": 3,
  "seed": 5,
  "exact_counts": true,
  "classes": [
    {"name": "a", "count": 200, "clusters": [
      {"weight": 0.4, "center": [0, 0, 0], "stddev": 0.3},
      {"weight": 0.3, "center": [8, 0, 0], "stddev": 0.3},
      {"weight": 0.2, "center": [0, 8, 0], "stddev": 0.3},
      {"weight": 0.1, "center": [0, 0, 8], "stddev": 0.3}]},
    {"name": "b", "count": 60, "clusters": [
      {"weight": 1.0, "center": [4, 4, 4], "stddev": 0.5}]}
  ]
})";

}  // namespace

TEST_CASE("generate, run the full pipeline and reload every artifact") {
    const auto dir = testutil::temp_dir("pipeline_full");
    write_text(dir / "mixture.json", kMixture);
    REQUIRE(run_cli("generate --spec " + (dir / "mixture.json").string() + " --out " + (dir / "data").string(), dir)
                .code == 0);
    const auto manifest = load_manifest(dir / "data" / "manifest.json");
    CHECK(manifest.count == 260);
    const auto data = load_manifest_embeddings(dir / "data" / "manifest.json");
    CHECK(data.size() == 260);

    write_text(dir / "config.json", R"({
  "manifest": "data/manifest.json",
  "out": "out",
  "fractions": [0.2, 1.0],
  "seeds": [0, 1],
  "workers": 2
})");
    const auto first = run_cli("pipeline --config " + (dir / "config.json").string(), dir);
    REQUIRE(first.code == 0);
    const auto out = dir / "out";

    const auto train = load_embeddings(out / "train.csel", EmbeddingFormat::binary);
    const auto test = load_embeddings(out / "test.csel", EmbeddingFormat::binary);
    CHECK(train.size() == 182);
    CHECK(test.size() == 78);

    // reduce: printed cumulative variance matches the stored model
    const std::regex line_re(R"(class (\w+): n=(\d+) d=(\d+) k=(\d+) cumulative_variance=([0-9.e-]+))");
    int matched = 0;
    for (std::sregex_iterator it(first.err.begin(), first.err.end(), line_re), end; it != end; ++it) {
        std::ifstream in(out / "pca" / ((*it)[1].str() + ".cpca"), std::ios::binary);
        const auto model = read_pca(in);
        CHECK(model.retained() == std::stoul((*it)[4].str()));
        CHECK(std::abs(model.explained_ratio.back() - std::stod((*it)[5].str())) <= 1e-9);
        const auto reduced = load_embeddings(out / "reduced" / ((*it)[1].str() + ".csel"), EmbeddingFormat::binary);
        CHECK(reduced.dim() == model.retained());
        ++matched;
    }
    CHECK(matched == 2);

    // cluster: four report rows for the planted class, sizes sum to class sizes
    const auto class_names = train.class_names();
    const auto clusterings =
        parse_clusterings_json(nlohmann::json::parse(slurp(out / "clusterings.json")), class_names);
    CHECK(clusterings.size() == 2);
    const auto report = csv_lines(out / "cluster_report.csv");
    REQUIRE_FALSE(report.empty());
    CHECK(report[0] == "class,cluster,size,medoid_id,mean_silhouette");
    std::map<std::string, std::size_t> rows_per_class, size_per_class;
    for (std::size_t i = 1; i < report.size(); ++i) {
        const auto f = split_fields(report[i]);
        ++rows_per_class[f[0]];
        size_per_class[f[0]] += std::stoul(f[2]);
    }
    CHECK(rows_per_class["a"] == 4);
    const auto sizes = train.class_sizes();
    CHECK(size_per_class["a"] == sizes[0]);
    CHECK(size_per_class["b"] == sizes[1]);

    // sample: every selection re-loads; fraction 1.0 is the whole training set
    for (const auto* method : {"random", "intelligent"})
        for (const auto* seed : {"0", "1"}) {
            const std::string stem = std::string(method) + "_f0.2_s" + seed;
            std::ifstream sel(out / "selections" / (stem + ".csv"));
            const auto entries = read_selection_csv(sel);
            CHECK(entries.size() == 36);
            const auto sidecar = nlohmann::json::parse(slurp(out / "selections" / (stem + ".json")));
            CHECK(sidecar.is_object());
            std::size_t clusters = 0;
            for (const auto& cc : clusterings) clusters += cc.k;
            CHECK(csv_lines(out / "selections" / (stem + "_representation.csv")).size() == 1 + clusters);

            std::ifstream full(out / "selections" / (std::string(method) + "_f1_s" + seed + ".csv"));
            std::vector<SampleId> ids;
            for (const auto& e : read_selection_csv(full)) ids.push_back(e.id);
            CHECK(ids == train.ids());
        }

    // evaluate
    const auto evaluation = csv_lines(out / "evaluation.csv");
    CHECK(evaluation[0] == "method,fraction,seed,accuracy,precision_macro,recall_macro,f1_macro");
    CHECK(evaluation.size() == 9);
    CHECK(csv_lines(out / "curves.csv")[0] == "method,fraction,metric,mean,stddev,runs");
    const auto ej = nlohmann::json::parse(slurp(out / "evaluation.json"));
    CHECK(ej.at("runs").size() == 8);

    // rerun: every stage skipped, nothing changes on disk
    const auto before = snapshot(out);
    const auto second = run_cli("pipeline --config " + (dir / "config.json").string(), dir);
    CHECK(second.code == 0);
    for (const auto* stage : {"reduce", "cluster", "sample", "evaluate"})
        CHECK(second.err.find(std::string(stage) + ": up to date") != std::string::npos);
    CHECK(snapshot(out) == before);

    // a changed parameter reruns from the affected stage
    const auto third = run_cli("pipeline --config " + (dir / "config.json").string() + " --seed 3", dir);
    CHECK(third.code == 0);
    CHECK(third.err.find("reduce: up to date") != std::string::npos);
    CHECK(third.err.find("cluster: up to date") != std::string::npos);
    CHECK(fs::exists(out / "selections" / "random_f0.2_s3.csv"));

    const auto inspect = run_cli("inspect --out " + out.string(), dir);
    CHECK(inspect.code == 0);
}

TEST_CASE("stage-by-stage commands and --stdout") {
    const auto dir = testutil::temp_dir("pipeline_stages");
    write_text(dir / "mixture.json", kMixture);
    REQUIRE(run_cli("generate --spec " + (dir / "mixture.json").string() + " --out " + (dir / "data").string() +
                        " --format csv",
                    dir)
                .code == 0);
    CHECK(fs::exists(dir / "data" / "embeddings.csv"));
    const std::string common =
        "--manifest " + (dir / "data" / "manifest.json").string() + " --out " + (dir / "out").string();
    CHECK(run_cli("sample " + common, dir).code != 0);  // nothing reduced yet
    CHECK(run_cli("reduce " + common, dir).code == 0);
    CHECK(run_cli("cluster " + common + " --k-range 2,6", dir).code == 0);
    CHECK(run_cli("sample " + common + " --k-range 2,6 --fraction 0.3 --seed 9 --method intelligent", dir).code == 0);
    CHECK(fs::exists(dir / "out" / "selections" / "intelligent_f0.3_s9.csv"));
    CHECK(run_cli("evaluate " + common + " --k-range 2,6 --fraction 0.3 --seed 9 --method intelligent", dir).code ==
          0);
    const auto evaluation = csv_lines(dir / "out" / "evaluation.csv");
    CHECK(evaluation.size() == 2);

    const std::string cmd = std::string(CORESELECT_CLI_PATH) + " --stdout --quiet evaluate " + common +
                            " --k-range 2,6 --fraction 0.3 --seed 9 --method intelligent > " +
                            (dir / "stdout.txt").string();
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(slurp(dir / "stdout.txt") == slurp(dir / "out" / "evaluation.csv"));
}

TEST_CASE("reduce on rank-1 data and with threshold 1.0") {
    const auto dir = testutil::temp_dir("pipeline_rank");
    std::vector<SampleId> ids;
    std::vector<ClassIndex> labels;
    std::vector<double> line_values, full_values;
    Xoshiro256 rng(3);
    for (std::size_t i = 0; i < 20; ++i) {
        ids.push_back(static_cast<SampleId>(i));
        labels.push_back(0);
        const double t = static_cast<double>(i) + 1.0;
        line_values.insert(line_values.end(), {0.6 * t, 0.8 * t});
        for (int j = 0; j < 4; ++j) full_values.push_back(rng.uniform());
    }
    const EmbeddingMatrix line(ids, labels, Matrix(20, 2, line_values), {"solo"});
    const EmbeddingMatrix full(ids, labels, Matrix(20, 4, full_values), {"solo"});
    for (const auto& [name, m] : {std::pair{"line", line}, std::pair{"full", full}}) {
        fs::create_directories(dir / name);
        save_embeddings(m, dir / name / "e.csel", EmbeddingFormat::binary);
        save_manifest({name, {"solo"}, "e.csel", EmbeddingFormat::binary, m.dim(), m.size(), "test"},
                      dir / name / "manifest.json");
    }
    const auto rank1 = run_cli("reduce --manifest " + (dir / "line" / "manifest.json").string() + " --out " +
                                   (dir / "line" / "out").string(),
                               dir);
    CHECK(rank1.code == 0);
    CHECK(rank1.err.find("class solo: n=14 d=2 k=1 cumulative_variance=1") != std::string::npos);

    const auto all = run_cli("reduce --pca-threshold 1.0 --manifest " + (dir / "full" / "manifest.json").string() +
                                 " --out " + (dir / "full" / "out").string(),
                             dir);
    CHECK(all.code == 0);
    CHECK(all.err.find("d=4 k=4") != std::string::npos);
}

TEST_CASE("tiny class falls back to one cluster with a warning") {
    const auto dir = testutil::temp_dir("pipeline_tiny");
    const auto m = testutil::make_matrix({{0.0, 1.0}, {1.0, 0.5}, {2.0, 2.0}}, {}, {"rare"});
    save_embeddings(m, dir / "e.csv", EmbeddingFormat::csv);
    save_manifest({"tiny", {"rare"}, "e.csv", EmbeddingFormat::csv, 2, 3, "test"}, dir / "manifest.json");
    const std::string common = "--manifest " + (dir / "manifest.json").string() + " --out " + (dir / "out").string();
    CHECK(run_cli("cluster " + common, dir).code == 3);  // reduce has not run
    REQUIRE(run_cli("reduce " + common, dir).code == 0);
    const auto r = run_cli("cluster " + common, dir);
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(r.err.find("rare") != std::string::npos);
    CHECK(csv_lines(dir / "out" / "cluster_report.csv").size() == 2);
}

TEST_CASE("exit codes") {
    const auto dir = testutil::temp_dir("pipeline_errors");
    write_text(dir / "mixture.json", kMixture);
    REQUIRE(run_cli("generate --spec " + (dir / "mixture.json").string() + " --out " + (dir / "data").string(), dir)
                .code == 0);
    const std::string common =
        "--manifest " + (dir / "data" / "manifest.json").string() + " --out " + (dir / "out").string();
    REQUIRE(run_cli("reduce " + common, dir).code == 0);

    write_text(dir / "out" / "state.json", "{ not json");
    const auto corrupt = run_cli("pipeline " + common, dir);
    CHECK(corrupt.code == 3);
    CHECK(corrupt.err.find("state") != std::string::npos);
    write_text(dir / "out" / "state.json", R"({"format": "coreselect-state", "version": 99, "stages": {}})");
    CHECK(run_cli("pipeline " + common, dir).code == 3);

    const auto missing = run_cli("pipeline --manifest " + (dir / "nope.json").string() + " --out " +
                                     (dir / "out2").string(),
                                 dir);
    CHECK(missing.code == 2);
    CHECK(run_cli("pipeline " + common + " --fraction 1.5", dir).code == 2);
    CHECK(run_cli("pipeline " + common + " --k-range 5,2", dir).code == 2);
    CHECK(run_cli("pipeline --bogus-flag", dir).code == 2);

    write_text(dir / "bad_mixture.json", "{\n  \"dim\": 2,\n  \"classes\": [,]\n}");
    const auto bad_spec = run_cli("generate --spec " + (dir / "bad_mixture.json").string() + " --out " +
                                      (dir / "gen").string(),
                                  dir);
    CHECK(bad_spec.code == 2);
    CHECK(bad_spec.err.find("line 3") != std::string::npos);

    // identical rows: PCA has nothing to keep
    const auto flat = testutil::make_matrix({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}});
    fs::create_directories(dir / "flat");
    save_embeddings(flat, dir / "flat" / "e.csel", EmbeddingFormat::binary);
    save_manifest({"flat", {"c0"}, "e.csel", EmbeddingFormat::binary, 2, 5, "test"}, dir / "flat" / "manifest.json");
    CHECK(run_cli("reduce --manifest " + (dir / "flat" / "manifest.json").string() + " --out " +
                      (dir / "flat" / "out").string(),
                  dir)
              .code == 4);

    // embedding file declared but missing
    save_manifest({"gone", {"c0"}, "missing.csel", EmbeddingFormat::binary, 2, 5, "test"}, dir / "gone.json");
    CHECK(run_cli("reduce --manifest " + (dir / "gone.json").string() + " --out " + (dir / "out3").string(), dir)
              .code == 5);
}
