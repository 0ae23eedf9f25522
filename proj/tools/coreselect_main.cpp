// coreselect: coreset selection pipeline front-end.
//
//   coreselect generate --spec mixture.json --out data/
//   coreselect pipeline --config run.json
//   coreselect inspect --out out/

#include "coreselect/error.hpp"
#include "coreselect/log.hpp"
#include "coreselect/parallel.hpp"
#include "coreselect/pipeline.hpp"
#include "coreselect/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace coreselect;

namespace {

struct Overrides {
    std::string config;
    std::string manifest;
    std::string out;
    std::optional<double> pca_threshold;
    std::string k_range;
    std::vector<double> fractions;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    std::optional<std::size_t> workers;
};

void add_pipeline_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config,-c", o.config, "Pipeline config (JSON)");
    cmd->add_option("--manifest", o.manifest, "Dataset manifest (overrides config)");
    cmd->add_option("--out,-o", o.out, "Output directory (overrides config)");
    cmd->add_option("--pca-threshold", o.pca_threshold, "Cumulative explained-variance threshold");
    cmd->add_option("--k-range", o.k_range, "Cluster count search range, e.g. 2,8");
    cmd->add_option("--fraction", o.fractions, "Coreset fraction (repeatable)");
    cmd->add_option("--method", o.methods, "Sampling method: random | intelligent (repeatable)");
    cmd->add_option("--seed", o.seeds, "Sampling seed (repeatable)");
    cmd->add_option("--workers", o.workers, "Worker cap (default: CORESELECT_WORKERS or hardware threads)");
}

PipelineConfig resolve_config(const Overrides& o) {
    PipelineConfig config;
    if (!o.config.empty()) {
        config = load_pipeline_config(o.config);
    } else {
        config.workers = default_workers();
    }
    if (!o.manifest.empty()) config.manifest = o.manifest;
    if (!o.out.empty()) config.out_dir = o.out;
    if (o.pca_threshold) config.pca_threshold = *o.pca_threshold;
    if (!o.k_range.empty()) {
        const auto comma = o.k_range.find(',');
        require(comma != std::string::npos, Errc::config, "--k-range expects k_min,k_max");
        try {
            config.k_min = std::stoul(o.k_range.substr(0, comma));
            config.k_max = std::stoul(o.k_range.substr(comma + 1));
        } catch (const std::exception&) {
            fail(Errc::config, "--k-range expects two integers, got '" + o.k_range + "'");
        }
    }
    if (!o.fractions.empty()) config.fractions = o.fractions;
    if (!o.methods.empty()) {
        config.methods.clear();
        for (const auto& m : o.methods) config.methods.push_back(parse_method(m));
    }
    if (!o.seeds.empty()) config.seeds = o.seeds;
    if (o.workers) config.workers = std::max<std::size_t>(1, *o.workers);
    return config;
}

void report(const StageResult& r) {
    for (const auto& line : r.lines) log::info(line);
}

void print_file(const fs::path& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open '" + path.string() + "'");
    std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coreset selection: PCA-reduced intraclass K-Medoids clustering with cluster-stratified sampling"};
    app.require_subcommand(1);
    bool quiet = false;
    bool verbose = false;
    bool to_stdout = false;
    app.add_flag("--quiet,-q", quiet, "Only errors on stderr");
    app.add_flag("--verbose,-v", verbose, "Debug logging on stderr");
    app.add_flag("--stdout", to_stdout, "Also write the stage's main data output to stdout");

    std::string spec_path, gen_out = "data", gen_format = "binary", gen_name = "synthetic";
    auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic Gaussian-mixture dataset");
    generate_cmd->add_option("--spec", spec_path, "Mixture spec (JSON)")->required();
    generate_cmd->add_option("--out,-o", gen_out, "Output directory");
    generate_cmd->add_option("--format", gen_format, "csv | binary");
    generate_cmd->add_option("--name", gen_name, "Dataset name recorded in the manifest");

    Overrides o;
    auto* reduce_cmd = app.add_subcommand("reduce", "Split the dataset and fit per-class PCA");
    auto* cluster_cmd = app.add_subcommand("cluster", "Per-class K-Medoids with silhouette k selection");
    auto* sample_cmd = app.add_subcommand("sample", "Build random and intelligent coresets");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score every coreset with the downstream classifier");
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run reduce, cluster, sample and evaluate");
    auto* inspect_cmd = app.add_subcommand("inspect", "Print a summary of the pipeline state");
    for (auto* cmd : {reduce_cmd, cluster_cmd, sample_cmd, evaluate_cmd, pipeline_cmd}) add_pipeline_options(cmd, o);
    inspect_cmd->add_option("--config,-c", o.config, "Pipeline config (JSON)");
    inspect_cmd->add_option("--out,-o", o.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    log::level() = quiet ? log::Level::quiet : verbose ? log::Level::verbose : log::Level::normal;

    try {
        if (generate_cmd->parsed()) {
            const auto manifest = generate_dataset(load_mixture_spec(spec_path), gen_out, parse_format(gen_format), gen_name);
            log::info("wrote " + manifest.string());
            if (to_stdout) print_file(manifest);
            return 0;
        }
        if (inspect_cmd->parsed()) {
            fs::path out = o.out;
            if (out.empty() && !o.config.empty()) out = load_pipeline_config(o.config).out_dir;
            if (out.empty()) out = "out";
            std::cout << inspect_state(out);
            return 0;
        }

        Pipeline pipeline(resolve_config(o));
        if (reduce_cmd->parsed()) report(pipeline.reduce());
        if (cluster_cmd->parsed()) {
            report(pipeline.cluster());
            if (to_stdout) print_file(pipeline.config().out_dir / "cluster_report.csv");
        }
        if (sample_cmd->parsed()) report(pipeline.sample());
        if (evaluate_cmd->parsed()) {
            report(pipeline.evaluate());
            if (to_stdout) print_file(pipeline.config().out_dir / "evaluation.csv");
        }
        if (pipeline_cmd->parsed()) {
            for (const auto& r : pipeline.run_all()) report(r);
            if (to_stdout) print_file(pipeline.config().out_dir / "evaluation.csv");
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: io error: " << e.what() << '\n';
        return exit_code(Errc::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
