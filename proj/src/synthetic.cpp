#include "coreselect/synthetic.hpp"

#include "coreselect/apportion.hpp"
#include "coreselect/error.hpp"
#include "coreselect/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace coreselect {

void MixtureSpec::validate() const {
    require(dim >= 1, Errc::spec, "mixture dim must be >= 1");
    require(!classes.empty(), Errc::spec, "mixture has no classes");
    std::set<std::string> seen;
    for (const auto& cls : classes) {
        const std::string where = "class '" + cls.name + "': ";
        require(is_valid_class_name(cls.name), Errc::spec, where + "invalid class name");
        require(seen.insert(cls.name).second, Errc::spec, where + "duplicate class name");
        require(!cls.clusters.empty(), Errc::spec, where + "no clusters");
        require(cls.count >= cls.clusters.size(), Errc::spec, where + "count below number of clusters");
        double total = 0.0;
        for (const auto& cl : cls.clusters) {
            require(cl.weight > 0.0 && std::isfinite(cl.weight), Errc::spec, where + "weights must be positive");
            require(cl.stddev > 0.0 && std::isfinite(cl.stddev), Errc::spec, where + "stddev must be positive");
            require(cl.center.size() == dim, Errc::spec, where + "center length differs from dim");
            for (double v : cl.center) require(std::isfinite(v), Errc::spec, where + "non-finite center");
            total += cl.weight;
        }
        require(std::abs(total - 1.0) <= 1e-9, Errc::spec, where + "weights do not sum to 1");
    }
}

double normal_quantile(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

std::vector<std::size_t> exact_cluster_counts(const ClassSpec& cls) {
    std::vector<double> weights;
    for (const auto& cl : cls.clusters) weights.push_back(cl.weight);
    return largest_remainder(weights, cls.count);
}

GeneratedDataset generate(const MixtureSpec& spec) {
    spec.validate();

    std::size_t n = 0;
    for (const auto& cls : spec.classes) n += cls.count;

    std::vector<SampleId> ids;
    std::vector<ClassIndex> labels;
    std::vector<double> values;
    std::vector<std::string> names;
    std::map<SampleId, std::uint32_t> truth;
    ids.reserve(n);
    labels.reserve(n);
    values.reserve(n * spec.dim);

    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const auto& cls = spec.classes[c];
        names.push_back(cls.name);
        Xoshiro256 rng(derive_seed(spec.seed, c));

        std::vector<std::uint32_t> membership;
        membership.reserve(cls.count);
        if (spec.exact_counts) {
            const auto counts = exact_cluster_counts(cls);
            for (std::uint32_t k = 0; k < counts.size(); ++k) membership.insert(membership.end(), counts[k], k);
        } else {
            std::vector<double> cdf;
            double acc = 0.0;
            for (const auto& cl : cls.clusters) cdf.push_back(acc += cl.weight);
            for (std::size_t i = 0; i < cls.count; ++i) {
                const double u = rng.uniform() * acc;
                std::uint32_t k = 0;
                while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
                membership.push_back(k);
            }
        }

        for (std::uint32_t k : membership) {
            const auto& cl = cls.clusters[k];
            const auto id = static_cast<SampleId>(ids.size());
            ids.push_back(id);
            labels.push_back(static_cast<ClassIndex>(c));
            truth.emplace(id, k);
            for (std::size_t j = 0; j < spec.dim; ++j)
                values.push_back(cl.center[j] + cl.stddev * normal_quantile(rng.uniform_open()));
        }
    }

    return {EmbeddingMatrix(std::move(ids), std::move(labels), Matrix(n, spec.dim, std::move(values)),
                            std::move(names)),
            std::move(truth)};
}

MixtureSpec parse_mixture_spec(const std::string& json_text) {
    using nlohmann::json;
    try {
        const json j = json::parse(json_text);
        MixtureSpec spec;
        spec.dim = j.at("dim").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.exact_counts = j.value("exact_counts", false);
        for (const auto& jc : j.at("classes")) {
            ClassSpec cls;
            cls.name = jc.at("name").get<std::string>();
            cls.count = jc.at("count").get<std::size_t>();
            for (const auto& jk : jc.at("clusters")) {
                ClusterSpec cl;
                cl.weight = jk.at("weight").get<double>();
                cl.center = jk.at("center").get<std::vector<double>>();
                cl.stddev = jk.at("stddev").get<double>();
                cls.clusters.push_back(std::move(cl));
            }
            spec.classes.push_back(std::move(cls));
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line number for the message
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, json_text.size()); ++i)
            if (json_text[i] == '\n') ++line;
        fail(Errc::spec, "mixture spec line " + std::to_string(line) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::spec, std::string("mixture spec: ") + e.what());
    }
}

MixtureSpec load_mixture_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open mixture spec '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_mixture_spec(buffer.str());
}

}  // namespace coreselect
