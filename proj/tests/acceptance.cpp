// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "coreselect/apportion.hpp"
#include "coreselect/eval.hpp"
#include "coreselect/kmedoids.hpp"
#include "coreselect/parallel.hpp"
#include "coreselect/pca.hpp"
#include "coreselect/pipeline.hpp"
#include "coreselect/sampler.hpp"
#include "coreselect/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

using namespace coreselect;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// ---------------------------------------------------------------------------------

Outcome silhouette_oracle() {
    constexpr double kTol = 1e-12;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Xoshiro256 rng(derive_seed(seed, 1));
        const std::size_t clusters = 2 + rng.index(4);
        const std::size_t n = clusters + rng.index(51 - clusters);
        const auto d = pairwise_distances(testutil::random_matrix(n, 1 + rng.index(6), seed));
        std::vector<std::uint32_t> assignment(n);
        for (std::size_t i = 0; i < n; ++i)
            assignment[i] = static_cast<std::uint32_t>(i < clusters ? i : rng.index(clusters));
        const auto report = silhouette(d, assignment);
        const auto expected = oracle::silhouette(d, assignment);
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(report.per_point[i] - expected[i]));
    }
    return {worst <= kTol, fmt("200 instances, max |s_i - oracle| = %.3g (tol %.0e)", worst, kTol)};
}

Outcome pam_optimality() {
    int equal = 0;
    double worst_ratio = 1.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Xoshiro256 rng(derive_seed(seed, 2));
        const std::size_t n = 3 + rng.index(6);
        const auto d = pairwise_distances(testutil::random_matrix(n, 1 + rng.index(4), derive_seed(seed, 3)));
        const auto c = kmedoids_fit(d, 2, seed);
        const double best = oracle::best_two_medoid_cost(d);
        if (std::abs(c.total_deviation - best) <= 1e-12 * std::max(1.0, best)) ++equal;
        if (best > 0.0) worst_ratio = std::max(worst_ratio, c.total_deviation / best);
    }
    const bool pass = equal >= 190 && worst_ratio <= 1.05;
    return {pass, fmt("optimal in %d/200 (need >= 190), worst cost/optimum = %.4f (limit 1.05)", equal, worst_ratio)};
}

Outcome k_recovery() {
    int hits = 0;
    std::map<std::size_t, int> chosen;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        MixtureSpec spec;
        spec.dim = 2;
        spec.seed = seed;
        spec.exact_counts = true;
        ClassSpec cls{"planted", {}, 200};
        const double weights[] = {0.4, 0.3, 0.2, 0.1};
        const double centers[4][2] = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};  // 10 sigma apart
        for (int k = 0; k < 4; ++k) cls.clusters.push_back({weights[k], {centers[k][0], centers[k][1]}, 1.0});
        spec.classes.push_back(cls);
        const auto g = generate(spec);
        const auto result = select_k(pairwise_distances(g.embeddings), 2, 8, seed);
        ++chosen[result.chosen_k];
        if (result.chosen_k == 4) ++hits;
    }
    std::string hist;
    for (const auto& [k, count] : chosen) hist += fmt(" k=%zu:%d", k, count);
    return {hits >= 48, fmt("k=4 in %d/50 (need >= 48);%s", hits, hist.c_str())};
}

Outcome pca_contracts() {
    double orth = 0.0, residual = 0.0, trace = 0.0, margin = 1.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Xoshiro256 rng(derive_seed(seed, 4));
        const std::size_t n = 2 + rng.index(199);
        const std::size_t d = 1 + rng.index(64);
        const double threshold = seed % 10 == 0 ? 1.0 : 0.3 + 0.7 * rng.uniform();
        auto m = testutil::random_matrix(n, d, seed);
        Matrix data = m.data();
        // random per-column scales over three decades so k varies
        std::vector<double> scale(d);
        for (auto& s : scale) s = std::pow(10.0, 3.0 * rng.uniform() - 1.5);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) data(i, j) = data(i, j) * scale[j] + 0.3 * data(i, (j + 1) % d);
        m = m.with_data(std::move(data));

        const auto [model, reduced] = fit_transform(m, threshold);
        const std::size_t k = model.retained();
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                double dot = 0.0;
                for (std::size_t r = 0; r < d; ++r) dot += model.basis(r, a) * model.basis(r, b);
                orth = std::max(orth, std::abs(dot - (a == b ? 1.0 : 0.0)));
            }
        const Matrix c = covariance(m.data(), model.mean);
        const double rel = std::max(1.0, model.spectrum[0]);
        double tr = 0.0;
        for (std::size_t r = 0; r < d; ++r) tr += c(r, r);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t r = 0; r < d; ++r) {
                double cw = 0.0;
                for (std::size_t t = 0; t < d; ++t) cw += c(r, t) * model.basis(t, i);
                residual = std::max(residual, std::abs(cw - model.eigenvalues[i] * model.basis(r, i)) / rel);
            }
        const double sum = std::accumulate(model.spectrum.begin(), model.spectrum.end(), 0.0);
        trace = std::max(trace, std::abs(sum - tr) / tr);

        double kept = 0.0;
        for (std::size_t i = 0; i < reduced.size(); ++i)
            for (double v : reduced.row(i)) kept += v * v;
        kept /= static_cast<double>(n);
        margin = std::min(margin, kept / tr - threshold);
    }
    const bool pass = orth <= 1e-8 && residual <= 1e-7 && trace <= 1e-8 && margin >= -1e-9;
    return {pass, fmt("orthonormality %.2g (<= 1e-8), residual %.2g (<= 1e-7), trace %.2g (<= 1e-8), "
                      "min(retained ratio - threshold) = %.3g (>= -1e-9)",
                      orth, residual, trace, margin)};
}

Outcome sampling_allocation() {
    const auto fx = testutil::clustered_dataset({{80, 60, 40, 20}});
    const auto is = intelligent_sample(fx.matrix, fx.clusterings, 40, ClusterAllocation::equal, 0);
    std::vector<std::size_t> is_counts(4, 0);
    for (const auto& [key, count] : is.per_cluster) is_counts[key.second] = count;
    const bool is_ok = is_counts == std::vector<std::size_t>{10, 10, 10, 10};

    constexpr int kTrials = 10000;
    std::vector<double> totals(4, 0.0);
    for (int t = 0; t < kTrials; ++t) {
        const auto rs = random_sample(fx.matrix, 40, static_cast<std::uint64_t>(t), fx.clusterings);
        for (const auto& [key, count] : rs.per_cluster) totals[key.second] += static_cast<double>(count);
    }
    const auto expected = rs_expected_counts(std::vector<std::size_t>{80, 60, 40, 20}, 40);
    double worst_mean = 0.0, chi2 = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double mean = totals[k] / kTrials;
        worst_mean = std::max(worst_mean, std::abs(mean - expected[k]) / expected[k]);
        const double e = expected[k] * kTrials;
        chi2 += (totals[k] - e) * (totals[k] - e) / e;
    }
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(3.0), chi2));
    const bool pass = is_ok && worst_mean <= 0.02 && p > 0.001;
    return {pass, fmt("IS counts (%zu,%zu,%zu,%zu); RS means max rel. error %.4f (<= 0.02); "
                      "pooled chi-square %.3f, df 3, p = %.3f (> 0.001)",
                      is_counts[0], is_counts[1], is_counts[2], is_counts[3], worst_mean, chi2, p)};
}

// Sum of the pmf over every count vector of length K summing to `draws`.
double enumerate_pmf(const MultinomialModel& model, std::vector<std::size_t>& counts, std::size_t slot,
                     std::size_t left) {
    if (slot + 1 == counts.size()) {
        counts[slot] = left;
        return multinomial_pmf(model, counts);
    }
    double sum = 0.0;
    for (std::size_t x = 0; x <= left; ++x) {
        counts[slot] = x;
        sum += enumerate_pmf(model, counts, slot + 1, left - x);
    }
    return sum;
}

Outcome pmf_normalization() {
    double worst = 0.0;
    int models = 0;
    for (std::size_t k = 1; k <= 4; ++k)
        for (std::size_t draws = 0; draws <= 8; ++draws)
            for (std::uint64_t seed = 0; seed < 10; ++seed) {
                Xoshiro256 rng(derive_seed(seed, k, draws));
                std::vector<double> p(k);
                for (auto& v : p) v = rng.uniform_open();
                if (seed == 0 && k > 1) p[0] = 0.0;  // a zero-probability category
                const auto weights = largest_remainder(p, 1u << 20);
                for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<double>(weights[i]) / (1u << 20);
                MultinomialModel model{p, draws};
                std::vector<std::size_t> counts(k);
                worst = std::max(worst, std::abs(enumerate_pmf(model, counts, 0, draws) - 1.0));
                ++models;
            }
    return {worst <= 1e-12, fmt("%d models, K <= 4, draws <= 8: max |sum - 1| = %.3g (tol 1e-12)", models, worst)};
}

Outcome metrics_exactness() {
    auto binary = [](std::size_t tp, std::size_t fn, std::size_t fp, std::size_t tn) {
        ConfusionMatrix cm(2);
        cm.add(0, 0, tp);
        cm.add(0, 1, fn);
        cm.add(1, 0, fp);
        cm.add(1, 1, tn);
        return compute_metrics(cm);
    };
    const auto a = binary(40, 10, 10, 40);
    const bool ok_a = a.accuracy == 0.8 && a.precision_macro == 0.8 && a.recall_macro == 0.8 && a.f1_macro == 0.8;
    const auto b = binary(50, 0, 50, 0);
    const bool ok_b = b.accuracy == 0.5 && b.precision_macro == 0.25 && b.recall_macro == 0.5 &&
                      b.f1_macro == 1.0 / 3.0;
    ConfusionMatrix diag(4);
    for (ClassIndex c = 0; c < 4; ++c) diag.add(c, c, 3 + 2 * c);
    const auto p = compute_metrics(diag);
    const bool ok_c = p.accuracy == 1.0 && p.precision_macro == 1.0 && p.recall_macro == 1.0 && p.f1_macro == 1.0;
    return {ok_a && ok_b && ok_c,
            fmt("binary 40/10/10/40 %s; one-sided 50/50 %s (f1 %.17g); diagonal %s", ok_a ? "exact" : "MISMATCH",
                ok_b ? "exact" : "MISMATCH", b.f1_macro, ok_c ? "exact" : "MISMATCH")};
}

// Four classes, four sites. Class c's cluster j sits at site (j + c) mod 4, shifted by
// a class-specific offset, so every site holds one dominant cluster and three rarer
// clusters of the other classes.
MixtureSpec interleaved_mixture() {
    constexpr double kSite = 10.0;
    constexpr double kOffset = 1.5;
    constexpr double kStddev = 0.5;
    const double weights[] = {0.55, 0.25, 0.15, 0.05};
    const double sites[4][2] = {{0, 0}, {kSite, 0}, {0, kSite}, {kSite, kSite}};
    MixtureSpec spec;
    spec.dim = 6;
    spec.seed = 2024;
    spec.exact_counts = true;
    for (std::size_t c = 0; c < 4; ++c) {
        ClassSpec cls{"class" + std::to_string(c), {}, 250};
        for (std::size_t j = 0; j < 4; ++j) {
            const auto& site = sites[(j + c) % 4];
            std::vector<double> center{site[0], site[1], 0.0, 0.0, 0.0, 0.0};
            center[2 + c] = kOffset;
            cls.clusters.push_back({weights[j], center, kStddev});
        }
        spec.classes.push_back(cls);
    }
    return spec;
}

Outcome sampling_advantage() {
    const auto data = generate(interleaved_mixture()).embeddings;
    const auto parts = split(data, {0.7, 0, true});
    std::vector<ClassClustering> clusterings;
    std::string ks;
    for (const auto& [c, members] : partition_by_class(parts.train)) {
        const auto [model, reduced] = fit_transform(members, kDefaultVarianceThreshold);
        clusterings.push_back(cluster_class(reduced, ClusterConfig{}).clustering);
        ks += fmt("%zu", clusterings.back().k);
    }

    CompareConfig config;
    config.fractions = {0.2};
    config.seeds.resize(50);
    std::iota(config.seeds.begin(), config.seeds.end(), std::uint64_t{0});
    config.classifier = {ClassifierKind::knn, 5};
    config.workers = default_workers();
    const auto table = compare(parts.train, parts.test, clusterings, config);

    int wins = 0, losses = 0;
    double rs_sum = 0.0, is_sum = 0.0;
    for (std::size_t i = 0; i < table.rows.size(); i += 2) {
        const double rs = table.rows[i].report.metrics.recall_macro;
        const double is = table.rows[i + 1].report.metrics.recall_macro;
        rs_sum += rs;
        is_sum += is;
        if (is > rs) ++wins;
        if (is < rs) ++losses;
    }
    const int trials = wins + losses;
    // one-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2)
    const double p = trials == 0 ? 1.0
                                 : (wins == 0 ? 1.0
                                              : boost::math::cdf(boost::math::complement(
                                                    boost::math::binomial(trials, 0.5), wins - 1)));
    const double rs_mean = rs_sum / 50.0, is_mean = is_sum / 50.0;
    const bool pass = is_mean > rs_mean && p < 0.01;
    return {pass, fmt("clusters per class %s; mean macro-recall IS %.4f vs RS %.4f; IS wins %d, loses %d, "
                      "ties %d; sign test p = %.2g (< 0.01)",
                      ks.c_str(), is_mean, rs_mean, wins, losses, 50 - trials, p)};
}

Outcome pipeline_determinism() {
    const auto dir = testutil::temp_dir("acceptance_pipeline");
    MixtureSpec spec = interleaved_mixture();
    for (auto& cls : spec.classes) cls.count = 80;
    generate_dataset(spec, dir / "data", EmbeddingFormat::binary, "determinism");
    {
        std::ofstream cfg(dir / "config.json");
        cfg << R"({"manifest": "data/manifest.json", "fractions": [0.2, 0.5], "seeds": [0, 1, 2], "workers": 2})";
    }
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        const auto out = dir / ("out" + std::to_string(r));
        const std::string cmd = std::string(CORESELECT_CLI_PATH) + " --quiet pipeline --config " +
                                (dir / "config.json").string() + " --out " + out.string();
        if (std::system(cmd.c_str()) != 0) return {false, "pipeline run " + std::to_string(r) + " failed"};
        for (const auto& e : fs::recursive_directory_iterator(out)) {
            if (!e.is_regular_file()) continue;
            const auto rel = fs::relative(e.path(), out).string();
            std::ifstream in(e.path(), std::ios::binary);
            std::ostringstream s;
            s << in.rdbuf();
            runs[r][rel] = s.str();
        }
    }
    std::size_t differing = 0;
    for (const auto& [file, bytes] : runs[0]) {
        const auto it = runs[1].find(file);
        if (it == runs[1].end() || it->second != bytes) ++differing;
    }
    if (runs[0].size() != runs[1].size()) ++differing;
    return {differing == 0 && !runs[0].empty(),
            fmt("%zu output files compared across two runs, %zu differ", runs[0].size(), differing)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"silhouette oracle equivalence", 10.0, silhouette_oracle},
        {"PAM optimality at n <= 8, k = 2", 30.0, pam_optimality},
        {"k recovery on 4-cluster mixtures", 120.0, k_recovery},
        {"PCA contracts", 60.0, pca_contracts},
        {"sampling allocation", 60.0, sampling_allocation},
        {"multinomial pmf normalization", 60.0, pmf_normalization},
        {"metrics exactness", 60.0, metrics_exactness},
        {"IS outperforms RS (macro-recall, sign test)", 300.0, sampling_advantage},
        {"end-to-end pipeline determinism", 300.0, pipeline_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.time_limit_s;
        const bool pass = outcome.pass && in_time;
        if (!pass) ++failures;
        std::printf("%s  %s: %s [%.2f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", c.name.c_str(),
                    outcome.detail.c_str(), elapsed, c.time_limit_s);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
