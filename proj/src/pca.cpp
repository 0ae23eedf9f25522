#include "coreselect/pca.hpp"

#include "coreselect/binary.hpp"
#include "coreselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coreselect {

SymmetricEigen jacobi_eigen(Matrix a, int max_sweeps) {
    const std::size_t n = a.rows();
    require(a.cols() == n && n >= 1, Errc::shape, "jacobi_eigen needs a non-empty square matrix");

    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    double frob = 0.0;
    for (double x : a.values()) frob += x * x;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= 1e-32 * frob || off == 0.0) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 0.5 / theta;
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });

    SymmetricEigen out{std::vector<double>(n), Matrix(n, n), sweep};
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = a(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

std::vector<double> column_means(const Matrix& data) {
    std::vector<double> mean(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto r = data.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) mean[j] += r[j];
    }
    for (double& x : mean) x /= static_cast<double>(data.rows());
    return mean;
}

Matrix covariance(const Matrix& data, const std::vector<double>& mean) {
    const std::size_t d = data.cols();
    Matrix cov(d, d, 0.0);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto r = data.row(i);
        for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mean[j];
        for (std::size_t p = 0; p < d; ++p) {
            const double cp = centered[p];
            for (std::size_t q = p; q < d; ++q) cov(p, q) += cp * centered[q];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(data.rows());
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = p; q < d; ++q) {
            cov(p, q) *= inv_n;
            cov(q, p) = cov(p, q);
        }
    }
    return cov;
}

double PcaModel::total_variance() const noexcept {
    return std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
}

namespace {

std::vector<double> cumulative_ratios(const std::vector<double>& spectrum) {
    const double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    std::vector<double> ratios(spectrum.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        acc += spectrum[i];
        ratios[i] = acc / total;
    }
    return ratios;
}

PcaModel assemble(std::vector<double> mean, std::vector<double> spectrum, const Matrix& vectors, std::size_t k) {
    const std::size_t d = mean.size();
    PcaModel model;
    model.mean = std::move(mean);
    model.basis = Matrix(d, k);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < k; ++c) model.basis(r, c) = vectors(r, c);
    auto ratios = cumulative_ratios(spectrum);
    model.eigenvalues.assign(spectrum.begin(), spectrum.begin() + static_cast<std::ptrdiff_t>(k));
    model.explained_ratio.assign(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(k));
    model.spectrum = std::move(spectrum);
    return model;
}

}  // namespace

PcaModel fit_pca(const EmbeddingMatrix& m, double threshold) {
    require(threshold > 0.0 && threshold <= 1.0, Errc::parameter, "PCA threshold must lie in (0, 1]");
    require(m.size() >= 2, Errc::size, "PCA fit needs at least two rows");

    const std::size_t d = m.dim();
    auto mean = column_means(m.data());
    auto eig = jacobi_eigen(covariance(m.data(), mean));

    double scale = 0.0;
    for (double x : m.data().values()) scale = std::max(scale, std::abs(x));
    std::vector<double> spectrum(d);
    for (std::size_t i = 0; i < d; ++i) spectrum[i] = std::max(eig.values[i], 0.0);
    const double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    const double floor = 1e-24 * std::max(scale * scale, 1e-300) * static_cast<double>(d);
    require(total > floor, Errc::degenerate, "zero total variance: all rows are identical");

    for (std::size_t c = 0; c < d; ++c) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < d; ++r)
            if (std::abs(eig.vectors(r, c)) > std::abs(eig.vectors(arg, c))) arg = r;
        if (eig.vectors(arg, c) < 0.0)
            for (std::size_t r = 0; r < d; ++r) eig.vectors(r, c) = -eig.vectors(r, c);
    }

    const auto ratios = cumulative_ratios(spectrum);
    std::size_t k = d;
    for (std::size_t i = 0; i < d; ++i) {
        if (ratios[i] >= threshold) {
            k = i + 1;
            break;
        }
    }
    return assemble(std::move(mean), std::move(spectrum), eig.vectors, k);
}

EmbeddingMatrix transform(const PcaModel& model, const EmbeddingMatrix& m) {
    require(m.dim() == model.input_dim(), Errc::shape,
            "PCA model expects dimension " + std::to_string(model.input_dim()) + ", got " +
                std::to_string(m.dim()));
    const std::size_t d = model.input_dim();
    const std::size_t k = model.retained();
    Matrix out(m.size(), k, 0.0);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - model.mean[j];
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += centered[j] * model.basis(j, c);
            out(i, c) = acc;
        }
    }
    return m.with_data(std::move(out));
}

std::pair<PcaModel, EmbeddingMatrix> fit_transform(const EmbeddingMatrix& m, double threshold) {
    auto model = fit_pca(m, threshold);
    auto reduced = transform(model, m);
    return {std::move(model), std::move(reduced)};
}

void write_pca(std::ostream& out, const PcaModel& model) {
    using namespace binary;
    out.write("CPCA", 4);
    write_le(out, kPcaFormatVersion);
    write_le(out, static_cast<std::uint32_t>(model.input_dim()));
    write_le(out, static_cast<std::uint32_t>(model.retained()));
    for (double x : model.mean) write_f64(out, x);
    for (double x : model.spectrum) write_f64(out, x);
    for (double x : model.basis.values()) write_f64(out, x);
}

PcaModel read_pca(std::istream& in) {
    using namespace binary;
    expect_magic(in, "CPCA");
    const auto version = read_le<std::uint16_t>(in, "version");
    require(version == kPcaFormatVersion, Errc::format, "unsupported PCA section version " + std::to_string(version));
    const auto d = read_le<std::uint32_t>(in, "d");
    const auto k = read_le<std::uint32_t>(in, "k");
    require(d >= 1 && k >= 1 && k <= d && d <= (1u << 16), Errc::format, "PCA section has invalid d/k");
    std::vector<double> mean(d);
    for (auto& x : mean) x = read_f64(in, "mean");
    std::vector<double> spectrum(d);
    for (auto& x : spectrum) x = read_f64(in, "spectrum");
    Matrix basis(d, k);
    for (auto& x : basis.values()) x = read_f64(in, "basis");
    return assemble(std::move(mean), std::move(spectrum), basis, k);
}

}  // namespace coreselect
