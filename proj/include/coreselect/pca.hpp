#pragma once

#include "coreselect/dataset.hpp"
#include "coreselect/matrix.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace coreselect {

inline constexpr double kDefaultVarianceThreshold = 0.95;

/// Eigen-decomposition of a symmetric matrix: values descending, vectors as columns.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;
    int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
SymmetricEigen jacobi_eigen(Matrix symmetric, int max_sweeps = 100);

/// Column means of the rows.
std::vector<double> column_means(const Matrix& data);

/// Population covariance (divisor N) of the mean-centered rows.
Matrix covariance(const Matrix& data, const std::vector<double>& mean);

/// Principal-component projection fitted to one embedding matrix.
///
/// `spectrum` keeps all d eigenvalues (negatives from round-off clamped to 0), sorted
/// descending; `eigenvalues` and `explained_ratio` cover the k retained components.
/// Each basis column is oriented so its largest-magnitude entry is non-negative.
struct PcaModel {
    std::vector<double> mean;
    Matrix basis;  // d x k
    std::vector<double> eigenvalues;
    std::vector<double> explained_ratio;  // cumulative
    std::vector<double> spectrum;

    std::size_t input_dim() const noexcept { return mean.size(); }
    std::size_t retained() const noexcept { return basis.cols(); }
    double total_variance() const noexcept;

    bool operator==(const PcaModel&) const = default;
};

/// Fits on mean-centered data and keeps the smallest k whose cumulative explained
/// variance reaches `threshold`.
PcaModel fit_pca(const EmbeddingMatrix& m, double threshold = kDefaultVarianceThreshold);

/// Row i becomes (row_i - mean) * basis. Ids and labels pass through.
EmbeddingMatrix transform(const PcaModel& model, const EmbeddingMatrix& m);

std::pair<PcaModel, EmbeddingMatrix> fit_transform(const EmbeddingMatrix& m,
                                                   double threshold = kDefaultVarianceThreshold);

inline constexpr std::uint16_t kPcaFormatVersion = 1;

// "CPCA", u16 version, u32 d, u32 k, d x f64 mean, d x f64 spectrum, d*k f64 basis row-major.
void write_pca(std::ostream& out, const PcaModel& model);
PcaModel read_pca(std::istream& in);

}  // namespace coreselect
