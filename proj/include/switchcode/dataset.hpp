#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "switchcode/common.hpp"

namespace switchcode {

enum class DataSource { gaussian, mog, line_manifold, mnist, file };

std::string to_string(DataSource s);

/// Row-major collection of samples: row i is one n-dimensional observation.
struct Dataset {
    Matrix samples;
    DataSource source = DataSource::file;
    std::optional<std::uint64_t> seed;
    /// Present only when an MNIST label file was loaded alongside the images.
    std::optional<std::vector<std::uint8_t>> labels;

    Index num_samples() const { return samples.rows(); }
    Index dim() const { return samples.cols(); }

    /// Checks the structural invariants; throws std::invalid_argument.
    void validate() const;
};

struct GaussianComponent {
    double weight = 0.0;
    Vector mean;
    Matrix covariance;
};

struct MixtureSpec {
    std::vector<GaussianComponent> components;
    void validate() const;
};

Dataset gen_gaussian(Index num_samples, const Vector& mean,
                     const Matrix& covariance, std::uint64_t seed);

Dataset gen_mog(Index num_samples, const MixtureSpec& spec,
                std::uint64_t seed);

/// Rows are [x, eps] with x uniform on (0, extent) and eps ~ N(0, noise_std^2).
Dataset gen_line_manifold(Index num_samples, double extent, double noise_std,
                          std::uint64_t seed);

/// Reads IDX-format images (magic 0x00000803), flattening each image row-major
/// and scaling pixel bytes to [0, 1]. If a label path is given its count must
/// match the image count (magic 0x00000801).
Dataset load_mnist_idx(const std::string& images_path,
                       const std::optional<std::string>& labels_path = {});

/// Writes samples back to IDX as unsigned bytes; entries must lie in [0, 1]
/// and dim() must equal rows*cols.
void write_idx_images(const Dataset& data, Index rows, Index cols,
                      const std::string& path);
void write_idx_labels(const std::vector<std::uint8_t>& labels,
                      const std::string& path);

/// CSV interchange: header row "x0,...,x{n-1}", one sample per line,
/// 17 significant digits so values round-trip exactly.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path);

/// Matrix square root of a PSD covariance via eigendecomposition, accepting
/// singular matrices. Eigenvalues below 1e-12 are clamped to zero; anything
/// below -1e-12 is rejected with the offending eigenvalue in the message.
Matrix covariance_sqrt(const Matrix& covariance);

}  // namespace switchcode
