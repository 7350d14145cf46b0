#include "switchcode/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "switchcode/eigensym.hpp"
#include "switchcode/rng.hpp"

namespace switchcode {

std::string to_string(DataSource s) {
    switch (s) {
        case DataSource::gaussian: return "gaussian";
        case DataSource::mog: return "mog";
        case DataSource::line_manifold: return "line_manifold";
        case DataSource::mnist: return "mnist";
        case DataSource::file: return "file";
    }
    return "file";
}

void Dataset::validate() const {
    if (samples.rows() < 1 || samples.cols() < 1) {
        throw std::invalid_argument("Dataset: need at least one sample and one dimension");
    }
    if (!samples.allFinite()) {
        throw std::invalid_argument("Dataset: samples contain NaN or Inf");
    }
    if (source == DataSource::mnist) {
        if (samples.minCoeff() < 0.0 || samples.maxCoeff() > 1.0) {
            throw std::invalid_argument("Dataset: mnist entries must lie in [0, 1]");
        }
    }
    if (labels && static_cast<Index>(labels->size()) != samples.rows()) {
        throw std::invalid_argument("Dataset: label count does not match sample count");
    }
}

void MixtureSpec::validate() const {
    if (components.empty()) {
        throw std::invalid_argument("MixtureSpec: component list is empty");
    }
    double total = 0.0;
    const Index n = components.front().mean.size();
    for (const auto& c : components) {
        if (c.weight < 0.0) {
            throw std::invalid_argument("MixtureSpec: negative component weight");
        }
        if (c.mean.size() != n || c.covariance.rows() != n || c.covariance.cols() != n) {
            throw std::invalid_argument("MixtureSpec: component dimensions disagree");
        }
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("MixtureSpec: weights sum to " + std::to_string(total) +
                                    ", expected 1");
    }
}

Matrix covariance_sqrt(const Matrix& covariance) {
    const SymmetricEigen eig = eigen_symmetric(covariance);
    Vector scaled(eig.eigenvalues.size());
    for (Index i = 0; i < eig.eigenvalues.size(); ++i) {
        const double lambda = eig.eigenvalues[i];
        if (lambda < -1e-12) {
            throw std::invalid_argument(
                "covariance is not PSD: eigenvalue " + std::to_string(lambda));
        }
        scaled[i] = lambda < 1e-12 ? 0.0 : std::sqrt(lambda);
    }
    return eig.eigenvectors.transpose() * scaled.asDiagonal();
}

Dataset gen_gaussian(Index num_samples, const Vector& mean,
                     const Matrix& covariance, std::uint64_t seed) {
    if (num_samples < 1) {
        throw std::invalid_argument("gen_gaussian: num_samples must be >= 1");
    }
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
        throw std::invalid_argument("gen_gaussian: covariance shape does not match mean");
    }
    const Matrix root = covariance_sqrt(covariance);
    const Index n = mean.size();

    Rng rng(seed);
    Dataset data;
    data.samples.resize(num_samples, n);
    Vector z(n);
    for (Index i = 0; i < num_samples; ++i) {
        for (Index j = 0; j < n; ++j) z[j] = rng.normal();
        data.samples.row(i) = (mean + root * z).transpose();
    }
    data.source = DataSource::gaussian;
    data.seed = seed;
    data.validate();
    return data;
}

Dataset gen_mog(Index num_samples, const MixtureSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (num_samples < 1) {
        throw std::invalid_argument("gen_mog: num_samples must be >= 1");
    }
    const Index n = spec.components.front().mean.size();
    const std::size_t k = spec.components.size();

    std::vector<Matrix> roots;
    std::vector<double> cumulative;
    roots.reserve(k);
    double running = 0.0;
    for (const auto& c : spec.components) {
        roots.push_back(covariance_sqrt(c.covariance));
        running += c.weight;
        cumulative.push_back(running);
    }

    Rng rng(seed);
    Dataset data;
    data.samples.resize(num_samples, n);
    Vector z(n);
    for (Index i = 0; i < num_samples; ++i) {
        std::size_t pick = 0;
        if (k > 1) {
            // A one-component mixture skips this draw so it is bit-identical
            // to gen_gaussian with the same seed.
            const double u = rng.uniform();
            pick = k - 1;
            for (std::size_t j = 0; j < k; ++j) {
                if (u < cumulative[j]) {
                    pick = j;
                    break;
                }
            }
        }
        for (Index j = 0; j < n; ++j) z[j] = rng.normal();
        data.samples.row(i) =
            (spec.components[pick].mean + roots[pick] * z).transpose();
    }
    data.source = DataSource::mog;
    data.seed = seed;
    data.validate();
    return data;
}

Dataset gen_line_manifold(Index num_samples, double extent, double noise_std,
                          std::uint64_t seed) {
    if (extent <= 0.0) {
        throw std::invalid_argument("gen_line_manifold: extent must be positive");
    }
    if (noise_std < 0.0) {
        throw std::invalid_argument("gen_line_manifold: noise_std must be nonnegative");
    }
    if (num_samples < 1) {
        throw std::invalid_argument("gen_line_manifold: num_samples must be >= 1");
    }
    Rng rng(seed);
    Dataset data;
    data.samples.resize(num_samples, 2);
    for (Index i = 0; i < num_samples; ++i) {
        data.samples(i, 0) = rng.uniform_open() * extent;
        data.samples(i, 1) = noise_std * rng.normal();
    }
    data.source = DataSource::line_manifold;
    data.seed = seed;
    data.validate();
    return data;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    std::uint8_t bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw DataError("IDX format error: truncated header in " + path);
    return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
           (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::uint8_t bytes[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                                   std::uint8_t(v >> 8), std::uint8_t(v)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::optional<std::string>& labels_path) {
    std::ifstream in(images_path, std::ios::binary);
    if (!in) throw DataError("cannot open IDX image file: " + images_path);

    const std::uint32_t magic = read_be32(in, images_path);
    if (magic != 0x00000803u) {
        throw DataError("IDX format error: bad image magic in " + images_path);
    }
    const std::uint32_t count = read_be32(in, images_path);
    const std::uint32_t rows = read_be32(in, images_path);
    const std::uint32_t cols = read_be32(in, images_path);
    if (count == 0) {
        throw DataError("IDX format error: empty image file " + images_path);
    }
    const std::size_t pixels = std::size_t(rows) * cols;
    if (pixels == 0) {
        throw DataError("IDX format error: zero image dimensions in " + images_path);
    }

    Dataset data;
    data.samples.resize(Index(count), Index(pixels));
    std::vector<std::uint8_t> row(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(pixels));
        if (!in) {
            throw DataError("IDX format error: truncated image payload in " +
                            images_path);
        }
        for (std::size_t p = 0; p < pixels; ++p) {
            data.samples(Index(i), Index(p)) = double(row[p]) / 255.0;
        }
    }
    data.source = DataSource::mnist;

    if (labels_path) {
        std::ifstream lin(*labels_path, std::ios::binary);
        if (!lin) throw DataError("cannot open IDX label file: " + *labels_path);
        const std::uint32_t lmagic = read_be32(lin, *labels_path);
        if (lmagic != 0x00000801u) {
            throw DataError("IDX format error: bad label magic in " + *labels_path);
        }
        const std::uint32_t lcount = read_be32(lin, *labels_path);
        if (lcount != count) {
            throw DataError("IDX consistency error: " + std::to_string(count) +
                            " images but " + std::to_string(lcount) + " labels");
        }
        std::vector<std::uint8_t> labels(lcount);
        lin.read(reinterpret_cast<char*>(labels.data()), lcount);
        if (!lin) {
            throw DataError("IDX format error: truncated label payload in " +
                            *labels_path);
        }
        data.labels = std::move(labels);
    }

    data.validate();
    return data;
}

void write_idx_images(const Dataset& data, Index rows, Index cols,
                      const std::string& path) {
    if (rows * cols != data.dim()) {
        throw std::invalid_argument("write_idx_images: rows*cols must equal dim");
    }
    if (data.samples.minCoeff() < 0.0 || data.samples.maxCoeff() > 1.0) {
        throw DataError("write_idx_images: entries outside [0, 1] cannot be quantized");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_be32(out, 0x00000803u);
    write_be32(out, std::uint32_t(data.num_samples()));
    write_be32(out, std::uint32_t(rows));
    write_be32(out, std::uint32_t(cols));
    std::vector<std::uint8_t> row(static_cast<std::size_t>(data.dim()));
    for (Index i = 0; i < data.num_samples(); ++i) {
        for (Index p = 0; p < data.dim(); ++p) {
            row[static_cast<std::size_t>(p)] =
                std::uint8_t(std::lround(data.samples(i, p) * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
}

void write_idx_labels(const std::vector<std::uint8_t>& labels,
                      const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    write_be32(out, 0x00000801u);
    write_be32(out, std::uint32_t(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (Index j = 0; j < data.dim(); ++j) {
        if (j > 0) out << ',';
        out << 'x' << j;
    }
    out << '\n';
    char buf[40];
    for (Index i = 0; i < data.num_samples(); ++i) {
        for (Index j = 0; j < data.dim(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.samples(i, j));
            if (j > 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV is empty: " + path);

    Index n = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) ++n;
        if (n == 0) throw DataError("CSV header has no columns: " + path);
    }

    std::vector<double> values;
    Index num_rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        Index got = 0;
        while (std::getline(row, cell, ',')) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw DataError("CSV parse error in " + path + ": '" + cell + "'");
            }
            if (used != cell.size()) {
                throw DataError("CSV parse error in " + path + ": '" + cell + "'");
            }
            values.push_back(v);
            ++got;
        }
        if (got != n) {
            throw DataError("CSV row " + std::to_string(num_rows + 1) + " in " + path +
                            " has " + std::to_string(got) + " cells, expected " +
                            std::to_string(n));
        }
        ++num_rows;
    }
    if (num_rows == 0) throw DataError("CSV has no data rows: " + path);

    Dataset data;
    data.samples.resize(num_rows, n);
    for (Index i = 0; i < num_rows; ++i) {
        for (Index j = 0; j < n; ++j) {
            data.samples(i, j) = values[static_cast<std::size_t>(i * n + j)];
        }
    }
    data.source = DataSource::file;
    data.validate();
    return data;
}

}  // namespace switchcode
