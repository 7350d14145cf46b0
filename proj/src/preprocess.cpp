#include "switchcode/preprocess.hpp"

#include <cmath>

#include "switchcode/eigensym.hpp"

namespace switchcode {

std::string to_string(WhitenMode m) {
    return m == WhitenMode::pca ? "pca" : "zca";
}

WhitenMode whiten_mode_from_string(const std::string& s) {
    if (s == "pca") return WhitenMode::pca;
    if (s == "zca") return WhitenMode::zca;
    throw ConfigError("unknown whitening mode: " + s);
}

Matrix sample_covariance(const Matrix& samples) {
    const Index n_samples = samples.rows();
    const Index dim = samples.cols();
    if (n_samples < 2) return Matrix::Zero(dim, dim);
    const Vector mean = samples.colwise().mean();
    const Matrix centered = samples.rowwise() - mean.transpose();
    return (centered.transpose() * centered) / double(n_samples - 1);
}

PcaBasis fit_pca(const Dataset& data, Index k) {
    data.validate();
    const Index limit = std::min(data.num_samples(), data.dim());
    if (k < 1 || k > limit) {
        throw std::invalid_argument("fit_pca: k must be in [1, min(num_samples, dim)], got " +
                                    std::to_string(k));
    }
    const SymmetricEigen eig = eigen_symmetric(sample_covariance(data.samples));

    PcaBasis basis;
    basis.mean = data.samples.colwise().mean();
    basis.components = eig.eigenvectors.topRows(k);
    basis.eigenvalues = eig.eigenvalues.head(k).cwiseMax(0.0);
    return basis;
}

Matrix pca_project(const PcaBasis& basis, const Matrix& samples) {
    if (samples.cols() != basis.dim()) {
        throw std::invalid_argument("pca_project: dimension mismatch");
    }
    return (samples.rowwise() - basis.mean.transpose()) * basis.components.transpose();
}

Matrix pca_reconstruct(const PcaBasis& basis, const Matrix& codes) {
    if (codes.cols() != basis.k()) {
        throw std::invalid_argument("pca_reconstruct: dimension mismatch");
    }
    return (codes * basis.components).rowwise() + basis.mean.transpose();
}

WhitenTransform whiten_fit(const Dataset& data, double epsilon, WhitenMode mode) {
    data.validate();
    if (data.num_samples() < 2) {
        throw std::invalid_argument("whiten_fit: need at least two samples");
    }
    if (epsilon < 0.0) {
        throw std::invalid_argument("whiten_fit: epsilon must be nonnegative");
    }
    const SymmetricEigen eig = eigen_symmetric(sample_covariance(data.samples));

    WhitenTransform t;
    t.mean = data.samples.colwise().mean();
    t.rotation = eig.eigenvectors;
    t.epsilon = epsilon;
    t.mode = mode;
    t.scales.resize(eig.eigenvalues.size());
    for (Index i = 0; i < t.scales.size(); ++i) {
        const double lambda = std::max(eig.eigenvalues[i], 0.0) + epsilon;
        t.scales[i] = lambda > 0.0 ? 1.0 / std::sqrt(lambda) : 1.0;
    }
    return t;
}

namespace {

void check_dim(const WhitenTransform& t, const Dataset& data, const char* who) {
    if (data.dim() != t.dim()) {
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    }
}

}  // namespace

Dataset whiten_apply(const WhitenTransform& t, const Dataset& data) {
    check_dim(t, data, "whiten_apply");
    Dataset out;
    // Row convention: y = scales o (R (x - mean)) becomes (x - mean) R^T diag(s).
    out.samples = ((data.samples.rowwise() - t.mean.transpose()) *
                   t.rotation.transpose()) *
                  t.scales.asDiagonal();
    if (t.mode == WhitenMode::zca) {
        out.samples = out.samples * t.rotation;
    }
    out.source = DataSource::file;  // derived data, mnist range no longer holds
    out.seed = data.seed;
    return out;
}

Dataset whiten_invert(const WhitenTransform& t, const Dataset& data) {
    check_dim(t, data, "whiten_invert");
    Dataset out;
    Matrix y = data.samples;
    if (t.mode == WhitenMode::zca) {
        y = y * t.rotation.transpose();
    }
    y = y * t.scales.cwiseInverse().asDiagonal();
    out.samples = (y * t.rotation).rowwise() + t.mean.transpose();
    out.source = DataSource::file;
    out.seed = data.seed;
    return out;
}

Json pca_to_json(const PcaBasis& basis) {
    Json j;
    j["format_version"] = 1;
    j["kind"] = "pca_basis";
    j["dim"] = basis.dim();
    j["k"] = basis.k();
    j["mean"] = vector_to_json(basis.mean);
    j["components"] = matrix_to_json(basis.components);
    j["eigenvalues"] = vector_to_json(basis.eigenvalues);
    return j;
}

PcaBasis pca_from_json(const Json& j) {
    if (j.value("kind", "") != "pca_basis" || j.value("format_version", 0) != 1) {
        throw DataError("not a version-1 pca_basis document");
    }
    PcaBasis basis;
    const Index dim = j.at("dim").get<Index>();
    const Index k = j.at("k").get<Index>();
    basis.mean = vector_from_json(j.at("mean"));
    basis.components = matrix_from_json(j.at("components"), k, dim);
    basis.eigenvalues = vector_from_json(j.at("eigenvalues"));
    return basis;
}

Json whiten_to_json(const WhitenTransform& t) {
    Json j;
    j["format_version"] = 1;
    j["kind"] = "whiten_transform";
    j["dim"] = t.dim();
    j["mode"] = to_string(t.mode);
    j["epsilon"] = t.epsilon;
    j["mean"] = vector_to_json(t.mean);
    j["rotation"] = matrix_to_json(t.rotation);
    j["scales"] = vector_to_json(t.scales);
    return j;
}

WhitenTransform whiten_from_json(const Json& j) {
    if (j.value("kind", "") != "whiten_transform" ||
        j.value("format_version", 0) != 1) {
        throw DataError("not a version-1 whiten_transform document");
    }
    WhitenTransform t;
    const Index dim = j.at("dim").get<Index>();
    t.mode = whiten_mode_from_string(j.at("mode").get<std::string>());
    t.epsilon = j.at("epsilon").get<double>();
    t.mean = vector_from_json(j.at("mean"));
    t.rotation = matrix_from_json(j.at("rotation"), dim, dim);
    t.scales = vector_from_json(j.at("scales"));
    return t;
}

}  // namespace switchcode
