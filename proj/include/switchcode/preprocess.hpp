#pragma once

#include "switchcode/dataset.hpp"
#include "switchcode/json_util.hpp"

namespace switchcode {

/// Principal component basis: rows of `components` are orthonormal
/// eigenvectors of the sample covariance, paired with `eigenvalues`
/// (descending, clamped at zero).
struct PcaBasis {
    Vector mean;
    Matrix components;  // k x n
    Vector eigenvalues; // length k

    Index k() const { return components.rows(); }
    Index dim() const { return components.cols(); }
};

enum class WhitenMode { pca, zca };

std::string to_string(WhitenMode m);
WhitenMode whiten_mode_from_string(const std::string& s);

/// Affine whitening transform. scales[i] = 1/sqrt(eigenvalue_i + epsilon);
/// directions with eigenvalue + epsilon == 0 get scale 1 so the transform
/// stays finite and invertible.
struct WhitenTransform {
    Vector mean;
    Matrix rotation;  // n x n, rows are eigenvectors
    Vector scales;
    double epsilon = 0.0;
    WhitenMode mode = WhitenMode::pca;

    Index dim() const { return rotation.rows(); }
};

/// Sample covariance with 1/(N-1) normalization (zero matrix when N == 1).
Matrix sample_covariance(const Matrix& samples);

PcaBasis fit_pca(const Dataset& data, Index k);

/// Projects samples (N x n) onto the basis, giving codes (N x k).
Matrix pca_project(const PcaBasis& basis, const Matrix& samples);
/// Maps codes (N x k) back to input space (N x n).
Matrix pca_reconstruct(const PcaBasis& basis, const Matrix& codes);

WhitenTransform whiten_fit(const Dataset& data, double epsilon, WhitenMode mode);
Dataset whiten_apply(const WhitenTransform& t, const Dataset& data);
Dataset whiten_invert(const WhitenTransform& t, const Dataset& data);

Json pca_to_json(const PcaBasis& basis);
PcaBasis pca_from_json(const Json& j);
Json whiten_to_json(const WhitenTransform& t);
WhitenTransform whiten_from_json(const Json& j);

}  // namespace switchcode
