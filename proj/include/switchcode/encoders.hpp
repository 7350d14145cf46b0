#pragma once

#include <utility>
#include <vector>

#include "switchcode/json_util.hpp"

namespace switchcode {

/// Hidden-unit nonlinearities. rectified_linear produces a true zero for
/// non-positive pre-activations, which is what gives the coding family its
/// switching behavior.
enum class Activation { rectified_linear, sigmoid, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

double activate(Activation a, double z);
/// Derivative as a function of the pre-activation. The rectifier's derivative
/// at exactly zero is defined as 0, matching the strict inequality in the
/// active-set definition.
double activate_derivative(Activation a, double z);

Vector activate(Activation a, const Vector& z);
Matrix activate(Activation a, const Matrix& z);
Matrix activate_derivative(Activation a, const Matrix& z);

struct Layer {
    Matrix weights;  // out x in; row j is feature w_j
    Vector bias;     // length out
    Activation activation = Activation::rectified_linear;

    Index out_dim() const { return weights.rows(); }
    Index in_dim() const { return weights.cols(); }
};

/// Encoder/decoder stack.
///
/// Encoder layers apply in order. The decoder mirrors them in application
/// order (innermost first); its last stage is always linear. A tied model
/// stores the dictionary once, as the single encoder layer's weights, and
/// decodes through their transpose; only `decoder_bias` remains free on the
/// decoder side.
struct Model {
    std::vector<Layer> encoder;
    std::vector<Layer> decoder;  // empty when tied
    bool tied = false;
    Vector decoder_bias;         // output bias when tied; unused otherwise

    Index input_dim() const { return encoder.front().in_dim(); }
    Index code_dim() const { return encoder.back().out_dim(); }

    const Vector& output_bias() const {
        return tied ? decoder_bias : decoder.back().bias;
    }
    Vector& output_bias() { return tied ? decoder_bias : decoder.back().bias; }

    /// Checks layer chaining, the tied-model structure, and finiteness.
    void validate() const;
};

/// Code vector plus the indices of strictly positive entries.
struct Encoding {
    Vector h;
    std::vector<Index> active_set;
};

Encoding encode(const Model& model, const Vector& x);
/// Codes for every row of `samples`, returned with one row per sample.
Matrix encode_batch(const Model& model, const Matrix& samples);

Vector decode(const Model& model, const Vector& h);

/// Indices with strictly positive pre-activation, sorted ascending.
std::vector<Index> active_set(const Layer& layer, const Vector& x);

/// Reconstruction loss restricted to the active columns of a tied,
/// single-layer rectified model: 0.5 * || D_psi (D_psi^T x + b_psi) - x ||^2.
double loss_active(const Model& model, const Vector& x);

/// h_i = max(0, mu - ||x - c_i||) with mu the mean distance to all centroids.
/// Centroid i is row i of `centroids`.
Vector triangle_kmeans_encode(const Matrix& centroids, const Vector& x);

/// h_i = max(0, d_i^T x - lambda) where d_i is column i of `dictionary`.
Vector soft_threshold_encode(const Matrix& dictionary, double lambda,
                             const Vector& x);

/// The maximally negative partner of feature j in a tied single-layer model:
/// argmin over other rows i of w_j . w_i, lowest index winning ties.
/// Returns the partner index and the dot product.
std::pair<Index, double> negative_pair(const Model& model, Index j);

Json model_to_json(const Model& model);
Model model_from_json(const Json& j);
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace switchcode
