#include "switchcode/encoders.hpp"

#include <cmath>
#include <fstream>

namespace switchcode {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::rectified_linear: return "rectified_linear";
        case Activation::sigmoid: return "sigmoid";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "rectified_linear" || s == "relu") return Activation::rectified_linear;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "identity" || s == "linear") return Activation::identity;
    throw ConfigError("unknown activation: " + s);
}

double activate(Activation a, double z) {
    switch (a) {
        case Activation::rectified_linear: return z > 0.0 ? z : 0.0;
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::identity: return z;
    }
    return z;
}

double activate_derivative(Activation a, double z) {
    switch (a) {
        case Activation::rectified_linear: return z > 0.0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

Vector activate(Activation a, const Vector& z) {
    Vector out(z.size());
    for (Index i = 0; i < z.size(); ++i) out[i] = activate(a, z[i]);
    return out;
}

Matrix activate(Activation a, const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Index j = 0; j < z.cols(); ++j) {
        for (Index i = 0; i < z.rows(); ++i) out(i, j) = activate(a, z(i, j));
    }
    return out;
}

Matrix activate_derivative(Activation a, const Matrix& z) {
    Matrix out(z.rows(), z.cols());
    for (Index j = 0; j < z.cols(); ++j) {
        for (Index i = 0; i < z.rows(); ++i) {
            out(i, j) = activate_derivative(a, z(i, j));
        }
    }
    return out;
}

void Model::validate() const {
    if (encoder.empty()) throw std::invalid_argument("Model: no encoder layers");
    for (std::size_t l = 0; l < encoder.size(); ++l) {
        const Layer& layer = encoder[l];
        if (layer.bias.size() != layer.out_dim()) {
            throw std::invalid_argument("Model: encoder bias length mismatch");
        }
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
            throw std::invalid_argument("Model: non-finite encoder parameters");
        }
        if (l > 0 && layer.in_dim() != encoder[l - 1].out_dim()) {
            throw std::invalid_argument("Model: encoder layer shapes do not chain");
        }
    }
    if (tied) {
        if (encoder.size() != 1) {
            throw std::invalid_argument("Model: tied weights require exactly one encoder layer");
        }
        if (!decoder.empty()) {
            throw std::invalid_argument("Model: tied model must not store decoder weights");
        }
        if (decoder_bias.size() != input_dim()) {
            throw std::invalid_argument("Model: tied decoder bias length mismatch");
        }
        if (!decoder_bias.allFinite()) {
            throw std::invalid_argument("Model: non-finite decoder bias");
        }
        return;
    }
    if (decoder.size() != encoder.size()) {
        throw std::invalid_argument("Model: decoder must mirror encoder layer count");
    }
    const std::size_t depth = encoder.size();
    for (std::size_t i = 0; i < depth; ++i) {
        const Layer& dec = decoder[i];
        const Layer& mirror = encoder[depth - 1 - i];
        if (dec.in_dim() != mirror.out_dim() || dec.out_dim() != mirror.in_dim()) {
            throw std::invalid_argument("Model: decoder layer " + std::to_string(i) +
                                        " does not mirror encoder shapes");
        }
        if (dec.bias.size() != dec.out_dim()) {
            throw std::invalid_argument("Model: decoder bias length mismatch");
        }
        if (!dec.weights.allFinite() || !dec.bias.allFinite()) {
            throw std::invalid_argument("Model: non-finite decoder parameters");
        }
    }
    if (decoder.back().activation != Activation::identity) {
        throw std::invalid_argument("Model: final decoder stage must be linear");
    }
}

Encoding encode(const Model& model, const Vector& x) {
    if (x.size() != model.input_dim()) {
        throw std::invalid_argument("encode: input dimension mismatch");
    }
    Vector a = x;
    for (const Layer& layer : model.encoder) {
        Vector z = layer.weights * a;
        z += layer.bias;
        a = activate(layer.activation, z);
    }
    Encoding enc;
    enc.h = std::move(a);
    for (Index j = 0; j < enc.h.size(); ++j) {
        if (enc.h[j] > 0.0) enc.active_set.push_back(j);
    }
    return enc;
}

Matrix encode_batch(const Model& model, const Matrix& samples) {
    if (samples.cols() != model.input_dim()) {
        throw std::invalid_argument("encode_batch: input dimension mismatch");
    }
    Matrix a = samples.transpose();
    for (const Layer& layer : model.encoder) {
        Matrix z = layer.weights * a;
        z.colwise() += layer.bias;
        a = activate(layer.activation, z);
    }
    return a.transpose();
}

Vector decode(const Model& model, const Vector& h) {
    if (h.size() != model.code_dim()) {
        throw std::invalid_argument("decode: code dimension mismatch");
    }
    if (model.tied) {
        return model.encoder.front().weights.transpose() * h + model.decoder_bias;
    }
    Vector a = h;
    for (const Layer& stage : model.decoder) {
        Vector z = stage.weights * a;
        z += stage.bias;
        a = activate(stage.activation, z);
    }
    return a;
}

std::vector<Index> active_set(const Layer& layer, const Vector& x) {
    if (x.size() != layer.in_dim()) {
        throw std::invalid_argument("active_set: input dimension mismatch");
    }
    Vector z = layer.weights * x;
    z += layer.bias;
    std::vector<Index> psi;
    for (Index j = 0; j < z.size(); ++j) {
        if (z[j] > 0.0) psi.push_back(j);
    }
    return psi;
}

double loss_active(const Model& model, const Vector& x) {
    if (!model.tied || model.encoder.size() != 1 ||
        model.encoder.front().activation != Activation::rectified_linear) {
        throw std::invalid_argument(
            "loss_active: requires a tied single-layer rectified model");
    }
    if (x.size() != model.input_dim()) {
        throw std::invalid_argument("loss_active: input dimension mismatch");
    }
    const Layer& layer = model.encoder.front();
    const std::vector<Index> psi = active_set(layer, x);

    // Active sub-dictionary: columns of D = W^T picked by psi.
    Matrix d_active(x.size(), static_cast<Index>(psi.size()));
    Vector b_active(static_cast<Index>(psi.size()));
    for (std::size_t c = 0; c < psi.size(); ++c) {
        d_active.col(static_cast<Index>(c)) = layer.weights.row(psi[c]).transpose();
        b_active[static_cast<Index>(c)] = layer.bias[psi[c]];
    }

    Vector residual = model.decoder_bias - x;
    if (!psi.empty()) {
        residual += d_active * (d_active.transpose() * x + b_active);
    }
    return 0.5 * residual.squaredNorm();
}

Vector triangle_kmeans_encode(const Matrix& centroids, const Vector& x) {
    if (centroids.rows() < 1) {
        throw std::invalid_argument("triangle_kmeans_encode: need at least one centroid");
    }
    if (centroids.cols() != x.size()) {
        throw std::invalid_argument("triangle_kmeans_encode: dimension mismatch");
    }
    const Index k = centroids.rows();
    Vector dist(k);
    for (Index i = 0; i < k; ++i) {
        dist[i] = (x - centroids.row(i).transpose()).norm();
    }
    const double mu = dist.sum() / double(k);
    Vector h(k);
    for (Index i = 0; i < k; ++i) {
        const double v = mu - dist[i];
        h[i] = v > 0.0 ? v : 0.0;
    }
    return h;
}

Vector soft_threshold_encode(const Matrix& dictionary, double lambda,
                             const Vector& x) {
    if (dictionary.rows() != x.size()) {
        throw std::invalid_argument("soft_threshold_encode: dimension mismatch");
    }
    if (lambda < 0.0) {
        throw std::invalid_argument("soft_threshold_encode: lambda must be nonnegative");
    }
    // Materialized transpose so the product uses the exact kernel encode()
    // uses; the equivalence with a shared bias of -lambda is then bit-exact.
    const Matrix wt = dictionary.transpose();
    Vector z = wt * x;
    z.array() -= lambda;
    Vector h(z.size());
    for (Index i = 0; i < z.size(); ++i) h[i] = z[i] > 0.0 ? z[i] : 0.0;
    return h;
}

std::pair<Index, double> negative_pair(const Model& model, Index j) {
    if (!model.tied || model.encoder.size() != 1) {
        throw std::invalid_argument("negative_pair: requires a tied single-layer model");
    }
    const Matrix& w = model.encoder.front().weights;
    const Index k = w.rows();
    if (k < 2) {
        throw std::invalid_argument("negative_pair: need at least two features");
    }
    if (j < 0 || j >= k) {
        throw std::invalid_argument("negative_pair: feature index out of range");
    }
    Index best = -1;
    double best_dot = 0.0;
    for (Index i = 0; i < k; ++i) {
        if (i == j) continue;
        const double dot = w.row(j).dot(w.row(i));
        if (best < 0 || dot < best_dot) {
            best = i;
            best_dot = dot;
        }
    }
    return {best, best_dot};
}

namespace {

Json layer_to_json(const Layer& layer) {
    Json j;
    j["out"] = layer.out_dim();
    j["in"] = layer.in_dim();
    j["activation"] = to_string(layer.activation);
    j["weights"] = matrix_to_json(layer.weights);
    j["bias"] = vector_to_json(layer.bias);
    return j;
}

Layer layer_from_json(const Json& j) {
    Layer layer;
    const Index out = j.at("out").get<Index>();
    const Index in = j.at("in").get<Index>();
    layer.activation = activation_from_string(j.at("activation").get<std::string>());
    layer.weights = matrix_from_json(j.at("weights"), out, in);
    layer.bias = vector_from_json(j.at("bias"));
    return layer;
}

}  // namespace

Json model_to_json(const Model& model) {
    model.validate();
    Json j;
    j["format_version"] = 1;
    j["kind"] = "model";
    j["tied"] = model.tied;
    Json enc = Json::array();
    for (const Layer& layer : model.encoder) enc.push_back(layer_to_json(layer));
    j["encoder"] = enc;
    if (model.tied) {
        j["decoder_bias"] = vector_to_json(model.decoder_bias);
    } else {
        Json dec = Json::array();
        for (const Layer& layer : model.decoder) dec.push_back(layer_to_json(layer));
        j["decoder"] = dec;
    }
    return j;
}

Model model_from_json(const Json& j) {
    if (j.value("kind", "") != "model" || j.value("format_version", 0) != 1) {
        throw DataError("not a version-1 model document");
    }
    Model model;
    model.tied = j.at("tied").get<bool>();
    for (const Json& lj : j.at("encoder")) model.encoder.push_back(layer_from_json(lj));
    if (model.tied) {
        model.decoder_bias = vector_from_json(j.at("decoder_bias"));
    } else {
        for (const Json& lj : j.at("decoder")) model.decoder.push_back(layer_from_json(lj));
    }
    model.validate();
    return model;
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << model_to_json(model).dump(2) << '\n';
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("model JSON parse error in " + path + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace switchcode
