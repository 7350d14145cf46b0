#include "switchcode/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "switchcode/rng.hpp"
#include "switchcode/text.hpp"

namespace switchcode {

namespace {

// Forward pass over a batch held column-wise.  Keeps every pre-activation so
// loss() and gradient() see identical intermediate values.
struct Forward {
    std::vector<Matrix> enc_pre;   // Z_l, one per encoder layer
    std::vector<Matrix> enc_act;   // A_0 = X^T, then A_{l+1} = act(Z_l)
    std::vector<Matrix> dec_pre;   // untied only
    std::vector<Matrix> dec_act;   // P_0 = code, then outputs per stage
    Matrix reconstruction;         // output columns
};

Forward run_forward(const Model& model, const Matrix& samples) {
    Forward f;
    f.enc_act.push_back(samples.transpose());
    for (const Layer& layer : model.encoder) {
        Matrix z = layer.weights * f.enc_act.back();
        z.colwise() += layer.bias;
        f.enc_act.push_back(activate(layer.activation, z));
        f.enc_pre.push_back(std::move(z));
    }
    const Matrix& code = f.enc_act.back();
    if (model.tied) {
        f.reconstruction = model.encoder.front().weights.transpose() * code;
        f.reconstruction.colwise() += model.decoder_bias;
    } else {
        f.dec_act.push_back(code);
        for (const Layer& stage : model.decoder) {
            Matrix y = stage.weights * f.dec_act.back();
            y.colwise() += stage.bias;
            f.dec_act.push_back(activate(stage.activation, y));
            f.dec_pre.push_back(std::move(y));
        }
        f.reconstruction = f.dec_act.back();
    }
    return f;
}

double weight_penalty(const Model& model) {
    double r = 0.0;
    for (const Layer& layer : model.encoder) r += layer.weights.squaredNorm();
    if (model.tied) {
        // Shared matrix plays both roles, so it counts twice.
        r *= 2.0;
    } else {
        for (const Layer& stage : model.decoder) r += stage.weights.squaredNorm();
    }
    return r;
}

Matrix l1_subgradient(const Matrix& code) {
    Matrix s(code.rows(), code.cols());
    for (Index j = 0; j < code.cols(); ++j) {
        for (Index i = 0; i < code.rows(); ++i) {
            const double v = code(i, j);
            s(i, j) = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
    }
    return s;
}

}  // namespace

double loss(const Model& model, const Matrix& samples, double l1_weight,
            double l2_weight) {
    if (samples.rows() < 1 || samples.cols() != model.input_dim()) {
        throw std::invalid_argument("loss: sample shape mismatch");
    }
    const Forward f = run_forward(model, samples);
    const double batch = double(samples.rows());
    const Matrix residual = f.reconstruction - f.enc_act.front();
    double value = 0.5 * residual.squaredNorm();
    if (l1_weight != 0.0) {
        value += l1_weight * f.enc_act.back().cwiseAbs().sum();
    }
    return value / batch + l2_weight * weight_penalty(model);
}

Gradients gradient(const Model& model, const Matrix& samples, double l1_weight,
                   double l2_weight) {
    if (samples.rows() < 1 || samples.cols() != model.input_dim()) {
        throw std::invalid_argument("gradient: sample shape mismatch");
    }
    const Forward f = run_forward(model, samples);
    const double batch = double(samples.rows());
    const Matrix& code = f.enc_act.back();

    Gradients g;
    const std::size_t enc_layers = model.encoder.size();
    g.enc_w.resize(enc_layers);
    g.enc_b.resize(enc_layers);

    // d loss / d reconstruction, already carrying the batch average.
    Matrix delta = (f.reconstruction - f.enc_act.front()) / batch;

    Matrix code_grad;
    if (model.tied) {
        const Matrix& w = model.encoder.front().weights;
        g.out_bias = delta.rowwise().sum();
        g.enc_w[0] = code * delta.transpose();  // decoder role of the tied matrix
        code_grad = w * delta;
    } else {
        g.dec_w.resize(model.decoder.size());
        g.dec_b.resize(model.decoder.size());
        for (std::size_t i = model.decoder.size(); i-- > 0;) {
            const Layer& stage = model.decoder[i];
            const Matrix pre_grad =
                delta.cwiseProduct(activate_derivative(stage.activation, f.dec_pre[i]));
            g.dec_w[i] = pre_grad * f.dec_act[i].transpose() +
                         2.0 * l2_weight * stage.weights;
            g.dec_b[i] = pre_grad.rowwise().sum();
            delta = stage.weights.transpose() * pre_grad;
        }
        code_grad = std::move(delta);
    }

    if (l1_weight != 0.0) {
        code_grad += (l1_weight / batch) * l1_subgradient(code);
    }

    Matrix back = std::move(code_grad);
    for (std::size_t l = enc_layers; l-- > 0;) {
        const Layer& layer = model.encoder[l];
        const Matrix pre_grad =
            back.cwiseProduct(activate_derivative(layer.activation, f.enc_pre[l]));
        Matrix wgrad = pre_grad * f.enc_act[l].transpose();
        if (model.tied) {
            wgrad += g.enc_w[l];                    // fold in the decoder role
            wgrad += 4.0 * l2_weight * layer.weights;  // d(2||W||^2)/dW
        } else {
            wgrad += 2.0 * l2_weight * layer.weights;
        }
        g.enc_w[l] = std::move(wgrad);
        g.enc_b[l] = pre_grad.rowwise().sum();
        if (l > 0) back = layer.weights.transpose() * pre_grad;
    }
    return g;
}

TrainReport sgd_train(Model& model, const Matrix& samples,
                      const TrainConfig& config) {
    model.validate();
    if (samples.rows() < 1 || samples.cols() != model.input_dim()) {
        throw std::invalid_argument("sgd_train: sample shape mismatch");
    }
    if (config.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (config.epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (config.momentum < 0.0 || config.momentum >= 1.0) {
        throw ConfigError("momentum must lie in [0, 1)");
    }

    const Index n_samples = samples.rows();
    Rng rng(config.seed);

    TrainReport report;
    report.initial_loss = loss(model, samples, config.l1_weight, config.l2_weight);
    report.final_loss = report.initial_loss;

    std::vector<Matrix> vel_enc_w, vel_dec_w;
    std::vector<Vector> vel_enc_b, vel_dec_b;
    for (const Layer& layer : model.encoder) {
        vel_enc_w.push_back(Matrix::Zero(layer.out_dim(), layer.in_dim()));
        vel_enc_b.push_back(Vector::Zero(layer.out_dim()));
    }
    for (const Layer& stage : model.decoder) {
        vel_dec_w.push_back(Matrix::Zero(stage.out_dim(), stage.in_dim()));
        vel_dec_b.push_back(Vector::Zero(stage.out_dim()));
    }
    Vector vel_out_bias = Vector::Zero(model.tied ? model.input_dim() : 0);

    std::vector<Index> perm(static_cast<std::size_t>(n_samples));
    for (Index i = 0; i < n_samples; ++i) perm[static_cast<std::size_t>(i)] = i;

    const double lr = config.learning_rate;
    const double mu = config.momentum;
    auto step = [&](auto& param, auto& velocity, const auto& grad) {
        velocity = mu * velocity - lr * grad;
        param += velocity;
    };

    for (Index epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates over the full index set, one pass per epoch.
        for (Index i = n_samples - 1; i > 0; --i) {
            const Index j = static_cast<Index>(
                rng.integer_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[static_cast<std::size_t>(i)],
                      perm[static_cast<std::size_t>(j)]);
        }
        for (Index start = 0; start < n_samples; start += config.batch_size) {
            const Index count = std::min(config.batch_size, n_samples - start);
            Matrix batch(count, samples.cols());
            for (Index r = 0; r < count; ++r) {
                batch.row(r) = samples.row(perm[static_cast<std::size_t>(start + r)]);
            }
            const Gradients g =
                gradient(model, batch, config.l1_weight, config.l2_weight);
            for (std::size_t l = 0; l < model.encoder.size(); ++l) {
                step(model.encoder[l].weights, vel_enc_w[l], g.enc_w[l]);
                step(model.encoder[l].bias, vel_enc_b[l], g.enc_b[l]);
            }
            for (std::size_t i = 0; i < model.decoder.size(); ++i) {
                step(model.decoder[i].weights, vel_dec_w[i], g.dec_w[i]);
                const bool frozen = !config.train_decoder_bias &&
                                    i + 1 == model.decoder.size();
                if (!frozen) step(model.decoder[i].bias, vel_dec_b[i], g.dec_b[i]);
            }
            if (model.tied && config.train_decoder_bias) {
                step(model.decoder_bias, vel_out_bias, g.out_bias);
            }
        }

        const double epoch_loss =
            loss(model, samples, config.l1_weight, config.l2_weight);
        if (!std::isfinite(epoch_loss) || epoch_loss > config.divergence_threshold) {
            std::ostringstream msg;
            msg << "training diverged at epoch " << epoch
                << " (loss = " << epoch_loss << ")";
            throw DivergenceError(epoch, msg.str());
        }
        report.loss_history.push_back(epoch_loss);

        const Matrix codes = encode_batch(model, samples);
        Index active = 0;
        for (Index j = 0; j < codes.cols(); ++j) {
            for (Index i = 0; i < codes.rows(); ++i) {
                if (codes(i, j) > 0.0) ++active;
            }
        }
        report.sparsity_history.push_back(double(active) /
                                          double(codes.size()));
        report.final_loss = epoch_loss;
    }
    return report;
}

namespace {

struct ParamBlock {
    double* param;
    const double* grad;
    Index count;
};

std::vector<ParamBlock> parameter_blocks(Model& model, const Gradients& g) {
    std::vector<ParamBlock> blocks;
    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
        blocks.push_back({model.encoder[l].weights.data(), g.enc_w[l].data(),
                          model.encoder[l].weights.size()});
        blocks.push_back({model.encoder[l].bias.data(), g.enc_b[l].data(),
                          model.encoder[l].bias.size()});
    }
    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
        blocks.push_back({model.decoder[i].weights.data(), g.dec_w[i].data(),
                          model.decoder[i].weights.size()});
        blocks.push_back({model.decoder[i].bias.data(), g.dec_b[i].data(),
                          model.decoder[i].bias.size()});
    }
    if (model.tied) {
        blocks.push_back({model.decoder_bias.data(), g.out_bias.data(),
                          model.decoder_bias.size()});
    }
    return blocks;
}

void check_kink_distance(const Model& model, const Matrix& samples,
                         double kink_margin) {
    const Forward f = run_forward(model, samples);
    std::ostringstream offenders;
    int found = 0;
    auto scan = [&](const char* side, std::size_t layer, Activation act,
                    const Matrix& pre) {
        if (act != Activation::rectified_linear) return;
        for (Index s = 0; s < pre.cols() && found < 5; ++s) {
            for (Index u = 0; u < pre.rows() && found < 5; ++u) {
                if (std::abs(pre(u, s)) < kink_margin) {
                    offenders << (found ? ", " : "") << side << " layer " << layer
                              << " unit " << u << " sample " << s;
                    ++found;
                }
            }
        }
    };
    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
        scan("encoder", l, model.encoder[l].activation, f.enc_pre[l]);
    }
    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
        scan("decoder", i, model.decoder[i].activation, f.dec_pre[i]);
    }
    if (found > 0) {
        throw std::invalid_argument(
            "grad_check: rectifier pre-activation within kink margin at " +
            offenders.str());
    }
}

}  // namespace

double grad_check(const Model& model, const Matrix& samples, double l1_weight,
                  double l2_weight, double step, double kink_margin) {
    model.validate();
    if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
    if (kink_margin <= 0.0) kink_margin = 10.0 * step;
    check_kink_distance(model, samples, kink_margin);

    const Gradients g = gradient(model, samples, l1_weight, l2_weight);
    Model probe = model;
    std::vector<ParamBlock> blocks = parameter_blocks(probe, g);

    double worst = 0.0;
    for (const ParamBlock& block : blocks) {
        for (Index i = 0; i < block.count; ++i) {
            const double saved = block.param[i];
            block.param[i] = saved + step;
            const double plus = loss(probe, samples, l1_weight, l2_weight);
            block.param[i] = saved - step;
            const double minus = loss(probe, samples, l1_weight, l2_weight);
            block.param[i] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            const double rel = std::abs(block.grad[i] - numeric) /
                               std::max(1.0, std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "epoch,loss,sparsity\n";
    for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
        out << (e + 1) << ',' << g17(report.loss_history[e]) << ','
            << g17(report.sparsity_history[e]) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

Model init_model(Index input_dim, const std::vector<Index>& layer_sizes,
                 Activation activation, bool tied, std::uint64_t seed) {
    if (input_dim < 1) throw std::invalid_argument("init_model: input_dim must be positive");
    if (layer_sizes.empty()) throw std::invalid_argument("init_model: no layers");
    for (Index k : layer_sizes) {
        if (k < 1) throw std::invalid_argument("init_model: layer sizes must be positive");
    }
    if (tied && layer_sizes.size() != 1) {
        throw std::invalid_argument("init_model: tied weights require exactly one layer");
    }

    Rng rng(seed);
    auto fresh_layer = [&](Index out, Index in, Activation act) {
        Layer layer;
        const double r = std::sqrt(6.0 / double(in + out));
        layer.weights.resize(out, in);
        for (Index j = 0; j < in; ++j) {
            for (Index i = 0; i < out; ++i) {
                layer.weights(i, j) = r * (2.0 * rng.uniform() - 1.0);
            }
        }
        layer.bias = Vector::Zero(out);
        layer.activation = act;
        return layer;
    };

    Model model;
    model.tied = tied;
    Index in = input_dim;
    for (Index out : layer_sizes) {
        model.encoder.push_back(fresh_layer(out, in, activation));
        in = out;
    }
    if (tied) {
        model.decoder_bias = Vector::Zero(input_dim);
    } else {
        const std::size_t depth = model.encoder.size();
        for (std::size_t i = 0; i < depth; ++i) {
            const Layer& mirror = model.encoder[depth - 1 - i];
            const Activation act =
                (i + 1 == depth) ? Activation::identity : activation;
            model.decoder.push_back(
                fresh_layer(mirror.in_dim(), mirror.out_dim(), act));
        }
    }
    model.validate();
    return model;
}

}  // namespace switchcode
