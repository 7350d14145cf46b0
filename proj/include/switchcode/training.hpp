#pragma once

#include <cstdint>
#include <vector>

#include "switchcode/encoders.hpp"

namespace switchcode {

// Objective minimized by sgd_train:
//
//   (1/B) sum_b [ 1/2 ||xhat_b - x_b||^2 + l1_weight * ||h_b||_1 ]
//     + l2_weight * R(weights)
//
// where h_b is the final code and R is the sum of squared entries of every
// weight matrix.  A tied matrix serves as both encoder and decoder, so it
// contributes twice: R = 2||W||^2 for a tied model.
struct TrainConfig {
    double l1_weight = 0.0;
    double l2_weight = 0.0;
    double learning_rate = 0.01;
    double momentum = 0.0;
    Index batch_size = 32;
    Index epochs = 10;
    std::uint64_t seed = 0;
    bool train_decoder_bias = true;
    // Post-epoch full-data objective above this (or non-finite) aborts
    // training with DivergenceError.
    double divergence_threshold = 1e8;
};

struct TrainReport {
    // One entry per completed epoch, evaluated on the full training set.
    std::vector<double> loss_history;
    // Mean fraction of strictly positive code entries, same cadence.
    std::vector<double> sparsity_history;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

// Gradient of the objective above, laid out exactly like the model's
// parameters.  Tied models get the combined gradient for the shared matrix in
// enc_w[0] and the output-bias gradient in out_bias; dec_w/dec_b stay empty.
struct Gradients {
    std::vector<Matrix> enc_w;
    std::vector<Vector> enc_b;
    std::vector<Matrix> dec_w;
    std::vector<Vector> dec_b;
    Vector out_bias;
};

double loss(const Model& model, const Matrix& samples, double l1_weight,
            double l2_weight);

Gradients gradient(const Model& model, const Matrix& samples, double l1_weight,
                   double l2_weight);

// Plain minibatch SGD (optional momentum).  Shuffles a full index permutation
// each epoch with the deterministic Rng seeded from config.seed.
TrainReport sgd_train(Model& model, const Matrix& samples,
                      const TrainConfig& config);

// Central-difference check of gradient() over every parameter; returns the
// largest relative error |analytic - numeric| / max(1, |numeric|).
//
// Rectified-linear layers make the objective non-differentiable at z = 0, so
// the check demands every rectified pre-activation stay at least kink_margin
// away from zero across the probe samples (default: 10 * step) and throws
// std::invalid_argument naming the offenders otherwise.
double grad_check(const Model& model, const Matrix& samples, double l1_weight,
                  double l2_weight, double step = 1e-5,
                  double kink_margin = 0.0);

/// Rows "epoch,loss,sparsity", one per completed epoch.
void write_report_csv(const TrainReport& report, const std::string& path);

// Fresh model with uniform [-r, r] weights, r = sqrt(6 / (fan_in + fan_out)),
// and zero biases.  layer_sizes lists encoder output widths, innermost last;
// every encoder layer uses `activation`.  Untied models get a mirrored
// decoder (same activation on intermediate stages, linear final stage).
// Entries are drawn column by column per layer, encoder first, so a given
// seed always yields the same model.
Model init_model(Index input_dim, const std::vector<Index>& layer_sizes,
                 Activation activation, bool tied, std::uint64_t seed);

}  // namespace switchcode
