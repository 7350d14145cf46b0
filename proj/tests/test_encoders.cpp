#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "switchcode/encoders.hpp"
#include "switchcode/rng.hpp"

using namespace switchcode;

namespace {

Model tied_model(const Matrix& w, const Vector& b) {
    Model m;
    m.tied = true;
    m.encoder.push_back({w, b, Activation::rectified_linear});
    m.decoder_bias = Vector::Zero(w.cols());
    return m;
}

Model untied_two_layer(std::uint64_t seed) {
    Rng rng(seed);
    auto fill = [&rng](Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) m(i, j) = 2.0 * rng.uniform() - 1.0;
        return m;
    };
    Model m;
    m.encoder.push_back({fill(5, 3), fill(5, 1).col(0), Activation::rectified_linear});
    m.encoder.push_back({fill(4, 5), fill(4, 1).col(0), Activation::rectified_linear});
    m.decoder.push_back({fill(5, 4), fill(5, 1).col(0), Activation::rectified_linear});
    m.decoder.push_back({fill(3, 5), fill(3, 1).col(0), Activation::identity});
    return m;
}

}  // namespace

TEST_CASE("activation names round-trip and accept synonyms") {
    CHECK(activation_from_string("rectified_linear") == Activation::rectified_linear);
    CHECK(activation_from_string("relu") == Activation::rectified_linear);
    CHECK(activation_from_string("sigmoid") == Activation::sigmoid);
    CHECK(activation_from_string("identity") == Activation::identity);
    CHECK(activation_from_string("linear") == Activation::identity);
    CHECK_THROWS_AS(activation_from_string("tanh"), ConfigError);
    for (Activation a : {Activation::rectified_linear, Activation::sigmoid,
                         Activation::identity}) {
        CHECK(activation_from_string(to_string(a)) == a);
    }
}

TEST_CASE("scalar activations and derivatives") {
    CHECK(activate(Activation::rectified_linear, -2.0) == 0.0);
    CHECK(activate(Activation::rectified_linear, 0.0) == 0.0);
    CHECK(activate(Activation::rectified_linear, 3.0) == 3.0);
    CHECK(activate(Activation::sigmoid, 0.0) == 0.5);
    CHECK(activate(Activation::identity, -7.5) == -7.5);

    // The rectifier's derivative at the kink is pinned to zero.
    CHECK(activate_derivative(Activation::rectified_linear, 0.0) == 0.0);
    CHECK(activate_derivative(Activation::rectified_linear, 1e-300) == 1.0);
    CHECK(activate_derivative(Activation::identity, 9.0) == 1.0);
    const double s = activate(Activation::sigmoid, 0.7);
    CHECK(activate_derivative(Activation::sigmoid, 0.7) ==
          doctest::Approx(s * (1.0 - s)).epsilon(1e-15));
}

TEST_CASE("identity weights with a mixed-sign input") {
    Model m = tied_model(Matrix::Identity(2, 2), Vector::Zero(2));
    Vector x(2);
    x << 1.0, -1.0;
    const Encoding e = encode(m, x);
    CHECK(e.h[0] == 1.0);
    CHECK(e.h[1] == 0.0);
    REQUIRE(e.active_set.size() == 1);
    CHECK(e.active_set[0] == 0);
}

TEST_CASE("the activity boundary is strict") {
    Matrix w(1, 1);
    w << 1.0;
    Vector b(1);
    b << -2.0;
    Model m = tied_model(w, b);
    Vector x(1);
    x << 2.0;  // pre-activation exactly 0
    const Encoding e = encode(m, x);
    CHECK(e.h[0] == 0.0);
    CHECK(e.active_set.empty());
    x[0] = 2.0 + 1e-9;
    CHECK(encode(m, x).active_set.size() == 1);
}

TEST_CASE("sigmoid unit at zero pre-activation gives one half") {
    Matrix w(1, 2);
    w << 0.5, 0.0;
    Model m = tied_model(w, Vector::Zero(1));
    m.encoder[0].activation = Activation::sigmoid;
    Vector x = Vector::Zero(2);
    CHECK(encode(m, x).h[0] == 0.5);
}

TEST_CASE("zero code decodes to the decoder bias") {
    Matrix w(3, 2);
    w << 1.0, 0.0,
         0.0, 1.0,
         1.0, 1.0;
    Model m = tied_model(w, Vector::Zero(3));
    m.decoder_bias << 0.25, -0.5;
    const Vector xhat = decode(m, Vector::Zero(3));
    CHECK(xhat[0] == 0.25);
    CHECK(xhat[1] == -0.5);
}

TEST_CASE("empty active set makes restricted loss half the squared norm") {
    Matrix w(2, 2);
    w << 1.0, 0.0,
         0.0, 1.0;
    Vector b(2);
    b << -100.0, -100.0;  // nothing can activate
    Model m = tied_model(w, b);
    Vector x(2);
    x << 3.0, 4.0;
    CHECK(loss_active(m, x) == doctest::Approx(12.5).epsilon(1e-15));
}

TEST_CASE("restricted loss equals the reconstruction loss of the full pass") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 3, k = 5;
        Matrix w(k, n);
        Vector b(k);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < k; ++i) w(i, j) = rng.normal();
        for (Index i = 0; i < k; ++i) b[i] = 0.5 * rng.normal();
        Model m = tied_model(w, b);
        Vector x(n);
        for (Index i = 0; i < n; ++i) x[i] = rng.normal();

        const Encoding e = encode(m, x);
        const Vector xhat = decode(m, e.h);
        const double full = 0.5 * (xhat - x).squaredNorm();
        CHECK(std::abs(loss_active(m, x) - full) < 1e-12);
    }
}

TEST_CASE("soft thresholding with identity dictionary rectifies") {
    const Matrix d = Matrix::Identity(3, 3);
    Vector x(3);
    x << 2.0, -1.0, 0.5;
    const Vector h = soft_threshold_encode(d, 0.0, x);
    CHECK(h[0] == 2.0);
    CHECK(h[1] == 0.0);
    CHECK(h[2] == 0.5);
}

TEST_CASE("soft thresholding subtracts the threshold before rectifying") {
    Matrix d(2, 1);
    d << 1.0, 0.0;  // single atom (1, 0)
    Vector x(2);
    x << 2.0, 0.0;
    const Vector h = soft_threshold_encode(d, 0.5, x);
    REQUIRE(h.size() == 1);
    CHECK(h[0] == 1.5);
    CHECK(soft_threshold_encode(d, 2.0, x)[0] == 0.0);
    CHECK(soft_threshold_encode(d, 5.0, x)[0] == 0.0);
}

TEST_CASE("soft thresholding is bit-exact against the biased encoder") {
    Rng rng(123);
    const Index n = 7, k = 11;
    Matrix dict(n, k);  // columns are atoms
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < n; ++i) dict(i, j) = rng.normal();
    const double lambda = 0.37;

    Model m;
    m.tied = true;
    m.encoder.push_back({dict.transpose(), Vector::Constant(k, -lambda),
                         Activation::rectified_linear});
    m.decoder_bias = Vector::Zero(n);

    for (int trial = 0; trial < 1000; ++trial) {
        Vector x(n);
        for (Index i = 0; i < n; ++i) x[i] = rng.normal();
        const Vector direct = soft_threshold_encode(dict, lambda, x);
        const Vector viaModel = encode(m, x).h;
        REQUIRE(direct.size() == viaModel.size());
        CHECK((direct.array() == viaModel.array()).all());
    }
}

TEST_CASE("triangle encoding is zero at centroids beyond the mean distance") {
    Matrix centroids(2, 1);
    centroids << 0.0, 10.0;
    Vector x(1);
    x << 0.0;
    // Distances are 0 and 10, mean 5: h = [5, 0].
    const Vector h = triangle_kmeans_encode(centroids, x);
    CHECK(h[0] == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(h[1] == 0.0);
}

TEST_CASE("triangle encoding at the centroid midpoint is all zero") {
    Matrix centroids(2, 2);
    centroids << 0.0, 0.0,
                 2.0, 0.0;
    Vector x(2);
    x << 1.0, 0.0;  // equidistant: both distances 1, mean 1, h = 0
    const Vector h = triangle_kmeans_encode(centroids, x);
    CHECK(h[0] == 0.0);
    CHECK(h[1] == 0.0);
}

TEST_CASE("negative pair finds the antipodal feature") {
    Matrix w(3, 2);
    w <<  1.0,  0.0,
          0.0,  1.0,
         -1.0,  0.0;  // row 2 is the antipode of row 0
    Model m = tied_model(w, Vector::Zero(3));
    const auto [partner, dot] = negative_pair(m, 0);
    CHECK(partner == 2);
    CHECK(dot == doctest::Approx(-1.0).epsilon(1e-15));
    // And symmetrically.
    CHECK(negative_pair(m, 2).first == 0);
}

TEST_CASE("negative pair breaks ties toward the lowest index") {
    Matrix w(3, 3);
    w << 1.0, 0.0, 0.0,
         0.0, 1.0, 0.0,
         0.0, 0.0, 1.0;
    Model m = tied_model(w, Vector::Zero(3));
    // Both other rows are orthogonal to row 0: dot 0 each, index 1 wins.
    const auto [partner, dot] = negative_pair(m, 0);
    CHECK(partner == 1);
    CHECK(dot == 0.0);
    CHECK(negative_pair(m, 1).first == 0);
    CHECK(negative_pair(m, 2).first == 0);
}

TEST_CASE("negative pair requires at least two features") {
    Matrix w(1, 2);
    w << 1.0, 0.0;
    Model m = tied_model(w, Vector::Zero(1));
    CHECK_THROWS_AS(negative_pair(m, 0), std::invalid_argument);
}

TEST_CASE("encode_batch matches per-sample encoding") {
    Model m = untied_two_layer(7);
    Rng rng(8);
    Matrix samples(20, 3);
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 20; ++i) samples(i, j) = rng.normal();
    const Matrix codes = encode_batch(m, samples);
    REQUIRE(codes.rows() == 20);
    REQUIRE(codes.cols() == 4);
    for (Index i = 0; i < 20; ++i) {
        const Vector h = encode(m, samples.row(i).transpose()).h;
        CHECK((codes.row(i).transpose() - h).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("untied decoder applies stages in order with a linear last stage") {
    Model m = untied_two_layer(15);
    Vector x(3);
    x << 0.3, -0.8, 0.5;
    const Encoding e = encode(m, x);
    // Manual forward through the decoder.
    Vector a = e.h;
    Vector z1 = m.decoder[0].weights * a + m.decoder[0].bias;
    Vector a1 = activate(m.decoder[0].activation, z1);
    Vector xhat = m.decoder[1].weights * a1 + m.decoder[1].bias;
    CHECK((decode(m, e.h) - xhat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("model validation rejects broken structures") {
    Model ok = untied_two_layer(3);
    ok.validate();

    Model no_layers;
    no_layers.tied = true;
    CHECK_THROWS_AS(no_layers.validate(), std::invalid_argument);

    Model tied_two;
    tied_two.tied = true;
    tied_two.encoder.push_back({Matrix::Identity(2, 2), Vector::Zero(2),
                                Activation::rectified_linear});
    tied_two.encoder.push_back({Matrix::Identity(2, 2), Vector::Zero(2),
                                Activation::rectified_linear});
    tied_two.decoder_bias = Vector::Zero(2);
    CHECK_THROWS_AS(tied_two.validate(), std::invalid_argument);

    Model bad_bias = tied_model(Matrix::Identity(2, 2), Vector::Zero(3));
    CHECK_THROWS_AS(bad_bias.validate(), std::invalid_argument);

    Model bad_chain = untied_two_layer(3);
    bad_chain.encoder[1].weights = Matrix::Zero(4, 6);  // in 6 != out 5
    CHECK_THROWS_AS(bad_chain.validate(), std::invalid_argument);

    Model nonlinear_last = untied_two_layer(3);
    nonlinear_last.decoder.back().activation = Activation::sigmoid;
    CHECK_THROWS_AS(nonlinear_last.validate(), std::invalid_argument);

    Model nan_weight = tied_model(Matrix::Identity(2, 2), Vector::Zero(2));
    nan_weight.encoder[0].weights(0, 0) =
        std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nan_weight.validate(), std::invalid_argument);
}

TEST_CASE("model json round-trip is exact for tied and untied") {
    Rng rng(77);
    Matrix w(4, 3);
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 4; ++i) w(i, j) = rng.normal();
    Model tied = tied_model(w, Vector::Constant(4, -0.25));
    tied.decoder_bias << 0.1, -0.2, 0.3;
    const Model tied_back = model_from_json(model_to_json(tied));
    CHECK(tied_back.tied);
    CHECK((tied_back.encoder[0].weights.array() ==
           tied.encoder[0].weights.array()).all());
    CHECK((tied_back.decoder_bias.array() == tied.decoder_bias.array()).all());

    Model untied = untied_two_layer(21);
    const Model untied_back = model_from_json(model_to_json(untied));
    REQUIRE(untied_back.encoder.size() == 2);
    REQUIRE(untied_back.decoder.size() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK((untied_back.encoder[l].weights.array() ==
               untied.encoder[l].weights.array()).all());
        CHECK((untied_back.decoder[l].bias.array() ==
               untied.decoder[l].bias.array()).all());
        CHECK(untied_back.encoder[l].activation == untied.encoder[l].activation);
    }

    // Encoding through the round-tripped model is bit-identical.
    Vector x(3);
    x << 0.4, -1.1, 0.9;
    CHECK((encode(untied, x).h.array() == encode(untied_back, x).h.array()).all());
}

TEST_CASE("model file save/load round-trip") {
    namespace fs = std::filesystem;
    const fs::path path =
        fs::temp_directory_path() / "switchcode_model_roundtrip.json";
    Model m = tied_model(Matrix::Identity(3, 3), Vector::Constant(3, -0.5));
    save_model(m, path.string());
    const Model back = load_model(path.string());
    CHECK(back.tied);
    CHECK((back.encoder[0].weights.array() == m.encoder[0].weights.array()).all());
    fs::remove(path);
    CHECK_THROWS_AS(load_model(path.string()), DataError);
}

TEST_CASE("scaling a feature row rescales its code in the positive regime") {
    // With zero bias, doubling w_j doubles h_j wherever the unit is active.
    Matrix w(2, 2);
    w << 0.6, 0.8,
         1.2, 1.6;  // second row is exactly 2x the first
    Model m = tied_model(w, Vector::Zero(2));
    Vector x(2);
    x << 1.0, 0.5;
    const Vector h = encode(m, x).h;
    CHECK(h[1] == 2.0 * h[0]);  // exact: power-of-two scaling
}
