#include "switchcode/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "switchcode/dataset.hpp"
#include "switchcode/lasso.hpp"
#include "switchcode/preprocess.hpp"
#include "switchcode/sha256.hpp"
#include "switchcode/text.hpp"
#include "switchcode/training.hpp"
#include "switchcode/viz.hpp"

#ifndef SWITCHCODE_SOURCE_CONFIG_DIR
#define SWITCHCODE_SOURCE_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;

namespace switchcode {

namespace {

// ---------------------------------------------------------------------------
// Strict config access: every getter names the full key path in its error and
// unknown keys are rejected wherever an object is consumed.

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + " " + what);
}

const Json& require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) config_fail(path, "must be an object");
    return j;
}

void check_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    require_object(obj, path);
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) config_fail(path.empty() ? item.key() : path + "." + item.key(),
                                "is not a recognized key");
    }
}

std::string join(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
}

double get_number(const Json& obj, const std::string& path, const char* key,
                  std::optional<double> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        config_fail(join(path, key), "is required");
    }
    const Json& v = obj.at(key);
    if (!v.is_number()) config_fail(join(path, key), "must be a number");
    return v.get<double>();
}

Index get_count(const Json& obj, const std::string& path, const char* key,
                std::optional<Index> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        config_fail(join(path, key), "is required");
    }
    const Json& v = obj.at(key);
    if (!v.is_number_integer()) config_fail(join(path, key), "must be an integer");
    const auto value = v.get<long long>();
    if (value < 0) config_fail(join(path, key), "must be nonnegative");
    return static_cast<Index>(value);
}

bool get_bool(const Json& obj, const std::string& path, const char* key,
              std::optional<bool> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        config_fail(join(path, key), "is required");
    }
    const Json& v = obj.at(key);
    if (!v.is_boolean()) config_fail(join(path, key), "must be a boolean");
    return v.get<bool>();
}

std::string get_string(const Json& obj, const std::string& path, const char* key,
                       std::optional<std::string> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        config_fail(join(path, key), "is required");
    }
    const Json& v = obj.at(key);
    if (!v.is_string()) config_fail(join(path, key), "must be a string");
    return v.get<std::string>();
}

Vector get_vector(const Json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) config_fail(join(path, key), "is required");
    const Json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
        config_fail(join(path, key), "must be a nonempty array of numbers");
    }
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            config_fail(join(path, key), "must be a nonempty array of numbers");
        }
        out[static_cast<Index>(i)] = v[i].get<double>();
    }
    return out;
}

Matrix get_matrix(const Json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) config_fail(join(path, key), "is required");
    const Json& v = obj.at(key);
    if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty()) {
        config_fail(join(path, key), "must be an array of equal-length number rows");
    }
    const Index rows = static_cast<Index>(v.size());
    const Index cols = static_cast<Index>(v[0].size());
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            config_fail(join(path, key), "must be an array of equal-length number rows");
        }
        for (Index j = 0; j < cols; ++j) {
            const Json& cell = row[static_cast<std::size_t>(j)];
            if (!cell.is_number()) {
                config_fail(join(path, key),
                            "must be an array of equal-length number rows");
            }
            out(i, j) = cell.get<double>();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Artifact bookkeeping.  Paths are registered before the first byte is
// written, so a failure anywhere leaves nothing behind.

struct RunContext {
    fs::path dir;
    std::vector<std::string> artifacts;
    int threads = 1;

    std::string emit(const std::string& name) {
        artifacts.push_back(name);
        return (dir / name).string();
    }

    void discard_outputs() {
        std::error_code ec;
        for (const std::string& name : artifacts) fs::remove(dir / name, ec);
        fs::remove(dir / "manifest.json", ec);
        artifacts.clear();
    }
};

const Json& outputs_section(const Json& config) {
    static const Json empty;
    return config.contains("outputs") ? config.at("outputs") : empty;
}

void write_json_artifact(RunContext& ctx, const std::string& name, const Json& doc) {
    const std::string path = ctx.emit(name);
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Dataset stage.

Dataset build_dataset(const Json& cfg, std::uint64_t seed,
                      const RunOptions& opts) {
    const std::string path = "dataset";
    require_object(cfg, path);
    const std::string source = get_string(cfg, path, "source");
    try {
        if (source == "gaussian") {
            check_keys(cfg, path, {"source", "num_samples", "mean", "covariance"});
            const Index n = get_count(cfg, path, "num_samples");
            return gen_gaussian(n, get_vector(cfg, path, "mean"),
                                get_matrix(cfg, path, "covariance"), seed);
        }
        if (source == "mog") {
            check_keys(cfg, path, {"source", "num_samples", "components"});
            const Index n = get_count(cfg, path, "num_samples");
            if (!cfg.contains("components") || !cfg.at("components").is_array() ||
                cfg.at("components").empty()) {
                config_fail(path + ".components", "must be a nonempty array");
            }
            MixtureSpec spec;
            std::size_t idx = 0;
            for (const Json& comp : cfg.at("components")) {
                const std::string cpath =
                    path + ".components[" + std::to_string(idx++) + "]";
                check_keys(comp, cpath, {"weight", "mean", "covariance"});
                GaussianComponent gc;
                gc.weight = get_number(comp, cpath, "weight");
                gc.mean = get_vector(comp, cpath, "mean");
                gc.covariance = get_matrix(comp, cpath, "covariance");
                spec.components.push_back(std::move(gc));
            }
            return gen_mog(n, spec, seed);
        }
        if (source == "line_manifold") {
            check_keys(cfg, path, {"source", "num_samples", "extent", "noise_std"});
            return gen_line_manifold(get_count(cfg, path, "num_samples"),
                                     get_number(cfg, path, "extent"),
                                     get_number(cfg, path, "noise_std"), seed);
        }
        if (source == "mnist") {
            check_keys(cfg, path, {"source", "images", "labels", "limit"});
            if (!opts.mnist_dir) {
                throw ConfigError(
                    "mnist dataset requires --mnist-dir pointing at a directory "
                    "with the IDX files named by the config");
            }
            const fs::path dir = *opts.mnist_dir;
            const std::string images =
                (dir / get_string(cfg, path, "images")).string();
            std::optional<std::string> labels;
            if (cfg.contains("labels")) {
                labels = (dir / get_string(cfg, path, "labels")).string();
            }
            Dataset data = load_mnist_idx(images, labels);
            if (cfg.contains("limit")) {
                const Index limit = get_count(cfg, path, "limit");
                if (limit < 1) config_fail(path + ".limit", "must be positive");
                if (limit < data.num_samples()) {
                    data.samples = Matrix(data.samples.topRows(limit));
                    if (data.labels) {
                        data.labels->resize(static_cast<std::size_t>(limit));
                    }
                }
            }
            return data;
        }
        if (source == "file") {
            check_keys(cfg, path, {"source", "path"});
            return read_csv(get_string(cfg, path, "path"));
        }
    } catch (const std::invalid_argument& e) {
        // Bad generator parameters trace back to the config document.
        throw ConfigError(std::string("config: dataset invalid: ") + e.what());
    }
    config_fail(path + ".source", "must be one of gaussian, mog, line_manifold, mnist, file");
}

// ---------------------------------------------------------------------------
// Output stage shared by train/viz/pca pipelines.

struct OutputConsumer {
    const Json& outputs;
    std::string path = "outputs";
    std::set<std::string> consumed;

    explicit OutputConsumer(const Json& o) : outputs(o) {
        if (!o.is_null()) require_object(o, "outputs");
    }
    bool has(const char* key) {
        consumed.insert(key);
        return !outputs.is_null() && outputs.contains(key);
    }
    const Json& section(const char* key) { return outputs.at(key); }
    bool flag(const char* key, bool fallback = false) {
        consumed.insert(key);
        if (outputs.is_null()) return fallback;
        return get_bool(outputs, path, key, fallback);
    }
    // Everything present must have been consumed by the command that ran.
    void finish() const {
        if (outputs.is_null()) return;
        for (const auto& item : outputs.items()) {
            if (!consumed.count(item.key())) {
                config_fail("outputs." + item.key(),
                            "is not available for this command");
            }
        }
    }
};

void bounding_box(const Matrix& samples, Vector& lo, Vector& hi) {
    lo = samples.colwise().minCoeff().transpose();
    hi = samples.colwise().maxCoeff().transpose();
}

std::vector<Index> descending_bias(const Layer& layer) {
    std::vector<Index> order(static_cast<std::size_t>(layer.out_dim()));
    for (Index j = 0; j < layer.out_dim(); ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return layer.bias[a] > layer.bias[b];
    });
    return order;
}

Json train_report_json(const TrainReport& report) {
    Json j;
    j["format_version"] = 1;
    j["kind"] = "train_report";
    j["initial_loss"] = report.initial_loss;
    j["final_loss"] = report.final_loss;
    j["loss_history"] = report.loss_history;
    j["sparsity_history"] = report.sparsity_history;
    j["epochs"] = report.loss_history.size();
    return j;
}

void write_codes_csv(const Matrix& codes,
                     const std::vector<bool>* converged,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (Index j = 0; j < codes.cols(); ++j) {
        out << (j ? "," : "") << 'h' << j;
    }
    if (converged) out << ",converged";
    out << '\n';
    for (Index i = 0; i < codes.rows(); ++i) {
        for (Index j = 0; j < codes.cols(); ++j) {
            out << (j ? "," : "") << g17(codes(i, j));
        }
        if (converged) out << ',' << ((*converged)[static_cast<std::size_t>(i)] ? 1 : 0);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

// Viz exports driven by the outputs section, for an already trained or loaded
// model together with the data it describes.
void write_model_outputs(RunContext& ctx, OutputConsumer& outputs,
                         const Model& model, const Dataset& data) {
    const Index dim = model.input_dim();

    if (outputs.flag("dataset_csv")) {
        write_csv(data, ctx.emit("dataset.csv"));
    }
    if (outputs.flag("planes_obj")) {
        if (dim != 3) config_fail("outputs.planes_obj", "requires 3D data");
        Vector lo, hi;
        bounding_box(data.samples, lo, hi);
        write_planes_obj(hyperplanes(model), lo, hi, ctx.emit("planes.obj"));
    }
    if (outputs.flag("planes_csv")) {
        if (dim != 2) config_fail("outputs.planes_csv", "requires 2D data");
        Vector lo, hi;
        bounding_box(data.samples, lo, hi);
        write_planes_csv(hyperplanes(model), lo[0], hi[0], lo[1], hi[1],
                         ctx.emit("planes.csv"));
    }
    if (outputs.has("grid")) {
        const Json& g = outputs.section("grid");
        check_keys(g, "outputs.grid", {"resolution", "margin", "per_feature"});
        if (dim != 2) config_fail("outputs.grid", "requires 2D data");
        const Index res = get_count(g, "outputs.grid", "resolution");
        if (res < 2) config_fail("outputs.grid.resolution", "must be at least 2");
        const double margin = get_number(g, "outputs.grid", "margin", 0.0);
        if (margin < 0.0) config_fail("outputs.grid.margin", "must be nonnegative");
        Vector lo, hi;
        bounding_box(data.samples, lo, hi);
        const double mx = margin * (hi[0] - lo[0]);
        const double my = margin * (hi[1] - lo[1]);
        write_grid_csv(response_grid(model, lo[0] - mx, hi[0] + mx, lo[1] - my,
                                     hi[1] + my, res, res, -1, ctx.threads),
                       ctx.emit("grid.csv"));
        if (get_bool(g, "outputs.grid", "per_feature", false)) {
            for (Index j = 0; j < model.code_dim(); ++j) {
                write_grid_csv(
                    response_grid(model, lo[0] - mx, hi[0] + mx, lo[1] - my,
                                  hi[1] + my, res, res, j, ctx.threads),
                    ctx.emit("grid_feature_" + std::to_string(j) + ".csv"));
            }
        }
    }
    if (outputs.has("tiles")) {
        const Json& t = outputs.section("tiles");
        check_keys(t, "outputs.tiles", {"rows", "cols"});
        const Index rows = get_count(t, "outputs.tiles", "rows");
        const Index cols = get_count(t, "outputs.tiles", "cols");
        const Layer& first = model.encoder.front();
        if (rows * cols != first.in_dim()) {
            config_fail("outputs.tiles", "rows*cols must equal the input dimension");
        }
        write_pgm(tile_montage(first.weights, rows, cols, descending_bias(first)),
                  ctx.emit("tiles.pgm"));
    }
    if (outputs.has("second_layer_tiles")) {
        const Json& t = outputs.section("second_layer_tiles");
        check_keys(t, "outputs.second_layer_tiles", {"rows", "cols"});
        if (model.encoder.size() < 2) {
            config_fail("outputs.second_layer_tiles", "requires a two-layer model");
        }
        const Index rows = get_count(t, "outputs.second_layer_tiles", "rows");
        const Index cols = get_count(t, "outputs.second_layer_tiles", "cols");
        // Second-layer features mapped back to input space through layer one.
        const Matrix composite = model.encoder[1].weights * model.encoder[0].weights;
        if (rows * cols != composite.cols()) {
            config_fail("outputs.second_layer_tiles",
                        "rows*cols must equal the input dimension");
        }
        write_pgm(tile_montage(composite, rows, cols,
                               descending_bias(model.encoder[1])),
                  ctx.emit("tiles_layer2.pgm"));
    }
    if (outputs.has("pair_tiles")) {
        const Json& t = outputs.section("pair_tiles");
        check_keys(t, "outputs.pair_tiles", {"rows", "cols", "top"});
        const Index rows = get_count(t, "outputs.pair_tiles", "rows");
        const Index cols = get_count(t, "outputs.pair_tiles", "cols");
        const Index top = get_count(t, "outputs.pair_tiles", "top");
        write_pgm(pair_tiles(model, rows, cols, top), ctx.emit("pair_tiles.pgm"));
    }
    if (outputs.flag("pairing_json")) {
        write_json_artifact(ctx, "pairing.json",
                            pairing_report_to_json(pairing_report(model)));
    }
}

// ---------------------------------------------------------------------------
// Pipelines.

std::uint64_t effective_seed(const Json& config, const RunOptions& opts) {
    if (opts.seed_override) return *opts.seed_override;
    if (config.contains("seed")) {
        const Json& s = config.at("seed");
        if (!s.is_number_integer()) config_fail("seed", "must be an integer");
        if (s.is_number_unsigned()) return s.get<std::uint64_t>();
        const auto v = s.get<long long>();
        if (v < 0) config_fail("seed", "must be nonnegative");
        return static_cast<std::uint64_t>(v);
    }
    return 0;
}

// Stage seeds derive from the run seed by fixed offsets: data +0, model
// initialization +1, shuffling +2.
constexpr std::uint64_t kInitSeedOffset = 1;
constexpr std::uint64_t kTrainSeedOffset = 2;

void run_generate(const Json& config, RunContext& ctx, std::uint64_t seed,
                  const RunOptions& opts) {
    const Dataset data = build_dataset(config.at("dataset"), seed, opts);
    OutputConsumer outputs(outputs_section(config));
    if (outputs.flag("dataset_csv", true)) {
        write_csv(data, ctx.emit("dataset.csv"));
    }
    if (outputs.has("dataset_idx")) {
        const Json& t = outputs.section("dataset_idx");
        check_keys(t, "outputs.dataset_idx", {"rows", "cols"});
        write_idx_images(data, get_count(t, "outputs.dataset_idx", "rows"),
                         get_count(t, "outputs.dataset_idx", "cols"),
                         ctx.emit("images.idx"));
        if (data.labels) write_idx_labels(*data.labels, ctx.emit("labels.idx"));
    }
    outputs.finish();
}

WhitenMode whiten_mode_or_fail(const Json& pre) {
    check_keys(pre, "preprocess", {"whiten", "epsilon"});
    const std::string mode = get_string(pre, "preprocess", "whiten");
    try {
        return whiten_mode_from_string(mode);
    } catch (const std::exception&) {
        config_fail("preprocess.whiten", "must be pca or zca");
    }
}

void run_whiten(const Json& config, RunContext& ctx, std::uint64_t seed,
                const RunOptions& opts) {
    const Dataset data = build_dataset(config.at("dataset"), seed, opts);
    const Json& pre = config.at("preprocess");
    const WhitenMode mode = whiten_mode_or_fail(pre);
    const double epsilon = get_number(pre, "preprocess", "epsilon", 1e-5);
    const WhitenTransform transform = whiten_fit(data, epsilon, mode);
    write_json_artifact(ctx, "whiten.json", whiten_to_json(transform));
    write_csv(whiten_apply(transform, data), ctx.emit("whitened.csv"));

    OutputConsumer outputs(outputs_section(config));
    if (outputs.flag("dataset_csv")) write_csv(data, ctx.emit("dataset.csv"));
    outputs.finish();
}

void run_pca(const Json& config, RunContext& ctx, std::uint64_t seed,
             const RunOptions& opts) {
    const Dataset data = build_dataset(config.at("dataset"), seed, opts);
    const Json& section = config.at("pca");
    check_keys(section, "pca", {"components"});
    const Index k = get_count(section, "pca", "components");
    PcaBasis basis;
    try {
        basis = fit_pca(data, k);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: pca invalid: ") + e.what());
    }
    write_json_artifact(ctx, "pca.json", pca_to_json(basis));

    OutputConsumer outputs(outputs_section(config));
    if (outputs.flag("dataset_csv")) write_csv(data, ctx.emit("dataset.csv"));
    if (outputs.flag("codes_csv")) {
        write_codes_csv(pca_project(basis, data.samples), nullptr,
                        ctx.emit("codes.csv"));
    }
    if (outputs.has("tiles")) {
        const Json& t = outputs.section("tiles");
        check_keys(t, "outputs.tiles", {"rows", "cols"});
        const Index rows = get_count(t, "outputs.tiles", "rows");
        const Index cols = get_count(t, "outputs.tiles", "cols");
        if (rows * cols != basis.dim()) {
            config_fail("outputs.tiles", "rows*cols must equal the input dimension");
        }
        std::vector<Index> order(static_cast<std::size_t>(basis.k()));
        for (Index j = 0; j < basis.k(); ++j) order[static_cast<std::size_t>(j)] = j;
        write_pgm(tile_montage(basis.components, rows, cols, order),
                  ctx.emit("tiles.pgm"));
    }
    outputs.finish();
}

TrainConfig train_config_from(const Json& section, std::uint64_t seed) {
    check_keys(section, "train",
               {"l1_weight", "l2_weight", "learning_rate", "momentum",
                "batch_size", "epochs", "train_decoder_bias",
                "divergence_threshold"});
    TrainConfig cfg;
    cfg.l1_weight = get_number(section, "train", "l1_weight", cfg.l1_weight);
    cfg.l2_weight = get_number(section, "train", "l2_weight", cfg.l2_weight);
    cfg.learning_rate =
        get_number(section, "train", "learning_rate", cfg.learning_rate);
    cfg.momentum = get_number(section, "train", "momentum", cfg.momentum);
    cfg.batch_size = get_count(section, "train", "batch_size", cfg.batch_size);
    cfg.epochs = get_count(section, "train", "epochs", cfg.epochs);
    cfg.train_decoder_bias = get_bool(section, "train", "train_decoder_bias",
                                      cfg.train_decoder_bias);
    cfg.divergence_threshold = get_number(section, "train", "divergence_threshold",
                                          cfg.divergence_threshold);
    if (cfg.l1_weight < 0.0) config_fail("train.l1_weight", "must be nonnegative");
    if (cfg.l2_weight < 0.0) config_fail("train.l2_weight", "must be nonnegative");
    cfg.seed = seed + kTrainSeedOffset;
    return cfg;
}

Model model_from_config(const Json& section, Index input_dim, std::uint64_t seed) {
    check_keys(section, "model", {"layers", "activation", "tied"});
    if (!section.contains("layers") || !section.at("layers").is_array() ||
        section.at("layers").empty()) {
        config_fail("model.layers", "must be a nonempty array of layer widths");
    }
    std::vector<Index> layers;
    for (const Json& v : section.at("layers")) {
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            config_fail("model.layers", "must be a nonempty array of layer widths");
        }
        layers.push_back(static_cast<Index>(v.get<long long>()));
    }
    Activation activation;
    try {
        activation = activation_from_string(get_string(section, "model", "activation"));
    } catch (const std::exception&) {
        config_fail("model.activation",
                    "must be rectified_linear, sigmoid, or identity");
    }
    const bool tied = get_bool(section, "model", "tied");
    try {
        return init_model(input_dim, layers, activation, tied,
                          seed + kInitSeedOffset);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: model invalid: ") + e.what());
    }
}

void run_train(const Json& config, RunContext& ctx, std::uint64_t seed,
               const RunOptions& opts) {
    Dataset data = build_dataset(config.at("dataset"), seed, opts);
    if (config.contains("preprocess")) {
        const Json& pre = config.at("preprocess");
        check_keys(pre, "preprocess", {"whiten", "epsilon"});
        const std::string mode_name = get_string(pre, "preprocess", "whiten");
        if (mode_name != "none") {
            const WhitenMode mode = whiten_mode_or_fail(pre);
            const double epsilon = get_number(pre, "preprocess", "epsilon", 1e-5);
            const WhitenTransform transform = whiten_fit(data, epsilon, mode);
            write_json_artifact(ctx, "whiten.json", whiten_to_json(transform));
            data = whiten_apply(transform, data);
        }
    }

    Model model = model_from_config(config.at("model"), data.dim(), seed);
    const TrainConfig train_cfg = train_config_from(config.at("train"), seed);
    const TrainReport report = sgd_train(model, data.samples, train_cfg);

    save_model(model, ctx.emit("model.json"));
    write_json_artifact(ctx, "report.json", train_report_json(report));
    write_report_csv(report, ctx.emit("report.csv"));

    OutputConsumer outputs(outputs_section(config));
    write_model_outputs(ctx, outputs, model, data);
    outputs.finish();
}

void run_viz(const Json& config, RunContext& ctx, std::uint64_t seed,
             const RunOptions& opts) {
    const Json& section = config.at("viz");
    check_keys(section, "viz", {"model_path"});
    const Model model = load_model(get_string(section, "viz", "model_path"));
    const Dataset data = build_dataset(config.at("dataset"), seed, opts);
    if (data.dim() != model.input_dim()) {
        throw DataError("viz: dataset dimension does not match the model");
    }
    OutputConsumer outputs(outputs_section(config));
    write_model_outputs(ctx, outputs, model, data);
    outputs.finish();
}

void run_encode(const Json& config, RunContext& ctx, std::uint64_t seed,
                const RunOptions& opts) {
    const Dataset data = build_dataset(config.at("dataset"), seed, opts);
    const Json& section = config.at("encode");
    require_object(section, "encode");
    const std::string scheme = get_string(section, "encode", "scheme");

    Matrix codes;
    std::vector<bool> converged;
    bool with_flag = false;

    auto load_rows = [&](const char* key) {
        const std::string path = get_string(section, "encode", key);
        const Dataset rows = read_csv(path);
        if (rows.dim() != data.dim()) {
            throw DataError("encode: " + path + " dimension does not match the data");
        }
        return rows.samples;
    };

    try {
        if (scheme == "model") {
            check_keys(section, "encode", {"scheme", "model_path"});
            const Model model = load_model(get_string(section, "encode", "model_path"));
            if (model.input_dim() != data.dim()) {
                throw DataError("encode: model dimension does not match the data");
            }
            codes = encode_batch(model, data.samples);
        } else if (scheme == "soft_threshold") {
            check_keys(section, "encode", {"scheme", "dictionary_path", "lambda"});
            const Matrix atoms = load_rows("dictionary_path");
            const Matrix dictionary = atoms.transpose();
            const double lambda = get_number(section, "encode", "lambda");
            codes.resize(data.num_samples(), atoms.rows());
            for (Index i = 0; i < data.num_samples(); ++i) {
                codes.row(i) = soft_threshold_encode(dictionary, lambda,
                                                     data.samples.row(i).transpose())
                                   .transpose();
            }
        } else if (scheme == "triangle") {
            check_keys(section, "encode", {"scheme", "centroids_path"});
            const Matrix centroids = load_rows("centroids_path");
            codes.resize(data.num_samples(), centroids.rows());
            for (Index i = 0; i < data.num_samples(); ++i) {
                codes.row(i) = triangle_kmeans_encode(
                                   centroids, data.samples.row(i).transpose())
                                   .transpose();
            }
        } else if (scheme == "lasso") {
            check_keys(section, "encode",
                       {"scheme", "dictionary_path", "lambda", "tol", "max_iter",
                        "half_quadratic", "fista"});
            const Matrix atoms = load_rows("dictionary_path");
            LassoProblem problem;
            problem.dictionary = atoms.transpose();
            problem.lambda = get_number(section, "encode", "lambda");
            problem.tol = get_number(section, "encode", "tol", problem.tol);
            problem.max_iter =
                get_count(section, "encode", "max_iter", problem.max_iter);
            problem.half_quadratic =
                get_bool(section, "encode", "half_quadratic", problem.half_quadratic);
            problem.use_fista = get_bool(section, "encode", "fista", problem.use_fista);
            codes.resize(data.num_samples(), atoms.rows());
            converged.resize(static_cast<std::size_t>(data.num_samples()));
            with_flag = true;
            for (Index i = 0; i < data.num_samples(); ++i) {
                problem.x = data.samples.row(i).transpose();
                const LassoResult result = lasso_encode(problem);
                codes.row(i) = result.u.transpose();
                converged[static_cast<std::size_t>(i)] = result.converged;
            }
        } else {
            config_fail("encode.scheme",
                        "must be one of model, soft_threshold, triangle, lasso");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: encode invalid: ") + e.what());
    }

    write_codes_csv(codes, with_flag ? &converged : nullptr, ctx.emit("codes.csv"));

    OutputConsumer outputs(outputs_section(config));
    if (outputs.flag("dataset_csv")) write_csv(data, ctx.emit("dataset.csv"));
    outputs.finish();
}

// ---------------------------------------------------------------------------

const char* command_name(Command cmd) {
    switch (cmd) {
        case Command::generate: return "generate";
        case Command::whiten: return "whiten";
        case Command::pca: return "pca";
        case Command::train: return "train";
        case Command::encode: return "encode";
        case Command::viz: return "viz";
        case Command::reproduce: return "reproduce";
    }
    return "?";
}

void check_top_level(Command cmd, const Json& config) {
    switch (cmd) {
        case Command::generate:
            check_keys(config, "", {"name", "seed", "dataset", "outputs"});
            break;
        case Command::whiten:
            check_keys(config, "", {"name", "seed", "dataset", "preprocess", "outputs"});
            if (!config.contains("preprocess")) config_fail("preprocess", "is required");
            break;
        case Command::pca:
            check_keys(config, "", {"name", "seed", "dataset", "pca", "outputs"});
            if (!config.contains("pca")) config_fail("pca", "is required");
            break;
        case Command::train:
            check_keys(config, "",
                       {"name", "seed", "dataset", "preprocess", "model", "train",
                        "outputs"});
            if (!config.contains("model")) config_fail("model", "is required");
            if (!config.contains("train")) config_fail("train", "is required");
            break;
        case Command::encode:
            check_keys(config, "", {"name", "seed", "dataset", "encode", "outputs"});
            if (!config.contains("encode")) config_fail("encode", "is required");
            break;
        case Command::viz:
            check_keys(config, "", {"name", "seed", "dataset", "viz", "outputs"});
            if (!config.contains("viz")) config_fail("viz", "is required");
            break;
        case Command::reproduce:
            check_keys(config, "",
                       {"name", "seed", "dataset", "preprocess", "pca", "model",
                        "train", "outputs"});
            break;
    }
    if (!config.contains("dataset")) config_fail("dataset", "is required");
}

void write_manifest(RunContext& ctx, Command cmd, const Json& config,
                    std::uint64_t seed) {
    Json artifacts = Json::array();
    std::vector<std::string> names = ctx.artifacts;
    std::sort(names.begin(), names.end());
    for (const std::string& name : names) {
        const std::string full = (ctx.dir / name).string();
        Json entry;
        entry["path"] = name;
        entry["sha256"] = sha256_file_hex(full);
        entry["bytes"] = static_cast<std::uint64_t>(fs::file_size(ctx.dir / name));
        artifacts.push_back(entry);
    }
    Json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = "manifest";
    manifest["command"] = command_name(cmd);
    manifest["config_sha256"] = sha256_hex(config.dump());
    manifest["seed"] = seed;
    manifest["artifacts"] = artifacts;

    const std::string path = (ctx.dir / "manifest.json").string();
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace

Command command_from_string(const std::string& name) {
    if (name == "generate") return Command::generate;
    if (name == "whiten") return Command::whiten;
    if (name == "pca") return Command::pca;
    if (name == "train") return Command::train;
    if (name == "encode") return Command::encode;
    if (name == "viz") return Command::viz;
    if (name == "reproduce") return Command::reproduce;
    throw ConfigError("unknown command: " + name);
}

Json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        Json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        throw ConfigError("config JSON parse error in " + path + ": " + e.what());
    }
}

std::string reproduce_config_path(const std::string& figure,
                                  const RunOptions& options) {
    static const std::set<std::string> known = {"fig2", "fig4", "fig5",
                                                "fig7", "fig8", "fig9"};
    if (!known.count(figure)) {
        throw ConfigError("unknown figure id: " + figure +
                          " (expected one of fig2, fig4, fig5, fig7, fig8, fig9)");
    }
    std::vector<std::string> candidates;
    if (options.configs_dir) candidates.push_back(*options.configs_dir);
    if (const char* env = std::getenv("SWITCHCODE_CONFIGS")) candidates.push_back(env);
    candidates.push_back(SWITCHCODE_SOURCE_CONFIG_DIR);
    candidates.push_back("configs");

    std::string searched;
    for (const std::string& dir : candidates) {
        const fs::path path = fs::path(dir) / (figure + ".json");
        if (fs::exists(path)) return path.string();
        if (!searched.empty()) searched += ", ";
        searched += dir;
    }
    throw ConfigError("no canned config for " + figure + " (searched: " + searched + ")");
}

void run_command(Command cmd, const Json& config, const RunOptions& options) {
    check_top_level(cmd, config);
    const std::uint64_t seed = effective_seed(config, options);

    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + options.out_dir);

    RunContext ctx;
    ctx.dir = options.out_dir;
    ctx.threads = std::max(1, options.threads);

    try {
        Command effective = cmd;
        if (cmd == Command::reproduce) {
            // A canned config is a full pipeline document; which kind depends
            // on whether it trains a model or fits a basis.
            if (config.contains("model")) {
                effective = Command::train;
            } else if (config.contains("pca")) {
                effective = Command::pca;
            } else {
                config_fail("model", "or pca section is required to reproduce a figure");
            }
            check_top_level(effective, config);
        }
        switch (effective) {
            case Command::generate: run_generate(config, ctx, seed, options); break;
            case Command::whiten: run_whiten(config, ctx, seed, options); break;
            case Command::pca: run_pca(config, ctx, seed, options); break;
            case Command::train: run_train(config, ctx, seed, options); break;
            case Command::encode: run_encode(config, ctx, seed, options); break;
            case Command::viz: run_viz(config, ctx, seed, options); break;
            case Command::reproduce: break;  // unreachable
        }
        write_manifest(ctx, cmd, config, seed);
    } catch (...) {
        ctx.discard_outputs();
        throw;
    }
}

int exit_code_for_exception(const std::exception& e) {
    if (dynamic_cast<const DivergenceError*>(&e)) return 4;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    return 1;
}

Json error_json(const std::exception& e) {
    Json j;
    j["error"] = true;
    j["message"] = e.what();
    if (const auto* div = dynamic_cast<const DivergenceError*>(&e)) {
        j["type"] = "divergence";
        j["epoch"] = div->epoch;
    } else if (dynamic_cast<const DataError*>(&e)) {
        j["type"] = "data";
    } else if (dynamic_cast<const ConfigError*>(&e) ||
               dynamic_cast<const std::invalid_argument*>(&e)) {
        j["type"] = "config";
    } else {
        j["type"] = "internal";
    }
    return j;
}

}  // namespace switchcode
