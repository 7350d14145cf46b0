#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "switchcode/dataset.hpp"
#include "switchcode/encoders.hpp"
#include "switchcode/json_util.hpp"
#include "switchcode/training.hpp"

using namespace switchcode;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("switchcode_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int counter;
};
int TempDir::counter = 0;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs the CLI with the given arguments (and optional env prefix), capturing
// both streams.  Uses the shell, so arguments must not need quoting beyond
// the double quotes added here.
RunResult run_cli(const std::string& args, const std::string& env = "") {
    static int run_id = 0;
    const fs::path dir = fs::temp_directory_path();
    const fs::path out_file =
        dir / ("switchcode_stdout_" + std::to_string(::getpid()) + "_" +
               std::to_string(run_id));
    const fs::path err_file =
        dir / ("switchcode_stderr_" + std::to_string(::getpid()) + "_" +
               std::to_string(run_id));
    ++run_id;
    std::string cmd = env + " \"" SWITCHCODE_CLI_PATH "\" " + args + " > " +
                      out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    fs::remove(out_file);
    fs::remove(err_file);
    return result;
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

Json gaussian_config() {
    return Json{
        {"seed", 3},
        {"dataset",
         {{"source", "gaussian"},
          {"num_samples", 80},
          {"mean", {0.0, 0.0, 0.0}},
          {"covariance", {{2.0, 0.5, 0.0}, {0.5, 1.0, 0.0}, {0.0, 0.0, 0.5}}}}},
    };
}

Json train_config() {
    Json cfg = gaussian_config();
    cfg["model"] = {{"layers", {4}},
                    {"activation", "rectified_linear"},
                    {"tied", true}};
    cfg["train"] = {{"learning_rate", 0.05}, {"batch_size", 16}, {"epochs", 3}};
    return cfg;
}

}  // namespace

TEST_CASE("running without a subcommand fails") {
    const RunResult r = run_cli("");
    CHECK(r.exit_code != 0);
}

TEST_CASE("generate succeeds and writes its artifacts") {
    TempDir dir;
    const fs::path cfg = dir.path / "config.json";
    write_json(cfg, gaussian_config());
    const RunResult r = run_cli("generate --config " + cfg.string() + " --out " +
                                (dir.path / "out").string());
    CHECK(r.exit_code == 0);
    CHECK(r.err.empty());
    CHECK(fs::exists(dir.path / "out" / "dataset.csv"));
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));
}

TEST_CASE("config errors exit 2 with a machine-readable line") {
    TempDir dir;
    Json cfg = gaussian_config();
    cfg["dataset"]["bogus"] = 1;
    const fs::path path = dir.path / "config.json";
    write_json(path, cfg);
    const RunResult r = run_cli("generate --config " + path.string() +
                                " --out " + (dir.path / "out").string());
    CHECK(r.exit_code == 2);
    const Json err = Json::parse(r.err);
    CHECK(err.at("error") == true);
    CHECK(err.at("type") == "config");
    CHECK(std::string(err.at("message")).find("dataset.bogus") !=
          std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "out" / "dataset.csv"));
}

TEST_CASE("missing input files exit 3") {
    TempDir dir;
    Json cfg;
    cfg["seed"] = 1;
    cfg["dataset"] = {{"source", "file"},
                      {"path", (dir.path / "nope.csv").string()}};
    const fs::path path = dir.path / "config.json";
    write_json(path, cfg);
    const RunResult r = run_cli("generate --config " + path.string() +
                                " --out " + (dir.path / "out").string());
    CHECK(r.exit_code == 3);
    CHECK(Json::parse(r.err).at("type") == "data");
}

TEST_CASE("divergent training exits 4 and reports the epoch") {
    TempDir dir;
    Json cfg = train_config();
    cfg["train"]["learning_rate"] = 1000.0;
    cfg["train"]["epochs"] = 50;
    const fs::path path = dir.path / "config.json";
    write_json(path, cfg);
    const RunResult r = run_cli("train --config " + path.string() + " --out " +
                                (dir.path / "out").string());
    CHECK(r.exit_code == 4);
    const Json err = Json::parse(r.err);
    CHECK(err.at("type") == "divergence");
    CHECK(err.contains("epoch"));
    // Partial artifacts are cleaned up.
    CHECK_FALSE(fs::exists(dir.path / "out" / "model.json"));
    CHECK_FALSE(fs::exists(dir.path / "out" / "manifest.json"));
}

TEST_CASE("zero-epoch training checkpoints the seeded initialization") {
    TempDir dir;
    Json cfg = train_config();
    cfg["train"]["epochs"] = 0;
    const fs::path path = dir.path / "config.json";
    write_json(path, cfg);
    const RunResult r = run_cli("train --config " + path.string() + " --out " +
                                (dir.path / "out").string());
    REQUIRE(r.exit_code == 0);
    const Model trained = load_model((dir.path / "out" / "model.json").string());
    const Model expected =
        init_model(3, {4}, Activation::rectified_linear, true, 3 + 1);
    CHECK((trained.encoder[0].weights.array() ==
           expected.encoder[0].weights.array()).all());
}

TEST_CASE("lasso and soft-threshold codes agree on an orthonormal dictionary") {
    // Data in the all-positive regime, where rectification never clips, makes
    // the two schemes coincide exactly (up to solver tolerance).
    TempDir dir;
    Dataset atoms;
    atoms.samples = Matrix::Identity(3, 3);
    const fs::path atoms_path = dir.path / "atoms.csv";
    write_csv(atoms, atoms_path.string());

    Json cfg;
    cfg["seed"] = 21;
    cfg["dataset"] = {{"source", "gaussian"},
                      {"num_samples", 50},
                      {"mean", {5.0, 5.0, 5.0}},
                      {"covariance",
                       {{0.01, 0.0, 0.0}, {0.0, 0.01, 0.0}, {0.0, 0.0, 0.01}}}};
    cfg["encode"] = {{"scheme", "soft_threshold"},
                     {"dictionary_path", atoms_path.string()},
                     {"lambda", 0.4}};
    const fs::path soft_cfg = dir.path / "soft.json";
    write_json(soft_cfg, cfg);

    cfg["encode"] = {{"scheme", "lasso"},
                     {"dictionary_path", atoms_path.string()},
                     {"lambda", 0.4}};
    const fs::path lasso_cfg = dir.path / "lasso.json";
    write_json(lasso_cfg, cfg);

    REQUIRE(run_cli("encode --config " + soft_cfg.string() + " --out " +
                    (dir.path / "soft").string())
                .exit_code == 0);
    REQUIRE(run_cli("encode --config " + lasso_cfg.string() + " --out " +
                    (dir.path / "lasso").string())
                .exit_code == 0);

    const Dataset soft = read_csv((dir.path / "soft" / "codes.csv").string());
    const Dataset lasso = read_csv((dir.path / "lasso" / "codes.csv").string());
    REQUIRE(soft.num_samples() == lasso.num_samples());
    REQUIRE(lasso.dim() == 4);  // three codes plus a convergence flag
    for (Index i = 0; i < soft.num_samples(); ++i) {
        CHECK(lasso.samples(i, 3) == 1.0);
        for (Index j = 0; j < 3; ++j) {
            CHECK(std::abs(soft.samples(i, j) - lasso.samples(i, j)) < 1e-8);
        }
    }
}

TEST_CASE("the seed flag overrides the config seed") {
    TempDir dir;
    const fs::path cfg = dir.path / "config.json";
    write_json(cfg, gaussian_config());
    REQUIRE(run_cli("generate --config " + cfg.string() + " --out " +
                    (dir.path / "a").string())
                .exit_code == 0);
    REQUIRE(run_cli("generate --config " + cfg.string() + " --seed 77 --out " +
                    (dir.path / "b").string())
                .exit_code == 0);
    CHECK(slurp(dir.path / "a" / "dataset.csv") !=
          slurp(dir.path / "b" / "dataset.csv"));
    const Json manifest = Json::parse(slurp(dir.path / "b" / "manifest.json"));
    CHECK(manifest.at("seed") == 77);
}

TEST_CASE("the output env var supplies the default directory") {
    TempDir dir;
    const fs::path cfg = dir.path / "config.json";
    write_json(cfg, gaussian_config());
    const fs::path out = dir.path / "env_out";
    const RunResult r = run_cli("generate --config " + cfg.string(),
                                "SWITCHCODE_OUT=" + out.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "dataset.csv"));
}

TEST_CASE("reproduce fig2 emits the plane geometry and dataset") {
    TempDir dir;
    const RunResult r =
        run_cli("reproduce fig2 --configs-dir \"" SWITCHCODE_CONFIGS_PATH
                "\" --out " +
                (dir.path / "out").string());
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(dir.path / "out" / "planes.obj"));
    CHECK(fs::exists(dir.path / "out" / "dataset.csv"));
    const Dataset d = read_csv((dir.path / "out" / "dataset.csv").string());
    CHECK(d.dim() == 3);
    // The obj names one group per surviving feature.
    const std::string obj = slurp(dir.path / "out" / "planes.obj");
    CHECK(obj.find("o feature_") != std::string::npos);
    CHECK(obj.find("f ") != std::string::npos);
}

TEST_CASE("reproduce rejects unknown figure ids") {
    TempDir dir;
    const RunResult r =
        run_cli("reproduce fig3 --configs-dir \"" SWITCHCODE_CONFIGS_PATH
                "\" --out " +
                (dir.path / "out").string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("mnist figures demand a data directory") {
    TempDir dir;
    const RunResult r =
        run_cli("reproduce fig7 --configs-dir \"" SWITCHCODE_CONFIGS_PATH
                "\" --out " +
                (dir.path / "out").string());
    CHECK(r.exit_code == 2);
    const Json err = Json::parse(r.err);
    CHECK(std::string(err.at("message")).find("--mnist-dir") !=
          std::string::npos);
}

TEST_CASE("idx-backed figures run end to end on generated images") {
    TempDir dir;

    Dataset images;
    images.samples.resize(200, 784);
    // Deterministic smooth pattern, safely inside [0, 1].
    for (Index i = 0; i < 200; ++i) {
        for (Index p = 0; p < 784; ++p) {
            const double r = double(p % 28) / 27.0;
            const double c = double(p / 28) / 27.0;
            images.samples(i, p) =
                0.5 + 0.4 * std::sin(0.3 * double(i) + 6.28 * r) *
                          std::cos(6.28 * c);
        }
    }
    const fs::path mnist_dir = dir.path / "idx";
    fs::create_directories(mnist_dir);
    write_idx_images(images, 28, 28,
                     (mnist_dir / "train-images-idx3-ubyte").string());

    SUBCASE("single-layer feature pairs") {
        const RunResult r =
            run_cli("reproduce fig8 --configs-dir \"" SWITCHCODE_CONFIGS_PATH
                    "\" --mnist-dir " +
                    mnist_dir.string() + " --out " +
                    (dir.path / "out8").string());
        REQUIRE(r.exit_code == 0);
        CHECK(fs::exists(dir.path / "out8" / "tiles.pgm"));
        CHECK(fs::exists(dir.path / "out8" / "pair_tiles.pgm"));
        CHECK(fs::exists(dir.path / "out8" / "pairing.json"));
        const Json pairing =
            Json::parse(slurp(dir.path / "out8" / "pairing.json"));
        CHECK(pairing.at("entries").size() == 256);
    }

    SUBCASE("two-layer feature tiles") {
        const RunResult r =
            run_cli("reproduce fig9 --configs-dir \"" SWITCHCODE_CONFIGS_PATH
                    "\" --mnist-dir " +
                    mnist_dir.string() + " --out " +
                    (dir.path / "out9").string());
        REQUIRE(r.exit_code == 0);
        CHECK(fs::exists(dir.path / "out9" / "tiles.pgm"));
        CHECK(fs::exists(dir.path / "out9" / "tiles_layer2.pgm"));
    }
}

TEST_CASE("thread counts do not change grid artifacts") {
    TempDir dir;
    Json cfg;
    cfg["seed"] = 8;
    cfg["dataset"] = {{"source", "mog"},
                      {"num_samples", 300},
                      {"components",
                       Json::array({Json{{"weight", 1.0},
                                         {"mean", {0.0, 0.0}},
                                         {"covariance",
                                          {{1.0, 0.2}, {0.2, 0.5}}}}})}};
    cfg["model"] = {{"layers", {6}},
                    {"activation", "rectified_linear"},
                    {"tied", true}};
    cfg["train"] = {{"learning_rate", 0.05}, {"batch_size", 30}, {"epochs", 5}};
    cfg["outputs"] = {{"dataset_csv", false},
                      {"grid", {{"resolution", 64}}}};
    const fs::path path = dir.path / "config.json";
    write_json(path, cfg);
    REQUIRE(run_cli("train --config " + path.string() + " --threads 1 --out " +
                    (dir.path / "t1").string())
                .exit_code == 0);
    REQUIRE(run_cli("train --config " + path.string() + " --threads 4 --out " +
                    (dir.path / "t4").string())
                .exit_code == 0);
    CHECK(slurp(dir.path / "t1" / "grid.csv") ==
          slurp(dir.path / "t4" / "grid.csv"));
    CHECK(slurp(dir.path / "t1" / "manifest.json") ==
          slurp(dir.path / "t4" / "manifest.json"));
}
