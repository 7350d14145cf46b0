// Command-line experiment runner: dataset generation, whitening, PCA,
// autoencoder training, batch encoding, visualization exports, and canned
// figure reproductions.  Every run drops a manifest.json next to its
// artifacts; identical configs and seeds reproduce identical bytes.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "switchcode/experiment.hpp"

namespace {

std::string default_out_dir() {
    if (const char* env = std::getenv("SWITCHCODE_OUT")) return env;
    return ".";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"switched-linear coding toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = default_out_dir();
    std::string figure;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string mnist_dir;
    std::string configs_dir;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config (JSON)");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed, "override the config's seed");
        cmd->add_option("--out", out_dir,
                        "output directory (default $SWITCHCODE_OUT or .)");
        cmd->add_option("--threads", threads, "worker threads for grid evaluation")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--mnist-dir", mnist_dir, "directory with MNIST IDX files");
    };

    add_common(app.add_subcommand("generate", "sample a dataset to CSV/IDX"), true);
    add_common(app.add_subcommand("whiten", "fit and apply a whitening transform"), true);
    add_common(app.add_subcommand("pca", "fit a principal component basis"), true);
    add_common(app.add_subcommand("train", "train an autoencoder"), true);
    add_common(app.add_subcommand("encode", "batch-encode a dataset"), true);
    add_common(app.add_subcommand("viz", "export visualizations for a model"), true);

    CLI::App* reproduce =
        app.add_subcommand("reproduce", "re-run a canned figure config");
    reproduce->add_option("figure", figure, "one of fig2, fig4, fig5, fig7, fig8, fig9")
        ->required();
    add_common(reproduce, false);
    reproduce->add_option("--configs-dir", configs_dir,
                          "directory holding the canned configs");

    CLI11_PARSE(app, argc, argv);

    using namespace switchcode;
    try {
        RunOptions options;
        options.out_dir = out_dir;
        options.seed_override = seed;
        options.threads = threads;
        if (!mnist_dir.empty()) options.mnist_dir = mnist_dir;
        if (!configs_dir.empty()) options.configs_dir = configs_dir;

        const Command cmd = command_from_string(app.get_subcommands().front()->get_name());
        if (cmd == Command::reproduce && config_path.empty()) {
            config_path = reproduce_config_path(figure, options);
        }
        const Json config = load_config_file(config_path);
        run_command(cmd, config, options);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << error_json(e).dump() << std::endl;
        return exit_code_for_exception(e);
    }
}
