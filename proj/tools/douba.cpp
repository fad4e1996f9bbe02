#include <CLI11.hpp>

#include "douba/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"douba: doubly regularized entropic Wasserstein barycenters"};
    app.require_subcommand(1);

    douba::CliOptions opts;
    int (*run)(const douba::CliOptions&) = nullptr;

    auto add = [&](const char* name, const char* desc, int (*fn)(const douba::CliOptions&)) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opts.config_path, "JSON config file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out_dir, "output directory (default: .)");
        sub->add_flag("--trace", opts.trace, "emit a per-iteration trace CSV");
        sub->add_option("--snapshot-every", opts.snapshot_every,
                        "write a particle snapshot every S iterations");
        sub->callback([&, fn] { run = fn; });
        return sub;
    };

    add("barycenter", "grid barycenter via dual ascent or the alternating scheme",
        douba::cmd_barycenter);
    add("npgd", "noisy particle gradient descent", douba::cmd_npgd);
    add("rate-study", "plug-in estimation error vs sample size", douba::cmd_rate_study);
    add("gaussian-map", "closed-form Gaussian (lambda, tau) heatmap", douba::cmd_gaussian_map);
    add("stability-probe", "marginal-perturbation stability bound check",
        douba::cmd_stability_probe);
    add("eot", "single entropic optimal transport solve", douba::cmd_eot);

    CLI11_PARSE(app, argc, argv);
    return run ? run(opts) : 1;
}
