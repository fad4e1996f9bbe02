#pragma once

#include <filesystem>

namespace douba {

// Shared command-line options. Every command reads one JSON config, writes
// its outputs under out_dir and is a pure function of (config, inputs, seed).
// Exit codes: 0 certified success, 1 usage/I-O/config error, 2 numerical
// non-convergence or bound violation (outputs still written).
struct CliOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_dir = ".";
    bool trace = false;
    int snapshot_every = 0;
};

int cmd_barycenter(const CliOptions& opts);
int cmd_npgd(const CliOptions& opts);
int cmd_rate_study(const CliOptions& opts);
int cmd_gaussian_map(const CliOptions& opts);
int cmd_stability_probe(const CliOptions& opts);
int cmd_eot(const CliOptions& opts);

}  // namespace douba
