// Copyright 2026 The wfprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// wfprobe: weak-probe simulator for Wigner-friend scenarios.
//
//   wfprobe run    --config C [--out DIR] [--grid min:max:n]
//   wfprobe report --config C [--out DIR]
//   wfprobe scan   --config C --gamma-list a,b,c [--out DIR]
//   wfprobe mc     --config C --samples N [--seed S] [--out DIR]
//
// DIR defaults to $WFPROBE_OUT, then ./wfprobe-out.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "wfprobe/commands.hpp"

namespace {

wfprobe::Grid parse_grid(const std::string &spec) {
    wfprobe::Grid g;
    const auto a = spec.find(':');
    const auto b = spec.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) {
        throw wfprobe::ValidationError("--grid expects min:max:n, got '" + spec + "'");
    }
    try {
        std::size_t used = 0;
        g.x_min = std::stod(spec.substr(0, a));
        g.x_max = std::stod(spec.substr(a + 1, b - a - 1));
        const std::string n = spec.substr(b + 1);
        const long long v = std::stoll(n, &used);
        if (used != n.size() || v < 2) {
            throw std::invalid_argument(n);
        }
        g.n_points = static_cast<std::size_t>(v);
    } catch (const std::logic_error &) {
        throw wfprobe::ValidationError("--grid expects min:max:n with n >= 2, got '" + spec + "'");
    }
    g.validate();
    return g;
}

std::string default_out() {
    const char *env = std::getenv("WFPROBE_OUT");
    return env != nullptr && *env != '\0' ? env : "wfprobe-out";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"wfprobe: weak probes in Wigner-friend scenarios"};
    app.require_subcommand(1);
    std::string config;
    std::string out = default_out();
    std::string grid = "-6:6:241";
    std::vector<double> gammas;
    long long samples = -1;
    std::uint64_t seed = 0;
    bool seed_given = false;

    auto common = [&](CLI::App *sub) {
        sub->add_option("--config", config, "scenario config (YAML or JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
    };
    auto *run = app.add_subcommand("run", "evolve a scenario and write result, probe densities and report");
    common(run);
    run->add_option("--grid", grid, "probe density grid min:max:n");
    auto *report = app.add_subcommand("report", "write the contradiction/readout report only");
    common(report);
    auto *scan = app.add_subcommand("scan", "exact disturbance scan over gamma");
    common(scan);
    scan->add_option("--gamma-list", gammas, "comma separated gamma values")->delimiter(',')->required();
    auto *mc = app.add_subcommand("mc", "Monte Carlo readout and weak-value estimates");
    common(mc);
    mc->add_option("--samples", samples, "number of runs")->required();
    mc->add_option("--seed", seed, "RNG seed (defaults to the config seed)")->each([&](const std::string &) {
        seed_given = true;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto cfg = wfprobe::parse_config(config);
        if (run->parsed()) {
            wfprobe::cmd_run(cfg, out, parse_grid(grid));
        } else if (report->parsed()) {
            wfprobe::cmd_report(cfg, out);
        } else if (scan->parsed()) {
            wfprobe::cmd_scan(cfg, gammas, out);
        } else if (mc->parsed()) {
            if (samples < 1) {
                throw wfprobe::ValidationError("--samples must be at least 1");
            }
            wfprobe::cmd_mc(cfg, static_cast<std::size_t>(samples), seed_given ? seed : cfg.seed, out);
        }
    } catch (const std::exception &e) {
        std::cerr << "wfprobe: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
