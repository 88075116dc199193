// Copyright 2026 The MDITE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mdite/commands.hpp"

int main(int argc, char **argv) {
    using namespace mdite::commands;
    CLI::App app{"Measurement-driven imaginary-time evolution: sampler, exact oracle and scaling analysis", "mdite"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Options opt;
    uint64_t seed = 0;
    std::string out, in;
    auto common = [&](CLI::App *sub, bool sampling, bool input) {
        sub->add_option("--config", opt.config_path, "TOML run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides output.directory)");
        sub->add_flag("--quiet", opt.quiet, "no summary on stdout");
        if (sampling) {
            sub->add_option("--seed", seed, "master seed (overrides sampler.seed)");
            sub->add_option("--threads", opt.threads, "worker threads (default: MDITE_THREADS, then all cores)")
                ->check(CLI::PositiveNumber);
        }
        if (input) sub->add_option("--in", in, "input CSV (overrides analysis.input)");
    };
    CLI::App *run = app.add_subcommand("run", "sample one parameter point");
    CLI::App *oracle = app.add_subcommand("oracle", "exact dense-matrix observables for small systems");
    CLI::App *scan = app.add_subcommand("scan", "sample a grid along one axis for several sizes");
    CLI::App *crossing = app.add_subcommand("crossing", "Binder-ratio crossings from a scan CSV");
    CLI::App *collapse = app.add_subcommand("collapse", "data collapse from a scan CSV");
    CLI::App *surface = app.add_subcommand("surface", "critical values over a grid of fixed parameters");
    common(run, true, false);
    common(oracle, false, false);
    common(scan, true, false);
    common(crossing, false, true);
    common(collapse, false, true);
    common(surface, false, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInvalid;
    }
    for (CLI::App *sub : {run, scan})
        if (sub->parsed() && sub->count("--seed")) opt.seed = seed;
    if (!out.empty()) opt.out = out;
    if (!in.empty()) opt.in = in;

    if (run->parsed()) return cmd_run(opt);
    if (oracle->parsed()) return cmd_oracle(opt);
    if (scan->parsed()) return cmd_scan(opt);
    if (crossing->parsed()) return cmd_crossing(opt);
    if (collapse->parsed()) return cmd_collapse(opt);
    if (surface->parsed()) return cmd_surface(opt);
    return kFailure;
}
