/*******************************************************************************
* Copyright 2026 The crust-probe Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

// crust-probe: command-line front end for the staged pipeline.
//
//   crust-probe <subcommand> [--config FILE] [--seed N] [--out DIR]
//
// Subcommands run one stage each; `run` chains all of them.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "crust_probe/pipeline.hpp"

namespace cp = crust_probe;
namespace pl = crust_probe::pipeline;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

pl::PipelineConfig make_config(const Options& o) {
    auto c = o.config.empty() ? pl::PipelineConfig{} : pl::load_config(o.config);
    if (o.seed) c.apply_seed(*o.seed, false);
    if (!o.out.empty()) c.out = o.out;
    return c;
}

void print(std::string_view stage, const pl::StageResult& r) {
    std::cout << stage << ": " << r.summary << "\n";
    for (const auto& p : r.outputs) std::cout << "  wrote " << p.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seafloor classification and Mn-crust thickness from sub-bottom sonar"};
    app.require_subcommand(1, 1);

    Options opt;
    auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config, "JSON configuration file");
        sub->add_option("--seed", opt.seed, "global seed (overrides the config)");
        sub->add_option("--out", opt.out, "output directory (overrides the config)");
    };

    for (const auto& [name, fn] : pl::stages()) add_common(app.add_subcommand(std::string(name)));
    add_common(app.add_subcommand("run", "all stages in order"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        const auto cfg = make_config(opt);
        if (name == "run") {
            for (const auto& [n, fn] : pl::stages()) print(n, pl::run_stage(n, cfg));
        } else {
            print(name, pl::run_stage(name, cfg));
        }
    } catch (const cp::Error& e) {
        std::cerr << "crust-probe " << name << ": error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "crust-probe " << name << ": error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
