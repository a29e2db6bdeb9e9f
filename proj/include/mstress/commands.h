// Copyright 2026 The mstress Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The five subcommands. Each one writes its artifacts and a manifest.json
// into <out>/<command>-<12 hex digits of the config hash> and returns that
// directory. Failures surface as ConfigError, DataError or DegenerateError.

#ifndef MSTRESS_COMMANDS_H_
#define MSTRESS_COMMANDS_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mstress/config.h"
#include "mstress/synth.h"

namespace mstress::cli {

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<uint64_t> seed;
  std::filesystem::path out = "runs";
  size_t jobs = 1;
  std::vector<std::string> overrides;  // "section.key=value"
};

// Every key a config file may contain.
const std::set<std::string>& known_keys();

// Loads the file (if any), applies --seed and --set overrides and rejects
// unknown keys.
config::Config resolve_config(const GlobalOptions& options);

synth::SyntheticSpec synthetic_spec(const config::Config& cfg);

std::filesystem::path cmd_cohort(const GlobalOptions& options, std::ostream& log);
std::filesystem::path cmd_train_eval(const GlobalOptions& options, std::ostream& log);
std::filesystem::path cmd_importance_delta(const GlobalOptions& options,
                                           const std::filesystem::path& model_a,
                                           const std::filesystem::path& model_b,
                                           std::ostream& log);
std::filesystem::path cmd_causal(const GlobalOptions& options, std::ostream& log);
std::filesystem::path cmd_synth(const GlobalOptions& options, std::ostream& log);

// Exit status for an exception: 1 config, 2 data, 3 degeneracy.
int exit_code_for(const std::exception& e);

// Full command-line entry point.
int run_main(int argc, char** argv);

}  // namespace mstress::cli

#endif  // MSTRESS_COMMANDS_H_
