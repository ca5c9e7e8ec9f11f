// Copyright 2026 The SELD Forge Authors. All Rights Reserved.
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

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "seld/common.h"
#include "seld/config.h"
#include "seld/pipeline.h"

int main(int argc, char** argv) {
  CLI::App app{"seld-forge: synthetic SELD toolkit"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  for (const std::string& name : seld::kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "TOML or JSON config")->required();
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--out", out_dir, "output directory (overrides config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(seld::ExitCode::kConfig);
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    seld::RunOptions opts;
    opts.config = seld::LoadConfigFile(config_path);
    opts.seed = seed;
    opts.out_dir = out_dir;
    seld::RunSubcommand(name, opts);
  } catch (const seld::Error& e) {
    std::cerr << "seld-forge " << name << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "seld-forge " << name << ": " << e.what() << "\n";
    return static_cast<int>(seld::ExitCode::kData);
  }
  return 0;
}
