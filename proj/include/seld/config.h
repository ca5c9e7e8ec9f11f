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

#ifndef SELD_CONFIG_H_
#define SELD_CONFIG_H_

#include <string>

#include "json.hpp"

namespace seld {

// Reads a TOML or JSON config. Files ending in .json are JSON, everything
// else is tried as TOML first and JSON second.
nlohmann::json LoadConfigFile(const std::string& path);
nlohmann::json ParseToml(const std::string& text,
                         const std::string& source = "<string>");

// Looks up a dotted key path ("train.features"); ConfigError naming the
// path when absent.
const nlohmann::json& RequireKey(const nlohmann::json& root,
                                 const std::string& dotted);
std::string RequireString(const nlohmann::json& root,
                          const std::string& dotted);

// Object at `key`, or an empty object when absent. ConfigError when the
// value exists but is not a table.
nlohmann::json Section(const nlohmann::json& root, const std::string& key);

}  // namespace seld

#endif  // SELD_CONFIG_H_
