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

#include "seld/config.h"

#include <fstream>
#include <sstream>

#define TOML_HEADER_ONLY 1
#include "toml.hpp"

#include "seld/common.h"

namespace seld {

namespace {

nlohmann::json FromToml(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [k, v] : *t) obj[std::string(k.str())] = FromToml(v);
    return obj;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : *a) arr.push_back(FromToml(v));
    return arr;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  std::ostringstream os;
  node.visit([&](const auto& n) { os << n; });
  return os.str();
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

nlohmann::json ParseToml(const std::string& text, const std::string& source) {
  try {
    return FromToml(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " (line "
       << e.source().begin.line << ")";
    throw ConfigError(os.str());
  }
}

nlohmann::json LoadConfigFile(const std::string& path) {
  const std::string text = ReadText(path);
  nlohmann::json j;
  if (EndsWith(path, ".json")) {
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  } else {
    try {
      j = ParseToml(text, path);
    } catch (const ConfigError& toml_err) {
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception&) {
        throw toml_err;
      }
    }
  }
  if (!j.is_object()) throw ConfigError(path + ": top level must be a table");
  return j;
}

const nlohmann::json& RequireKey(const nlohmann::json& root,
                                 const std::string& dotted) {
  const nlohmann::json* cur = &root;
  size_t start = 0;
  while (true) {
    const size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (!cur->is_object() || !cur->contains(key)) {
      throw ConfigError("missing required config key: " + dotted);
    }
    cur = &(*cur)[key];
    if (dot == std::string::npos) return *cur;
    start = dot + 1;
  }
}

std::string RequireString(const nlohmann::json& root,
                          const std::string& dotted) {
  const auto& v = RequireKey(root, dotted);
  if (!v.is_string()) throw ConfigError(dotted + " must be a string");
  return v.get<std::string>();
}

nlohmann::json Section(const nlohmann::json& root, const std::string& key) {
  if (!root.contains(key)) return nlohmann::json::object();
  const auto& v = root.at(key);
  if (!v.is_object()) throw ConfigError(key + " must be a table");
  return v;
}

}  // namespace seld
