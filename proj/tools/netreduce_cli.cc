/* Copyright 2026 The NetReduce Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "netreduce/experiment.h"

namespace {

bool WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int Fail(const absl::Status& s) {
  std::cerr << "netreduce_cli: " << s.message() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-network aggregation cost models and packet simulator"};
  std::string config_path;
  std::string mode;
  std::string out;
  std::string seed;
  std::string tolerance;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--mode", mode, "model | simulate | sweep | validate");
  app.add_option("--out", out, "output CSV path ('-' for stdout)");
  app.add_option("--seed", seed, "master RNG seed");
  app.add_option("--tolerance", tolerance,
                 "relative completion-time tolerance for validate");
  app.add_option("--set", overrides, "extra key=value override (repeatable)");
  CLI11_PARSE(app, argc, argv);

  netreduce::ExperimentConfig config;
  if (!config_path.empty()) {
    if (auto s = netreduce::LoadConfigFile(config, config_path); !s.ok()) {
      return Fail(s);
    }
  }
  for (const std::string& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      return Fail(absl::InvalidArgumentError(
          absl::StrCat("--set expects key=value, got '", kv, "'")));
    }
    if (auto s = netreduce::ApplySetting(config, kv.substr(0, eq),
                                         kv.substr(eq + 1));
        !s.ok()) {
      return Fail(s);
    }
  }
  const std::pair<const char*, std::string*> flags[] = {
      {"mode", &mode}, {"out", &out}, {"seed", &seed},
      {"tolerance", &tolerance}};
  for (const auto& [key, value] : flags) {
    if (value->empty()) continue;
    if (auto s = netreduce::ApplySetting(config, key, *value); !s.ok()) {
      return Fail(s);
    }
  }

  auto result = netreduce::RunExperiment(config);
  if (!result.ok()) return Fail(result.status());

  if (config.out.empty() || config.out == "-") {
    std::fwrite(result->csv.data(), 1, result->csv.size(), stdout);
  } else if (!WriteFile(config.out, result->csv)) {
    return Fail(absl::UnavailableError(
        absl::StrCat("cannot write ", config.out)));
  }
  for (const auto& [suffix, text] : result->side_outputs) {
    const std::string path = config.out.empty() || config.out == "-"
                                 ? absl::StrCat("trace.", suffix)
                                 : absl::StrCat(config.out, ".", suffix);
    if (!WriteFile(path, text)) {
      return Fail(absl::UnavailableError(absl::StrCat("cannot write ", path)));
    }
  }
  if (!result->pass) {
    std::cerr << "netreduce_cli: validation failed\n";
    return 1;
  }
  return 0;
}
