// Copyright 2026 The bbsinglet Authors
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

#pragma once

// Run configuration: one JSON document with spin_system, bb, ga, relaxation
// and output sections. Unknown keys are rejected everywhere.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bbsinglet/ga_optimizer.hpp"
#include "bbsinglet/relaxation.hpp"
#include "bbsinglet/spin_system.hpp"
#include "bbsinglet/transfer_problem.hpp"

namespace bbsinglet {

// Raised for malformed or inconsistent configuration documents.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr long long kMaxUnforcedDim = 4096;

struct RunConfig {
  explicit RunConfig(SpinSystem sys) : system(std::move(sys)) {}

  SpinSystem system;
  std::vector<std::string> site_labels;  // group label of every expanded site
  Polarizations polarizations;
  double dt = kDefaultDt;
  int n_segments = kDefaultAcSegments;
  EngineKind engine = EngineKind::Auto;
  GAConfig ga;
  std::optional<RelaxationParams> relaxation;
  std::optional<AffineGain> transfer_gain;
  std::filesystem::path output_dir = "out";
  int stride = 10;

  std::vector<double> amplitudes_hz() const;
  std::vector<std::string> channel_labels() const;
  BBSequence template_sequence() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Hilbert dimension implied by the document, checked before any operator is built.
long long config_dimension(const std::string& text);

}  // namespace bbsinglet
