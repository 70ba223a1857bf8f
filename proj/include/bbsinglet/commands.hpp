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

// Subcommands behind the bbsinglet executable. Each returns a process exit
// code and writes human-readable progress to `log`; data files go to the
// output directory and never contain timestamps.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "bbsinglet/config.hpp"
#include "bbsinglet/relaxation.hpp"

namespace bbsinglet {

struct MemoryEstimate {
  long long dense_dim = 0;
  EngineKind engine = EngineKind::Dense;  // engine Auto resolves to
  int blocks = 1;
  long long largest_dim = 0;
  double engine_bytes = 0;     // caches and work matrices of the selected engine
  double available_bytes = 0;  // physical memory, 0 if unknown
};

MemoryEstimate estimate_memory(const RunConfig& cfg);

// Throws ConfigError when the run would need a dense dimension above
// kMaxUnforcedDim or more memory than available, unless forced.
void check_memory(const RunConfig& cfg, bool force);

struct ValidateOptions {
  std::filesystem::path config;
  bool force = false;
};

struct OptimizeOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  bool force = false;
};

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path pulse;
  std::optional<int> stride;
  std::optional<std::filesystem::path> out;
  bool force = false;
};

struct HbacOptions {
  std::filesystem::path config;
  int iterations = 3;
  std::optional<std::filesystem::path> pulse;
  // Separate pulse for iterations m >= 1; defaults to the AC gain.
  std::optional<std::filesystem::path> hbac_pulse;
  std::optional<std::filesystem::path> out;
  bool force = false;
};

struct FitOptions {
  std::filesystem::path data;
  FitModel model = FitModel::Decay;
  std::filesystem::path out = "out";
};

int cmd_validate(const ValidateOptions& opts, std::ostream& log);
int cmd_optimize(const OptimizeOptions& opts, std::ostream& log);
int cmd_simulate(const SimulateOptions& opts, std::ostream& log);
int cmd_hbac(const HbacOptions& opts, std::ostream& log);
int cmd_fit(const FitOptions& opts, std::ostream& log);

// Trajectory table: time_ms,Q,enhancement.
void write_trajectory(std::ostream& os, const TrajectoryRecord& rec);

}  // namespace bbsinglet
