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

#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "bbsinglet/bb_engine.hpp"
#include "bbsinglet/transfer_problem.hpp"

namespace bbsinglet {

// A chromosome is a BB sequence: one activity bit and one quantized phase
// per segment and channel.
using Chromosome = BBSequence;

struct GAConfig {
  int population_size = 64;
  int generations = 500;
  int tournament_size = 3;
  double crossover_rate = 0.8;
  double mutation_rate = 0.02;  // per gene
  double phase_resolution = std::numbers::pi / 180.0;
  int elitism_count = 2;
  std::uint64_t master_seed = 1;
  // Stop once best Q reaches target_q.
  double target_q = 2.0;
  // Stop when the normalised best fitness (Q - 1/4) / (ceiling - 1/4) has
  // improved by less than stall_tolerance over stall_generations generations.
  int stall_generations = 50;
  double stall_tolerance = 1e-4;
  // Worker threads for fitness evaluation; 0 reads BBSINGLET_THREADS, then
  // falls back to the hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct FitnessRecord {
  int generation = 0;
  double best_q = 0;
  double mean_q = 0;
  std::uint64_t best_chromosome_id = 0;
};

std::uint64_t chromosome_hash(const Chromosome& c);

// Deterministic per-slot random streams derived from (seed, purpose,
// generation, slot).
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t generation = 0;
  std::uint64_t purpose = 0;

  std::mt19937_64 for_slot(std::uint64_t slot) const;
};

inline constexpr std::uint64_t kInitialPopulationStream = 0;
inline constexpr std::uint64_t kEvolutionStream = 1;

// Number of phase levels 2 pi / resolution, at least 1.
int phase_levels(double phase_resolution);
double quantized_phase(int level, int levels);

std::vector<Chromosome> random_population(const GAConfig& cfg, const BBSequence& templ,
                                          const RngStream& rng);

// Q = Tr[U rho U^dagger P] for full-mode rho, or 1/4 + kappa Tr[U rho U^dagger P]
// for deviation-mode rho (kappa = rho.full_scale()).
double fitness(const Chromosome& chrom, const PropagatorCache& cache, const DensityState& rho0,
               const HermitianOperator& p);

std::vector<Chromosome> evolve_generation(const std::vector<Chromosome>& pop,
                                          std::span<const double> fitnesses, const GAConfig& cfg,
                                          const RngStream& rng);

struct OptimizationResult {
  Chromosome best;
  double best_q = 0;
  double ceiling = 0;
  std::vector<FitnessRecord> history;
  // Every fitness evaluated during the run, in evaluation order.
  std::vector<double> evaluated;
};

// Called after each generation with the new record; return false to stop.
using ProgressCallback = std::function<bool(const FitnessRecord&)>;

OptimizationResult optimize(const SingletTransferProblem& problem, const GAConfig& cfg,
                            const BBSequence& templ, const ProgressCallback& progress = {});

// Thermal initial state from relative_gamma, engine chosen automatically.
OptimizationResult optimize(const SpinSystem& sys, const GAConfig& cfg, const BBSequence& templ);

int resolve_thread_count(int requested);

}  // namespace bbsinglet
