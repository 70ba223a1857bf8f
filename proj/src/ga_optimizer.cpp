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

#include "bbsinglet/ga_optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace bbsinglet {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Ranking order: higher fitness first, ties broken by chromosome hash.
std::vector<std::size_t> rank_order(std::span<const double> fitnesses,
                                    std::span<const std::uint64_t> hashes) {
  std::vector<std::size_t> order(fitnesses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (fitnesses[a] != fitnesses[b]) return fitnesses[a] > fitnesses[b];
    return hashes[a] < hashes[b];
  });
  return order;
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  for (std::size_t t = 0; t < count; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

}  // namespace

void GAConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("ga: population_size must be >= 2");
  if (generations < 0) throw std::invalid_argument("ga: generations must be >= 0");
  if (tournament_size < 1) throw std::invalid_argument("ga: tournament_size must be >= 1");
  if (elitism_count < 0 || elitism_count >= population_size)
    throw std::invalid_argument("ga: elitism_count must lie in [0, population_size)");
  for (double r : {crossover_rate, mutation_rate})
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("ga: rates must lie in [0, 1]");
  if (!(phase_resolution > 0.0)) throw std::invalid_argument("ga: phase_resolution must be > 0");
  if (stall_generations < 1) throw std::invalid_argument("ga: stall_generations must be >= 1");
}

std::uint64_t chromosome_hash(const Chromosome& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(std::bit_cast<std::uint64_t>(c.dt()));
  for (const auto& seg : c.segments())
    for (const auto& ch : seg.channels) {
      mix(ch.active ? 1u : 0u);
      mix(std::bit_cast<std::uint64_t>(ch.phase));
    }
  return h;
}

std::mt19937_64 RngStream::for_slot(std::uint64_t slot) const {
  std::uint64_t s = splitmix64(master_seed);
  s = splitmix64(s ^ purpose);
  s = splitmix64(s ^ generation);
  s = splitmix64(s ^ slot);
  return std::mt19937_64(s);
}

int phase_levels(double phase_resolution) {
  const double n = std::round(2.0 * std::numbers::pi / phase_resolution);
  return std::max(1, static_cast<int>(n));
}

double quantized_phase(int level, int levels) {
  return phase_from_degrees(360.0 / levels * level);
}

std::vector<Chromosome> random_population(const GAConfig& cfg, const BBSequence& templ,
                                          const RngStream& rng) {
  const int levels = phase_levels(cfg.phase_resolution);
  std::vector<Chromosome> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population_size));
  for (int slot = 0; slot < cfg.population_size; ++slot) {
    auto gen = rng.for_slot(static_cast<std::uint64_t>(slot));
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> level(0, levels - 1);
    std::vector<Segment> segs = templ.segments();
    for (auto& seg : segs)
      for (auto& ch : seg.channels) {
        ch.active = coin(gen);
        ch.phase = quantized_phase(level(gen), levels);
      }
    pop.emplace_back(templ.dt(), templ.channel_labels(), std::move(segs));
  }
  return pop;
}

double fitness(const Chromosome& chrom, const PropagatorCache& cache, const DensityState& rho0,
               const HermitianOperator& p) {
  if (rho0.dim() != cache.dim() || p.dim() != cache.dim())
    throw std::invalid_argument("fitness: dimension mismatch");
  // P = sum mu v v^dagger with mu >= 0; back-propagate W = U^dagger V sqrt(mu).
  const HermitianEigensystem es = eigh(p);
  std::vector<Index> cols;
  for (Index i = 0; i < es.values.size(); ++i) {
    if (es.values(i) < -default_policy().positivity)
      throw std::invalid_argument("fitness: P must be positive semidefinite");
    if (es.values(i) > 1e-14) cols.push_back(i);
  }
  ComplexMatrix w = es.vectors(Eigen::all, cols);
  for (Index k = 0; k < w.cols(); ++k) w.col(k) *= std::sqrt(es.values(cols[k]));
  const auto& segs = chrom.segments();
  for (auto it = segs.rbegin(); it != segs.rend(); ++it) cache.apply_adjoint(*it, w);
  const double tr = (w.adjoint() * (rho0.matrix() * w)).trace().real();
  if (rho0.mode() == StateMode::Full) return tr;
  const double base = p.matrix().trace().real() / static_cast<double>(cache.dim());
  return base + rho0.full_scale() * tr;
}

std::vector<Chromosome> evolve_generation(const std::vector<Chromosome>& pop,
                                          std::span<const double> fitnesses, const GAConfig& cfg,
                                          const RngStream& rng) {
  if (pop.size() != fitnesses.size() || pop.size() != static_cast<std::size_t>(cfg.population_size))
    throw std::invalid_argument("evolve_generation: population and fitness sizes differ");
  if (cfg.elitism_count < 0 || cfg.elitism_count > cfg.population_size)
    throw std::invalid_argument("evolve_generation: elitism_count out of range");
  std::vector<std::uint64_t> hashes;
  for (const auto& c : pop) hashes.push_back(chromosome_hash(c));
  const auto order = rank_order(fitnesses, hashes);
  std::vector<std::size_t> rank(pop.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  const auto elites_n = static_cast<std::size_t>(std::min(cfg.elitism_count, cfg.population_size));
  std::vector<std::size_t> elites(order.begin(), order.begin() + static_cast<long>(elites_n));
  std::sort(elites.begin(), elites.end());

  std::vector<Chromosome> out;
  out.reserve(pop.size());
  for (std::size_t e : elites) out.push_back(pop[e]);

  const int levels = phase_levels(cfg.phase_resolution);
  for (std::size_t slot = elites_n; slot < pop.size(); ++slot) {
    auto gen = rng.for_slot(slot);
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto tournament = [&] {
      std::size_t best = pick(gen);
      for (int t = 1; t < cfg.tournament_size; ++t) {
        const std::size_t c = pick(gen);
        if (rank[c] < rank[best]) best = c;
      }
      return best;
    };
    const std::size_t a = tournament();
    const std::size_t b = tournament();
    Chromosome child = pop[a];
    auto& segs = child.mutable_segments();
    if (unit(gen) < cfg.crossover_rate && segs.size() >= 2) {
      std::uniform_int_distribution<std::size_t> cut_dist(1, segs.size() - 1);
      const std::size_t cut = cut_dist(gen);
      std::copy(pop[b].segments().begin() + static_cast<long>(cut), pop[b].segments().end(),
                segs.begin() + static_cast<long>(cut));
    }
    std::uniform_int_distribution<int> level(0, levels - 1);
    for (auto& seg : segs)
      for (auto& ch : seg.channels) {
        if (unit(gen) < cfg.mutation_rate) ch.active = !ch.active;
        if (unit(gen) < cfg.mutation_rate) ch.phase = quantized_phase(level(gen), levels);
      }
    out.push_back(std::move(child));
  }
  return out;
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BBSINGLET_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

OptimizationResult optimize(const SingletTransferProblem& problem, const GAConfig& cfg,
                            const BBSequence& templ, const ProgressCallback& progress) {
  cfg.validate();
  if (templ.channel_labels() != problem.channel_labels() || templ.dt() != problem.dt())
    throw std::invalid_argument("optimize: template does not match the problem channels or dt");
  const int threads = resolve_thread_count(cfg.threads);

  OptimizationResult result{templ, 0.0, problem.ceiling(), {}, {}};
  const double span = result.ceiling - 0.25;
  auto normalised = [&](double q) { return span > 0.0 ? (q - 0.25) / span : q; };

  std::vector<Chromosome> pop =
      random_population(cfg, templ, RngStream{cfg.master_seed, 0, kInitialPopulationStream});
  std::vector<double> fits(pop.size());
  std::vector<std::uint64_t> hashes(pop.size());
  std::unordered_map<std::uint64_t, std::size_t> previous;
  std::vector<Chromosome> prev_pop;
  std::vector<double> prev_fits;

  auto evaluate = [&] {
    for (std::size_t i = 0; i < pop.size(); ++i) hashes[i] = chromosome_hash(pop[i]);
    std::vector<int> reuse(pop.size(), -1);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      auto it = previous.find(hashes[i]);
      if (it != previous.end() && prev_pop[it->second] == pop[i])
        reuse[i] = static_cast<int>(it->second);
    }
    parallel_for(pop.size(), threads, [&](std::size_t i) {
      fits[i] = reuse[i] >= 0 ? prev_fits[static_cast<std::size_t>(reuse[i])]
                              : problem.fitness(pop[i]);
    });
    result.evaluated.insert(result.evaluated.end(), fits.begin(), fits.end());
  };

  std::vector<double> best_norm;
  bool keep_going = true;
  for (int g = 0; keep_going; ++g) {
    if (g > 0)
      pop = evolve_generation(pop, fits, cfg,
                              RngStream{cfg.master_seed, static_cast<std::uint64_t>(g),
                                        kEvolutionStream});
    evaluate();
    const auto order = rank_order(fits, hashes);
    const std::size_t top = order.front();
    FitnessRecord rec{g, fits[top],
                      std::accumulate(fits.begin(), fits.end(), 0.0) / static_cast<double>(fits.size()),
                      hashes[top]};
    result.history.push_back(rec);
    if (g == 0 || fits[top] > result.best_q) {
      result.best_q = fits[top];
      result.best = pop[top];
    }
    best_norm.push_back(normalised(result.best_q));

    previous.clear();
    for (std::size_t i = 0; i < pop.size(); ++i) previous.emplace(hashes[i], i);
    prev_pop = pop;
    prev_fits = fits;

    if (progress && !progress(rec)) keep_going = false;
    if (g >= cfg.generations) keep_going = false;
    if (result.best_q >= cfg.target_q) keep_going = false;
    if (g >= cfg.stall_generations &&
        best_norm[static_cast<std::size_t>(g)] -
                best_norm[static_cast<std::size_t>(g - cfg.stall_generations)] <
            cfg.stall_tolerance)
      keep_going = false;
  }
  return result;
}

OptimizationResult optimize(const SpinSystem& sys, const GAConfig& cfg, const BBSequence& templ) {
  const auto problem =
      SingletTransferProblem::build(sys, templ.dt(), thermal_polarizations(sys), EngineKind::Auto);
  return optimize(problem, cfg, templ);
}

}  // namespace bbsinglet
