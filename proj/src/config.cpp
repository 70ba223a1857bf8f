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

#include "bbsinglet/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace bbsinglet {
namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(path + ": unknown key '" + key + "'");
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(path + ": missing required key '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path + ": expected a finite number");
  return x;
}

long long integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<long long>();
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

template <typename T, typename F>
T optional(const json& obj, const std::string& key, const std::string& path, T fallback, F get) {
  if (!obj.contains(key)) return fallback;
  return static_cast<T>(get(obj.at(key), path + "." + key));
}

std::map<std::string, double> number_map(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path + ": expected an object of numbers");
  std::map<std::string, double> out;
  for (const auto& [key, value] : v.items()) out[key] = number(value, path + "." + key);
  return out;
}

EngineKind parse_engine(const std::string& s, const std::string& path) {
  if (s == "auto") return EngineKind::Auto;
  if (s == "dense") return EngineKind::Dense;
  if (s == "reduced") return EngineKind::Reduced;
  throw ConfigError(path + ": engine must be auto, dense or reduced");
}

struct SiteGroup {
  std::string label;
  int channel = 0;
  double offset_hz = 0;
  int count = 1;
  int first = 0;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

std::vector<SiteGroup> site_groups(const json& ss, const std::vector<SpeciesChannel>& channels) {
  const json& sites = require(ss, "sites", "spin_system");
  if (!sites.is_array() || sites.empty())
    throw ConfigError("spin_system.sites: expected a nonempty array");
  std::vector<SiteGroup> groups;
  int next = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const std::string p = "spin_system.sites[" + std::to_string(i) + "]";
    check_keys(sites[i], p, {"label", "channel", "offset_hz", "count"});
    SiteGroup g;
    g.label = string(require(sites[i], "label", p), p + ".label");
    const std::string ch = string(require(sites[i], "channel", p), p + ".channel");
    g.channel = -1;
    for (std::size_t k = 0; k < channels.size(); ++k)
      if (channels[k].label == ch) g.channel = static_cast<int>(k);
    if (g.channel < 0) throw ConfigError(p + ".channel: unknown channel '" + ch + "'");
    g.offset_hz = optional(sites[i], "offset_hz", p, 0.0, number);
    g.count = optional(sites[i], "count", p, 1, integer);
    if (g.count < 1) throw ConfigError(p + ".count: must be >= 1");
    for (const auto& other : groups)
      if (other.label == g.label) throw ConfigError(p + ".label: duplicate label '" + g.label + "'");
    g.first = next;
    next += g.count;
    groups.push_back(g);
  }
  return groups;
}

std::vector<SpeciesChannel> parse_channels(const json& ss) {
  const json& arr = require(ss, "channels", "spin_system");
  if (!arr.is_array() || arr.empty())
    throw ConfigError("spin_system.channels: expected a nonempty array");
  std::vector<SpeciesChannel> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = "spin_system.channels[" + std::to_string(i) + "]";
    check_keys(arr[i], p, {"label", "relative_gamma", "rf_amplitude_hz"});
    SpeciesChannel c;
    c.label = string(require(arr[i], "label", p), p + ".label");
    c.relative_gamma = number(require(arr[i], "relative_gamma", p), p + ".relative_gamma");
    c.rf_amplitude_hz = number(require(arr[i], "rf_amplitude_hz", p), p + ".rf_amplitude_hz");
    out.push_back(c);
  }
  return out;
}

const SiteGroup& find_group(const std::vector<SiteGroup>& groups, const json& v,
                            const std::string& path) {
  const std::string label = string(v, path);
  for (const auto& g : groups)
    if (g.label == label) return g;
  throw ConfigError(path + ": unknown site '" + label + "'");
}

GAConfig parse_ga(const json& ga) {
  const std::string p = "ga";
  check_keys(ga, p,
             {"population_size", "generations", "tournament_size", "crossover_rate",
              "mutation_rate", "phase_resolution_deg", "elitism_count", "seed", "target_q",
              "stall_generations", "stall_tolerance", "threads"});
  GAConfig c;
  c.population_size = optional(ga, "population_size", p, c.population_size, integer);
  c.generations = optional(ga, "generations", p, c.generations, integer);
  c.tournament_size = optional(ga, "tournament_size", p, c.tournament_size, integer);
  c.crossover_rate = optional(ga, "crossover_rate", p, c.crossover_rate, number);
  c.mutation_rate = optional(ga, "mutation_rate", p, c.mutation_rate, number);
  if (ga.contains("phase_resolution_deg"))
    c.phase_resolution = number(ga.at("phase_resolution_deg"), "ga.phase_resolution_deg") *
                         std::numbers::pi / 180.0;
  c.elitism_count = optional(ga, "elitism_count", p, c.elitism_count, integer);
  if (ga.contains("seed")) {
    const json& s = ga.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("ga.seed: expected a non-negative integer");
    c.master_seed = s.get<std::uint64_t>();
  }
  c.target_q = optional(ga, "target_q", p, c.target_q, number);
  c.stall_generations = optional(ga, "stall_generations", p, c.stall_generations, integer);
  c.stall_tolerance = optional(ga, "stall_tolerance", p, c.stall_tolerance, number);
  c.threads = optional(ga, "threads", p, c.threads, integer);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace

std::vector<double> RunConfig::amplitudes_hz() const {
  std::vector<double> out;
  for (const auto& c : system.channels()) out.push_back(c.rf_amplitude_hz);
  return out;
}

std::vector<std::string> RunConfig::channel_labels() const {
  std::vector<std::string> out;
  for (const auto& c : system.channels()) out.push_back(c.label);
  return out;
}

BBSequence RunConfig::template_sequence() const {
  return BBSequence::silent(dt, channel_labels(), static_cast<std::size_t>(n_segments));
}

long long config_dimension(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object() || !doc.contains("spin_system") || !doc["spin_system"].is_object() ||
      !doc["spin_system"].contains("sites") || !doc["spin_system"]["sites"].is_array())
    throw ConfigError("config: missing spin_system.sites");
  long long spins = 0;
  for (const auto& s : doc["spin_system"]["sites"]) {
    if (!s.is_object()) throw ConfigError("spin_system.sites: expected objects");
    spins += s.contains("count") && s["count"].is_number_integer() ? s["count"].get<long long>() : 1;
  }
  if (spins > 62) throw ConfigError("spin_system.sites: too many spins");
  return 1LL << spins;
}

RunConfig parse_config(const std::string& text) {
  const json doc = parse_json(text);
  check_keys(doc, "config", {"spin_system", "bb", "ga", "relaxation", "output"});

  const json& ss = require(doc, "spin_system", "config");
  check_keys(ss, "spin_system", {"channels", "sites", "couplings", "singlet_pair", "polarizations"});
  std::vector<SpeciesChannel> channels = parse_channels(ss);

  const json bb = doc.value("bb", json::object());
  check_keys(bb, "bb", {"dt_s", "n_segments", "amplitudes_hz", "engine"});
  if (bb.contains("amplitudes_hz")) {
    for (const auto& [label, hz] : number_map(bb.at("amplitudes_hz"), "bb.amplitudes_hz")) {
      bool found = false;
      for (auto& c : channels)
        if (c.label == label) {
          c.rf_amplitude_hz = hz;
          found = true;
        }
      if (!found) throw ConfigError("bb.amplitudes_hz: unknown channel '" + label + "'");
    }
  }

  const std::vector<SiteGroup> groups = site_groups(ss, channels);
  std::vector<SpinSite> sites;
  std::vector<std::string> labels;
  for (const auto& g : groups)
    for (int k = 0; k < g.count; ++k) {
      sites.push_back({static_cast<int>(sites.size()), g.channel, g.offset_hz});
      labels.push_back(g.label);
    }
  if (sites.size() > static_cast<std::size_t>(kMaxDenseSpins))
    throw ConfigError("spin_system.sites: " + std::to_string(sites.size()) +
                      " spins exceed the supported maximum of " + std::to_string(kMaxDenseSpins));

  CouplingTable table;
  if (ss.contains("couplings")) {
    const json& arr = ss.at("couplings");
    if (!arr.is_array()) throw ConfigError("spin_system.couplings: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = "spin_system.couplings[" + std::to_string(i) + "]";
      check_keys(arr[i], p, {"between", "j_hz", "form"});
      const json& between = require(arr[i], "between", p);
      if (!between.is_array() || between.size() != 2)
        throw ConfigError(p + ".between: expected two site labels");
      const SiteGroup& a = find_group(groups, between[0], p + ".between[0]");
      const SiteGroup& b = find_group(groups, between[1], p + ".between[1]");
      Coupling c;
      c.j_hz = number(require(arr[i], "j_hz", p), p + ".j_hz");
      const std::string form = optional(arr[i], "form", p, std::string("weak"), string);
      if (form == "weak")
        c.form = CouplingForm::Weak;
      else if (form == "isotropic")
        c.form = CouplingForm::Isotropic;
      else
        throw ConfigError(p + ".form: expected weak or isotropic");
      for (int x = 0; x < a.count; ++x)
        for (int y = 0; y < b.count; ++y) {
          const int s = a.first + x, t = b.first + y;
          if (&a == &b && y <= x) continue;
          if (table.get(s, t)) throw ConfigError(p + ": coupling given twice");
          table.set(s, t, c);
        }
    }
  }

  const json& pair = require(ss, "singlet_pair", "spin_system");
  if (!pair.is_array() || pair.size() != 2)
    throw ConfigError("spin_system.singlet_pair: expected two site labels");
  std::array<int, 2> pair_idx{};
  for (int k = 0; k < 2; ++k) {
    const std::string p = "spin_system.singlet_pair[" + std::to_string(k) + "]";
    const SiteGroup& g = find_group(groups, pair[static_cast<std::size_t>(k)], p);
    if (g.count != 1) throw ConfigError(p + ": singlet pair sites must have count 1");
    pair_idx[static_cast<std::size_t>(k)] = g.first;
  }

  std::optional<SpinSystem> sys;
  try {
    sys.emplace(channels, sites, table, pair_idx);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("spin_system: ") + e.what());
  }

  RunConfig cfg(*sys);
  cfg.site_labels = labels;
  cfg.polarizations = thermal_polarizations(*sys);
  if (ss.contains("polarizations"))
    for (const auto& [label, v] : number_map(ss.at("polarizations"), "spin_system.polarizations")) {
      if (!cfg.polarizations.contains(label))
        throw ConfigError("spin_system.polarizations: unknown channel '" + label + "'");
      cfg.polarizations[label] = v;
    }

  cfg.dt = optional(bb, "dt_s", "bb", kDefaultDt, number);
  if (!(cfg.dt > 0.0)) throw ConfigError("bb.dt_s: must be > 0");
  cfg.n_segments = optional(bb, "n_segments", "bb", kDefaultAcSegments, integer);
  if (cfg.n_segments < 1) throw ConfigError("bb.n_segments: must be >= 1");
  cfg.engine = parse_engine(optional(bb, "engine", "bb", std::string("auto"), string), "bb.engine");

  if (doc.contains("ga")) cfg.ga = parse_ga(doc.at("ga"));

  if (doc.contains("relaxation")) {
    const json& rx = doc.at("relaxation");
    const std::string p = "relaxation";
    check_keys(rx, p, {"t1_s", "t_singlet_s", "tau_ac_s", "tau_hb_s", "transfer_gain"});
    RelaxationParams params;
    params.t1 = number_map(require(rx, "t1_s", p), "relaxation.t1_s");
    for (const auto& [key, _] : params.t1) {
      bool known = cfg.polarizations.contains(key);
      for (const auto& g : groups) known = known || g.label == key;
      if (!known) throw ConfigError("relaxation.t1_s: unknown species or site '" + key + "'");
    }
    params.t_singlet = number(require(rx, "t_singlet_s", p), "relaxation.t_singlet_s");
    params.tau_ac = number(require(rx, "tau_ac_s", p), "relaxation.tau_ac_s");
    params.tau_hb = number(require(rx, "tau_hb_s", p), "relaxation.tau_hb_s");
    for (const auto& g : groups)
      params.species_sites[channels[static_cast<std::size_t>(g.channel)].label].push_back(g.label);
    try {
      params.validate();
      for (const auto& c : channels) params.species_t1(c.label);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("relaxation: ") + e.what());
    }
    cfg.relaxation = params;
    if (rx.contains("transfer_gain")) {
      const json& tg = rx.at("transfer_gain");
      check_keys(tg, "relaxation.transfer_gain", {"ancilla", "singlet"});
      AffineGain gain;
      gain.ancilla = number_map(require(tg, "ancilla", "relaxation.transfer_gain"),
                                "relaxation.transfer_gain.ancilla");
      for (const auto& [label, _] : gain.ancilla)
        if (!cfg.polarizations.contains(label))
          throw ConfigError("relaxation.transfer_gain.ancilla: unknown channel '" + label + "'");
      gain.singlet = optional(tg, "singlet", "relaxation.transfer_gain", 0.0, number);
      cfg.transfer_gain = gain;
    }
  }

  if (doc.contains("output")) {
    const json& out = doc.at("output");
    check_keys(out, "output", {"directory", "stride"});
    cfg.output_dir = optional(out, "directory", "output", std::string("out"), string);
    cfg.stride = optional(out, "stride", "output", 10, integer);
    if (cfg.stride < 1) throw ConfigError("output.stride: must be >= 1");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace bbsinglet
