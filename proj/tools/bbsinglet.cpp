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

#include <iostream>

#include "CLI11.hpp"
#include "bbsinglet/commands.hpp"

int main(int argc, char** argv) {
  using namespace bbsinglet;
  CLI::App app{"Bang-bang singlet-order transfer: optimization, simulation and relaxation tools"};
  app.require_subcommand(1);

  ValidateOptions validate;
  auto* v = app.add_subcommand("validate", "Check a config: schema, dimension, z-commutation, memory");
  v->add_option("config", validate.config, "JSON run config")->required();
  v->add_flag("--force", validate.force, "Skip the memory guard");

  OptimizeOptions optimize_opts;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* o = app.add_subcommand("optimize", "Run the genetic optimizer and export the best pulse");
  o->add_option("config", optimize_opts.config, "JSON run config")->required();
  auto* seed_opt = o->add_option("--seed", seed, "Master seed (overrides ga.seed)");
  auto* out_opt = o->add_option("--out", out_dir, "Output directory (overrides output.directory)");
  o->add_flag("--force", optimize_opts.force, "Skip the memory guard");

  SimulateOptions simulate;
  int stride = 1;
  std::string sim_out;
  auto* s = app.add_subcommand("simulate", "Propagate a pulse table and write its trajectory");
  s->add_option("config", simulate.config, "JSON run config")->required();
  s->add_option("pulse", simulate.pulse, "Pulse table CSV")->required();
  auto* stride_opt = s->add_option("--stride", stride, "Segments between trajectory samples");
  auto* sim_out_opt = s->add_option("--out", sim_out, "Output directory");
  s->add_flag("--force", simulate.force, "Skip the memory guard");

  HbacOptions hbac;
  std::string hbac_pulse, hbac_hb_pulse, hbac_out;
  auto* h = app.add_subcommand("hbac", "Iterate heat-bath algorithmic cooling");
  h->add_option("config", hbac.config, "JSON run config with a relaxation section")->required();
  h->add_option("--iterations", hbac.iterations, "Highest iteration m")->capture_default_str();
  auto* hbac_pulse_opt =
      h->add_option("--pulse", hbac_pulse, "Pulse table whose linear response sets the gain");
  auto* hbac_hb_pulse_opt = h->add_option("--hbac-pulse", hbac_hb_pulse,
                                          "Pulse table for iterations m >= 1 (default: --pulse)");
  auto* hbac_out_opt = h->add_option("--out", hbac_out, "Output directory");
  h->add_flag("--force", hbac.force, "Skip the memory guard");

  FitOptions fit;
  std::string model = "decay";
  auto* f = app.add_subcommand("fit", "Fit a mono-exponential to two-column data");
  f->add_option("data", fit.data, "time_s,value text file")->required();
  f->add_option("--model", model, "decay or inversion")
      ->check(CLI::IsMember({"decay", "inversion"}))
      ->capture_default_str();
  f->add_option("--out", fit.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*v) return cmd_validate(validate, std::cout);
    if (*o) {
      if (*seed_opt) optimize_opts.seed = seed;
      if (*out_opt) optimize_opts.out = out_dir;
      return cmd_optimize(optimize_opts, std::cout);
    }
    if (*s) {
      if (*stride_opt) simulate.stride = stride;
      if (*sim_out_opt) simulate.out = sim_out;
      return cmd_simulate(simulate, std::cout);
    }
    if (*h) {
      if (*hbac_pulse_opt) hbac.pulse = hbac_pulse;
      if (*hbac_hb_pulse_opt) hbac.hbac_pulse = hbac_hb_pulse;
      if (*hbac_out_opt) hbac.out = hbac_out;
      return cmd_hbac(hbac, std::cout);
    }
    if (*f) {
      fit.model = parse_fit_model(model);
      return cmd_fit(fit, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
