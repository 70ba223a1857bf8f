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

// Phenomenological relaxation around the unitary core: singlet decay under
// spin-lock, T1 recovery, heat-bath algorithmic cooling iterations, mono-
// exponential fits and sensitivity accounting. All quantities are scalar
// order parameters in relative polarization units.

#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "bbsinglet/spin_system.hpp"
#include "bbsinglet/transfer_problem.hpp"

namespace bbsinglet {

struct RelaxationParams {
  // T1 keyed by species label or site key.
  std::map<std::string, double> t1;
  double t_singlet = 0;
  double tau_ac = 0;
  double tau_hb = 0;
  // Site keys belonging to each species, used when t1 has no species entry.
  std::map<std::string, std::vector<std::string>> species_sites;

  void validate() const;
  // T1 for a species: the species key if present, else the mean over its
  // site keys that are present.
  double species_t1(const std::string& species) const;
};

struct HBACState {
  int iteration = 0;
  double eps_singlet = 0;
  Polarizations eps_ancilla;
};

double spinlock_decay(double eps0, double tau, double t_singlet);
double t1_recovery(double eps_current, double eps_thermal, double tau, double t1);

// (ancilla polarizations, current singlet order) -> singlet order after the transfer.
using TransferGain = std::function<double(const Polarizations&, double)>;

// eps' = sum_k a_k pol_k + b eps.
struct AffineGain {
  std::map<std::string, double> ancilla;
  double singlet = 0;

  double operator()(const Polarizations& pols, double eps_singlet) const;
  TransferGain as_function() const;
};

// Linear response of a fixed BB sequence: each coefficient is the singlet
// order produced from a unit polarization of one species or unit singlet order.
AffineGain linear_response_gain(const SingletTransferProblem& problem, const BBSequence& seq);

// m = 0 is the AC step from thermal ancillas followed by a spin-lock of tau_ac;
// each later step transfers with the recovered ancillas and spin-locks for
// tau_hb. Ancillas are depleted by each transfer and recover with their T1
// over the following spin-lock. Records one state per m = 0..m_max.
std::vector<HBACState> hbac_simulate(const RelaxationParams& params, const Polarizations& thermal,
                                     const TransferGain& gain, int m_max);

// Same with separate pulses: ac_gain for m = 0 and hb_gain for m >= 1.
std::vector<HBACState> hbac_simulate(const RelaxationParams& params, const Polarizations& thermal,
                                     const TransferGain& ac_gain, const TransferGain& hb_gain,
                                     int m_max);

// Limit of hbac_simulate for an affine gain: eps* = D A / (1 - D b) with
// D = exp(-tau_hb / T_S) and A the gain from the recovered ancillas.
double hbac_fixed_point(const RelaxationParams& params, const Polarizations& thermal,
                        const AffineGain& gain);

enum class FitModel { Decay, InversionRecovery };

FitModel parse_fit_model(const std::string& name);
const char* fit_model_name(FitModel model);

struct FitResult {
  double amplitude = 0;
  double time_constant = 0;
  double rms_residual = 0;
  int iterations = 0;
};

double fit_model_value(FitModel model, double amplitude, double time_constant, double t);

// Decay: A exp(-t/T). Inversion recovery: A (1 - 2 exp(-t/T)).
FitResult fit_monoexponential(const std::vector<double>& times, const std::vector<double>& values,
                              FitModel model = FitModel::Decay);

struct SensitivityGain {
  double per_scan_gain = 0;
  double time_reduction = 0;
};

SensitivityGain sensitivity_gain(double enhancement, double recycle_ratio);

struct TwoColumnData {
  std::vector<double> times;
  std::vector<double> values;
};

// Comma, tab or space separated; '#' comments and one header line allowed.
TwoColumnData read_two_column(std::istream& is);
void write_two_column(std::ostream& os, const TwoColumnData& data,
                      const std::string& header = "time_s,value");

}  // namespace bbsinglet
