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

#include "bbsinglet/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "bbsinglet/numerical_policy.hpp"

namespace bbsinglet {
namespace {

void require_time(double tau, const char* what) {
  if (!(tau >= 0.0)) throw std::invalid_argument(std::string(what) + ": tau must be >= 0");
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(what + " must be a positive finite time");
}

double sum_of_squares(FitModel model, double a, double t, const std::vector<double>& times,
                      const std::vector<double>& values) {
  double s = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double r = fit_model_value(model, a, t, times[i]) - values[i];
    s += r * r;
  }
  return s;
}

// Least-squares line y = c0 + c1 x.
std::pair<double, double> line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {my - slope * mx, slope};
}

std::pair<double, double> initial_guess(FitModel model, const std::vector<double>& times,
                                        const std::vector<double>& values) {
  const auto [tmin, tmax] = std::minmax_element(times.begin(), times.end());
  const double span = *tmax - *tmin;
  std::vector<double> x, y;
  double amplitude = 0.0;
  if (model == FitModel::Decay) {
    const double sign = std::accumulate(values.begin(), values.end(), 0.0) >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < times.size(); ++i)
      if (sign * values[i] > 0.0) {
        x.push_back(times[i]);
        y.push_back(std::log(sign * values[i]));
      }
    if (x.size() >= 2) {
      const auto [c0, c1] = line_fit(x, y);
      if (c1 < 0.0) return {sign * std::exp(c0), -1.0 / c1};
    }
    amplitude = values[static_cast<std::size_t>(tmin - times.begin())];
  } else {
    amplitude = values[static_cast<std::size_t>(tmax - times.begin())];
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double f = (amplitude - values[i]) / (2.0 * amplitude);
      if (f > 0.0 && f < 1.0) {
        x.push_back(times[i]);
        y.push_back(std::log(f));
      }
    }
    if (x.size() >= 2) {
      const auto [c0, c1] = line_fit(x, y);
      if (c1 < 0.0) return {amplitude, -1.0 / c1};
    }
  }
  return {amplitude, span > 0.0 ? span / 3.0 : 1.0};
}

}  // namespace

void RelaxationParams::validate() const {
  for (const auto& [key, value] : t1) require_positive(value, "t1[" + key + "]");
  require_positive(t_singlet, "t_singlet");
  require_positive(tau_ac, "tau_ac");
  require_positive(tau_hb, "tau_hb");
}

double RelaxationParams::species_t1(const std::string& species) const {
  if (auto it = t1.find(species); it != t1.end()) return it->second;
  double total = 0.0;
  int n = 0;
  const auto sites = species_sites.find(species);
  if (sites != species_sites.end())
    for (const auto& key : sites->second)
      if (auto it = t1.find(key); it != t1.end()) {
        total += it->second;
        ++n;
      }
  if (n == 0) throw std::invalid_argument("no T1 given for species " + species);
  return total / n;
}

double spinlock_decay(double eps0, double tau, double t_singlet) {
  require_time(tau, "spinlock_decay");
  return eps0 * std::exp(-tau / t_singlet);
}

double t1_recovery(double eps_current, double eps_thermal, double tau, double t1) {
  require_time(tau, "t1_recovery");
  return eps_thermal - (eps_thermal - eps_current) * std::exp(-tau / t1);
}

double AffineGain::operator()(const Polarizations& pols, double eps_singlet) const {
  double out = singlet * eps_singlet;
  for (const auto& [label, a] : ancilla)
    if (auto it = pols.find(label); it != pols.end()) out += a * it->second;
  return out;
}

TransferGain AffineGain::as_function() const {
  return [g = *this](const Polarizations& pols, double eps) { return g(pols, eps); };
}

AffineGain linear_response_gain(const SingletTransferProblem& problem, const BBSequence& seq) {
  AffineGain g;
  for (const auto& label : problem.channel_labels())
    g.ancilla[label] = problem.singlet_order_from_overlap(
        problem.with_initial_state({{label, 1.0}}, 0.0).overlap(seq));
  g.singlet = problem.singlet_order_from_overlap(problem.with_initial_state({}, 1.0).overlap(seq));
  return g;
}

std::vector<HBACState> hbac_simulate(const RelaxationParams& params, const Polarizations& thermal,
                                     const TransferGain& gain, int m_max) {
  return hbac_simulate(params, thermal, gain, gain, m_max);
}

std::vector<HBACState> hbac_simulate(const RelaxationParams& params, const Polarizations& thermal,
                                     const TransferGain& ac_gain, const TransferGain& hb_gain,
                                     int m_max) {
  params.validate();
  if (m_max < 0) throw std::invalid_argument("hbac_simulate: m_max must be >= 0");
  if (!ac_gain || !hb_gain) throw std::invalid_argument("hbac_simulate: transfer gain is empty");

  std::vector<HBACState> states;
  Polarizations ancilla = thermal;
  double eps = 0.0;
  for (int m = 0; m <= m_max; ++m) {
    const double tau = m == 0 ? params.tau_ac : params.tau_hb;
    const TransferGain& gain = m == 0 ? ac_gain : hb_gain;
    eps = spinlock_decay(gain(ancilla, eps), tau, params.t_singlet);
    for (auto& [label, value] : ancilla)
      value = t1_recovery(0.0, thermal.at(label), tau, params.species_t1(label));
    states.push_back({m, eps, ancilla});
  }
  return states;
}

double hbac_fixed_point(const RelaxationParams& params, const Polarizations& thermal,
                        const AffineGain& gain) {
  params.validate();
  Polarizations recovered;
  for (const auto& [label, value] : thermal)
    recovered[label] = t1_recovery(0.0, value, params.tau_hb, params.species_t1(label));
  const double d = std::exp(-params.tau_hb / params.t_singlet);
  const double denom = 1.0 - d * gain.singlet;
  if (!(std::abs(denom) > 0.0)) throw NumericalError("hbac_fixed_point: iteration does not contract");
  return d * gain(recovered, 0.0) / denom;
}

FitModel parse_fit_model(const std::string& name) {
  if (name == "decay") return FitModel::Decay;
  if (name == "inversion") return FitModel::InversionRecovery;
  throw std::invalid_argument("unknown fit model '" + name + "' (expected decay or inversion)");
}

const char* fit_model_name(FitModel model) {
  return model == FitModel::Decay ? "decay" : "inversion";
}

double fit_model_value(FitModel model, double amplitude, double time_constant, double t) {
  const double e = std::exp(-t / time_constant);
  return model == FitModel::Decay ? amplitude * e : amplitude * (1.0 - 2.0 * e);
}

FitResult fit_monoexponential(const std::vector<double>& times, const std::vector<double>& values,
                              FitModel model) {
  if (times.size() != values.size())
    throw std::invalid_argument("fit: times and values differ in length");
  if (times.size() < 3) throw std::invalid_argument("fit: at least 3 points are required");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("fit: non-finite data at row " + std::to_string(i));
    for (std::size_t j = 0; j < i; ++j)
      if (times[i] == times[j]) throw std::invalid_argument("fit: repeated time " + std::to_string(times[i]));
  }
  const auto [vmin, vmax] = std::minmax_element(values.begin(), values.end());
  const double scale = std::max(std::abs(*vmin), std::abs(*vmax));
  if (scale == 0.0 || *vmax - *vmin <= 1e-12 * scale)
    throw NumericalError("fit: constant data; the time constant is infinite");

  const auto [tmin, tmax] = std::minmax_element(times.begin(), times.end());
  const double span = *tmax - *tmin;
  auto [a, t] = initial_guess(model, times, values);
  double lambda = 1e-3;
  double chi2 = sum_of_squares(model, a, t, times, values);
  int it = 0;
  bool converged = false;
  constexpr int kMaxIterations = 500;
  for (; it < kMaxIterations && !converged; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double e = std::exp(-times[i] / t);
      Eigen::Vector2d grad;
      if (model == FitModel::Decay)
        grad << e, a * e * times[i] / (t * t);
      else
        grad << 1.0 - 2.0 * e, -2.0 * a * e * times[i] / (t * t);
      const double r = fit_model_value(model, a, t, times[i]) - values[i];
      jtj += grad * grad.transpose();
      jtr += grad * r;
    }
    bool stepped = false;
    while (lambda < 1e16) {
      Eigen::Matrix2d lhs = jtj;
      lhs.diagonal() *= 1.0 + lambda;
      const Eigen::Vector2d step = lhs.ldlt().solve(-jtr);
      const double na = a + step(0), nt = t + step(1);
      if (nt > 0.0 && std::isfinite(na) && std::isfinite(nt)) {
        const double nchi2 = sum_of_squares(model, na, nt, times, values);
        if (nchi2 <= chi2) {
          converged = (std::abs(step(0)) <= 1e-12 * std::abs(na) &&
                       std::abs(step(1)) <= 1e-12 * nt) ||
                      nchi2 <= 1e-28 * scale * scale * static_cast<double>(times.size());
          a = na;
          t = nt;
          chi2 = nchi2;
          lambda = std::max(lambda * 0.1, 1e-15);
          stepped = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!stepped) converged = true;  // no descent direction left: at a minimum
  }
  if (!converged || !std::isfinite(t) || !std::isfinite(a)) {
    std::ostringstream msg;
    msg << "fit did not converge after " << it << " iterations (A=" << a << ", T=" << t
        << ", chi2=" << chi2 << ")";
    throw NumericalError(msg.str());
  }
  if (t > 1e6 * std::max(span, 1e-300)) {
    std::ostringstream msg;
    msg << "fit rejected: time constant " << t << " s is unbounded relative to the sampled span "
        << span << " s";
    throw NumericalError(msg.str());
  }
  return {a, t, std::sqrt(chi2 / static_cast<double>(times.size())), it};
}

SensitivityGain sensitivity_gain(double enhancement, double recycle_ratio) {
  if (!(enhancement > 0.0)) throw std::invalid_argument("sensitivity_gain: enhancement must be > 0");
  if (!(recycle_ratio > 0.0))
    throw std::invalid_argument("sensitivity_gain: recycle_ratio must be > 0");
  const double g = enhancement * std::sqrt(recycle_ratio);
  return {g, g * g};
}

TwoColumnData read_two_column(std::istream& is) {
  TwoColumnData data;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::replace(line.begin(), line.end(), '\t', ' ');
    std::istringstream fields(line);
    std::string a, b, extra;
    if (!(fields >> a)) continue;
    if (!(fields >> b) || (fields >> extra))
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected two columns");
    try {
      std::size_t pa = 0, pb = 0;
      const double t = std::stod(a, &pa);
      const double v = std::stod(b, &pb);
      if (pa != a.size() || pb != b.size()) throw std::invalid_argument("trailing characters");
      data.times.push_back(t);
      data.values.push_back(v);
    } catch (const std::exception&) {
      if (header_allowed && data.times.empty()) {
        header_allowed = false;
        continue;
      }
      throw std::invalid_argument("line " + std::to_string(lineno) + ": non-numeric value");
    }
    header_allowed = false;
  }
  return data;
}

void write_two_column(std::ostream& os, const TwoColumnData& data, const std::string& header) {
  if (data.times.size() != data.values.size())
    throw std::invalid_argument("write_two_column: column lengths differ");
  os << header << '\n';
  os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < data.times.size(); ++i)
    os << data.times[i] << ',' << data.values[i] << '\n';
}

}  // namespace bbsinglet
