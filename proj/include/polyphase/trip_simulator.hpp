// SPDX-License-Identifier: Apache-2.0
//
// Single-ray pulsed-radar simulation with alternating intra-pulse codes.
//
// Pulse p transmits code c(p). Its receive window holds first-trip echoes of
// c(p) and second-trip echoes of the previous pulse's code c(p-1); pulse 0
// sees a warm-up pulse coded as c(-1). Each echo carries the Doppler phase
// 4 pi v pri q / lambda accumulated up to its transmit index q. Positive
// velocity means approaching.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "polyphase/ambiguity.hpp"
#include "polyphase/waveform.hpp"

namespace polyphase {

inline constexpr double kSpeedOfLight = 299792458.0;

struct Scatterer {
  std::size_t gate = 0;
  cdouble reflectivity{1.0, 0.0};
  double velocity = 0.0;  // m/s, positive approaching
};

struct TripScene {
  std::size_t gates = 0;
  std::vector<Scatterer> first_trip;
  std::vector<Scatterer> second_trip;
  double noise_power = 0.0;  // per complex input sample
  double pri = 500e-6;
  double carrier_wavelength = 0.0216;  // metres (Ku band)
  double sample_period = 0.5e-6;

  double gate_spacing() const noexcept { return kSpeedOfLight * sample_period / 2.0; }
  double unambiguous_range() const noexcept { return kSpeedOfLight * pri / 2.0; }
  double nyquist_velocity() const noexcept { return carrier_wavelength / (4.0 * pri); }

  void validate(double pulse_width) const {
    if (gates == 0) throw std::invalid_argument("TripScene: gates must be positive");
    for (const auto* trip : {&first_trip, &second_trip}) {
      for (const auto& s : *trip) {
        if (s.gate >= gates) throw std::invalid_argument("TripScene: scatterer gate out of range");
        if (!std::isfinite(s.velocity) || !std::isfinite(std::abs(s.reflectivity))) {
          throw std::invalid_argument("TripScene: non-finite scatterer");
        }
      }
    }
    if (!(noise_power >= 0.0)) throw std::invalid_argument("TripScene: noise_power must be non-negative");
    if (!(pri > pulse_width)) throw std::invalid_argument("TripScene: pri must exceed the pulse width");
    if (!(carrier_wavelength > 0.0)) throw std::invalid_argument("TripScene: carrier_wavelength must be positive");
    if (!(sample_period > 0.0)) throw std::invalid_argument("TripScene: sample_period must be positive");
  }
};

struct TripLocation {
  int trip = 1;  // 1 = first trip
  std::size_t gate = 0;
};

/// Trip number and aliased gate of a point target at `range_m`.
inline TripLocation locate(const TripScene& scene, double range_m) {
  if (!(range_m >= 0.0)) throw std::invalid_argument("locate: range must be non-negative");
  const double rua = scene.unambiguous_range();
  const double trips = std::floor(range_m / rua);
  const double within = range_m - trips * rua;
  return {static_cast<int>(trips) + 1, static_cast<std::size_t>(std::floor(within / scene.gate_spacing()))};
}

enum class TxMode { coded, uncoded };

struct PulseTrain {
  std::vector<CVector> pulses;       // M pulses, each gates + N - 1 samples
  std::vector<std::size_t> coding;   // code index transmitted on each pulse
  TxMode mode = TxMode::coded;
};

namespace detail {

inline std::size_t code_index(TxMode mode, long pulse, std::size_t k) {
  if (mode == TxMode::uncoded) return 0;
  const long kk = static_cast<long>(k);
  return static_cast<std::size_t>(((pulse % kk) + kk) % kk);
}

inline void add_echo(CVector& rx, const CVector& code, const Scatterer& s, double phase) {
  const cdouble a = s.reflectivity * std::polar(1.0, phase);
  for (std::size_t t = 0; t < code.size(); ++t) rx[s.gate + t] += a * code[t];
}

}  // namespace detail

inline PulseTrain simulate(const TripScene& scene, const OrthogonalSet& set, std::size_t pulses, TxMode mode,
                           std::mt19937_64& rng) {
  set.validate_shape();
  const std::size_t k = set.size();
  const std::size_t n = set.code_length();
  scene.validate(set.pairs[0].code().pulse_width());
  if (pulses < 2 * k || pulses % 2 != 0) throw std::invalid_argument("simulate: pulses must be even and >= 2k");

  PulseTrain train;
  train.mode = mode;
  train.pulses.assign(pulses, CVector(scene.gates + n - 1, cdouble{}));
  std::normal_distribution<double> gauss(0.0, std::sqrt(std::max(scene.noise_power, 1e-300) / 2.0));
  const double dphi = 4.0 * std::numbers::pi * scene.pri / scene.carrier_wavelength;
  for (std::size_t p = 0; p < pulses; ++p) {
    const long pl = static_cast<long>(p);
    const std::size_t c_now = detail::code_index(mode, pl, k);
    const std::size_t c_prev = detail::code_index(mode, pl - 1, k);
    train.coding.push_back(c_now);
    CVector& rx = train.pulses[p];
    for (const auto& s : scene.first_trip) {
      detail::add_echo(rx, set.pairs[c_now].code().samples(), s, dphi * s.velocity * static_cast<double>(pl));
    }
    for (const auto& s : scene.second_trip) {
      detail::add_echo(rx, set.pairs[c_prev].code().samples(), s, dphi * s.velocity * static_cast<double>(pl - 1));
    }
    if (scene.noise_power == 0.0) continue;
    for (auto& v : rx) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      v += cdouble(re, im);
    }
  }
  return train;
}

struct FilteredTrain {
  std::vector<CVector> gates;  // per pulse, one complex sample per range gate
  std::vector<std::size_t> coding;
};

/// Filters pulse p with filter coding[p]; output gate g is convolution sample g + mainlobe_center.
inline FilteredTrain receive(const PulseTrain& train, const OrthogonalSet& set) {
  set.validate_shape();
  const std::size_t n = set.code_length();
  FilteredTrain out;
  out.coding = train.coding;
  for (std::size_t p = 0; p < train.pulses.size(); ++p) {
    if (train.coding[p] >= set.size()) throw std::invalid_argument("receive: pulse coding exceeds set size");
    const auto& f = set.pairs[train.coding[p]].filter();
    const CVector& rx = train.pulses[p];
    const std::size_t gates = rx.size() + 1 - n;
    CVector g(gates);
    for (std::size_t gate = 0; gate < gates; ++gate) g[gate] = convolve_at(rx, f.coefficients, gate + f.mainlobe.center);
    out.gates.push_back(std::move(g));
  }
  return out;
}

/// Per-gate mean power over pulses, in dB.
inline std::vector<double> power_profile(const FilteredTrain& train) {
  if (train.gates.empty()) return {};
  std::vector<double> acc(train.gates[0].size(), 0.0);
  for (const auto& pulse : train.gates) {
    for (std::size_t g = 0; g < acc.size(); ++g) acc[g] += std::norm(pulse[g]);
  }
  std::vector<double> db(acc.size());
  for (std::size_t g = 0; g < acc.size(); ++g) db[g] = power_db(acc[g] / static_cast<double>(train.gates.size()));
  return db;
}

// ---------------------------------------------------------------------------
// Doppler processing

enum class DopplerEstimator {
  all_pulses,  // lag-1 pulse pair over the whole train
  per_code,    // lag-k pulse pair within each same-code sub-train
};

inline const char* to_string(DopplerEstimator e) {
  return e == DopplerEstimator::all_pulses ? "all_pulses" : "per_code";
}

struct DopplerSpectrum {
  std::vector<double> power_db;     // M bins, natural DFT order
  std::vector<double> frequency_hz;  // signed bin frequency
  std::vector<double> velocity_mps;  // lambda * f / 2
  std::size_t peak_bin = 0;
  double velocity_peak = 0.0;
  double velocity_pulse_pair = 0.0;
};

inline DopplerSpectrum doppler_spectrum(const FilteredTrain& train, std::size_t gate, double pri, double wavelength,
                                        DopplerEstimator estimator = DopplerEstimator::all_pulses,
                                        std::size_t set_size = 2) {
  if (train.gates.empty() || gate >= train.gates[0].size()) throw std::out_of_range("doppler_spectrum: gate out of range");
  const std::size_t m = train.gates.size();
  DopplerSpectrum ds;
  double best = -1.0;
  for (std::size_t bin = 0; bin < m; ++bin) {
    cdouble acc{};
    for (std::size_t p = 0; p < m; ++p) {
      acc += train.gates[p][gate] *
             std::polar(1.0, -kTwoPi * static_cast<double>(bin * p % m) / static_cast<double>(m));
    }
    const double pw = std::norm(acc) / static_cast<double>(m);
    const long signed_bin = bin < (m + 1) / 2 ? static_cast<long>(bin) : static_cast<long>(bin) - static_cast<long>(m);
    const double f = static_cast<double>(signed_bin) / (static_cast<double>(m) * pri);
    ds.power_db.push_back(power_db(pw));
    ds.frequency_hz.push_back(f);
    ds.velocity_mps.push_back(wavelength * f / 2.0);
    if (pw > best) {
      best = pw;
      ds.peak_bin = bin;
    }
  }
  ds.velocity_peak = ds.velocity_mps[ds.peak_bin];

  const std::size_t lag = estimator == DopplerEstimator::all_pulses ? 1 : std::max<std::size_t>(set_size, 1);
  cdouble r1{};
  for (std::size_t p = 0; p + lag < m; ++p) r1 += std::conj(train.gates[p][gate]) * train.gates[p + lag][gate];
  ds.velocity_pulse_pair = wavelength / (4.0 * std::numbers::pi * pri * static_cast<double>(lag)) * std::arg(r1);
  return ds;
}

/// Mean over `gates` of (uncoded - coded) power, in dB.
inline double suppression_db(const std::vector<double>& coded_db, const std::vector<double>& uncoded_db,
                             const std::vector<std::size_t>& gates) {
  if (gates.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t g : gates) acc += uncoded_db.at(g) - coded_db.at(g);
  return acc / static_cast<double>(gates.size());
}

/// Filtered noise level: noise_power times the mean energy of the filters in use.
inline double noise_floor_db(const TripScene& scene, const OrthogonalSet& set, TxMode mode) {
  double e = 0.0;
  if (mode == TxMode::uncoded) {
    e = set.pairs[0].filter().energy();
  } else {
    for (const auto& p : set.pairs) e += p.filter().energy();
    e /= static_cast<double>(set.size());
  }
  return power_db(scene.noise_power * e);
}

// ---------------------------------------------------------------------------
// Coded-vs-uncoded runs

struct SimOptions {
  std::size_t pulses = 64;
  std::uint64_t noise_seed = 7;
  DopplerEstimator estimator = DopplerEstimator::all_pulses;
  bool run_coded = true;
  bool run_uncoded = true;
};

struct ModeResult {
  std::vector<double> power_db;
  std::vector<double> velocity;                 // pulse-pair estimate per gate
  std::vector<std::vector<double>> spectra_db;  // per gate, M bins
  double noise_floor_db = kDbFloor;
};

struct SimResult {
  std::optional<ModeResult> coded;
  std::optional<ModeResult> uncoded;
  std::optional<double> suppression_db;
  std::vector<std::size_t> second_trip_gates;
  DopplerEstimator estimator = DopplerEstimator::all_pulses;
};

inline ModeResult run_mode(const TripScene& scene, const OrthogonalSet& set, TxMode mode, const SimOptions& opt) {
  std::mt19937_64 rng(opt.noise_seed);  // both modes see the same noise realization
  const FilteredTrain ft = receive(simulate(scene, set, opt.pulses, mode, rng), set);
  ModeResult r;
  r.power_db = power_profile(ft);
  r.noise_floor_db = noise_floor_db(scene, set, mode);
  for (std::size_t g = 0; g < scene.gates; ++g) {
    auto ds = doppler_spectrum(ft, g, scene.pri, scene.carrier_wavelength, opt.estimator, set.size());
    r.velocity.push_back(ds.velocity_pulse_pair);
    r.spectra_db.push_back(std::move(ds.power_db));
  }
  return r;
}

inline std::vector<std::size_t> second_trip_gates(const TripScene& scene) {
  std::vector<std::size_t> g;
  for (const auto& s : scene.second_trip) g.push_back(s.gate);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

inline SimResult run_simulation(const TripScene& scene, const OrthogonalSet& set, const SimOptions& opt = {}) {
  SimResult res;
  res.estimator = opt.estimator;
  res.second_trip_gates = second_trip_gates(scene);
  if (opt.run_coded) res.coded = run_mode(scene, set, TxMode::coded, opt);
  if (opt.run_uncoded) res.uncoded = run_mode(scene, set, TxMode::uncoded, opt);
  if (res.coded && res.uncoded) {
    res.suppression_db = suppression_db(res.coded->power_db, res.uncoded->power_db, res.second_trip_gates);
  }
  return res;
}

/// Noise power that puts the uncoded second-trip return `snr_db` above the
/// filtered noise floor, averaged over the second-trip gates.
inline double calibrate_noise_power(const TripScene& scene, const OrthogonalSet& set, double snr_db,
                                    std::size_t pulses = 64) {
  if (scene.second_trip.empty()) throw std::invalid_argument("calibrate_noise_power: scene has no second trip");
  TripScene clean = scene;
  clean.first_trip.clear();
  clean.noise_power = 0.0;
  std::mt19937_64 rng(0);
  const FilteredTrain ft = receive(simulate(clean, set, pulses, TxMode::uncoded, rng), set);
  double p = 0.0;
  const auto gates = second_trip_gates(scene);
  for (std::size_t g : gates) {
    for (const auto& pulse : ft.gates) p += std::norm(pulse[g]);
  }
  p /= static_cast<double>(gates.size() * ft.gates.size());
  return p / (std::pow(10.0, snr_db / 10.0) * set.pairs[0].filter().energy());
}

/// Coded-mode power relative to the noise floor in the clear region past the
/// second-trip block: from one code length after the last second-trip gate
/// (the end of its received echo) up to one code length before the next
/// first-trip scatterer.
struct ResidualCheck {
  std::size_t first_gate = 0;
  std::size_t last_gate = 0;
  double max_excess_db = 0.0;
  double mean_excess_db = 0.0;
};

inline std::optional<ResidualCheck> second_trip_residual(const TripScene& scene, const ModeResult& coded,
                                                         std::size_t code_length) {
  const auto st = second_trip_gates(scene);
  if (st.empty()) return std::nullopt;
  const std::size_t lo = st.back() + code_length;
  std::size_t hi = scene.gates;
  for (const auto& s : scene.first_trip) {
    if (s.gate >= lo) hi = std::min(hi, s.gate >= code_length ? s.gate - code_length + 1 : 0);
  }
  if (lo >= hi) return std::nullopt;
  ResidualCheck rc{lo, hi - 1, -std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t g = lo; g < hi; ++g) {
    const double ex = coded.power_db[g] - coded.noise_floor_db;
    rc.max_excess_db = std::max(rc.max_excess_db, ex);
    rc.mean_excess_db += ex;
  }
  rc.mean_excess_db /= static_cast<double>(hi - lo);
  return rc;
}

}  // namespace polyphase
