// SPDX-License-Identifier: Apache-2.0
//
// Delay-Doppler analysis of code/filter pairs.
//
//     chi(tau, fd) = sum_n a(n) * h(center + tau - n) * exp(j 2 pi fd n)
//
// Delay tau is measured in samples from the mainlobe centre, so chi(0, 0) is
// the mainlobe gain and chi(tau, 0) is filtered output sample center + tau.
// fd is normalized to the sample rate (cycles per sample). The sum runs over
// the full overlap of the code with the filter.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polyphase/waveform.hpp"

namespace polyphase {

inline constexpr double kDbFloor = -300.0;

/// 20 log10(mag / ref) clamped at the floor.
inline double amplitude_db(double mag, double ref) {
  if (!(mag > 0.0) || !(ref > 0.0)) return kDbFloor;
  return std::max(kDbFloor, 20.0 * std::log10(mag / ref));
}

inline double power_db(double power) {
  if (!(power > 0.0)) return kDbFloor;
  return std::max(kDbFloor, 10.0 * std::log10(power));
}

struct AmbiguityGrid {
  std::vector<long> delay_axis;      // samples relative to mainlobe_center
  std::vector<double> doppler_axis;  // cycles per sample
  std::vector<double> magnitudes_db;  // row-major: doppler index, then delay index
  double reference = 0.0;            // |chi(0, 0)|

  double at(std::size_t doppler_index, std::size_t delay_index) const {
    return magnitudes_db[doppler_index * delay_axis.size() + delay_index];
  }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {0.5 * (lo + hi)};
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return v;
}

/// Every delay at which the code and filter overlap.
inline std::vector<long> full_delay_axis(std::size_t code_length, std::size_t filter_length, std::size_t center) {
  std::vector<long> d;
  const long c = static_cast<long>(center);
  for (long r = 0; r < static_cast<long>(code_length + filter_length - 1); ++r) d.push_back(r - c);
  return d;
}

inline std::vector<double> default_doppler_axis(double span = 0.05, std::size_t points = 64) {
  return linspace(-span, span, points);
}

/// Unnormalized chi(tau, fd). Accumulates in the same order as convolve().
inline cdouble ambiguity_value(std::span<const cdouble> code, std::span<const cdouble> filter, std::size_t center,
                               long delay, double doppler) {
  const long r = static_cast<long>(center) + delay;
  const long lf = static_cast<long>(filter.size());
  const long n = static_cast<long>(code.size());
  if (r < 0 || r > n + lf - 2) return {};
  const long t0 = r >= lf - 1 ? r - (lf - 1) : 0;
  const long t1 = std::min(r, n - 1);
  cdouble acc{};
  for (long t = t0; t <= t1; ++t) {
    acc += code[t] * filter[r - t] * std::polar(1.0, kTwoPi * doppler * static_cast<double>(t));
  }
  return acc;
}

inline AmbiguityGrid ambiguity(const PolyphaseCode& code, const MismatchedFilter& filter,
                               std::vector<long> delays, std::vector<double> dopplers) {
  if (delays.empty() || dopplers.empty()) throw std::invalid_argument("ambiguity: axes must be nonempty");
  AmbiguityGrid grid;
  grid.delay_axis = std::move(delays);
  grid.doppler_axis = std::move(dopplers);
  const std::size_t center = filter.mainlobe.center;
  grid.reference = std::abs(convolve_at(code.samples(), filter.coefficients, center));
  grid.magnitudes_db.resize(grid.delay_axis.size() * grid.doppler_axis.size());
  for (std::size_t f = 0; f < grid.doppler_axis.size(); ++f) {
    for (std::size_t d = 0; d < grid.delay_axis.size(); ++d) {
      const cdouble v =
          ambiguity_value(code.samples(), filter.coefficients, center, grid.delay_axis[d], grid.doppler_axis[f]);
      grid.magnitudes_db[f * grid.delay_axis.size() + d] = amplitude_db(std::abs(v), grid.reference);
    }
  }
  return grid;
}

inline AmbiguityGrid ambiguity(const CodeFilterPair& pair, std::vector<double> dopplers = default_doppler_axis()) {
  return ambiguity(pair.code(), pair.filter(),
                   full_delay_axis(pair.code().size(), pair.filter().size(), pair.filter().mainlobe.center),
                   std::move(dopplers));
}

/// Filtered output in dB relative to the mainlobe centre, one value per output sample.
inline std::vector<double> zero_doppler_cut(const CodeFilterPair& pair) {
  const CVector y = filtered_response(pair);
  const double ref = std::abs(y[pair.filter().mainlobe.center]);
  std::vector<double> db(y.size());
  for (std::size_t r = 0; r < y.size(); ++r) db[r] = amplitude_db(std::abs(y[r]), ref);
  return db;
}

/// Largest response of code i through filter j, relative to pair j's mainlobe.
inline double cross_ambiguity_peak(const CodeFilterPair& pair_i, const CodeFilterPair& pair_j) {
  const CVector y = convolve(pair_i.code().samples(), pair_j.filter().coefficients);
  double peak = 0.0;
  for (const cdouble& v : y) peak = std::max(peak, std::abs(v));
  return amplitude_db(peak, std::abs(pair_j.mainlobe_gain()));
}

// ---------------------------------------------------------------------------
// Scalar metrics

struct SidelobeMetrics {
  double psl_db = kDbFloor;
  double isl_db = kDbFloor;
  std::size_t mainlobe_width_measured = 0;  // contiguous samples within 3 dB of the centre
  std::vector<std::pair<double, double>> doppler_loss_db;  // (fd, 20 log10 |chi(0, fd)| / |chi(0, 0)|)
};

inline SidelobeMetrics metrics(const CodeFilterPair& pair, const std::vector<double>& dopplers = {}) {
  SidelobeMetrics m;
  const CVector y = filtered_response(pair);
  const MainlobeWindow& w = pair.filter().mainlobe;
  const double ref = std::abs(y[w.center]);
  double peak = 0.0, side = 0.0, main = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double p = std::norm(y[r]);
    if (w.contains(r)) {
      main += p;
    } else {
      side += p;
      peak = std::max(peak, std::abs(y[r]));
    }
  }
  m.psl_db = amplitude_db(peak, ref);
  m.isl_db = main > 0.0 ? power_db(side / main) : kDbFloor;

  const double half_power = ref / std::sqrt(2.0);
  std::size_t lo = w.center, hi = w.center;
  while (lo > 0 && std::abs(y[lo - 1]) >= half_power) --lo;
  while (hi + 1 < y.size() && std::abs(y[hi + 1]) >= half_power) ++hi;
  m.mainlobe_width_measured = hi - lo + 1;

  for (double fd : dopplers) {
    const cdouble v = ambiguity_value(pair.code().samples(), pair.filter().coefficients, w.center, 0, fd);
    m.doppler_loss_db.emplace_back(fd, amplitude_db(std::abs(v), ref));
  }
  return m;
}

struct SetMetrics {
  std::vector<SidelobeMetrics> pairs;
  std::vector<std::vector<double>> cross_peak_db;  // [i][j]: code i through filter j; diagonal unused
  double worst_psl_db = kDbFloor;
  double worst_cross_db = kDbFloor;
};

inline SetMetrics metrics(const OrthogonalSet& set, const std::vector<double>& dopplers = {}) {
  SetMetrics sm;
  const std::size_t k = set.size();
  sm.cross_peak_db.assign(k, std::vector<double>(k, kDbFloor));
  for (std::size_t i = 0; i < k; ++i) {
    sm.pairs.push_back(metrics(set.pairs[i], dopplers));
    sm.worst_psl_db = std::max(sm.worst_psl_db, sm.pairs.back().psl_db);
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      sm.cross_peak_db[i][j] = cross_ambiguity_peak(set.pairs[i], set.pairs[j]);
      sm.worst_cross_db = std::max(sm.worst_cross_db, sm.cross_peak_db[i][j]);
    }
  }
  return sm;
}

}  // namespace polyphase
