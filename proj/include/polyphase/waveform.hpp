// SPDX-License-Identifier: Apache-2.0
//
// Core value types for unimodular codes and their receive filters, together
// with the correlation primitives every other module builds on.
//
// Correlation convention (shared by the whole library):
//
//     r_ab(lag) = sum_t a(t) * conj(b(t + lag))
//
// Filtering is plain linear convolution y = x * h of length N + Lf - 1. A
// filter's mainlobe is a window of `mainlobe_width` output samples centred on
// `mainlobe_center`; everything outside it is sidelobe.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace polyphase {

using cdouble = std::complex<double>;
using CVector = std::vector<cdouble>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into [0, 2*pi).
inline double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Wraps an angle difference into (-pi, pi].
inline double wrap_signed(double phi) {
  double w = std::remainder(phi, kTwoPi);
  if (w <= -std::numbers::pi) w += kTwoPi;
  return w;
}

// ---------------------------------------------------------------------------
// PolyphaseCode

/// Unit-modulus transmit sequence. The phases are canonical; samples are
/// derived from them, so unimodularity holds by construction.
class PolyphaseCode {
 public:
  static PolyphaseCode from_phases(std::span<const double> phases, double sample_period = 0.5e-6) {
    if (phases.size() < 2) {
      throw std::invalid_argument("PolyphaseCode: length must be at least 2");
    }
    if (!(sample_period > 0.0)) {
      throw std::invalid_argument("PolyphaseCode: sample_period must be positive");
    }
    PolyphaseCode code;
    code.phases_.reserve(phases.size());
    code.samples_.reserve(phases.size());
    for (double phi : phases) {
      if (!std::isfinite(phi)) throw std::invalid_argument("PolyphaseCode: non-finite phase");
      code.phases_.push_back(phi);
      code.samples_.push_back(std::polar(1.0, phi));
    }
    code.sample_period_ = sample_period;
    return code;
  }

  /// Accepts samples whose magnitudes are within `tol` of one. The stored
  /// samples are re-derived from their arguments.
  static PolyphaseCode from_samples(std::span<const cdouble> samples, double sample_period = 0.5e-6,
                                    double tol = 1e-12) {
    std::vector<double> phases;
    phases.reserve(samples.size());
    for (const cdouble& s : samples) {
      if (std::abs(std::abs(s) - 1.0) > tol) {
        throw std::invalid_argument("PolyphaseCode: sample is not unit modulus");
      }
      phases.push_back(wrap_phase(std::arg(s)));
    }
    return from_phases(phases, sample_period);
  }

  std::size_t size() const noexcept { return samples_.size(); }
  const CVector& samples() const noexcept { return samples_; }
  const std::vector<double>& phases() const noexcept { return phases_; }
  double sample_period() const noexcept { return sample_period_; }
  double pulse_width() const noexcept { return sample_period_ * static_cast<double>(size()); }

  double max_modulus_deviation() const {
    double dev = 0.0;
    for (const cdouble& s : samples_) dev = std::max(dev, std::abs(std::abs(s) - 1.0));
    return dev;
  }

  friend bool operator==(const PolyphaseCode&, const PolyphaseCode&) = default;

 private:
  PolyphaseCode() = default;

  std::vector<double> phases_;
  CVector samples_;
  double sample_period_ = 0.5e-6;
};

// ---------------------------------------------------------------------------
// Mainlobe geometry

struct MainlobeWindow {
  std::size_t center = 0;
  std::size_t width = 1;

  std::size_t first() const noexcept { return center - width / 2; }
  std::size_t last() const noexcept { return center + width / 2; }
  bool contains(std::size_t r) const noexcept { return r >= first() && r <= last(); }

  /// Throws unless the window is odd-width and lies inside an output of `output_length` samples.
  void validate(std::size_t output_length) const {
    if (width == 0 || width % 2 == 0) {
      throw std::invalid_argument("mainlobe width must be an odd positive integer");
    }
    if (center < width / 2 || center + width / 2 >= output_length) {
      throw std::invalid_argument("mainlobe window extends outside the filtered output");
    }
  }

  friend bool operator==(const MainlobeWindow&, const MainlobeWindow&) = default;
};

/// Peak index of the matched response when the conjugate-reversed code sits
/// centred inside an Lf-tap filter.
inline std::size_t default_mainlobe_center(std::size_t code_length, std::size_t filter_length) {
  if (filter_length < code_length) {
    throw std::invalid_argument("filter length must be at least the code length");
  }
  return code_length - 1 + (filter_length - code_length) / 2;
}

/// Conjugate-reversed code zero-padded to `filter_length` taps so its response
/// peaks at default_mainlobe_center().
inline CVector centered_matched_filter(const PolyphaseCode& code, std::size_t filter_length) {
  const std::size_t n = code.size();
  if (filter_length < n) throw std::invalid_argument("filter length must be at least the code length");
  CVector h(filter_length, cdouble{});
  const std::size_t offset = (filter_length - n) / 2;
  for (std::size_t t = 0; t < n; ++t) h[offset + t] = std::conj(code.samples()[n - 1 - t]);
  return h;
}

// ---------------------------------------------------------------------------
// MismatchedFilter

struct MismatchedFilter {
  CVector coefficients;
  MainlobeWindow mainlobe;

  std::size_t size() const noexcept { return coefficients.size(); }

  void validate(std::size_t code_length) const {
    if (coefficients.size() < code_length) {
      throw std::invalid_argument("MismatchedFilter: length must be at least the code length");
    }
    mainlobe.validate(code_length + coefficients.size() - 1);
  }

  double energy() const {
    double e = 0.0;
    for (const cdouble& c : coefficients) e += std::norm(c);
    return e;
  }

  friend bool operator==(const MismatchedFilter&, const MismatchedFilter&) = default;
};

// ---------------------------------------------------------------------------
// Correlation primitives

/// sum_t a(t) * conj(b(t + lag)) over the overlapping support; zero when disjoint.
inline cdouble crosscorrelation(std::span<const cdouble> a, std::span<const cdouble> b, long lag) {
  const long na = static_cast<long>(a.size());
  const long nb = static_cast<long>(b.size());
  const long t0 = std::max(0L, -lag);
  const long t1 = std::min(na, nb - lag);
  cdouble acc{};
  for (long t = t0; t < t1; ++t) acc += a[t] * std::conj(b[t + lag]);
  return acc;
}

inline cdouble autocorrelation(std::span<const cdouble> a, long lag) {
  return crosscorrelation(a, a, lag);
}

/// Full linear convolution, length a.size() + b.size() - 1. Accumulates over
/// the first operand in ascending index order.
inline CVector convolve(std::span<const cdouble> x, std::span<const cdouble> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t n = x.size();
  const std::size_t lf = h.size();
  CVector y(n + lf - 1, cdouble{});
  for (std::size_t r = 0; r < y.size(); ++r) {
    const std::size_t t0 = r >= lf - 1 ? r - (lf - 1) : 0;
    const std::size_t t1 = std::min(r, n - 1);
    cdouble acc{};
    for (std::size_t t = t0; t <= t1; ++t) acc += x[t] * h[r - t];
    y[r] = acc;
  }
  return y;
}

/// Output sample `r` of convolve(x, h) without forming the whole sequence.
inline cdouble convolve_at(std::span<const cdouble> x, std::span<const cdouble> h, std::size_t r) {
  const std::size_t lf = h.size();
  const std::size_t t0 = r >= lf - 1 ? r - (lf - 1) : 0;
  const std::size_t t1 = std::min(r, x.size() - 1);
  cdouble acc{};
  for (std::size_t t = t0; t <= t1 && t < x.size(); ++t) acc += x[t] * h[r - t];
  return acc;
}

// ---------------------------------------------------------------------------
// CodeFilterPair and OrthogonalSet

class CodeFilterPair {
 public:
  CodeFilterPair(PolyphaseCode code, MismatchedFilter filter)
      : code_(std::move(code)), filter_(std::move(filter)) {
    filter_.validate(code_.size());
    mainlobe_gain_ = convolve_at(code_.samples(), filter_.coefficients, filter_.mainlobe.center);
    if (mainlobe_gain_ == cdouble{}) {
      throw std::invalid_argument("CodeFilterPair: mainlobe gain is zero");
    }
  }

  const PolyphaseCode& code() const noexcept { return code_; }
  const MismatchedFilter& filter() const noexcept { return filter_; }
  cdouble mainlobe_gain() const noexcept { return mainlobe_gain_; }
  std::size_t output_length() const noexcept { return code_.size() + filter_.size() - 1; }

  friend bool operator==(const CodeFilterPair&, const CodeFilterPair&) = default;

 private:
  PolyphaseCode code_;
  MismatchedFilter filter_;
  cdouble mainlobe_gain_;
};

inline CVector filtered_response(const CodeFilterPair& pair) {
  return convolve(pair.code().samples(), pair.filter().coefficients);
}

struct OrthogonalSet {
  std::vector<CodeFilterPair> pairs;
  double isl_error = 0.0;

  std::size_t size() const noexcept { return pairs.size(); }
  std::size_t code_length() const { return pairs.at(0).code().size(); }
  std::size_t filter_length() const { return pairs.at(0).filter().size(); }
  const MainlobeWindow& mainlobe() const { return pairs.at(0).filter().mainlobe; }

  std::vector<PolyphaseCode> codes() const {
    std::vector<PolyphaseCode> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.code());
    return out;
  }

  /// Shared N, Lf and mainlobe geometry across all pairs.
  void validate_shape() const {
    if (pairs.empty()) throw std::invalid_argument("OrthogonalSet: no pairs");
    for (const auto& p : pairs) {
      if (p.code().size() != code_length() || p.filter().size() != filter_length() ||
          !(p.filter().mainlobe == mainlobe())) {
        throw std::invalid_argument("OrthogonalSet: pairs disagree on N, Lf or mainlobe geometry");
      }
    }
  }

  friend bool operator==(const OrthogonalSet&, const OrthogonalSet&) = default;
};

// ---------------------------------------------------------------------------
// Constraint checks

struct ConstraintReport {
  double unimodular_deviation = 0.0;  // max ||x(n)| - 1|
  double gain_imbalance = 0.0;        // max ||g_i| - |g_0|| / |g_0|
  double phase_imbalance = 0.0;       // max |arg g_i - arg g_0| (radians, wrapped)
  double tolerance = 0.0;
  double unimodular_tolerance = 0.0;

  bool unimodular_ok() const noexcept { return unimodular_deviation <= unimodular_tolerance; }
  bool gain_ok() const noexcept { return gain_imbalance <= tolerance; }
  bool phase_ok() const noexcept { return phase_imbalance <= tolerance; }
  bool passed() const noexcept { return unimodular_ok() && gain_ok() && phase_ok(); }

  std::string describe() const {
    std::string s;
    if (!unimodular_ok()) s += "unimodular deviation " + std::to_string(unimodular_deviation) + "; ";
    if (!gain_ok()) s += "gain imbalance " + std::to_string(gain_imbalance) + "; ";
    if (!phase_ok()) s += "phase imbalance " + std::to_string(phase_imbalance) + " rad; ";
    return s.empty() ? "ok" : s;
  }
};

inline ConstraintReport check_constraints(const OrthogonalSet& set, double tol,
                                          double unimodular_tol = 1e-12) {
  ConstraintReport rep;
  rep.tolerance = tol;
  rep.unimodular_tolerance = unimodular_tol;
  if (set.pairs.empty()) return rep;
  const cdouble g0 = set.pairs.front().mainlobe_gain();
  for (const auto& p : set.pairs) {
    rep.unimodular_deviation = std::max(rep.unimodular_deviation, p.code().max_modulus_deviation());
    const cdouble g = p.mainlobe_gain();
    rep.gain_imbalance = std::max(rep.gain_imbalance, std::abs(std::abs(g) - std::abs(g0)) / std::abs(g0));
    rep.phase_imbalance = std::max(rep.phase_imbalance, std::abs(wrap_signed(std::arg(g) - std::arg(g0))));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Raw code orthogonality (no filters): zero-lag cross term is reported apart
// from the nonzero lags.

struct OrthogonalityMetrics {
  double zero_lag_cross = 0.0;       // |r_12(0)| / N
  double peak_cross_nonzero = 0.0;   // max_{lag != 0} |r_12(lag)| / N
  double peak_auto_sidelobe = 0.0;   // max over both codes, lag != 0, |r_ll(lag)| / N
};

inline OrthogonalityMetrics orthogonality(const PolyphaseCode& a, const PolyphaseCode& b) {
  OrthogonalityMetrics m;
  const double n = static_cast<double>(a.size());
  const long span = static_cast<long>(std::max(a.size(), b.size()));
  m.zero_lag_cross = std::abs(crosscorrelation(a.samples(), b.samples(), 0)) / n;
  for (long lag = -span; lag <= span; ++lag) {
    if (lag == 0) continue;
    m.peak_cross_nonzero =
        std::max(m.peak_cross_nonzero, std::abs(crosscorrelation(a.samples(), b.samples(), lag)) / n);
    m.peak_auto_sidelobe = std::max({m.peak_auto_sidelobe, std::abs(autocorrelation(a.samples(), lag)) / n,
                                     std::abs(autocorrelation(b.samples(), lag)) / n});
  }
  return m;
}

}  // namespace polyphase
