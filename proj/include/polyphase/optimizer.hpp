// SPDX-License-Identifier: Apache-2.0
//
// Joint code/filter optimization.
//
// Codes are parameterized by phases, so every iterate is unimodular. One
// outer iteration of local_descent():
//
//   1. refit every filter in closed form (solve_isl_filter) and rescale it by
//      L / g_i so all pairs share one mainlobe gain and phase;
//   2. take one line-searched step on the phases with those filters frozen,
//      minimizing the gain-normalized error
//
//          F(phi) = sum_i L^2 * eps_i(phi, h_i) / |g_i(phi, h_i)|^2 ;
//
//   3. repeat until the relative decrease drops below convergence_tol.
//
// F equals the refit error at the refit filters, and rescaling a filter to
// gain L is free, so the sequence of refit errors is non-increasing. The
// gradient of F at the refit filters is also the gradient of the refit error
// itself (the filters are optimal there), which lets an L-BFGS history carry
// across refits.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <future>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "polyphase/error.hpp"
#include "polyphase/isl_solver.hpp"
#include "polyphase/waveform.hpp"

namespace polyphase {

// ---------------------------------------------------------------------------
// Configuration

struct OptimizerConfig {
  std::size_t code_length = 40;     // N
  std::size_t set_size = 2;         // k
  std::size_t filter_length = 480;  // Lf
  std::size_t mainlobe_width = 5;
  std::optional<std::size_t> mainlobe_center;  // default: default_mainlobe_center(N, Lf)
  std::optional<double> gain;                  // default: N
  double sample_period = 0.5e-6;

  std::size_t restarts = 4;
  std::size_t scatter_pool = 10;
  double elite_fraction = 0.4;
  double combine_weight_lo = 0.3;
  double combine_weight_hi = 0.7;
  double jitter_sigma = 0.2;  // radians
  std::size_t batch_size = 4;
  std::size_t threads = 0;  // 0 = hardware concurrency

  std::size_t max_iters = 3000;
  double convergence_tol = 1e-9;
  std::size_t lbfgs_memory = 8;  // 0 = plain gradient descent
  std::uint64_t rng_seed = 1;
  double balance_tol = 1e-6;
  unsigned phase_alphabet = 0;  // 0 = continuous phases

  SolverOptions solver{1e-10, CrossMainlobe::keep, SolverMethod::toeplitz};

  MainlobeWindow window() const {
    return {mainlobe_center.value_or(default_mainlobe_center(code_length, filter_length)), mainlobe_width};
  }

  GainScale gain_scale() const { return GainScale(gain.value_or(static_cast<double>(code_length))); }

  void validate() const {
    if (code_length < 2) throw ConfigError("N must be at least 2");
    if (set_size < 1) throw ConfigError("k must be at least 1");
    if (filter_length < code_length) throw ConfigError("filter length must be at least N");
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
    if (scatter_pool < 2) throw ConfigError("scatter_pool must be at least 2");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw ConfigError("elite_fraction must lie in (0, 1]");
    if (!(combine_weight_lo >= 0.0 && combine_weight_lo <= combine_weight_hi && combine_weight_hi <= 1.0)) {
      throw ConfigError("combine weights must satisfy 0 <= lo <= hi <= 1");
    }
    if (!(jitter_sigma >= 0.0)) throw ConfigError("jitter_sigma must be non-negative");
    if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be positive");
    if (!(balance_tol > 0.0)) throw ConfigError("balance_tol must be positive");
    if (!(sample_period > 0.0)) throw ConfigError("sample_period must be positive");
    if (gain && !(*gain > 0.0)) throw ConfigError("gain must be positive");
    if (phase_alphabet == 1) throw ConfigError("phase_alphabet must be 0 (continuous) or >= 2");
    try {
      window().validate(code_length + filter_length - 1);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Phase vectors

struct PhaseVector {
  std::size_t code_length = 0;
  std::size_t set_size = 0;
  std::vector<double> phases;  // code i, sample n at i * code_length + n

  std::span<const double> code(std::size_t i) const {
    return std::span<const double>(phases).subspan(i * code_length, code_length);
  }

  std::vector<CVector> samples() const {
    std::vector<CVector> out(set_size, CVector(code_length));
    for (std::size_t i = 0; i < set_size; ++i) {
      for (std::size_t n = 0; n < code_length; ++n) out[i][n] = std::polar(1.0, phases[i * code_length + n]);
    }
    return out;
  }

  friend bool operator==(const PhaseVector&, const PhaseVector&) = default;
};

inline PhaseVector random_code_set(const OptimizerConfig& config, std::mt19937_64& rng) {
  PhaseVector pv{config.code_length, config.set_size, std::vector<double>(config.code_length * config.set_size)};
  std::uniform_real_distribution<double> uni(0.0, kTwoPi);
  for (double& p : pv.phases) p = wrap_phase(uni(rng));
  return pv;
}

/// Rounds every phase to the nearest multiple of 2*pi / alphabet.
inline PhaseVector quantize_phases(const PhaseVector& pv, unsigned alphabet) {
  if (alphabet < 2) throw std::invalid_argument("quantize_phases: alphabet must be >= 2");
  PhaseVector q = pv;
  const double step = kTwoPi / alphabet;
  for (double& p : q.phases) {
    const double m = std::round(wrap_phase(p) / step);
    p = wrap_phase(m * step);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Objective

class IslObjective {
 public:
  explicit IslObjective(const OptimizerConfig& config)
      : n_(config.code_length),
        k_(config.set_size),
        lf_(config.filter_length),
        window_(config.window()),
        gain_(config.gain_scale().value),
        solver_(config.solver) {}

  std::size_t dimension() const noexcept { return n_ * k_; }
  double gain() const noexcept { return gain_; }

  /// Closed-form filters for the given phases, each rescaled to mainlobe gain L.
  std::vector<CVector> refit(const PhaseVector& pv) const {
    const auto codes = pv.samples();
    std::vector<CVector> filters;
    filters.reserve(k_);
    for (std::size_t i = 0; i < k_; ++i) {
      auto f = solve_isl_filter(std::span<const CVector>(codes), i, lf_, window_, GainScale(gain_), solver_);
      filters.push_back(std::move(f.coefficients));
    }
    balance(pv, filters);
    return filters;
  }

  /// Rescales each filter by L / g_i.
  void balance(const PhaseVector& pv, std::vector<CVector>& filters) const {
    const auto codes = pv.samples();
    for (std::size_t i = 0; i < k_; ++i) {
      const cdouble g = convolve_at(codes[i], filters[i], window_.center);
      if (g == cdouble{}) throw NumericalError("balance: zero mainlobe gain", std::numeric_limits<double>::infinity());
      const cdouble s = gain_ / g;
      for (auto& c : filters[i]) c *= s;
    }
  }

  /// Un-normalized joint error sum_i eps_i.
  double raw_error(const PhaseVector& pv, const std::vector<CVector>& filters) const {
    const auto codes = pv.samples();
    double total = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
      for (std::size_t j = 0; j < k_; ++j) {
        const CVector y = convolve(codes[j], filters[i]);
        for (std::size_t r = 0; r < y.size(); ++r) {
          if (masked(i, j, r)) continue;
          total += std::norm(y[r]);
        }
      }
    }
    return total;
  }

  /// Gain-normalized error F with frozen filters; fills `grad` (d/dphi) when non-null.
  double surrogate(const PhaseVector& pv, const std::vector<CVector>& filters, std::vector<double>* grad) const {
    const auto codes = pv.samples();
    if (grad) grad->assign(dimension(), 0.0);
    const double l2 = gain_ * gain_;
    double value = 0.0;
    std::vector<double> de(dimension());
    CVector e;
    for (std::size_t i = 0; i < k_; ++i) {
      const CVector& h = filters[i];
      double eps = 0.0;
      std::fill(de.begin(), de.end(), 0.0);
      for (std::size_t j = 0; j < k_; ++j) {
        e = convolve(codes[j], h);
        for (std::size_t r = 0; r < e.size(); ++r) {
          if (masked(i, j, r)) e[r] = cdouble{};
          eps += std::norm(e[r]);
        }
        if (!grad) continue;
        // d|e_r|^2 / dphi_{j,n} = -2 Im(x_j[n] * conj(e_r) * h[r - n])
        for (std::size_t n = 0; n < n_; ++n) {
          cdouble acc{};
          for (std::size_t c = 0; c < lf_; ++c) acc += std::conj(e[n + c]) * h[c];
          de[j * n_ + n] = -2.0 * std::imag(codes[j][n] * acc);
        }
      }
      const cdouble g = convolve_at(codes[i], h, window_.center);
      const double g2 = std::norm(g);
      value += l2 * eps / g2;
      if (!grad) continue;
      for (std::size_t d = 0; d < dimension(); ++d) (*grad)[d] += l2 * de[d] / g2;
      for (std::size_t n = 0; n < n_; ++n) {
        if (window_.center < n || window_.center - n >= lf_) continue;
        const double dg2 = -2.0 * std::imag(std::conj(g) * codes[i][n] * h[window_.center - n]);
        (*grad)[i * n_ + n] -= l2 * eps * dg2 / (g2 * g2);
      }
    }
    return value;
  }

  /// Error after a closed-form refit; the gradient is that of F at the refit filters.
  double refit_error(const PhaseVector& pv, std::vector<double>* grad = nullptr) const {
    return surrogate(pv, refit(pv), grad);
  }

 private:
  bool masked(std::size_t i, std::size_t j, std::size_t r) const {
    return (i == j || solver_.cross_mainlobe == CrossMainlobe::remove) && window_.contains(r);
  }

  std::size_t n_, k_, lf_;
  MainlobeWindow window_;
  double gain_;
  SolverOptions solver_;
};

// ---------------------------------------------------------------------------
// Local descent

struct OptimizationTrace {
  std::vector<double> errors;  // refit error after each accepted outer iteration (index 0 = start)
  std::size_t restart_index = 0;
  double wall_seconds = 0.0;
  bool converged = false;
};

struct DescentResult {
  OrthogonalSet set;
  PhaseVector phases;
  OptimizationTrace trace;
};

inline OrthogonalSet assemble_set(const PhaseVector& pv, const std::vector<CVector>& filters,
                                  const OptimizerConfig& config, double isl_error) {
  OrthogonalSet set;
  set.isl_error = isl_error;
  for (std::size_t i = 0; i < pv.set_size; ++i) {
    MismatchedFilter f{filters[i], config.window()};
    set.pairs.emplace_back(PolyphaseCode::from_phases(pv.code(i), config.sample_period), std::move(f));
  }
  return set;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

class LbfgsHistory {
 public:
  explicit LbfgsHistory(std::size_t memory) : memory_(memory) {}

  void push(std::vector<double> s, std::vector<double> y) {
    if (memory_ == 0) return;
    const double sy = dot(s, y);
    if (!(sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)))) return;
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
    if (s_.size() > memory_) {
      s_.pop_front();
      y_.pop_front();
    }
  }

  void clear() {
    s_.clear();
    y_.clear();
  }

  bool empty() const noexcept { return s_.empty(); }

  // -H * grad via the two-loop recursion.
  std::vector<double> direction(const std::vector<double>& grad) const {
    std::vector<double> q = grad;
    const std::size_t m = s_.size();
    std::vector<double> alpha(m);
    for (std::size_t t = m; t-- > 0;) {
      alpha[t] = dot(s_[t], q) / dot(y_[t], s_[t]);
      for (std::size_t d = 0; d < q.size(); ++d) q[d] -= alpha[t] * y_[t][d];
    }
    const double gamma = dot(s_.back(), y_.back()) / dot(y_.back(), y_.back());
    for (double& v : q) v *= gamma;
    for (std::size_t t = 0; t < m; ++t) {
      const double beta = dot(y_[t], q) / dot(y_[t], s_[t]);
      for (std::size_t d = 0; d < q.size(); ++d) q[d] += (alpha[t] - beta) * s_[t][d];
    }
    for (double& v : q) v = -v;
    return q;
  }

 private:
  std::size_t memory_;
  std::deque<std::vector<double>> s_, y_;
};

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

inline DescentResult local_descent(const PhaseVector& start, const OptimizerConfig& config,
                                   std::size_t restart_index = 0) {
  config.validate();
  if (start.code_length != config.code_length || start.set_size != config.set_size ||
      start.phases.size() != config.code_length * config.set_size) {
    throw std::invalid_argument("local_descent: start vector does not match config");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const IslObjective obj(config);
  constexpr double kArmijo = 1e-4;
  constexpr double kMaxFirstStep = 0.05;  // radians, largest phase change of an unscaled step
  constexpr int kMaxHalvings = 40;

  PhaseVector pv = start;
  for (double& p : pv.phases) p = wrap_phase(p);
  std::vector<CVector> filters = obj.refit(pv);
  std::vector<double> grad;
  double err = obj.surrogate(pv, filters, &grad);

  OptimizationTrace trace;
  trace.restart_index = restart_index;
  trace.errors.push_back(err);

  detail::LbfgsHistory history(config.lbfgs_memory);
  double gd_step = 0.0;  // carried step length for plain gradient descent
  std::vector<double> trial_grad;

  for (std::size_t it = 0; it < config.max_iters; ++it) {
    if (detail::max_abs(grad) == 0.0) {
      trace.converged = true;
      break;
    }
    // a probe is a fresh steepest-descent step; only a small probe stops the loop
    const bool probe = history.empty() && gd_step == 0.0;
    std::vector<double> dir;
    double alpha = 1.0;
    if (!history.empty()) {
      dir = history.direction(grad);
      if (!(detail::dot(dir, grad) < 0.0)) {
        history.clear();
        dir.clear();
      }
    }
    if (dir.empty()) {
      dir = grad;
      for (double& d : dir) d = -d;
      const double first = kMaxFirstStep / detail::max_abs(grad);
      alpha = (config.lbfgs_memory == 0 && gd_step > 0.0) ? 2.0 * gd_step : first;
    }

    const double slope = detail::dot(dir, grad);
    PhaseVector trial = pv;
    double trial_err = err;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, alpha *= 0.5) {
      for (std::size_t d = 0; d < trial.phases.size(); ++d) trial.phases[d] = pv.phases[d] + alpha * dir[d];
      trial_err = obj.surrogate(trial, filters, nullptr);
      if (trial_err <= err + kArmijo * alpha * slope && trial_err < err) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!probe) {
        history.clear();
        gd_step = 0.0;
        continue;
      }
      trace.converged = true;
      break;
    }
    if (config.lbfgs_memory == 0) gd_step = alpha;

    // frozen filters, rebalanced: error trial_err; refit can only improve on it
    std::vector<CVector> frozen = filters;
    obj.balance(trial, frozen);
    std::vector<CVector> refit = obj.refit(trial);
    double new_err = obj.surrogate(trial, refit, &trial_grad);
    if (!(new_err <= trial_err)) {
      refit = std::move(frozen);
      new_err = obj.surrogate(trial, refit, &trial_grad);
    }

    std::vector<double> s(dir.size()), y(dir.size());
    for (std::size_t d = 0; d < dir.size(); ++d) {
      s[d] = alpha * dir[d];
      y[d] = trial_grad[d] - grad[d];
    }
    history.push(std::move(s), std::move(y));

    const double decrease = err - new_err;
    for (double& p : trial.phases) p = wrap_phase(p);
    pv = std::move(trial);
    filters = std::move(refit);
    grad = trial_grad;
    err = new_err;
    trace.errors.push_back(err);
    if (decrease < config.convergence_tol * std::max(err, std::numeric_limits<double>::min())) {
      if (probe) {
        trace.converged = true;
        break;
      }
      history.clear();
      gd_step = 0.0;
    }
  }

  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  DescentResult result{assemble_set(pv, filters, config, obj.raw_error(pv, filters)), std::move(pv), std::move(trace)};
  const auto report = check_constraints(result.set, config.balance_tol);
  if (!report.passed()) throw ConstraintError("local_descent: " + report.describe());
  return result;
}

// ---------------------------------------------------------------------------
// Scatter-search multistart

struct RestartOutcome {
  std::size_t index = 0;
  PhaseVector start;
  DescentResult result;
  bool feasible = false;
};

struct MultistartResult {
  OrthogonalSet best;
  PhaseVector best_phases;
  std::size_t best_restart = 0;
  std::vector<RestartOutcome> outcomes;
};

namespace detail {

inline double circular_distance(const PhaseVector& a, const PhaseVector& b) {
  double d = 0.0;
  for (std::size_t t = 0; t < a.phases.size(); ++t) d += 1.0 - std::cos(a.phases[t] - b.phases[t]);
  return d;
}

struct RefEntry {
  PhaseVector phases;
  double error;
};

// Ascending error, so the elite members lead.
inline void order_refset(std::vector<RefEntry>& ref) {
  std::stable_sort(ref.begin(), ref.end(), [](const RefEntry& a, const RefEntry& b) { return a.error < b.error; });
}

inline std::size_t elite_count(const OptimizerConfig& c, std::size_t pool) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(c.elite_fraction * static_cast<double>(pool))),
                                 1, pool);
}

inline PhaseVector combine(const PhaseVector& a, const PhaseVector& b, double w, double sigma, std::mt19937_64& rng) {
  PhaseVector out = a;
  std::normal_distribution<double> jitter(0.0, sigma > 0.0 ? sigma : 1.0);
  for (std::size_t t = 0; t < out.phases.size(); ++t) {
    const cdouble z = w * std::polar(1.0, a.phases[t]) + (1.0 - w) * std::polar(1.0, b.phases[t]);
    double phi = std::abs(z) > 1e-12 ? std::arg(z) : a.phases[t];
    const double j = jitter(rng);
    if (sigma > 0.0) phi += j;
    out.phases[t] = wrap_phase(phi);
  }
  return out;
}

}  // namespace detail

inline MultistartResult scatter_multistart(const OptimizerConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.rng_seed);
  const PhaseVector start0 = random_code_set(config, rng);

  MultistartResult out;
  if (config.restarts == 1) {
    RestartOutcome o{0, start0, local_descent(start0, config, 0), true};
    out.best = o.result.set;
    out.best_phases = o.result.phases;
    out.outcomes.push_back(std::move(o));
    return out;
  }

  const IslObjective obj(config);
  std::seed_seq seq{static_cast<std::uint32_t>(config.rng_seed), static_cast<std::uint32_t>(config.rng_seed >> 32),
                    0x5ca77e5u};
  std::mt19937_64 srng(seq);

  // Diversification: 2 * pool candidates, the seeded start among them.
  const std::size_t pool = config.scatter_pool;
  std::vector<detail::RefEntry> candidates;
  candidates.push_back({start0, obj.refit_error(start0)});
  while (candidates.size() < 2 * pool) {
    PhaseVector pv = random_code_set(config, srng);
    const double e = obj.refit_error(pv);
    candidates.push_back({std::move(pv), e});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const detail::RefEntry& a, const detail::RefEntry& b) { return a.error < b.error; });
  const std::size_t n_elite = detail::elite_count(config, pool);
  std::vector<detail::RefEntry> refset(candidates.begin(), candidates.begin() + static_cast<long>(n_elite));
  std::vector<detail::RefEntry> rest(candidates.begin() + static_cast<long>(n_elite), candidates.end());
  while (refset.size() < pool && !rest.empty()) {
    std::size_t pick = 0;
    double best_d = -1.0;
    for (std::size_t c = 0; c < rest.size(); ++c) {
      double dmin = std::numeric_limits<double>::infinity();
      for (const auto& r : refset) dmin = std::min(dmin, detail::circular_distance(rest[c].phases, r.phases));
      if (dmin > best_d) {
        best_d = dmin;
        pick = c;
      }
    }
    refset.push_back(std::move(rest[pick]));
    rest.erase(rest.begin() + static_cast<long>(pick));
  }

  std::atomic<double> incumbent{std::numeric_limits<double>::infinity()};
  auto run_one = [&](std::size_t index, const PhaseVector& start) {
    RestartOutcome o;
    o.index = index;
    o.start = start;
    o.result = local_descent(start, config, index);
    o.feasible = check_constraints(o.result.set, config.balance_tol).passed();
    double cur = incumbent.load();
    const double e = o.result.trace.errors.back();
    while (o.feasible && e < cur && !incumbent.compare_exchange_weak(cur, e)) {
    }
    return o;
  };

  const std::size_t threads =
      config.threads ? config.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::size_t next = 0;
  while (next < config.restarts) {
    // Build the whole batch before running it so starts never depend on completion order.
    std::vector<std::pair<std::size_t, PhaseVector>> batch;
    const std::size_t n_batch = std::min(config.batch_size, config.restarts - next);
    const std::size_t elite_now = std::min(detail::elite_count(config, refset.size()), refset.size());
    for (std::size_t b = 0; b < n_batch; ++b, ++next) {
      if (next == 0) {
        batch.emplace_back(0, start0);
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick_elite(0, elite_now - 1);
      std::uniform_int_distribution<std::size_t> pick_any(0, refset.size() - 2);
      std::uniform_real_distribution<double> weight(config.combine_weight_lo, config.combine_weight_hi);
      const std::size_t a = pick_elite(srng);
      std::size_t bi = pick_any(srng);
      if (bi >= a) ++bi;
      const double w = weight(srng);
      batch.emplace_back(next, detail::combine(refset[a].phases, refset[bi].phases, w, config.jitter_sigma, srng));
    }

    std::vector<RestartOutcome> done;
    for (std::size_t s = 0; s < batch.size(); s += threads) {
      std::vector<std::future<RestartOutcome>> futs;
      for (std::size_t t = s; t < std::min(batch.size(), s + threads); ++t) {
        futs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, run_one,
                                  batch[t].first, std::cref(batch[t].second)));
      }
      for (auto& f : futs) done.push_back(f.get());
    }

    // Reference set update: improved, non-duplicate solutions replace the worst member.
    for (auto& o : done) {
      const double e = o.result.trace.errors.back();
      auto worst = std::max_element(refset.begin(), refset.end(),
                                    [](const detail::RefEntry& x, const detail::RefEntry& y) { return x.error < y.error; });
      bool dup = false;
      for (const auto& r : refset) dup = dup || detail::circular_distance(r.phases, o.result.phases) < 1e-9;
      if (!dup && e < worst->error) *worst = {o.result.phases, e};
      out.outcomes.push_back(std::move(o));
    }
    detail::order_refset(refset);
  }

  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < out.outcomes.size(); ++t) {
    const auto& o = out.outcomes[t];
    if (!o.feasible) continue;
    if (!best || o.result.trace.errors.back() < out.outcomes[*best].result.trace.errors.back()) best = t;
  }
  if (!best) throw ConstraintError("scatter_multistart: no restart produced a constraint-satisfying set");
  out.best = out.outcomes[*best].result.set;
  out.best_phases = out.outcomes[*best].result.phases;
  out.best_restart = out.outcomes[*best].index;
  return out;
}

// ---------------------------------------------------------------------------
// Optional phase quantization

struct QuantizedSet {
  OrthogonalSet set;
  PhaseVector phases;
  double continuous_error = 0.0;
  double quantized_error = 0.0;
  double degradation_db = 0.0;  // 10 log10(quantized / continuous)
};

inline QuantizedSet quantize_set(const PhaseVector& pv, const OptimizerConfig& config, unsigned alphabet) {
  const IslObjective obj(config);
  QuantizedSet q;
  q.phases = quantize_phases(pv, alphabet);
  const auto filters = obj.refit(q.phases);
  q.continuous_error = obj.raw_error(pv, obj.refit(pv));
  q.quantized_error = obj.raw_error(q.phases, filters);
  q.degradation_db = 10.0 * std::log10(q.quantized_error / q.continuous_error);
  q.set = assemble_set(q.phases, filters, config, q.quantized_error);
  return q;
}

}  // namespace polyphase
