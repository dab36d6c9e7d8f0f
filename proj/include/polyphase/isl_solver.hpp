// SPDX-License-Identifier: Apache-2.0
//
// Minimum-ISL mismatched filter design for a set of codes.
//
// For filter i the sidelobe energy is the quadratic form
//
//     eps_i = h^H G_i h,   G_i = sum_j S_ij^H S_ij
//
// where S_ii is code i's convolution matrix with its mainlobe output rows
// removed and S_ij (j != i) is code j's full convolution matrix: every output
// of the filter applied to another code counts as cross-talk. The minimizer
// subject to a fixed response L at the mainlobe centre is
//
//     h = L * G^-1 v / (v^H G^-1 v),   v = conj(row `center` of A_i).
//
// The "delete" step in the literature is phrased in terms of columns of the
// transposed matrix; here it removes output rows of the (N+Lf-1) x Lf matrix.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "polyphase/detail/levinson.hpp"
#include "polyphase/error.hpp"
#include "polyphase/waveform.hpp"

namespace polyphase {

using CMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic>;
using CColumn = Eigen::Matrix<cdouble, Eigen::Dynamic, 1>;

/// Desired mainlobe response level L.
struct GainScale {
  double value;

  explicit GainScale(double l) : value(l) {
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("GainScale must be positive");
  }
};

/// Whether the mainlobe rows are also removed from the other codes' matrices.
enum class CrossMainlobe { keep, remove };

enum class SolverMethod { dense, toeplitz };

struct SolverOptions {
  double ridge_factor = 1e-10;  // ridge = ridge_factor * trace(G) / Lf
  CrossMainlobe cross_mainlobe = CrossMainlobe::keep;
  SolverMethod method = SolverMethod::dense;
};

// ---------------------------------------------------------------------------
// Convolution matrices

/// (N+Lf-1) x Lf Toeplitz matrix with entries[r][c] = code[r-c].
inline CMatrix build_convolution_matrix(std::span<const cdouble> code, std::size_t filter_length) {
  const std::size_t n = code.size();
  if (n == 0) throw std::invalid_argument("build_convolution_matrix: empty code");
  if (filter_length < n) throw std::invalid_argument("build_convolution_matrix: Lf must be >= N");
  CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(n + filter_length - 1),
                            static_cast<Eigen::Index>(filter_length));
  for (std::size_t c = 0; c < filter_length; ++c) {
    for (std::size_t t = 0; t < n; ++t) a(static_cast<Eigen::Index>(c + t), static_cast<Eigen::Index>(c)) = code[t];
  }
  return a;
}

inline CMatrix build_convolution_matrix(const PolyphaseCode& code, std::size_t filter_length) {
  return build_convolution_matrix(code.samples(), filter_length);
}

struct SidelobeMatrix {
  CMatrix entries;
  std::vector<std::size_t> removed_rows;
};

inline SidelobeMatrix remove_mainlobe_rows(const CMatrix& conv, const MainlobeWindow& window) {
  window.validate(static_cast<std::size_t>(conv.rows()));
  SidelobeMatrix out;
  out.entries.resize(conv.rows() - static_cast<Eigen::Index>(window.width), conv.cols());
  Eigen::Index dst = 0;
  for (Eigen::Index r = 0; r < conv.rows(); ++r) {
    if (window.contains(static_cast<std::size_t>(r))) {
      out.removed_rows.push_back(static_cast<std::size_t>(r));
      continue;
    }
    out.entries.row(dst++) = conv.row(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gram matrices

namespace detail {

inline void check_code_set(std::span<const CVector> codes, std::size_t i, std::size_t filter_length) {
  if (codes.empty()) throw std::invalid_argument("empty code set");
  if (i >= codes.size()) throw std::invalid_argument("code index out of range");
  const std::size_t n = codes[0].size();
  for (const auto& c : codes) {
    if (c.size() != n || n == 0) throw std::invalid_argument("codes must share one nonzero length");
  }
  if (filter_length < n) throw std::invalid_argument("filter length must be >= code length");
}

// conj(row r of code's convolution matrix), i.e. the vector w with
// (A h)[r] = w^H h.
inline CColumn conj_conv_row(std::span<const cdouble> code, std::size_t filter_length, std::size_t r) {
  CColumn w = CColumn::Zero(static_cast<Eigen::Index>(filter_length));
  for (std::size_t t = 0; t < code.size(); ++t) {
    if (r >= t && r - t < filter_length) w(static_cast<Eigen::Index>(r - t)) = std::conj(code[t]);
  }
  return w;
}

// Rows removed from the Toeplitz sum for filter i, as conjugated row vectors.
inline std::vector<CColumn> deleted_rows(std::span<const CVector> codes, std::size_t i, std::size_t filter_length,
                                         const MainlobeWindow& window, CrossMainlobe mode) {
  std::vector<CColumn> rows;
  for (std::size_t j = 0; j < codes.size(); ++j) {
    if (j != i && mode == CrossMainlobe::keep) continue;
    for (std::size_t r = window.first(); r <= window.last(); ++r) {
      rows.push_back(conj_conv_row(codes[j], filter_length, r));
    }
  }
  return rows;
}

// Diagonals of sum_j A_j^H A_j, indexed -(Lf-1)..(Lf-1) with offset Lf-1;
// T[p][q] = diag(p - q).
inline CVector toeplitz_diagonals(std::span<const CVector> codes, std::size_t filter_length) {
  const long lf = static_cast<long>(filter_length);
  CVector diag(2 * filter_length - 1, cdouble{});
  for (const auto& code : codes) {
    const long n = static_cast<long>(code.size());
    for (long m = -(n - 1); m <= n - 1; ++m) {
      if (m <= -lf || m >= lf) continue;
      diag[static_cast<std::size_t>(m + lf - 1)] += autocorrelation(code, -m);
    }
  }
  return diag;
}

}  // namespace detail

/// G_i = sum_j S_ij^H S_ij, built from code autocorrelations plus a low-rank
/// mainlobe correction.
inline CMatrix sidelobe_gram(std::span<const CVector> codes, std::size_t i, std::size_t filter_length,
                             const MainlobeWindow& window, CrossMainlobe mode = CrossMainlobe::keep) {
  detail::check_code_set(codes, i, filter_length);
  window.validate(codes[0].size() + filter_length - 1);
  const CVector diag = detail::toeplitz_diagonals(codes, filter_length);
  const auto lf = static_cast<Eigen::Index>(filter_length);
  CMatrix g(lf, lf);
  for (Eigen::Index p = 0; p < lf; ++p) {
    for (Eigen::Index q = 0; q < lf; ++q) g(p, q) = diag[static_cast<std::size_t>(p - q + lf - 1)];
  }
  for (const CColumn& w : detail::deleted_rows(codes, i, filter_length, window, mode)) {
    g.noalias() -= w * w.adjoint();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Joint ISL error

/// h^H G_i h for filter coefficients h designed for code i.
inline double pair_error(std::span<const CVector> codes, std::size_t i, std::span<const cdouble> filter,
                         const MainlobeWindow& window, CrossMainlobe mode = CrossMainlobe::keep) {
  detail::check_code_set(codes, i, filter.size());
  const CMatrix g = sidelobe_gram(codes, i, filter.size(), window, mode);
  const Eigen::Map<const CColumn> h(filter.data(), static_cast<Eigen::Index>(filter.size()));
  const double e = (h.adjoint() * g * h)(0, 0).real();
  return e > 0.0 ? e : 0.0;
}

inline std::vector<CVector> code_samples(std::span<const PolyphaseCode> codes) {
  std::vector<CVector> out;
  out.reserve(codes.size());
  for (const auto& c : codes) out.push_back(c.samples());
  return out;
}

inline double pair_error(const OrthogonalSet& set, std::size_t i, CrossMainlobe mode = CrossMainlobe::keep) {
  set.validate_shape();
  if (i >= set.size()) throw std::invalid_argument("pair_error: index out of range");
  const auto codes = code_samples(set.codes());
  const auto& f = set.pairs[i].filter();
  return pair_error(codes, i, f.coefficients, f.mainlobe, mode);
}

inline double total_error(const OrthogonalSet& set, CrossMainlobe mode = CrossMainlobe::keep) {
  double e = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) e += pair_error(set, i, mode);
  return e;
}

// ---------------------------------------------------------------------------
// Closed-form filter

namespace detail {

inline double condition_estimate(const CMatrix& g) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

[[noreturn]] inline void throw_singular(const CMatrix& g) {
  const double cond = condition_estimate(g);
  std::ostringstream msg;
  msg << "solve_isl_filter: sidelobe Gram matrix is singular after ridge regularization (condition estimate "
      << cond << ")";
  throw NumericalError(msg.str(), cond);
}

inline CColumn dense_solve(CMatrix g, double ridge, const CColumn& v) {
  g.diagonal().array() += ridge;
  Eigen::LLT<CMatrix> llt(g);
  if (llt.info() != Eigen::Success || !(llt.rcond() > std::numeric_limits<double>::epsilon())) {
    throw_singular(g);
  }
  return llt.solve(v);
}

// Toeplitz part by Levinson, mainlobe correction by Woodbury.
inline std::optional<CColumn> toeplitz_solve(std::span<const CVector> codes, std::size_t i,
                                             std::size_t filter_length, const MainlobeWindow& window,
                                             CrossMainlobe mode, double ridge, const CColumn& v) {
  CVector diag = toeplitz_diagonals(codes, filter_length);
  diag[filter_length - 1] += ridge;
  const auto rows = deleted_rows(codes, i, filter_length, window, mode);

  std::vector<CVector> rhs;
  rhs.reserve(rows.size() + 1);
  rhs.emplace_back(v.data(), v.data() + v.size());
  for (const auto& w : rows) rhs.emplace_back(w.data(), w.data() + w.size());
  auto sol = levinson_solve(diag, filter_length, rhs);
  if (!sol) return std::nullopt;

  const auto lf = static_cast<Eigen::Index>(filter_length);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const CColumn zv = Eigen::Map<const CColumn>((*sol)[0].data(), lf);
  CMatrix w(lf, m), zw(lf, m);
  for (Eigen::Index c = 0; c < m; ++c) {
    w.col(c) = rows[static_cast<std::size_t>(c)];
    zw.col(c) = Eigen::Map<const CColumn>((*sol)[static_cast<std::size_t>(c) + 1].data(), lf);
  }
  const CMatrix cap = CMatrix::Identity(m, m) - w.adjoint() * zw;
  Eigen::FullPivLU<CMatrix> lu(cap);
  if (!lu.isInvertible() || !(lu.rcond() > 1e-13)) return std::nullopt;
  const CColumn coef = lu.solve(w.adjoint() * zv);
  CColumn u = zv + zw * coef;
  if (!u.allFinite()) return std::nullopt;
  return u;
}

}  // namespace detail

/// Minimum-ISL filter for code i of the set, normalized so the response at
/// the mainlobe centre equals `gain`.
inline MismatchedFilter solve_isl_filter(std::span<const CVector> codes, std::size_t i, std::size_t filter_length,
                                         const MainlobeWindow& window, GainScale gain,
                                         const SolverOptions& options = {}) {
  detail::check_code_set(codes, i, filter_length);
  window.validate(codes[0].size() + filter_length - 1);
  if (!(options.ridge_factor >= 0.0)) throw std::invalid_argument("ridge_factor must be non-negative");

  const CColumn v = detail::conj_conv_row(codes[i], filter_length, window.center);
  const CVector diag = detail::toeplitz_diagonals(codes, filter_length);
  // trace of G: Lf * diag(0) minus the energy of every removed row
  double trace = static_cast<double>(filter_length) * diag[filter_length - 1].real();
  for (const auto& w : detail::deleted_rows(codes, i, filter_length, window, options.cross_mainlobe)) {
    trace -= w.squaredNorm();
  }
  const double ridge = options.ridge_factor * trace / static_cast<double>(filter_length);

  CColumn u;
  bool solved = false;
  if (options.method == SolverMethod::toeplitz) {
    if (auto t = detail::toeplitz_solve(codes, i, filter_length, window, options.cross_mainlobe, ridge, v)) {
      u = std::move(*t);
      solved = true;
    }
  }
  if (!solved) {
    u = detail::dense_solve(sidelobe_gram(codes, i, filter_length, window, options.cross_mainlobe), ridge, v);
  }

  const cdouble denom = v.adjoint() * u;
  if (!(denom.real() > 0.0) || !std::isfinite(denom.real())) {
    throw NumericalError("solve_isl_filter: non-positive normalization v^H G^-1 v",
                         std::numeric_limits<double>::infinity());
  }
  MismatchedFilter f;
  f.mainlobe = window;
  f.coefficients.resize(filter_length);
  for (std::size_t c = 0; c < filter_length; ++c) {
    f.coefficients[c] = gain.value * u(static_cast<Eigen::Index>(c)) / denom.real();
  }
  return f;
}

inline MismatchedFilter solve_isl_filter(std::span<const PolyphaseCode> codes, std::size_t i,
                                         std::size_t filter_length, const MainlobeWindow& window, GainScale gain,
                                         const SolverOptions& options = {}) {
  const auto samples = code_samples(codes);
  return solve_isl_filter(std::span<const CVector>(samples), i, filter_length, window, gain, options);
}

}  // namespace polyphase
