// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace polyphase::detail {

// Levinson recursion for a general Toeplitz system T x = y with
// T[i][j] = diag(i - j). `diag` is indexed from -(n-1) .. n-1 via offset n-1.
// Solves several right-hand sides in one O(n^2) sweep per RHS. Returns
// nullopt when a leading principal minor is numerically singular.
template <typename T>
std::optional<std::vector<std::vector<T>>> levinson_solve(const std::vector<T>& diag, std::size_t n,
                                                          const std::vector<std::vector<T>>& rhs) {
  auto t = [&](long k) -> const T& { return diag[static_cast<std::size_t>(k + static_cast<long>(n) - 1)]; };
  if (n == 0) return std::vector<std::vector<T>>{};
  const T c0 = t(0);
  if (std::abs(c0) == 0.0) return std::nullopt;

  std::vector<T> f{T(1) / c0};  // T_k f = e_1
  std::vector<T> b{T(1) / c0};  // T_k b = e_k
  std::vector<std::vector<T>> x;
  x.reserve(rhs.size());
  for (const auto& y : rhs) x.push_back({y[0] / c0});

  std::vector<T> nf, nb;
  for (std::size_t k = 1; k < n; ++k) {
    T ef{}, eb{};
    for (std::size_t i = 0; i < k; ++i) {
      ef += t(static_cast<long>(k - i)) * f[i];
      eb += t(-static_cast<long>(i + 1)) * b[i];
    }
    const T denom = T(1) - ef * eb;
    if (!(std::abs(denom) > 1e-14)) return std::nullopt;
    nf.assign(k + 1, T{});
    nb.assign(k + 1, T{});
    for (std::size_t i = 0; i <= k; ++i) {
      const T fi = i < k ? f[i] : T{};
      const T bi = i > 0 ? b[i - 1] : T{};
      nf[i] = (fi - ef * bi) / denom;
      nb[i] = (bi - eb * fi) / denom;
    }
    f.swap(nf);
    b.swap(nb);
    for (std::size_t r = 0; r < rhs.size(); ++r) {
      auto& xr = x[r];
      T ex{};
      for (std::size_t i = 0; i < k; ++i) ex += t(static_cast<long>(k - i)) * xr[i];
      const T scale = rhs[r][k] - ex;
      xr.push_back(T{});
      for (std::size_t i = 0; i <= k; ++i) xr[i] += scale * b[i];
    }
  }
  for (const auto& xr : x) {
    for (const auto& v : xr) {
      if (!std::isfinite(std::abs(v))) return std::nullopt;
    }
  }
  return x;
}

}  // namespace polyphase::detail
