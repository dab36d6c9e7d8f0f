// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "oracles.hpp"
#include "polyphase/waveform.hpp"

using namespace polyphase;
using Catch::Matchers::WithinAbs;

namespace {

constexpr cdouble kJ{0.0, 1.0};

PolyphaseCode random_code(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::vector<double> ph(n);
  for (auto& p : ph) p = u(rng);
  return PolyphaseCode::from_phases(ph);
}

OrthogonalSet matched_set(const std::vector<PolyphaseCode>& codes, std::size_t lf) {
  OrthogonalSet set;
  const MainlobeWindow w{default_mainlobe_center(codes[0].size(), lf), 1};
  for (const auto& c : codes) set.pairs.emplace_back(c, MismatchedFilter{centered_matched_filter(c, lf), w});
  return set;
}

}  // namespace

TEST_CASE("crosscorrelation small cases", "[waveform]") {
  const CVector ones{1.0, 1.0};
  CHECK(crosscorrelation(ones, ones, 0) == cdouble(2.0));
  CHECK(crosscorrelation(ones, ones, 2) == cdouble(0.0));
  CHECK(crosscorrelation(ones, ones, -7) == cdouble(0.0));

  const CVector a{1.0, kJ};
  const CVector b{1.0, -1.0};
  CHECK(crosscorrelation(a, b, 1) == cdouble(-1.0));
}

TEST_CASE("autocorrelation small cases", "[waveform]") {
  const CVector a{1.0, kJ, -1.0};
  const cdouble r1 = autocorrelation(a, 1);
  CHECK_THAT(r1.real(), WithinAbs(0.0, 1e-15));
  CHECK_THAT(r1.imag(), WithinAbs(-2.0, 1e-15));
  CHECK(autocorrelation(a, 3) == cdouble(0.0));
  CHECK(autocorrelation(a, -3) == cdouble(0.0));
}

TEST_CASE("correlations agree with the direct-sum oracle", "[waveform]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_complex(1 + trial % 9, rng);
    const auto b = oracle::random_complex(1 + (trial * 5) % 11, rng);
    for (long lag = -14; lag <= 14; ++lag) {
      CHECK(std::abs(crosscorrelation(a, b, lag) - oracle::xcorr(a, b, lag)) < 1e-12);
    }
  }
}

TEST_CASE("crosscorrelation is conjugate symmetric", "[waveform][property]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = oracle::random_unimodular(2 + trial % 17, rng);
    const auto b = oracle::random_unimodular(2 + (trial * 7) % 23, rng);
    for (long lag = -30; lag <= 30; ++lag) {
      const cdouble lhs = crosscorrelation(a, b, lag);
      const cdouble rhs = std::conj(crosscorrelation(b, a, -lag));
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("zero-lag autocorrelation of a unimodular code is N", "[waveform][property]") {
  std::mt19937_64 rng(12);
  for (std::size_t n = 2; n < 200; n += 7) {
    const auto code = random_code(n, rng);
    const cdouble r0 = autocorrelation(code.samples(), 0);
    CHECK_THAT(r0.real(), WithinAbs(static_cast<double>(n), 1e-12));
    CHECK_THAT(r0.imag(), WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("convolve small cases", "[waveform]") {
  CHECK(convolve(CVector{1.0}, CVector{1.0}) == CVector{1.0});
  CHECK(convolve(CVector{1.0, 1.0}, CVector{1.0, 0.0}) == CVector{1.0, 1.0, 0.0});
  CHECK(convolve(CVector{}, CVector{1.0}).empty());
}

TEST_CASE("convolve and convolve_at agree with the oracle", "[waveform]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_complex(1 + trial % 13, rng);
    const auto h = oracle::random_complex(1 + (trial * 3) % 29, rng);
    const CVector y = convolve(x, h);
    const auto ref = oracle::conv(x, h);
    REQUIRE(y.size() == ref.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
      CHECK(std::abs(y[r] - ref[r]) < 1e-12);
      CHECK(convolve_at(x, h, r) == y[r]);
    }
  }
}

TEST_CASE("matched filtering reproduces the autocorrelation", "[waveform][property]") {
  std::mt19937_64 rng(21);
  for (std::size_t n = 2; n <= 32; n += 3) {
    const auto code = random_code(n, rng);
    CVector h(n);
    for (std::size_t t = 0; t < n; ++t) h[t] = std::conj(code.samples()[n - 1 - t]);
    const CVector y = convolve(code.samples(), h);
    // y[n - 1 + lag] = sum_t x(t) conj(x(t - lag)) = r(-lag)
    for (long lag = -static_cast<long>(n) + 1; lag < static_cast<long>(n); ++lag) {
      const cdouble want = autocorrelation(code.samples(), -lag);
      CHECK(std::abs(y[static_cast<std::size_t>(static_cast<long>(n) - 1 + lag)] - want) < 1e-12);
    }
  }
}

TEST_CASE("PolyphaseCode construction", "[waveform]") {
  const std::vector<double> one{0.3};
  CHECK_THROWS_AS(PolyphaseCode::from_phases(one), std::invalid_argument);
  const std::vector<double> ph{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(PolyphaseCode::from_phases(ph, 0.0), std::invalid_argument);
  const auto c = PolyphaseCode::from_phases(ph);
  CHECK(c.size() == 3);
  CHECK(c.max_modulus_deviation() <= 1e-15);
  CHECK_THAT(c.pulse_width(), WithinAbs(1.5e-6, 1e-20));

  const CVector bad{1.0, 1.1};
  CHECK_THROWS_AS(PolyphaseCode::from_samples(bad), std::invalid_argument);
  const CVector good{1.0, kJ};
  CHECK_THAT(PolyphaseCode::from_samples(good).phases()[1], WithinAbs(std::numbers::pi / 2, 1e-15));
}

TEST_CASE("MainlobeWindow validation", "[waveform]") {
  CHECK_NOTHROW(MainlobeWindow{2, 5}.validate(5));
  CHECK_THROWS(MainlobeWindow{2, 4}.validate(10));
  CHECK_THROWS(MainlobeWindow{2, 0}.validate(10));
  CHECK_THROWS(MainlobeWindow{1, 5}.validate(10));
  CHECK_THROWS(MainlobeWindow{8, 5}.validate(10));
}

TEST_CASE("default mainlobe centre is the matched peak", "[waveform]") {
  CHECK(default_mainlobe_center(40, 480) == 259);
  std::mt19937_64 rng(8);
  for (std::size_t n : {2, 5, 8, 13}) {
    for (std::size_t lf : {n, n + 1, 4 * n, 4 * n + 3}) {
      const auto code = random_code(n, rng);
      const CVector y = convolve(code.samples(), centered_matched_filter(code, lf));
      const std::size_t c = default_mainlobe_center(n, lf);
      CHECK_THAT(std::abs(y[c]), WithinAbs(static_cast<double>(n), 1e-12));
    }
  }
  CHECK_THROWS(default_mainlobe_center(5, 4));
}

TEST_CASE("filtered response length", "[waveform]") {
  std::mt19937_64 rng(1);
  const auto code = random_code(40, rng);
  const CodeFilterPair pair(code, MismatchedFilter{centered_matched_filter(code, 480), {259, 5}});
  CHECK(filtered_response(pair).size() == 519);
  CHECK(pair.output_length() == 519);
  CHECK_THAT(pair.mainlobe_gain().real(), WithinAbs(40.0, 1e-12));
}

TEST_CASE("CodeFilterPair rejects invalid filters", "[waveform]") {
  std::mt19937_64 rng(2);
  const auto code = random_code(4, rng);
  CHECK_THROWS_AS(CodeFilterPair(code, MismatchedFilter{CVector(3, 1.0), {2, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(CodeFilterPair(code, MismatchedFilter{CVector(8, 0.0), {5, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(CodeFilterPair(code, MismatchedFilter{CVector(8, 1.0), {11, 1}}), std::invalid_argument);
}

TEST_CASE("check_constraints", "[waveform]") {
  std::mt19937_64 rng(4);
  const auto code = random_code(8, rng);

  SECTION("identical pairs pass with zero imbalance") {
    const auto set = matched_set({code, code}, 16);
    const auto rep = check_constraints(set, 1e-6);
    CHECK(rep.gain_imbalance == 0.0);
    CHECK(rep.phase_imbalance == 0.0);
    CHECK(rep.passed());
  }

  SECTION("a pi/4 rotation on one filter is reported") {
    auto set = matched_set({code, code}, 16);
    MismatchedFilter f = set.pairs[1].filter();
    for (auto& c : f.coefficients) c *= std::polar(1.0, std::numbers::pi / 4);
    set.pairs[1] = CodeFilterPair(code, f);
    const auto rep = check_constraints(set, 1e-6);
    CHECK_THAT(rep.phase_imbalance, WithinAbs(std::numbers::pi / 4, 1e-12));
    CHECK(rep.gain_imbalance < 1e-12);
    CHECK_FALSE(rep.phase_ok());
    CHECK_FALSE(rep.passed());
  }

  SECTION("gain imbalance is relative to pair 0") {
    auto set = matched_set({code, code}, 16);
    MismatchedFilter f = set.pairs[1].filter();
    for (auto& c : f.coefficients) c *= 1.5;
    set.pairs[1] = CodeFilterPair(code, f);
    const auto rep = check_constraints(set, 1e-6);
    CHECK_THAT(rep.gain_imbalance, WithinAbs(0.5, 1e-12));
    CHECK_FALSE(rep.gain_ok());
  }

  SECTION("phase imbalance wraps across +-pi") {
    auto set = matched_set({code, code}, 16);
    MismatchedFilter f0 = set.pairs[0].filter();
    MismatchedFilter f1 = set.pairs[1].filter();
    for (auto& c : f0.coefficients) c *= std::polar(1.0, 3.1);
    for (auto& c : f1.coefficients) c *= std::polar(1.0, -3.1);
    set.pairs[0] = CodeFilterPair(code, f0);
    set.pairs[1] = CodeFilterPair(code, f1);
    CHECK_THAT(check_constraints(set, 1e-6).phase_imbalance, WithinAbs(kTwoPi - 6.2, 1e-12));
  }
}

TEST_CASE("OrthogonalSet shape validation", "[waveform]") {
  std::mt19937_64 rng(6);
  auto set = matched_set({random_code(8, rng), random_code(8, rng)}, 16);
  CHECK_NOTHROW(set.validate_shape());
  const auto other = random_code(8, rng);
  set.pairs.emplace_back(other, MismatchedFilter{centered_matched_filter(other, 20), {13, 1}});
  CHECK_THROWS(set.validate_shape());
  CHECK_THROWS(OrthogonalSet{}.validate_shape());
}

TEST_CASE("orthogonality reports the zero lag apart", "[waveform]") {
  const std::vector<double> pa{0.0, 0.0};
  const std::vector<double> pb{0.0, std::numbers::pi};
  const auto a = PolyphaseCode::from_phases(pa);
  const auto b = PolyphaseCode::from_phases(pb);
  const auto m = orthogonality(a, b);
  CHECK_THAT(m.zero_lag_cross, WithinAbs(0.0, 1e-15));
  CHECK_THAT(m.peak_cross_nonzero, WithinAbs(0.5, 1e-15));
  CHECK_THAT(m.peak_auto_sidelobe, WithinAbs(0.5, 1e-15));
}
