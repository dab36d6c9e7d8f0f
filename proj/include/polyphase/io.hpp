// SPDX-License-Identifier: Apache-2.0
//
// Configuration, waveform and scene files. All documents are versioned JSON;
// unknown keys are rejected. Doubles are written in shortest round-trip form,
// so load(save(x)) reproduces every numeric payload bit for bit.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polyphase/ambiguity.hpp"
#include "polyphase/error.hpp"
#include "polyphase/optimizer.hpp"
#include "polyphase/trip_simulator.hpp"
#include "polyphase/waveform.hpp"

namespace polyphase::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kSynthFormat = "polyphase-synth-config";
inline constexpr const char* kWaveformFormat = "polyphase-waveform";
inline constexpr const char* kSceneFormat = "polyphase-scene";

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Strict field access

namespace detail {

inline void check_header(const json& j, const char* format) {
  if (!j.is_object()) throw ConfigError(std::string(format) + ": document must be an object");
  if (!j.contains("format") || j["format"] != format) {
    throw ConfigError(std::string("expected \"format\": \"") + format + "\"");
  }
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kFormatVersion) {
    throw ConfigError(std::string(format) + ": unsupported version");
  }
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad value for \"" + key + "\": " + e.what());
  }
}

template <typename T>
void get_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

inline std::size_t get_count(const json& j, const char* key, const std::string& where) {
  const auto v = get<long long>(j, key, where);
  if (v < 0) throw ConfigError(where + ": \"" + key + "\" must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Synthesis configuration

struct SynthConfig {
  OptimizerConfig optimizer;
  double psl_target_db = -60.0;
  double cross_target_db = -40.0;
};

inline const char* to_string(SolverMethod m) { return m == SolverMethod::dense ? "dense" : "toeplitz"; }
inline const char* to_string(CrossMainlobe m) { return m == CrossMainlobe::keep ? "keep" : "remove"; }

inline SynthConfig parse_synth_config(const json& j) {
  const std::string where = kSynthFormat;
  detail::check_header(j, kSynthFormat);
  detail::reject_unknown(j,
                         {"format", "version", "code_length", "set_size", "filter_length", "mainlobe_width",
                          "mainlobe_center", "gain", "sample_period", "restarts", "scatter_pool", "elite_fraction",
                          "combine_weight", "jitter_sigma", "batch_size", "threads", "max_iters", "convergence_tol",
                          "lbfgs_memory", "rng_seed", "balance_tol", "phase_alphabet", "solver", "cross_mainlobe",
                          "ridge_factor", "psl_target_db", "cross_target_db"},
                         where);
  SynthConfig sc;
  auto& c = sc.optimizer;
  auto count = [&](const char* key, std::size_t& out) {
    if (j.contains(key)) out = detail::get_count(j, key, where);
  };
  count("code_length", c.code_length);
  count("set_size", c.set_size);
  count("filter_length", c.filter_length);
  count("mainlobe_width", c.mainlobe_width);
  if (j.contains("mainlobe_center")) c.mainlobe_center = detail::get_count(j, "mainlobe_center", where);
  if (j.contains("gain")) c.gain = detail::get<double>(j, "gain", where);
  detail::get_opt(j, "sample_period", c.sample_period, where);
  count("restarts", c.restarts);
  count("scatter_pool", c.scatter_pool);
  detail::get_opt(j, "elite_fraction", c.elite_fraction, where);
  if (j.contains("combine_weight")) {
    const auto w = detail::get<std::vector<double>>(j, "combine_weight", where);
    if (w.size() != 2) throw ConfigError(where + ": \"combine_weight\" must be [lo, hi]");
    c.combine_weight_lo = w[0];
    c.combine_weight_hi = w[1];
  }
  detail::get_opt(j, "jitter_sigma", c.jitter_sigma, where);
  count("batch_size", c.batch_size);
  count("threads", c.threads);
  count("max_iters", c.max_iters);
  detail::get_opt(j, "convergence_tol", c.convergence_tol, where);
  count("lbfgs_memory", c.lbfgs_memory);
  if (j.contains("rng_seed")) c.rng_seed = detail::get<std::uint64_t>(j, "rng_seed", where);
  detail::get_opt(j, "balance_tol", c.balance_tol, where);
  if (j.contains("phase_alphabet")) c.phase_alphabet = static_cast<unsigned>(detail::get_count(j, "phase_alphabet", where));
  if (j.contains("solver")) {
    const auto s = detail::get<std::string>(j, "solver", where);
    if (s == "dense") c.solver.method = SolverMethod::dense;
    else if (s == "toeplitz") c.solver.method = SolverMethod::toeplitz;
    else throw ConfigError(where + ": \"solver\" must be \"dense\" or \"toeplitz\"");
  }
  if (j.contains("cross_mainlobe")) {
    const auto s = detail::get<std::string>(j, "cross_mainlobe", where);
    if (s == "keep") c.solver.cross_mainlobe = CrossMainlobe::keep;
    else if (s == "remove") c.solver.cross_mainlobe = CrossMainlobe::remove;
    else throw ConfigError(where + ": \"cross_mainlobe\" must be \"keep\" or \"remove\"");
  }
  detail::get_opt(j, "ridge_factor", c.solver.ridge_factor, where);
  detail::get_opt(j, "psl_target_db", sc.psl_target_db, where);
  detail::get_opt(j, "cross_target_db", sc.cross_target_db, where);
  if (!(c.solver.ridge_factor >= 0.0)) throw ConfigError(where + ": ridge_factor must be non-negative");
  c.validate();
  return sc;
}

inline SynthConfig load_synth_config(const std::filesystem::path& path) {
  return parse_synth_config(parse_json(read_file(path), path.string()));
}

/// Fully resolved configuration, used for hashing and the synthesis summary.
inline json to_json(const SynthConfig& sc) {
  const auto& c = sc.optimizer;
  json j;
  j["format"] = kSynthFormat;
  j["version"] = kFormatVersion;
  j["code_length"] = c.code_length;
  j["set_size"] = c.set_size;
  j["filter_length"] = c.filter_length;
  j["mainlobe_width"] = c.mainlobe_width;
  j["mainlobe_center"] = c.window().center;
  j["gain"] = c.gain_scale().value;
  j["sample_period"] = c.sample_period;
  j["restarts"] = c.restarts;
  j["scatter_pool"] = c.scatter_pool;
  j["elite_fraction"] = c.elite_fraction;
  j["combine_weight"] = {c.combine_weight_lo, c.combine_weight_hi};
  j["jitter_sigma"] = c.jitter_sigma;
  j["batch_size"] = c.batch_size;
  j["max_iters"] = c.max_iters;
  j["convergence_tol"] = c.convergence_tol;
  j["lbfgs_memory"] = c.lbfgs_memory;
  j["rng_seed"] = c.rng_seed;
  j["balance_tol"] = c.balance_tol;
  j["phase_alphabet"] = c.phase_alphabet;
  j["solver"] = to_string(c.solver.method);
  j["cross_mainlobe"] = to_string(c.solver.cross_mainlobe);
  j["ridge_factor"] = c.solver.ridge_factor;
  j["psl_target_db"] = sc.psl_target_db;
  j["cross_target_db"] = sc.cross_target_db;
  return j;  // `threads` is left out: it never changes the result
}

inline std::string config_hash(const SynthConfig& sc) { return "fnv1a64:" + hex64(fnv1a64(to_json(sc).dump())); }

// ---------------------------------------------------------------------------
// Waveform file

struct WaveformFile {
  OrthogonalSet set;
  double gain = 0.0;
  json metrics;  // snapshot written alongside the numeric payload
  std::string config_hash;
};

inline json metrics_json(const SetMetrics& m) {
  json j;
  j["psl_db"] = json::array();
  j["isl_db"] = json::array();
  j["mainlobe_width_measured"] = json::array();
  for (const auto& p : m.pairs) {
    j["psl_db"].push_back(p.psl_db);
    j["isl_db"].push_back(p.isl_db);
    j["mainlobe_width_measured"].push_back(p.mainlobe_width_measured);
  }
  j["cross_peak_db"] = m.cross_peak_db;
  j["worst_psl_db"] = m.worst_psl_db;
  j["worst_cross_db"] = m.worst_cross_db;
  return j;
}

inline json waveform_json(const OrthogonalSet& set, double gain, const json& metrics, const std::string& hash) {
  set.validate_shape();
  json j;
  j["format"] = kWaveformFormat;
  j["version"] = kFormatVersion;
  j["code_length"] = set.code_length();
  j["filter_length"] = set.filter_length();
  j["set_size"] = set.size();
  j["sample_period"] = set.pairs[0].code().sample_period();
  j["gain"] = gain;
  j["mainlobe"] = {{"center", set.mainlobe().center}, {"width", set.mainlobe().width}};
  j["isl_error"] = set.isl_error;
  j["pairs"] = json::array();
  for (const auto& p : set.pairs) {
    json pj;
    pj["phases"] = p.code().phases();
    std::vector<double> re, im;
    for (const auto& c : p.filter().coefficients) {
      re.push_back(c.real());
      im.push_back(c.imag());
    }
    pj["filter_re"] = re;
    pj["filter_im"] = im;
    j["pairs"].push_back(std::move(pj));
  }
  j["metrics"] = metrics;
  j["config_hash"] = hash;
  return j;
}

inline std::string dump_waveform(const OrthogonalSet& set, double gain, const json& metrics, const std::string& hash) {
  return waveform_json(set, gain, metrics, hash).dump(1) + "\n";
}

inline WaveformFile parse_waveform(const json& j) {
  const std::string where = kWaveformFormat;
  detail::check_header(j, kWaveformFormat);
  detail::reject_unknown(j,
                         {"format", "version", "code_length", "filter_length", "set_size", "sample_period", "gain",
                          "mainlobe", "isl_error", "pairs", "metrics", "config_hash"},
                         where);
  WaveformFile wf;
  const auto n = detail::get_count(j, "code_length", where);
  const auto lf = detail::get_count(j, "filter_length", where);
  const auto k = detail::get_count(j, "set_size", where);
  const auto ts = detail::get<double>(j, "sample_period", where);
  wf.gain = detail::get<double>(j, "gain", where);
  const json ml = detail::get<json>(j, "mainlobe", where);
  detail::reject_unknown(ml, {"center", "width"}, where + ".mainlobe");
  const MainlobeWindow window{detail::get_count(ml, "center", where), detail::get_count(ml, "width", where)};
  wf.set.isl_error = detail::get<double>(j, "isl_error", where);
  const json pairs = detail::get<json>(j, "pairs", where);
  if (!pairs.is_array() || pairs.size() != k || k == 0) throw ConfigError(where + ": \"pairs\" must hold set_size entries");
  try {
    for (const auto& pj : pairs) {
      detail::reject_unknown(pj, {"phases", "filter_re", "filter_im"}, where + ".pairs");
      const auto phases = detail::get<std::vector<double>>(pj, "phases", where);
      const auto re = detail::get<std::vector<double>>(pj, "filter_re", where);
      const auto im = detail::get<std::vector<double>>(pj, "filter_im", where);
      if (phases.size() != n || re.size() != lf || im.size() != lf) {
        throw ConfigError(where + ": pair dimensions disagree with code_length / filter_length");
      }
      MismatchedFilter f{CVector(lf), window};
      for (std::size_t c = 0; c < lf; ++c) f.coefficients[c] = {re[c], im[c]};
      wf.set.pairs.emplace_back(PolyphaseCode::from_phases(phases, ts), std::move(f));
    }
    wf.set.validate_shape();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (j.contains("metrics")) wf.metrics = j["metrics"];
  if (j.contains("config_hash")) wf.config_hash = detail::get<std::string>(j, "config_hash", where);
  return wf;
}

inline WaveformFile load_waveform(const std::filesystem::path& path) {
  return parse_waveform(parse_json(read_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Scene file

struct SceneFile {
  TripScene scene;
  std::optional<double> second_trip_snr_db;  // resolves noise_power against a waveform set
  std::uint64_t noise_seed = 7;
};

namespace detail {

inline void parse_scatterers(const json& list, const TripScene& scene, int trip, std::vector<Scatterer>& out,
                             const std::string& where) {
  if (!list.is_array()) throw ConfigError(where + ": scatterer list must be an array");
  for (const auto& e : list) {
    if (!e.is_object()) throw ConfigError(where + ": scatterer entry must be an object");
    if (e.contains("block")) {
      reject_unknown(e, {"block", "amplitude", "velocity", "phase_seed"}, where);
      const auto b = get<std::vector<long long>>(e, "block", where);
      if (b.size() != 2 || b[0] < 0 || b[1] < b[0]) throw ConfigError(where + ": \"block\" must be [first, last]");
      const double amp = get<double>(e, "amplitude", where);
      const double vel = e.contains("velocity") ? get<double>(e, "velocity", where) : 0.0;
      std::mt19937_64 rng(e.contains("phase_seed") ? get<std::uint64_t>(e, "phase_seed", where) : 0);
      std::uniform_real_distribution<double> uni(0.0, kTwoPi);
      for (long long g = b[0]; g <= b[1]; ++g) {
        out.push_back({static_cast<std::size_t>(g), std::polar(amp, uni(rng)), vel});
      }
      continue;
    }
    reject_unknown(e, {"gate", "range_m", "amplitude", "phase", "velocity"}, where);
    Scatterer s;
    if (e.contains("gate") == e.contains("range_m")) {
      throw ConfigError(where + ": scatterer needs exactly one of \"gate\" or \"range_m\"");
    }
    if (e.contains("gate")) {
      s.gate = get_count(e, "gate", where);
    } else {
      const auto loc = locate(scene, get<double>(e, "range_m", where));
      if (loc.trip != trip) {
        throw ConfigError(where + ": range_m falls in trip " + std::to_string(loc.trip) + ", not trip " +
                          std::to_string(trip));
      }
      s.gate = loc.gate;
    }
    const double amp = e.contains("amplitude") ? get<double>(e, "amplitude", where) : 1.0;
    const double phase = e.contains("phase") ? get<double>(e, "phase", where) : 0.0;
    s.reflectivity = std::polar(amp, phase);
    s.velocity = e.contains("velocity") ? get<double>(e, "velocity", where) : 0.0;
    out.push_back(s);
  }
}

}  // namespace detail

inline SceneFile parse_scene(const json& j) {
  const std::string where = kSceneFormat;
  detail::check_header(j, kSceneFormat);
  detail::reject_unknown(j,
                         {"format", "version", "gates", "pri", "carrier_wavelength", "sample_period", "noise_power",
                          "second_trip_snr_db", "noise_seed", "first_trip", "second_trip"},
                         where);
  SceneFile sf;
  auto& s = sf.scene;
  s.gates = detail::get_count(j, "gates", where);
  detail::get_opt(j, "pri", s.pri, where);
  detail::get_opt(j, "carrier_wavelength", s.carrier_wavelength, where);
  detail::get_opt(j, "sample_period", s.sample_period, where);
  if (j.contains("noise_power") && j.contains("second_trip_snr_db")) {
    throw ConfigError(where + ": give either \"noise_power\" or \"second_trip_snr_db\", not both");
  }
  detail::get_opt(j, "noise_power", s.noise_power, where);
  if (j.contains("second_trip_snr_db")) sf.second_trip_snr_db = detail::get<double>(j, "second_trip_snr_db", where);
  if (j.contains("noise_seed")) sf.noise_seed = detail::get<std::uint64_t>(j, "noise_seed", where);
  if (j.contains("first_trip")) detail::parse_scatterers(j["first_trip"], s, 1, s.first_trip, where + ".first_trip");
  if (j.contains("second_trip")) detail::parse_scatterers(j["second_trip"], s, 2, s.second_trip, where + ".second_trip");
  try {
    s.validate(0.0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return sf;
}

inline SceneFile load_scene(const std::filesystem::path& path) {
  return parse_scene(parse_json(read_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// CSV

/// Minimal CSV builder; numbers use 17 significant digits.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
    out_ << std::setprecision(17);
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << values, first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

}  // namespace polyphase::io
