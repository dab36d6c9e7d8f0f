// SPDX-License-Identifier: Apache-2.0
//
// synth / analyze / simulate pipelines behind the command-line tool. Each
// command is a pure function of its inputs: artifacts carry no timestamps or
// wall-clock figures, so repeated runs write identical files.
#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "polyphase/ambiguity.hpp"
#include "polyphase/error.hpp"
#include "polyphase/io.hpp"
#include "polyphase/optimizer.hpp"
#include "polyphase/trip_simulator.hpp"

namespace polyphase::cli {

namespace fs = std::filesystem;
using io::json;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kNumericalError = 3,
  kConstraintError = 4,
};

inline constexpr const char* kOutDirEnv = "POLYPHASE_OUT_DIR";
inline constexpr double kPslAspirationDb = -150.0;

/// Output location: the explicit path, else $POLYPHASE_OUT_DIR/<fallback>.
inline fs::path resolve_out(const std::string& explicit_path, const std::string& fallback) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return fs::path(env) / fallback;
  throw ConfigError(std::string("no output path given and ") + kOutDirEnv + " is unset");
}

/// Runs `fn`, mapping exceptions to exit codes and a one-line JSON record on `err`.
template <typename Fn>
int guarded(const char* command, std::ostream& err, Fn&& fn) {
  auto fail = [&](int code, const char* kind, const std::string& msg, std::optional<double> cond = {}) {
    json rec{{"command", command}, {"error", kind}, {"message", msg}, {"exit_code", code}};
    if (cond) rec["condition_estimate"] = *cond;
    err << rec.dump() << '\n';
    return code;
  };
  try {
    return fn();
  } catch (const ConfigError& e) {
    return fail(kConfigError, "config", e.what());
  } catch (const NumericalError& e) {
    return fail(kNumericalError, "numerical", e.what(), e.condition_estimate());
  } catch (const ConstraintError& e) {
    return fail(kConstraintError, "constraint", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kConfigError, "config", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "internal", e.what());
  }
}

inline json constraint_json(const ConstraintReport& r) {
  return {{"unimodular_deviation", r.unimodular_deviation},
          {"gain_imbalance", r.gain_imbalance},
          {"phase_imbalance_rad", r.phase_imbalance},
          {"tolerance", r.tolerance},
          {"unimodular_tolerance", r.unimodular_tolerance},
          {"passed", r.passed()}};
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> restarts;
};

struct SynthOutputs {
  fs::path waveform;
  fs::path trace;
  fs::path summary;
};

inline SynthOutputs synth_paths(const fs::path& waveform) {
  fs::path stem = waveform;
  stem.replace_extension();
  return {waveform, stem.string() + "_trace.csv", stem.string() + "_summary.json"};
}

inline int cmd_synth(const SynthArgs& args, std::ostream& log = std::clog, std::ostream& err = std::cerr) {
  return guarded("synth", err, [&] {
    io::SynthConfig sc = io::load_synth_config(args.config);
    if (args.seed) sc.optimizer.rng_seed = *args.seed;
    if (args.restarts) sc.optimizer.restarts = *args.restarts;
    sc.optimizer.validate();
    const auto paths = synth_paths(resolve_out(args.out, "waveform.json"));
    const auto& cfg = sc.optimizer;

    const auto t0 = std::chrono::steady_clock::now();
    const MultistartResult ms = scatter_multistart(cfg);
    OrthogonalSet set = ms.best;
    json quant = nullptr;
    if (cfg.phase_alphabet > 0) {
      const QuantizedSet q = quantize_set(ms.best_phases, cfg, cfg.phase_alphabet);
      set = q.set;
      quant = {{"alphabet", cfg.phase_alphabet},
               {"continuous_error", q.continuous_error},
               {"quantized_error", q.quantized_error},
               {"degradation_db", q.degradation_db}};
    }
    const ConstraintReport cons = check_constraints(set, cfg.balance_tol);
    if (!cons.passed()) throw ConstraintError("synthesized set violates constraints: " + cons.describe());
    const SetMetrics m = metrics(set);
    const json mj = io::metrics_json(m);
    const std::string hash = io::config_hash(sc);

    io::CsvWriter trace({"restart", "iteration", "isl_error"});
    json restarts = json::array();
    for (const auto& o : ms.outcomes) {
      const auto& errs = o.result.trace.errors;
      for (std::size_t it = 0; it < errs.size(); ++it) trace.row(o.index, it, errs[it]);
      restarts.push_back({{"restart", o.index},
                          {"initial_error", errs.front()},
                          {"final_error", errs.back()},
                          {"iterations", errs.size() - 1},
                          {"converged", o.result.trace.converged},
                          {"feasible", o.feasible}});
    }

    json summary;
    summary["config"] = io::to_json(sc);
    summary["config_hash"] = hash;
    summary["isl_error"] = set.isl_error;
    summary["best_restart"] = ms.best_restart;
    summary["restarts"] = restarts;
    summary["metrics"] = mj;
    summary["constraints"] = constraint_json(cons);
    summary["psl_target_db"] = sc.psl_target_db;
    summary["psl_target_met"] = m.worst_psl_db <= sc.psl_target_db;
    summary["cross_target_db"] = sc.cross_target_db;
    summary["cross_target_met"] = m.worst_cross_db <= sc.cross_target_db;
    summary["psl_aspiration_db"] = kPslAspirationDb;
    summary["quantization"] = quant;

    io::write_file_atomic(paths.waveform, io::dump_waveform(set, cfg.gain_scale().value, mj, hash));
    io::write_file_atomic(paths.trace, trace.str());
    io::write_file_atomic(paths.summary, summary.dump(2) + "\n");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "synth: isl_error " << set.isl_error << ", psl " << m.worst_psl_db << " dB, cross " << m.worst_cross_db
        << " dB, best restart " << ms.best_restart << ", " << secs << " s\n";
    return int{kOk};
  });
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string waveform;
  std::string out_dir;
  double doppler_span = 0.05;
  std::size_t doppler_points = 64;
  double psl_target_db = -60.0;
  double cross_target_db = -40.0;
};

inline int cmd_analyze(const AnalyzeArgs& args, std::ostream& err = std::cerr) {
  return guarded("analyze", err, [&] {
    if (!(args.doppler_span >= 0.0 && args.doppler_span <= 0.5)) {
      throw ConfigError("doppler span must lie in [0, 0.5] cycles per sample");
    }
    if (args.doppler_points == 0) throw ConfigError("doppler points must be positive");
    const io::WaveformFile wf = io::load_waveform(args.waveform);
    const fs::path dir = resolve_out(args.out_dir, "analysis");
    const auto& set = wf.set;
    const auto dopplers = linspace(-args.doppler_span, args.doppler_span, args.doppler_points);
    const SetMetrics m = metrics(set, dopplers);
    const long center = static_cast<long>(set.mainlobe().center);

    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& pair = set.pairs[i];
      const auto cut = zero_doppler_cut(pair);
      io::CsvWriter zc({"output_index", "delay_samples", "magnitude_db"});
      for (std::size_t r = 0; r < cut.size(); ++r) zc.row(r, static_cast<long>(r) - center, cut[r]);
      io::write_file_atomic(dir / ("pair" + std::to_string(i) + "_zero_doppler.csv"), zc.str());

      const AmbiguityGrid g = ambiguity(pair, dopplers);
      io::CsvWriter gc({"delay_samples", "doppler_cycles_per_sample", "magnitude_db"});
      for (std::size_t f = 0; f < g.doppler_axis.size(); ++f) {
        for (std::size_t d = 0; d < g.delay_axis.size(); ++d) gc.row(g.delay_axis[d], g.doppler_axis[f], g.at(f, d));
      }
      io::write_file_atomic(dir / ("pair" + std::to_string(i) + "_ambiguity.csv"), gc.str());

      for (std::size_t j = 0; j < set.size(); ++j) {
        if (j == i) continue;
        const CVector y = convolve(pair.code().samples(), set.pairs[j].filter().coefficients);
        const double ref = std::abs(set.pairs[j].mainlobe_gain());
        io::CsvWriter cc({"output_index", "delay_samples", "magnitude_db"});
        for (std::size_t r = 0; r < y.size(); ++r) {
          cc.row(r, static_cast<long>(r) - center, amplitude_db(std::abs(y[r]), ref));
        }
        io::write_file_atomic(dir / ("cross_code" + std::to_string(i) + "_filter" + std::to_string(j) + ".csv"),
                              cc.str());
      }
    }

    json report;
    report["waveform"] = {{"code_length", set.code_length()},
                          {"filter_length", set.filter_length()},
                          {"set_size", set.size()},
                          {"mainlobe", {{"center", set.mainlobe().center}, {"width", set.mainlobe().width}}},
                          {"isl_error", set.isl_error},
                          {"config_hash", wf.config_hash}};
    report["doppler_axis"] = {{"span_cycles_per_sample", args.doppler_span}, {"points", args.doppler_points}};
    json pairs = json::array();
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& p = m.pairs[i];
      json loss = json::array();
      for (const auto& [fd, db] : p.doppler_loss_db) loss.push_back({fd, db});
      pairs.push_back({{"psl_db", p.psl_db},
                       {"isl_db", p.isl_db},
                       {"mainlobe_width_measured", p.mainlobe_width_measured},
                       {"doppler_loss_db", loss}});
    }
    report["pairs"] = pairs;
    report["cross_peak_db"] = m.cross_peak_db;
    report["worst_psl_db"] = m.worst_psl_db;
    report["worst_cross_db"] = m.worst_cross_db;
    report["psl_target_db"] = args.psl_target_db;
    report["psl_target_met"] = m.worst_psl_db <= args.psl_target_db;
    report["cross_target_db"] = args.cross_target_db;
    report["cross_target_met"] = m.worst_cross_db <= args.cross_target_db;
    report["psl_aspiration_db"] = kPslAspirationDb;
    report["psl_aspiration_met"] = m.worst_psl_db <= kPslAspirationDb;
    report["constraints"] = constraint_json(check_constraints(set, 1e-6));
    io::write_file_atomic(dir / "report.json", report.dump(2) + "\n");
    return int{kOk};
  });
}

// ---------------------------------------------------------------------------
// simulate

enum class ModeSelect { coded, uncoded, both };

struct SimulateArgs {
  std::string waveform;
  std::string scene;
  std::string out_dir;
  std::size_t pulses = 64;
  ModeSelect mode = ModeSelect::both;
  DopplerEstimator estimator = DopplerEstimator::all_pulses;
};

/// Scene with noise_power resolved against the waveform set.
inline TripScene resolve_scene(const io::SceneFile& sf, const OrthogonalSet& set, std::size_t pulses) {
  TripScene scene = sf.scene;
  if (sf.second_trip_snr_db) scene.noise_power = calibrate_noise_power(scene, set, *sf.second_trip_snr_db, pulses);
  return scene;
}

inline int cmd_simulate(const SimulateArgs& args, std::ostream& err = std::cerr) {
  return guarded("simulate", err, [&] {
    const io::WaveformFile wf = io::load_waveform(args.waveform);
    const io::SceneFile sf = io::load_scene(args.scene);
    const fs::path dir = resolve_out(args.out_dir, "simulation");
    const auto& set = wf.set;
    if (args.pulses < 2 * set.size() || args.pulses % 2 != 0) {
      throw ConfigError("pulses must be even and at least twice the set size");
    }
    if (std::abs(sf.scene.sample_period - set.pairs[0].code().sample_period()) >
        1e-12 * set.pairs[0].code().sample_period()) {
      throw ConfigError("scene sample_period differs from the waveform's");
    }
    const TripScene scene = resolve_scene(sf, set, args.pulses);

    SimOptions opt;
    opt.pulses = args.pulses;
    opt.noise_seed = sf.noise_seed;
    opt.estimator = args.estimator;
    opt.run_coded = args.mode != ModeSelect::uncoded;
    opt.run_uncoded = args.mode != ModeSelect::coded;
    const SimResult res = run_simulation(scene, set, opt);

    std::vector<std::pair<std::string, const ModeResult*>> modes;
    if (res.coded) modes.emplace_back("coded", &*res.coded);
    if (res.uncoded) modes.emplace_back("uncoded", &*res.uncoded);

    std::vector<std::string> head{"gate", "range_m"};
    for (const auto& [name, _] : modes) {
      head.push_back("power_db_" + name);
      head.push_back("velocity_mps_" + name);
    }
    io::CsvWriter prof(head);
    std::ostringstream line;
    line << std::setprecision(17);
    std::string body;
    for (std::size_t g = 0; g < scene.gates; ++g) {
      line.str("");
      line << g << ',' << static_cast<double>(g) * scene.gate_spacing();
      for (const auto& [_, r] : modes) line << ',' << r->power_db[g] << ',' << r->velocity[g];
      body += line.str() + '\n';
    }
    io::write_file_atomic(dir / "profile.csv", prof.str() + body);

    std::vector<std::string> shead{"gate", "bin", "frequency_hz", "velocity_mps"};
    for (const auto& [name, _] : modes) shead.push_back("power_db_" + name);
    io::CsvWriter spec(shead);
    body.clear();
    const std::size_t m = args.pulses;
    for (std::size_t g = 0; g < scene.gates; ++g) {
      for (std::size_t b = 0; b < m; ++b) {
        const long sb = b < (m + 1) / 2 ? static_cast<long>(b) : static_cast<long>(b) - static_cast<long>(m);
        const double f = static_cast<double>(sb) / (static_cast<double>(m) * scene.pri);
        line.str("");
        line << g << ',' << b << ',' << f << ',' << scene.carrier_wavelength * f / 2.0;
        for (const auto& [_, r] : modes) line << ',' << r->spectra_db[g][b];
        body += line.str() + '\n';
      }
    }
    io::write_file_atomic(dir / "spectra.csv", spec.str() + body);

    json summary;
    summary["pulses"] = args.pulses;
    summary["estimator"] = to_string(res.estimator);
    summary["noise_power"] = scene.noise_power;
    summary["noise_seed"] = sf.noise_seed;
    summary["second_trip_snr_db"] = sf.second_trip_snr_db ? json(*sf.second_trip_snr_db) : json(nullptr);
    summary["gate_spacing_m"] = scene.gate_spacing();
    summary["unambiguous_range_m"] = scene.unambiguous_range();
    summary["nyquist_velocity_mps"] = scene.nyquist_velocity();
    summary["second_trip_gate_count"] = res.second_trip_gates.size();
    summary["suppression_db"] = res.suppression_db ? json(*res.suppression_db) : json(nullptr);
    for (const auto& [name, r] : modes) summary["noise_floor_db"][name] = r->noise_floor_db;
    if (res.coded) {
      if (auto rc = second_trip_residual(scene, *res.coded, set.code_length())) {
        summary["coded_residual"] = {{"first_gate", rc->first_gate},
                                     {"last_gate", rc->last_gate},
                                     {"max_excess_db", rc->max_excess_db},
                                     {"mean_excess_db", rc->mean_excess_db}};
      }
    }
    io::write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    return int{kOk};
  });
}

}  // namespace polyphase::cli
