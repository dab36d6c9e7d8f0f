// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <unistd.h>

#include "polyphase/commands.hpp"
#include "polyphase/io.hpp"

using namespace polyphase;
using namespace polyphase::io;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("polyphase_io_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json small_synth_json() {
  return json{{"format", kSynthFormat}, {"version", 1},     {"code_length", 8}, {"filter_length", 24},
              {"mainlobe_width", 3},    {"restarts", 2},    {"scatter_pool", 4}, {"max_iters", 40},
              {"rng_seed", 9}};
}

fs::path write_json(const fs::path& p, const json& j) {
  write_file_atomic(p, j.dump(2));
  return p;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

std::vector<std::string> csv_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(read_file(p));
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("synth config parsing", "[io]") {
  const auto sc = parse_synth_config(small_synth_json());
  CHECK(sc.optimizer.code_length == 8);
  CHECK(sc.optimizer.filter_length == 24);
  CHECK(sc.optimizer.set_size == 2);
  CHECK(sc.optimizer.solver.method == SolverMethod::toeplitz);
  CHECK(sc.psl_target_db == -60.0);

  auto j = small_synth_json();
  j["colour"] = "blue";
  CHECK_THROWS_WITH(parse_synth_config(j), ContainsSubstring("unknown key \"colour\""));
  j = small_synth_json();
  j["version"] = 2;
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  j = small_synth_json();
  j.erase("format");
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  j = small_synth_json();
  j["filter_length"] = 6;
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  j = small_synth_json();
  j["mainlobe_width"] = 4;
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  j = small_synth_json();
  j["mainlobe_center"] = 0;
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  j = small_synth_json();
  j["code_length"] = "eight";
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  j = small_synth_json();
  j["solver"] = "cholesky";
  CHECK_THROWS_AS(parse_synth_config(j), ConfigError);
  CHECK_THROWS_AS(parse_json("{ nope", "x"), ConfigError);
}

TEST_CASE("config hash ignores the thread count", "[io]") {
  auto a = parse_synth_config(small_synth_json());
  auto b = a;
  b.optimizer.threads = 7;
  CHECK(config_hash(a) == config_hash(b));
  b.optimizer.rng_seed = 10;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("waveform files round-trip bit for bit", "[io]") {
  const auto sc = parse_synth_config(small_synth_json());
  const auto ms = scatter_multistart(sc.optimizer);
  const json mj = metrics_json(metrics(ms.best));
  const std::string text = dump_waveform(ms.best, 8.0, mj, config_hash(sc));
  const auto wf = parse_waveform(json::parse(text));
  CHECK(wf.set == ms.best);
  CHECK(wf.set.isl_error == ms.best.isl_error);
  CHECK(wf.gain == 8.0);
  CHECK(wf.config_hash == config_hash(sc));
  CHECK(dump_waveform(wf.set, wf.gain, wf.metrics, wf.config_hash) == text);

  json bad = json::parse(text);
  bad["pairs"][0]["filter_re"].erase(0);
  CHECK_THROWS_AS(parse_waveform(bad), ConfigError);
  bad = json::parse(text);
  bad["extra"] = 1;
  CHECK_THROWS_AS(parse_waveform(bad), ConfigError);
  bad = json::parse(text);
  bad["mainlobe"]["width"] = 2;
  CHECK_THROWS_AS(parse_waveform(bad), ConfigError);
}

TEST_CASE("scene parsing", "[io]") {
  json j{{"format", kSceneFormat},
         {"version", 1},
         {"gates", 1000},
         {"noise_power", 0.5},
         {"first_trip", {{{"gate", 10}, {"amplitude", 2.0}, {"phase", 0.5}, {"velocity", 1.0}}}},
         {"second_trip",
          {{{"block", {100, 104}}, {"amplitude", 1.0}, {"velocity", 3.0}, {"phase_seed", 4}},
           {{"range_m", 74948.1145 + 5000.0}}}}};
  const auto sf = parse_scene(j);
  CHECK(sf.scene.gates == 1000);
  CHECK(sf.scene.noise_power == 0.5);
  REQUIRE(sf.scene.first_trip.size() == 1);
  CHECK(std::abs(sf.scene.first_trip[0].reflectivity - std::polar(2.0, 0.5)) < 1e-15);
  REQUIRE(sf.scene.second_trip.size() == 6);
  CHECK(sf.scene.second_trip[4].gate == 104);
  CHECK(std::abs(sf.scene.second_trip[2].reflectivity) == Catch::Approx(1.0));
  CHECK(sf.scene.second_trip[5].gate == 66);
  CHECK(parse_scene(j).scene.second_trip[1].reflectivity == sf.scene.second_trip[1].reflectivity);

  auto k = j;
  k["second_trip"][1]["range_m"] = 5000.0;
  CHECK_THROWS_WITH(parse_scene(k), ContainsSubstring("trip 1"));
  k = j;
  k["second_trip_snr_db"] = 30.0;
  CHECK_THROWS_AS(parse_scene(k), ConfigError);
  k = j;
  k["first_trip"][0]["gate"] = 1000;
  CHECK_THROWS_AS(parse_scene(k), ConfigError);
  k = j;
  k["first_trip"][0]["speed"] = 1.0;
  CHECK_THROWS_AS(parse_scene(k), ConfigError);
  k = j;
  k["first_trip"][0]["range_m"] = 10.0;
  CHECK_THROWS_AS(parse_scene(k), ConfigError);
}

TEST_CASE("CSV writer emits a header row", "[io]") {
  CsvWriter w({"gate", "power_db"});
  w.row(3, 0.1);
  CHECK(w.str() == "gate,power_db\n3,0.10000000000000001\n");
}

TEST_CASE("atomic writes leave no temporary behind", "[io]") {
  const auto dir = scratch("atomic");
  write_file_atomic(dir / "a" / "b.txt", "one");
  write_file_atomic(dir / "a" / "b.txt", "two");
  CHECK(read_file(dir / "a" / "b.txt") == "two");
  CHECK_FALSE(fs::exists(dir / "a" / "b.txt.tmp"));
}

TEST_CASE("synth with no iterations writes the closed-form refit of the seeded start", "[io][cli]") {
  const auto dir = scratch("synth0");
  auto j = small_synth_json();
  j["restarts"] = 1;
  j["max_iters"] = 0;
  const auto cfg = write_json(dir / "cfg.json", j);
  std::ostringstream log, err;
  REQUIRE(cli::cmd_synth({cfg.string(), (dir / "w.json").string(), {}, {}}, log, err) == 0);
  const auto wf = load_waveform(dir / "w.json");

  const auto sc = parse_synth_config(j);
  std::mt19937_64 rng(sc.optimizer.rng_seed);
  const auto start = random_code_set(sc.optimizer, rng);
  const auto filters = IslObjective(sc.optimizer).refit(start);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(wf.set.pairs[i].code().phases() == std::vector<double>(start.code(i).begin(), start.code(i).end()));
    CHECK(wf.set.pairs[i].filter().coefficients == filters[i]);
  }
  const auto trace = csv_lines(dir / "w_trace.csv");
  REQUIRE(trace.size() == 2);
  CHECK(trace[0] == "restart,iteration,isl_error");
  CHECK(fs::exists(dir / "w_summary.json"));
}

TEST_CASE("synth is byte-reproducible and honours overrides", "[io][cli]") {
  const auto dir = scratch("synth_repeat");
  const auto cfg = write_json(dir / "cfg.json", small_synth_json());
  std::ostringstream log, err;
  REQUIRE(cli::cmd_synth({cfg.string(), (dir / "a.json").string(), {}, {}}, log, err) == 0);
  REQUIRE(cli::cmd_synth({cfg.string(), (dir / "b.json").string(), {}, {}}, log, err) == 0);
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
  CHECK(read_file(dir / "a_trace.csv") == read_file(dir / "b_trace.csv"));
  CHECK(read_file(dir / "a_summary.json") == read_file(dir / "b_summary.json"));

  REQUIRE(cli::cmd_synth({cfg.string(), (dir / "c.json").string(), 10, 1}, log, err) == 0);
  const auto summary = read_json(dir / "c_summary.json");
  CHECK(summary["config"]["rng_seed"] == 10);
  CHECK(summary["config"]["restarts"] == 1);
  CHECK(summary["restarts"].size() == 1);
  CHECK(read_json(dir / "c.json")["config_hash"] != read_json(dir / "a.json")["config_hash"]);
}

TEST_CASE("command errors map to exit codes with a JSON record", "[io][cli]") {
  const auto dir = scratch("errors");
  auto j = small_synth_json();
  j["filter_length"] = 4;
  const auto cfg = write_json(dir / "bad.json", j);
  std::ostringstream log, err;
  CHECK(cli::cmd_synth({cfg.string(), (dir / "w.json").string(), {}, {}}, log, err) == cli::kConfigError);
  const auto rec = json::parse(err.str());
  CHECK(rec["error"] == "config");
  CHECK(rec["exit_code"] == 2);
  CHECK_FALSE(fs::exists(dir / "w.json"));

  std::ostringstream err2;
  CHECK(cli::cmd_analyze({(dir / "missing.json").string(), dir.string()}, err2) == cli::kConfigError);

  std::ostringstream err3;
  const int rc = cli::guarded("x", err3, []() -> int { throw NumericalError("boom", 1e17); });
  CHECK(rc == cli::kNumericalError);
  CHECK(json::parse(err3.str())["condition_estimate"] == 1e17);
  std::ostringstream err4;
  CHECK(cli::guarded("x", err4, []() -> int { throw ConstraintError("off"); }) == cli::kConstraintError);
}

TEST_CASE("output directory falls back to the environment", "[io][cli]") {
  const auto dir = scratch("env");
  ::unsetenv(cli::kOutDirEnv);
  CHECK_THROWS_AS(cli::resolve_out("", "w.json"), ConfigError);
  ::setenv(cli::kOutDirEnv, dir.string().c_str(), 1);
  CHECK(cli::resolve_out("", "w.json") == dir / "w.json");
  CHECK(cli::resolve_out("x.json", "w.json") == fs::path("x.json"));
  const auto cfg = write_json(dir / "cfg.json", [] {
    auto j = small_synth_json();
    j["restarts"] = 1;
    j["max_iters"] = 2;
    return j;
  }());
  std::ostringstream log, err;
  CHECK(cli::cmd_synth({cfg.string(), "", {}, {}}, log, err) == 0);
  CHECK(fs::exists(dir / "waveform.json"));
  ::unsetenv(cli::kOutDirEnv);
}

TEST_CASE("analyze writes plot-ready tables and a consistent report", "[io][cli]") {
  const auto dir = scratch("analyze");
  const auto cfg = write_json(dir / "cfg.json", small_synth_json());
  std::ostringstream log, err;
  REQUIRE(cli::cmd_synth({cfg.string(), (dir / "w.json").string(), {}, {}}, log, err) == 0);
  cli::AnalyzeArgs a{(dir / "w.json").string(), (dir / "a1").string(), 0.02, 5};
  REQUIRE(cli::cmd_analyze(a, err) == 0);
  a.out_dir = (dir / "a2").string();
  REQUIRE(cli::cmd_analyze(a, err) == 0);
  for (const auto& e : fs::directory_iterator(dir / "a1")) {
    CHECK(read_file(e.path()) == read_file(dir / "a2" / e.path().filename()));
  }

  const auto wf = load_waveform(dir / "w.json");
  const auto m = metrics(wf.set, linspace(-0.02, 0.02, 5));
  const auto report = read_json(dir / "a1" / "report.json");
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(report["pairs"][i]["psl_db"].get<double>() == m.pairs[i].psl_db);
    CHECK(report["pairs"][i]["isl_db"].get<double>() == m.pairs[i].isl_db);
    CHECK(report["pairs"][i]["doppler_loss_db"].size() == 5);
  }
  CHECK(report["cross_peak_db"][0][1].get<double>() == m.cross_peak_db[0][1]);
  CHECK(report["psl_target_db"] == -60.0);
  CHECK(report["psl_aspiration_db"] == -150.0);
  CHECK(report["psl_target_met"] == (m.worst_psl_db <= -60.0));

  const auto zc = csv_lines(dir / "a1" / "pair0_zero_doppler.csv");
  CHECK(zc[0] == "output_index,delay_samples,magnitude_db");
  CHECK(zc.size() == 1 + 8 + 24 - 1);
  const auto grid = csv_lines(dir / "a1" / "pair1_ambiguity.csv");
  CHECK(grid[0] == "delay_samples,doppler_cycles_per_sample,magnitude_db");
  CHECK(grid.size() == 1 + 5 * 31);
  CHECK(csv_lines(dir / "a1" / "cross_code0_filter1.csv").size() == 32);

  cli::AnalyzeArgs bad = a;
  bad.doppler_points = 0;
  std::ostringstream err2;
  CHECK(cli::cmd_analyze(bad, err2) == cli::kConfigError);
}

TEST_CASE("simulate outputs and scaling behaviour", "[io][cli]") {
  const auto dir = scratch("simulate");
  const auto cfg = write_json(dir / "cfg.json", small_synth_json());
  std::ostringstream log, err;
  REQUIRE(cli::cmd_synth({cfg.string(), (dir / "w.json").string(), {}, {}}, log, err) == 0);
  const std::string wave = (dir / "w.json").string();

  SECTION("empty scene sits at the floor with zero suppression") {
    const auto scene = write_json(dir / "empty.json", {{"format", kSceneFormat}, {"version", 1}, {"gates", 200},
                                                        {"noise_power", 0.1}});
    REQUIRE(cli::cmd_simulate({wave, scene.string(), (dir / "e").string(), 32}, err) == 0);
    const auto s = read_json(dir / "e" / "summary.json");
    CHECK(s["suppression_db"] == 0.0);
    CHECK(s["estimator"] == "all_pulses");
    const auto prof = csv_lines(dir / "e" / "profile.csv");
    CHECK(prof[0] == "gate,range_m,power_db_coded,velocity_mps_coded,power_db_uncoded,velocity_mps_uncoded");
    CHECK(prof.size() == 201);
    const double floor = s["noise_floor_db"]["coded"];
    double lin = 0.0;
    for (std::size_t g = 1; g < prof.size(); ++g) {
      std::istringstream in(prof[g]);
      std::string cell;
      for (int c = 0; c < 3; ++c) std::getline(in, cell, ',');
      lin += std::pow(10.0, std::stod(cell) / 10.0);
    }
    CHECK_THAT(10.0 * std::log10(lin / 200.0), WithinAbs(floor, 0.3));
    const auto spec = csv_lines(dir / "e" / "spectra.csv");
    CHECK(spec[0] == "gate,bin,frequency_hz,velocity_mps,power_db_coded,power_db_uncoded");
    CHECK(spec.size() == 1 + 200 * 32);
  }

  SECTION("doubling second-trip reflectivity adds 6 dB and keeps suppression") {
    auto scene_for = [&](double amp) {
      return json{{"format", kSceneFormat},
                  {"version", 1},
                  {"gates", 200},
                  {"noise_power", 0.0},
                  {"second_trip", {{{"block", {40, 59}}, {"amplitude", amp}, {"velocity", 2.0}, {"phase_seed", 3}}}}};
    };
    const auto s1 = write_json(dir / "s1.json", scene_for(1.0));
    const auto s2 = write_json(dir / "s2.json", scene_for(2.0));
    REQUIRE(cli::cmd_simulate({wave, s1.string(), (dir / "o1").string(), 32}, err) == 0);
    REQUIRE(cli::cmd_simulate({wave, s2.string(), (dir / "o2").string(), 32}, err) == 0);
    const double sup1 = read_json(dir / "o1" / "summary.json")["suppression_db"];
    const double sup2 = read_json(dir / "o2" / "summary.json")["suppression_db"];
    CHECK(std::abs(sup1 - sup2) < 0.1);
    const auto p1 = csv_lines(dir / "o1" / "profile.csv");
    const auto p2 = csv_lines(dir / "o2" / "profile.csv");
    auto col = [](const std::string& line, int c) {
      std::istringstream in(line);
      std::string cell;
      for (int k = 0; k <= c; ++k) std::getline(in, cell, ',');
      return std::stod(cell);
    };
    for (std::size_t g = 41; g <= 60; ++g) {
      CHECK_THAT(col(p2[g], 2) - col(p1[g], 2), WithinAbs(20.0 * std::log10(2.0), 1e-9));
      CHECK_THAT(col(p2[g], 4) - col(p1[g], 4), WithinAbs(20.0 * std::log10(2.0), 1e-9));
    }
  }

  SECTION("single-mode runs and estimator metadata") {
    const auto scene = write_json(dir / "one.json", {{"format", kSceneFormat}, {"version", 1}, {"gates", 50},
                                                      {"noise_power", 0.1}});
    cli::SimulateArgs args{wave, scene.string(), (dir / "u").string(), 8, cli::ModeSelect::uncoded,
                           DopplerEstimator::per_code};
    REQUIRE(cli::cmd_simulate(args, err) == 0);
    const auto s = read_json(dir / "u" / "summary.json");
    CHECK(s["suppression_db"].is_null());
    CHECK(s["estimator"] == "per_code");
    CHECK(csv_lines(dir / "u" / "profile.csv")[0] == "gate,range_m,power_db_uncoded,velocity_mps_uncoded");
    args.pulses = 7;
    std::ostringstream err2;
    CHECK(cli::cmd_simulate(args, err2) == cli::kConfigError);
  }
}
