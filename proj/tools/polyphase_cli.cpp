// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "polyphase/commands.hpp"

int main(int argc, char** argv) {
  using namespace polyphase::cli;
  CLI::App app{"Polyphase code/filter set synthesis, analysis and second-trip simulation"};
  app.require_subcommand(1);

  SynthArgs synth;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  auto* s = app.add_subcommand("synth", "optimize a code/filter set");
  s->add_option("--config", synth.config, "synthesis config (JSON)")->required()->check(CLI::ExistingFile);
  s->add_option("--out", synth.out, "waveform file to write");
  auto* seed_opt = s->add_option("--seed", seed, "override rng_seed");
  auto* restarts_opt = s->add_option("--restarts", restarts, "override restarts")->check(CLI::PositiveNumber);

  AnalyzeArgs analyze;
  auto* a = app.add_subcommand("analyze", "ambiguity grids and sidelobe metrics");
  a->add_option("--waveform", analyze.waveform, "waveform file")->required()->check(CLI::ExistingFile);
  a->add_option("--out-dir", analyze.out_dir, "output directory");
  a->add_option("--doppler-span", analyze.doppler_span, "Doppler half-span, cycles per sample")
      ->capture_default_str();
  a->add_option("--doppler-points", analyze.doppler_points, "Doppler axis points")->capture_default_str();
  a->add_option("--psl-target", analyze.psl_target_db, "PSL target, dB")->capture_default_str();
  a->add_option("--cross-target", analyze.cross_target_db, "cross-ambiguity target, dB")->capture_default_str();

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "coded vs uncoded second-trip simulation");
  m->add_option("--waveform", sim.waveform, "waveform file")->required()->check(CLI::ExistingFile);
  m->add_option("--scene", sim.scene, "scene config (JSON)")->required()->check(CLI::ExistingFile);
  m->add_option("--out-dir", sim.out_dir, "output directory");
  m->add_option("--pulses", sim.pulses, "pulses per dwell (even)")->capture_default_str();
  const std::map<std::string, ModeSelect> modes{
      {"coded", ModeSelect::coded}, {"uncoded", ModeSelect::uncoded}, {"both", ModeSelect::both}};
  m->add_option("--mode", sim.mode, "coded, uncoded or both")->transform(CLI::CheckedTransformer(modes));
  const std::map<std::string, polyphase::DopplerEstimator> estimators{
      {"all_pulses", polyphase::DopplerEstimator::all_pulses}, {"per_code", polyphase::DopplerEstimator::per_code}};
  m->add_option("--estimator", sim.estimator, "pulse-pair estimator: all_pulses or per_code")
      ->transform(CLI::CheckedTransformer(estimators));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(kConfigError);
  }

  if (s->parsed()) {
    if (*seed_opt) synth.seed = seed;
    if (*restarts_opt) synth.restarts = restarts;
    return cmd_synth(synth);
  }
  if (a->parsed()) return cmd_analyze(analyze);
  return cmd_simulate(sim);
}
