#pragma once

// The experiments of configs/paper/*.toml, rebuilt in code.

#include <string>
#include <vector>

#include "feedback/config.hpp"

namespace feedback::testing {

inline constexpr std::uint64_t kReferenceSeed = 20170914;

struct RegionPair {
  std::string stem;
  RegionSpec a;
  RegionSpec b;
};

inline const RegionSpec kTop1{"Top1", 609.0, 3.69};
inline const RegionSpec kTop2{"Top2", 379.0, 2.82};
inline const RegionSpec kRandom{"Random", 7.0, 2.36};

inline std::vector<RegionPair> urn_pairs() {
  return {{"top1_top2", kTop1, kTop2}, {"top1_random", kTop1, kRandom}, {"top2_random", kTop2, kRandom}};
}

inline ScenarioEntry urn_entry(const RegionPair& pair, bool mixed, bool corrected) {
  ScenarioConfig c;
  c.name = pair.stem + (mixed ? "_mixed" : "_discovered") + (corrected ? "_corrected" : "");
  c.engine = Engine::Urn;
  c.regions = {pair.a, pair.b};
  c.horizon_days = 1000;
  c.reps = 1000;
  c.master_seed = kReferenceSeed;
  c.decay = {0.01, DecayMode::ExpectedMultiplicative};
  CheckSpec check;
  if (mixed) {
    c.incident_mode = IncidentMode::Mixed;
    c.w_d = 0.5;
    c.w_r = 0.5;
  }
  if (corrected) {
    c.correction = mixed ? CorrectionMode::mixed_rejection(0.5, 0.5) : CorrectionMode::discovered_rejection();
    check.target = TrueRatioTarget{};
    check.tolerance = 0.02;
  } else if (mixed) {
    check.target = MixedLimitTarget{};
    check.tolerance = 0.02;
    check.displaced = 0.02;
  } else {
    check.above = 0.95;
  }
  return {c, check};
}

inline ConfigFile reference_urn_config() {
  ConfigFile f;
  f.output_dir = "out/paper-urn";
  for (const auto& pair : urn_pairs()) {
    for (bool mixed : {false, true}) {
      for (bool corrected : {false, true}) f.scenarios.push_back(urn_entry(pair, mixed, corrected));
    }
  }
  return f;
}

enum class SeppVariant { Uncorrected, Corrected, MixedCorrected };

inline ScenarioEntry sepp_entry(const RegionPair& pair, SeppVariant variant) {
  ScenarioConfig c;
  c.engine = Engine::Sepp;
  c.regions = {pair.a, pair.b};
  c.horizon_days = 365;
  c.reps = 300;
  c.master_seed = kReferenceSeed;
  c.training_window_days = 180;
  c.warmup_days = 180;
  c.em.max_iters = 500;
  c.em.rel_tolerance = 1e-6;
  c.em.abs_tolerance = 1e-9;
  c.em_warm_start = false;
  CheckSpec check;
  switch (variant) {
    case SeppVariant::Uncorrected:
      c.name = pair.stem + "_sepp";
      check.displaced = 0.03;
      check.iqr_vs = pair.stem + "_sepp_corrected";
      check.iqr_factor = 3.0;
      break;
    case SeppVariant::Corrected:
      c.name = pair.stem + "_sepp_corrected";
      c.correction = CorrectionMode::discovered_rejection();
      check.target = TrueRatioTarget{};
      check.tolerance = 0.03;
      break;
    case SeppVariant::MixedCorrected:
      c.name = pair.stem + "_sepp_mixed_corrected";
      c.incident_mode = IncidentMode::Mixed;
      c.w_d = 0.5;
      c.w_r = 0.5;
      c.correction = CorrectionMode::discovered_rejection();
      check.target = TrueRatioTarget{};
      check.tolerance = 0.03;
      break;
  }
  return {c, check};
}

inline std::vector<RegionPair> sepp_pairs() { return {urn_pairs()[0], urn_pairs()[1]}; }

inline ConfigFile reference_sepp_config() {
  ConfigFile f;
  f.output_dir = "out/paper-sepp";
  for (const auto& pair : sepp_pairs()) {
    for (auto v : {SeppVariant::Uncorrected, SeppVariant::Corrected, SeppVariant::MixedCorrected}) {
      f.scenarios.push_back(sepp_entry(pair, v));
    }
  }
  return f;
}

}  // namespace feedback::testing
