#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specsense/calib.hpp"
#include "specsense/classify.hpp"
#include "specsense/harness.hpp"

namespace specsense {

/// Experiment, bank and preset settings loaded from one JSON document. The
/// bank inherits capture rate, observation time and DIC mode from the
/// experiment section.
struct ConfigDocument {
  ExperimentConfig experiment;
  BankConfig bank;
  std::vector<OfdmPreset> presets = default_presets();
  std::optional<std::string> thresholds_path;  // precomputed threshold file
  std::optional<std::string> noise_psd_path;   // precomputed WM noise floor
  bool wm_equalize = false;                    // pre-estimate the floor when no file is given
};

ConfigDocument default_config();

/// Parses a config document; unknown keys are errors. Relative file paths
/// resolve against the config file's directory.
ConfigDocument load_config(const std::string& path);
ConfigDocument parse_config(const std::string& json_text, const std::string& base_dir = ".");

/// Re-derives the bank's capture/observation/DIC fields from the experiment.
void sync_bank(ConfigDocument& doc);

std::string dump_thresholds(const ThresholdSet& ts);
ThresholdSet parse_thresholds(const std::string& json_text);
void save_thresholds(const std::string& path, const ThresholdSet& ts);
ThresholdSet load_thresholds(const std::string& path);

std::string dump_psd(const Psd& psd);
Psd parse_psd(const std::string& json_text);
void save_psd(const std::string& path, const Psd& psd);
Psd load_psd(const std::string& path);

}  // namespace specsense
