#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "specsense/classify.hpp"
#include "specsense/core.hpp"
#include "specsense/impair.hpp"
#include "specsense/siggen.hpp"

namespace specsense {

enum class Method { M1, M2Replay };

std::string to_string(Method m);
Method method_from_string(const std::string& text);

struct ExperimentConfig {
  std::vector<ClassKind> classes{ClassKind::DvbT, ClassKind::LteDl, ClassKind::Wran,
                                 ClassKind::Ecma, ClassKind::WirelessMic, ClassKind::NoiseOnly};
  std::map<std::string, double> mode_weights;  // preset name -> weight; missing presets weigh 1
  std::vector<double> snr_grid_db{0.0, 5.0, 10.0};
  std::size_t trials_per_point = 200;
  double observation_s = 0.02;
  double capture_rate_hz = 12.5e6;
  double pfa = 0.01;
  double nu_db = 0.0;
  std::uint64_t seed = 1;
  Method method = Method::M1;
  bool dic_enabled = true;
  unsigned threads = 1;

  // SNR is measured in the occupied band of the signal unless false.
  bool snr_inband = true;
  double wm_bandwidth_hz = 200.0e3;
  WmParams wm;

  // Receiver impairments (added after the signal/noise mix).
  std::vector<double> spur_offsets_hz;
  double spur_power_db = 20.0;  // above the per-bin Welch noise floor
  double floor_tilt_db = 0.0;
  std::size_t floor_shape_bins = 64;
  std::vector<MultipathTap> multipath;

  std::string replay_noise_path;  // M2Replay only
  std::size_t calibration_trials = 10000;
};

void validate(const ExperimentConfig& cfg);

/// Presets used for a class, with their normalized selection weights.
struct ModeChoice {
  std::vector<OfdmPreset> presets;
  std::vector<double> weights;
};

struct TrialResult {
  SignalClass truth;
  SignalClass verdict;
  ClassDecision decision;
};

/// Generation side of an experiment: presets, resamplers to the capture rate
/// and the replay noise. Immutable after construction.
class TrialRunner {
 public:
  TrialRunner(ExperimentConfig cfg, const BankConfig& bank, std::vector<OfdmPreset> presets = default_presets());

  [[nodiscard]] const ExperimentConfig& config() const { return cfg_; }
  [[nodiscard]] const DetectorBank& bank() const { return bank_; }

  /// Capture-rate buffer for one trial, fully determined by
  /// (seed, class, snr index, trial index). `mode` receives the preset name.
  [[nodiscard]] IqBuffer capture(ClassKind kind, double snr_db, std::size_t snr_index, std::size_t trial,
                                 std::string* mode = nullptr) const;

  /// Receiver noise only (NU, spurs, floor shape), no signal.
  [[nodiscard]] IqBuffer noise_capture(std::uint64_t seed, NuWorstCase worst_case) const;

  [[nodiscard]] TrialResult run_trial(ClassKind kind, double snr_db, std::size_t snr_index,
                                      std::size_t trial) const;

 private:
  [[nodiscard]] IqBuffer signal_at_capture(ClassKind kind, std::uint64_t seed, std::string* mode) const;
  [[nodiscard]] IqBuffer receiver_noise(std::uint64_t seed, double power) const;
  [[nodiscard]] IqBuffer receiver_chain(IqBuffer y, std::uint64_t seed, double noise_power) const;

  ExperimentConfig cfg_;
  DetectorBank bank_;
  std::vector<OfdmPreset> presets_;
  std::map<ClassKind, ModeChoice> modes_;
  std::map<double, std::shared_ptr<const dsp::Resampler>> upsamplers_;  // native rate -> capture rate
  std::optional<IqBuffer> replay_;
  std::size_t n_capture_ = 0;
};

/// Single-trial entry point; builds a runner per call.
TrialResult run_trial(const ExperimentConfig& cfg, const BankConfig& bank, ClassKind kind, double snr_db,
                      std::size_t trial_index);

struct CellMetrics {
  ClassKind kind = ClassKind::NoiseOnly;
  std::string mode;  // single preset, "mixed", or empty for WM/noise
  std::optional<double> snr_db;  // absent for the noise-only cell
  std::size_t trials = 0;
  std::size_t detected = 0;  // verdict != vacant
  std::size_t correct = 0;   // verdict class == truth class

  [[nodiscard]] double pcc() const;
  [[nodiscard]] std::optional<double> pccd() const;  // signal classes with detections only
  [[nodiscard]] double pmd() const;
};

struct MetricsSummary {
  std::vector<CellMetrics> cells;
  std::optional<double> pfa_measured;  // non-vacant rate of the noise-only cell
  double pfa_target = 0.01;
  bool dic = true;
  double nu_db = 0.0;
  std::uint64_t seed = 0;
};

/// Classes x SNR grid (noise-only runs once, not per SNR). Trial (class, snr
/// index, t) always uses the same random streams, so the result is
/// independent of the thread count.
MetricsSummary run_sweep(const ExperimentConfig& cfg, const BankConfig& bank,
                         std::vector<OfdmPreset> presets = default_presets());

inline constexpr const char* kSweepCsvHeader =
    "class,mode,snr_db,trials,detected,correct,pcc,pccd,pfa_target,dic,nu_db,seed";

void write_sweep_csv(std::ostream& os, const MetricsSummary& summary);
void write_sweep_csv(const std::string& path, const MetricsSummary& summary);

/// Average Welch PSD of noise-only receiver captures (input for WM floor
/// equalization).
Psd pre_estimate_noise_psd(const ExperimentConfig& cfg, const BankConfig& bank, std::size_t captures,
                           std::uint64_t seed);

// Per-detector study at the preset's native rate (no resampling): measured
// PFA on noise-only trials and PMD on signal trials, with or without DIC.

struct DetectorStudyConfig {
  OfdmPreset preset;
  std::vector<DetectorId> detectors{DetectorId::TdscMrc, DetectorId::CpSw, DetectorId::CpSum};
  std::map<DetectorId, ThresholdMode> threshold_modes;  // default: TDSC/CP-SW empirical, CP-SUM analytic
  double observation_s = 0.01;
  double pfa = 0.01;
  double nu_db = 0.0;
  bool dic_enabled = true;
  std::vector<double> snr_grid_db;
  std::size_t pfa_trials = 10000;
  std::size_t pmd_trials = 2000;
  std::size_t calibration_trials = 10000;
  bool snr_inband = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct DetectorStudyRow {
  DetectorId detector = DetectorId::CpSum;
  double gamma = 0.0;  // DIC-domain threshold
  ThresholdProvenance provenance = ThresholdProvenance::Analytic;
  std::size_t pfa_trials = 0;
  std::size_t false_alarms = 0;
  std::vector<double> snr_db;
  std::vector<std::size_t> misses;
  std::size_t pmd_trials = 0;

  [[nodiscard]] double pfa() const;
  [[nodiscard]] std::vector<double> pmd() const;
};

/// Thresholds for the study's detectors (noise power 1, no NU).
std::map<DetectorId, BranchThreshold> study_thresholds(const DetectorStudyConfig& cfg);

std::vector<DetectorStudyRow> run_detector_study(const DetectorStudyConfig& cfg,
                                                 const std::map<DetectorId, BranchThreshold>& thresholds);

void write_study_csv(std::ostream& os, const DetectorStudyConfig& cfg, const std::vector<DetectorStudyRow>& rows);

}  // namespace specsense
