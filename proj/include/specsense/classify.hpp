#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "specsense/calib.hpp"
#include "specsense/core.hpp"
#include "specsense/detect.hpp"
#include "specsense/dsp.hpp"
#include "specsense/mitigate.hpp"
#include "specsense/siggen.hpp"

namespace specsense {

enum class ThresholdMode { Analytic, Empirical };

std::string to_string(ThresholdMode m);
ThresholdMode threshold_mode_from_string(const std::string& text);

/// One OFDM detector branch; `label` is the verdict identifier and the key
/// into the threshold set (the preset name by default).
struct OfdmBranch {
  std::string label;
  OfdmPreset preset;
  DetectorId detector = DetectorId::CpSum;
  int alpha = 1;
  ThresholdMode threshold_mode = ThresholdMode::Analytic;
};

struct WmBranch {
  WelchConfig welch;
  WmThresholds thresholds;
  std::vector<double> spur_offsets_hz;  // excluded from PAR/DS
  std::size_t exclusion_halfwidth = 2;  // bins either side of each spur
  std::set<std::size_t> excluded_bins;  // explicit extra exclusions
  std::optional<Psd> noise_psd;         // enables floor equalization
};

/// Band-stop applied on the OFDM paths only.
struct Mitigation {
  std::vector<double> stop_centers_hz;
  double stop_width_hz = 50.0e3;
  double atten_db = 40.0;
};

struct BankConfig {
  double capture_rate_hz = 12.5e6;
  double observation_s = 0.02;
  std::vector<OfdmBranch> ofdm;
  WmBranch wm;
  std::optional<Mitigation> mitigation;
  ThresholdSet thresholds;
  bool dic_enabled = true;
  double nominal_noise_power = 1.0;  // capture-rate noise power assumed without DIC
  std::uint64_t max_denominator = 4096;

  [[nodiscard]] std::size_t capture_samples() const;
};

/// Detector expected for a class (Table 1).
DetectorId table1_detector(ClassKind kind);

/// Checks Table 1 consistency, alpha, unique labels and the WM settings.
void validate(const BankConfig& cfg);

/// One branch per preset with the Table 1 detector. TDSC-MRC and CP-SW
/// branches default to empirical thresholds, CP-SUM to analytic.
BankConfig default_bank(const std::vector<OfdmPreset>& presets, double capture_rate_hz = 12.5e6,
                        double observation_s = 0.02);

/// Band-stop (if any) then anti-alias filtering and rational resampling to
/// the preset's native rate.
IqBuffer condition(const IqBuffer& buf, const OfdmPreset& preset, const std::optional<Mitigation>& mitigation,
                   std::uint64_t max_denominator = 4096);

/// A bank with its filters designed once. Immutable after construction and
/// safe to share between threads.
class DetectorBank {
 public:
  explicit DetectorBank(BankConfig cfg);

  [[nodiscard]] const BankConfig& config() const { return cfg_; }

  /// OFDM reports in declaration order followed by the WM report.
  [[nodiscard]] std::vector<DetectorReport> run(const IqBuffer& buf) const;

  /// DIC-domain metric of every OFDM branch (no thresholds needed).
  [[nodiscard]] std::vector<double> ofdm_metrics(const IqBuffer& buf) const;

  /// Signal length seen by a branch after conditioning a full capture.
  [[nodiscard]] std::size_t conditioned_length(std::size_t branch) const;

  [[nodiscard]] IqBuffer condition(const IqBuffer& buf, std::size_t branch) const;

  [[nodiscard]] DetectorReport wm_report(const IqBuffer& buf) const;

 private:
  void check_input(const IqBuffer& buf) const;
  [[nodiscard]] std::vector<std::pair<double, double>> ofdm_raw_and_dic(const IqBuffer& buf) const;

  BankConfig cfg_;
  FilterCoeffs bandstop_;
  std::vector<std::shared_ptr<const dsp::Resampler>> resamplers_;  // one per distinct native rate
  std::vector<std::size_t> branch_rate_;                            // branch -> resamplers_ index
  std::set<std::size_t> wm_excluded_;
};

std::vector<DetectorReport> run_bank(const IqBuffer& buf, const BankConfig& cfg);

/// Eq. (16) with WM priority; argmax ties go to the first declared branch.
ClassDecision decide(const std::vector<DetectorReport>& reports);

/// "dvbt-2k-cp1/4"-style branch label, "wm" or "vacant".
std::string verdict_label(const ClassDecision& decision, const std::vector<DetectorReport>& reports);

/// Class of a verdict; the mode is the winning branch's preset name.
SignalClass verdict_class(const ClassDecision& decision, const std::vector<DetectorReport>& reports,
                          const BankConfig& cfg);

}  // namespace specsense
