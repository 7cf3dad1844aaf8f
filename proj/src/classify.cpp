#include "specsense/classify.hpp"

#include <algorithm>
#include <cmath>

namespace specsense {

std::string to_string(ThresholdMode m) { return m == ThresholdMode::Analytic ? "analytic" : "empirical"; }

ThresholdMode threshold_mode_from_string(const std::string& text) {
  if (text == "analytic") return ThresholdMode::Analytic;
  if (text == "empirical") return ThresholdMode::Empirical;
  throw Error("unknown threshold mode: " + text);
}

std::size_t BankConfig::capture_samples() const {
  return static_cast<std::size_t>(std::llround(observation_s * capture_rate_hz));
}

DetectorId table1_detector(ClassKind kind) {
  switch (kind) {
    case ClassKind::DvbT: return DetectorId::TdscMrc;
    case ClassKind::LteDl: return DetectorId::CpSw;
    case ClassKind::Wran:
    case ClassKind::Ecma: return DetectorId::CpSum;
    case ClassKind::WirelessMic: return DetectorId::WmParDs;
    case ClassKind::NoiseOnly: break;
  }
  throw Error("class has no detector: " + to_string(kind));
}

void validate(const BankConfig& cfg) {
  if (!(cfg.capture_rate_hz > 0.0)) throw Error("capture rate must be positive");
  if (!(cfg.observation_s > 0.0)) throw Error("observation time must be positive");
  if (cfg.ofdm.empty()) throw Error("bank needs at least one OFDM branch");
  std::set<std::string> labels;
  for (const auto& b : cfg.ofdm) {
    if (b.label.empty()) throw Error("branch label must not be empty");
    if (!labels.insert(b.label).second) throw Error("duplicate branch label: " + b.label);
    if (b.label == "wm" || b.label == "vacant") throw Error("reserved branch label: " + b.label);
    if (b.detector != table1_detector(b.preset.kind)) {
      throw Error("branch " + b.label + ": detector " + to_string(b.detector) + " does not match class " +
                  to_string(b.preset.kind));
    }
    if (b.alpha != dic_alpha(b.detector)) throw Error("branch " + b.label + ": alpha inconsistent with metric");
    if (b.detector == DetectorId::CpSw && b.threshold_mode == ThresholdMode::Analytic) {
      throw Error("branch " + b.label + ": CP-SW has no analytic threshold");
    }
    if (b.preset.native_rate_hz > cfg.capture_rate_hz) {
      throw Error("branch " + b.label + ": native rate above the capture rate");
    }
  }
  validate(cfg.wm.welch);
  if (!(cfg.nominal_noise_power > 0.0)) throw Error("nominal noise power must be positive");
}

BankConfig default_bank(const std::vector<OfdmPreset>& presets, double capture_rate_hz, double observation_s) {
  BankConfig cfg;
  cfg.capture_rate_hz = capture_rate_hz;
  cfg.observation_s = observation_s;
  for (const auto& p : presets) {
    OfdmBranch b;
    b.label = p.name;
    b.preset = p;
    b.detector = table1_detector(p.kind);
    b.alpha = dic_alpha(b.detector);
    b.threshold_mode =
        b.detector == DetectorId::CpSum ? ThresholdMode::Analytic : ThresholdMode::Empirical;
    cfg.ofdm.push_back(std::move(b));
  }
  return cfg;
}

IqBuffer condition(const IqBuffer& buf, const OfdmPreset& preset, const std::optional<Mitigation>& mitigation,
                   std::uint64_t max_denominator) {
  if (buf.rate() < preset.native_rate_hz) throw Error("buffer rate below the preset's native rate");
  IqBuffer out = buf;
  if (mitigation) {
    out = apply_filter(out, design_bandstop(buf.rate(), mitigation->stop_centers_hz, mitigation->stop_width_hz,
                                            mitigation->atten_db));
  }
  const dsp::Resampler rs(buf.rate(), preset.native_rate_hz, max_denominator);
  return rs.process(out);
}

DetectorBank::DetectorBank(BankConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  if (cfg_.mitigation) {
    bandstop_ = design_bandstop(cfg_.capture_rate_hz, cfg_.mitigation->stop_centers_hz,
                                cfg_.mitigation->stop_width_hz, cfg_.mitigation->atten_db);
  }
  std::vector<double> rates;
  for (const auto& b : cfg_.ofdm) {
    const double r = b.preset.native_rate_hz;
    auto it = std::find(rates.begin(), rates.end(), r);
    if (it == rates.end()) {
      rates.push_back(r);
      resamplers_.push_back(
          std::make_shared<const dsp::Resampler>(cfg_.capture_rate_hz, r, cfg_.max_denominator));
      branch_rate_.push_back(rates.size() - 1);
    } else {
      branch_rate_.push_back(static_cast<std::size_t>(it - rates.begin()));
    }
  }
  wm_excluded_ = spur_bins(cfg_.wm.spur_offsets_hz, cfg_.capture_rate_hz, cfg_.wm.welch.m,
                           cfg_.wm.exclusion_halfwidth);
  for (std::size_t m : cfg_.wm.excluded_bins) {
    if (m >= cfg_.wm.welch.m) throw Error("excluded bin out of range");
    wm_excluded_.insert(m);
  }
  if (cfg_.wm.noise_psd && cfg_.wm.noise_psd->bins.size() != cfg_.wm.welch.m) {
    throw Error("noise PSD length does not match the Welch DFT size");
  }
}

void DetectorBank::check_input(const IqBuffer& buf) const {
  if (buf.empty()) throw Error("empty input");
  if (buf.rate() != cfg_.capture_rate_hz) throw Error("buffer rate differs from the bank's capture rate");
  if (!(estimate_power(buf) > 0.0)) throw Error("zero-power input");
}

std::size_t DetectorBank::conditioned_length(std::size_t branch) const {
  const auto r = resamplers_.at(branch_rate_.at(branch))->ratio();
  return static_cast<std::size_t>(cfg_.capture_samples() * r.p / r.q);
}

IqBuffer DetectorBank::condition(const IqBuffer& buf, std::size_t branch) const {
  return resamplers_.at(branch_rate_.at(branch))->process(apply_filter(buf, bandstop_));
}

std::vector<double> DetectorBank::ofdm_metrics(const IqBuffer& buf) const {
  std::vector<double> out;
  for (const auto& [raw, dic] : ofdm_raw_and_dic(buf)) out.push_back(dic);
  return out;
}

std::vector<std::pair<double, double>> DetectorBank::ofdm_raw_and_dic(const IqBuffer& buf) const {
  check_input(buf);
  const IqBuffer filtered = apply_filter(buf, bandstop_);
  std::vector<std::pair<double, double>> out(cfg_.ofdm.size());
  for (std::size_t g = 0; g < resamplers_.size(); ++g) {
    const IqBuffer y = resamplers_[g]->process(filtered);
    const double power = cfg_.dic_enabled
                             ? estimate_power(y)
                             : cfg_.nominal_noise_power * std::min(1.0, y.rate() / cfg_.capture_rate_hz);
    if (!(power > 0.0)) throw Error("zero-power input");
    for (std::size_t i = 0; i < cfg_.ofdm.size(); ++i) {
      if (branch_rate_[i] != g) continue;
      const auto& b = cfg_.ofdm[i];
      const double raw = ofdm_raw_metric(b.detector, y, b.preset);
      out[i] = {raw, dic_normalize(raw, power, b.alpha)};
    }
  }
  return out;
}

DetectorReport DetectorBank::wm_report(const IqBuffer& buf) const {
  Psd psd = estimate_psd_welch(buf, cfg_.wm.welch);
  psd.excluded_bins.insert(wm_excluded_.begin(), wm_excluded_.end());
  if (cfg_.wm.noise_psd) psd = equalize_psd(psd, *cfg_.wm.noise_psd);
  const double par = psd_par(psd);
  const double ds = psd_ds(psd, cfg_.wm.thresholds.rho);
  DetectorReport r = make_report(DetectorId::WmParDs, "wm", par, par, cfg_.wm.thresholds.phi);
  r.wm_flag = par >= cfg_.wm.thresholds.phi && ds <= cfg_.wm.thresholds.psi;
  r.par = par;
  r.ds = ds;
  return r;
}

std::vector<DetectorReport> DetectorBank::run(const IqBuffer& buf) const {
  const std::size_t want = cfg_.thresholds.capture_samples;
  if (want != 0 && buf.size() != want) {
    throw Error("thresholds were calibrated for " + std::to_string(want) + " samples, got " +
                std::to_string(buf.size()));
  }
  const auto metrics = ofdm_raw_and_dic(buf);
  std::vector<DetectorReport> reports;
  reports.reserve(cfg_.ofdm.size() + 1);
  for (std::size_t i = 0; i < cfg_.ofdm.size(); ++i) {
    const auto& b = cfg_.ofdm[i];
    auto it = cfg_.thresholds.branches.find(b.label);
    if (it == cfg_.thresholds.branches.end()) throw Error("missing threshold for branch " + b.label);
    reports.push_back(make_report(b.detector, b.label, metrics[i].first, metrics[i].second, it->second.gamma));
  }
  reports.push_back(wm_report(buf));
  return reports;
}

std::vector<DetectorReport> run_bank(const IqBuffer& buf, const BankConfig& cfg) {
  return DetectorBank(cfg).run(buf);
}

ClassDecision decide(const std::vector<DetectorReport>& reports) {
  const DetectorReport* wm = nullptr;
  std::size_t n_ofdm = 0;
  std::size_t best = 0;
  double best_ratio = -1.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].detector == DetectorId::WmParDs) {
      if (wm) throw Error("more than one WM report");
      wm = &reports[i];
      continue;
    }
    ++n_ofdm;
    if (reports[i].ratio > best_ratio) {
      best_ratio = reports[i].ratio;
      best = i;
    }
  }
  if (!wm) throw Error("missing WM report");
  if (n_ofdm == 0) throw Error("no OFDM reports");
  if (wm->wm_flag) return {ClassDecision::Kind::Wm, 0};
  if (best_ratio >= 1.0) return {ClassDecision::Kind::Ofdm, best};
  return {ClassDecision::Kind::Vacant, 0};
}

std::string verdict_label(const ClassDecision& decision, const std::vector<DetectorReport>& reports) {
  switch (decision.kind) {
    case ClassDecision::Kind::Wm: return "wm";
    case ClassDecision::Kind::Vacant: return "vacant";
    case ClassDecision::Kind::Ofdm: return reports.at(decision.branch).branch;
  }
  return "vacant";
}

SignalClass verdict_class(const ClassDecision& decision, const std::vector<DetectorReport>& reports,
                          const BankConfig& cfg) {
  switch (decision.kind) {
    case ClassDecision::Kind::Wm: return {ClassKind::WirelessMic, ""};
    case ClassDecision::Kind::Vacant: return {ClassKind::NoiseOnly, ""};
    case ClassDecision::Kind::Ofdm: {
      const std::string& label = reports.at(decision.branch).branch;
      for (const auto& b : cfg.ofdm) {
        if (b.label == label) return {b.preset.kind, b.preset.name};
      }
      throw Error("verdict branch not in bank: " + label);
    }
  }
  return {};
}

}  // namespace specsense
