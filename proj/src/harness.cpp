#include "specsense/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "specsense/iqfile.hpp"
#include "specsense/parallel.hpp"

namespace specsense {

namespace {

// Seed-stream purposes within one trial.
constexpr std::uint64_t kModeStream = 1;
constexpr std::uint64_t kSignalStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kSpurStream = 4;
constexpr std::uint64_t kStudyStream = 0x57D0;
constexpr std::uint64_t kPsdStream = 0x95D0;

double unit_uniform(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double inband_offset_db(bool inband, double occupied_hz, double rate_hz) {
  return inband ? linear_to_db(std::min(1.0, occupied_hz / rate_hz)) : 0.0;
}

}  // namespace

std::string to_string(Method m) { return m == Method::M1 ? "m1" : "m2-replay"; }

Method method_from_string(const std::string& text) {
  if (text == "m1") return Method::M1;
  if (text == "m2-replay") return Method::M2Replay;
  throw Error("unknown method: " + text);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.classes.empty()) throw Error("experiment needs at least one class");
  if (cfg.trials_per_point < 1) throw Error("trials per point must be at least 1");
  if (cfg.snr_grid_db.empty()) throw Error("SNR grid must not be empty");
  if (!(cfg.observation_s > 0.0)) throw Error("observation time must be positive");
  if (!(cfg.capture_rate_hz > 0.0)) throw Error("capture rate must be positive");
  if (!(cfg.pfa > 0.0 && cfg.pfa < 1.0)) throw Error("pfa must lie in (0, 1)");
  if (cfg.nu_db < 0.0) throw Error("noise uncertainty must be non-negative");
  if (cfg.method == Method::M2Replay && cfg.replay_noise_path.empty()) {
    throw Error("M2 replay needs a recorded noise file");
  }
  for (const auto& [name, w] : cfg.mode_weights) {
    if (!(w >= 0.0)) throw Error("mode weight must be non-negative: " + name);
  }
}

TrialRunner::TrialRunner(ExperimentConfig cfg, const BankConfig& bank, std::vector<OfdmPreset> presets)
    : cfg_(std::move(cfg)), bank_(bank), presets_(std::move(presets)) {
  validate(cfg_);
  if (bank.capture_rate_hz != cfg_.capture_rate_hz) throw Error("bank and experiment capture rates differ");
  n_capture_ = bank.capture_samples();
  if (n_capture_ != static_cast<std::size_t>(std::llround(cfg_.observation_s * cfg_.capture_rate_hz))) {
    throw Error("bank and experiment observation lengths differ");
  }
  for (ClassKind kind : cfg_.classes) {
    if (kind == ClassKind::WirelessMic || kind == ClassKind::NoiseOnly) continue;
    ModeChoice choice;
    for (const auto& p : presets_) {
      if (p.kind != kind) continue;
      auto it = cfg_.mode_weights.find(p.name);
      const double w = it == cfg_.mode_weights.end() ? 1.0 : it->second;
      if (w <= 0.0) continue;
      choice.presets.push_back(p);
      choice.weights.push_back(w);
    }
    if (choice.presets.empty()) throw Error("no preset with positive weight for class " + to_string(kind));
    double total = 0.0;
    for (double w : choice.weights) total += w;
    for (double& w : choice.weights) w /= total;
    for (const auto& p : choice.presets) {
      if (p.native_rate_hz > cfg_.capture_rate_hz) throw Error("preset rate above the capture rate: " + p.name);
      if (p.native_rate_hz < cfg_.capture_rate_hz && !upsamplers_.count(p.native_rate_hz)) {
        upsamplers_[p.native_rate_hz] =
            std::make_shared<const dsp::Resampler>(p.native_rate_hz, cfg_.capture_rate_hz, bank.max_denominator);
      }
    }
    modes_[kind] = std::move(choice);
  }
  if (cfg_.method == Method::M2Replay) {
    IqBuffer rec = read_iq_file(cfg_.replay_noise_path);
    if (rec.rate() != cfg_.capture_rate_hz) throw Error(cfg_.replay_noise_path + ": rate differs from capture rate");
    if (rec.size() < n_capture_) throw Error(cfg_.replay_noise_path + ": shorter than one observation");
    const double p = estimate_power(rec);
    if (!(p > 0.0)) throw Error(cfg_.replay_noise_path + ": zero-power recording");
    replay_ = scale(rec, 1.0 / std::sqrt(p));
  }
}

IqBuffer TrialRunner::signal_at_capture(ClassKind kind, std::uint64_t seed, std::string* mode) const {
  if (kind == ClassKind::WirelessMic) {
    if (mode) mode->clear();
    IqBuffer s = gen_fm_wm(cfg_.wm, cfg_.observation_s, cfg_.capture_rate_hz, derive_seed(seed, {kSignalStream}));
    s.mutable_samples().resize(n_capture_);
    return s;
  }
  const ModeChoice& choice = modes_.at(kind);
  const double u = unit_uniform(derive_seed(seed, {kModeStream}));
  std::size_t pick = 0;
  double acc = choice.weights[0];
  while (pick + 1 < choice.presets.size() && u >= acc) acc += choice.weights[++pick];
  const OfdmPreset& preset = choice.presets[pick];
  if (mode) *mode = preset.name;

  auto it = upsamplers_.find(preset.native_rate_hz);
  std::size_t n_native = n_capture_;
  if (it != upsamplers_.end()) {
    const auto r = it->second->ratio();
    n_native = static_cast<std::size_t>((n_capture_ * r.q + r.p - 1) / r.p) + 1;
  }
  const double duration = (static_cast<double>(n_native) + 0.5) / preset.native_rate_hz;
  IqBuffer native = generate(preset, duration, derive_seed(seed, {kSignalStream}));
  IqBuffer s = it == upsamplers_.end() ? IqBuffer(std::move(native.mutable_samples()), cfg_.capture_rate_hz)
                                       : it->second->process(native);
  if (s.size() < n_capture_) throw Error("generated signal shorter than the observation");
  s.mutable_samples().resize(n_capture_);
  return s;
}

IqBuffer TrialRunner::receiver_noise(std::uint64_t seed, double power) const {
  if (!replay_) return gen_awgn(n_capture_, power, cfg_.capture_rate_hz, seed);
  std::mt19937_64 rng(seed);
  const std::size_t span = replay_->size() - n_capture_ + 1;
  const std::size_t start = static_cast<std::size_t>(rng() % span);
  std::vector<Complex> w(replay_->samples().begin() + static_cast<std::ptrdiff_t>(start),
                         replay_->samples().begin() + static_cast<std::ptrdiff_t>(start + n_capture_));
  return scale(IqBuffer(std::move(w), cfg_.capture_rate_hz), std::sqrt(power));
}

IqBuffer TrialRunner::receiver_chain(IqBuffer y, std::uint64_t seed, double noise_power) const {
  if (!cfg_.spur_offsets_hz.empty()) {
    const double per_bin = noise_power / static_cast<double>(bank_.config().wm.welch.m);
    y = inject_spurs(y, cfg_.spur_offsets_hz, cfg_.spur_power_db, per_bin, derive_seed(seed, {kSpurStream}));
  }
  if (cfg_.floor_tilt_db != 0.0) y = shape_noise_floor(y, tilt_gains(cfg_.floor_shape_bins, cfg_.floor_tilt_db));
  return y;
}

IqBuffer TrialRunner::noise_capture(std::uint64_t seed, NuWorstCase worst_case) const {
  const double power = apply_noise_uncertainty(bank_.config().nominal_noise_power, cfg_.nu_db, worst_case);
  return receiver_chain(receiver_noise(derive_seed(seed, {kNoiseStream}), power), seed, power);
}

IqBuffer TrialRunner::capture(ClassKind kind, double snr_db, std::size_t snr_index, std::size_t trial,
                              std::string* mode) const {
  const std::uint64_t seed =
      derive_seed(cfg_.seed, {static_cast<std::uint64_t>(kind), snr_index, static_cast<std::uint64_t>(trial)});
  if (kind == ClassKind::NoiseOnly) {
    if (mode) mode->clear();
    return noise_capture(seed, NuWorstCase::ForPfa);
  }
  const double power = apply_noise_uncertainty(bank_.config().nominal_noise_power, cfg_.nu_db, NuWorstCase::ForPmd);
  const IqBuffer w = receiver_noise(derive_seed(seed, {kNoiseStream}), power);
  std::string preset_name;
  IqBuffer s = signal_at_capture(kind, seed, &preset_name);
  if (!cfg_.multipath.empty()) s = apply_multipath(s, cfg_.multipath);
  double occupied = cfg_.wm_bandwidth_hz;
  if (kind != ClassKind::WirelessMic) {
    for (const auto& p : modes_.at(kind).presets) {
      if (p.name == preset_name) occupied = p.occupied_bandwidth_hz();
    }
  }
  if (mode) *mode = preset_name;
  const double snr_total = snr_db + inband_offset_db(cfg_.snr_inband, occupied, cfg_.capture_rate_hz);
  return receiver_chain(mix_at_snr(s, w, snr_total), seed, power);
}

TrialResult TrialRunner::run_trial(ClassKind kind, double snr_db, std::size_t snr_index, std::size_t trial) const {
  std::string mode;
  const IqBuffer y = capture(kind, snr_db, snr_index, trial, &mode);
  const auto reports = bank_.run(y);
  TrialResult r;
  r.truth = {kind, mode};
  r.decision = decide(reports);
  r.verdict = verdict_class(r.decision, reports, bank_.config());
  return r;
}

TrialResult run_trial(const ExperimentConfig& cfg, const BankConfig& bank, ClassKind kind, double snr_db,
                      std::size_t trial_index) {
  const TrialRunner runner(cfg, bank);
  std::size_t snr_index = 0;
  for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) {
    if (cfg.snr_grid_db[i] == snr_db) snr_index = i;
  }
  return runner.run_trial(kind, snr_db, snr_index, trial_index);
}

double CellMetrics::pcc() const { return trials ? static_cast<double>(correct) / static_cast<double>(trials) : 0.0; }

std::optional<double> CellMetrics::pccd() const {
  if (kind == ClassKind::NoiseOnly || detected == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(detected);
}

double CellMetrics::pmd() const {
  return trials ? static_cast<double>(trials - detected) / static_cast<double>(trials) : 0.0;
}

MetricsSummary run_sweep(const ExperimentConfig& cfg, const BankConfig& bank, std::vector<OfdmPreset> presets) {
  const TrialRunner runner(cfg, bank, std::move(presets));
  MetricsSummary out;
  out.pfa_target = cfg.pfa;
  out.dic = bank.dic_enabled;
  out.nu_db = cfg.nu_db;
  out.seed = cfg.seed;

  struct Job {
    std::size_t cell;
    std::size_t snr_index;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  std::vector<ClassKind> seen;
  for (ClassKind kind : cfg.classes) {
    if (std::find(seen.begin(), seen.end(), kind) != seen.end()) continue;
    seen.push_back(kind);
    const std::size_t n_snr = kind == ClassKind::NoiseOnly ? 1 : cfg.snr_grid_db.size();
    for (std::size_t si = 0; si < n_snr; ++si) {
      CellMetrics cell;
      cell.kind = kind;
      if (kind != ClassKind::NoiseOnly) cell.snr_db = cfg.snr_grid_db[si];
      cell.trials = cfg.trials_per_point;
      out.cells.push_back(cell);
      for (std::size_t t = 0; t < cfg.trials_per_point; ++t) jobs.push_back({out.cells.size() - 1, si, t});
    }
  }

  std::vector<TrialResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const CellMetrics& c = out.cells[j.cell];
    results[i] = runner.run_trial(c.kind, c.snr_db.value_or(0.0), j.snr_index, j.trial);
  });

  std::vector<std::set<std::string>> modes(out.cells.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CellMetrics& c = out.cells[jobs[i].cell];
    const TrialResult& r = results[i];
    if (r.decision.kind != ClassDecision::Kind::Vacant) ++c.detected;
    if (r.verdict.kind == r.truth.kind) ++c.correct;
    if (!r.truth.mode.empty()) modes[jobs[i].cell].insert(r.truth.mode);
  }
  for (std::size_t c = 0; c < out.cells.size(); ++c) {
    auto& cell = out.cells[c];
    if (modes[c].size() == 1) cell.mode = *modes[c].begin();
    if (modes[c].size() > 1) cell.mode = "mixed";
    if (cell.kind == ClassKind::NoiseOnly) out.pfa_measured = 1.0 - cell.pcc();
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const MetricsSummary& s) {
  os << kSweepCsvHeader << '\n';
  for (const auto& c : s.cells) {
    const auto pccd = c.pccd();
    os << to_string(c.kind) << ',' << c.mode << ',' << (c.snr_db ? fmt("%.2f", *c.snr_db) : "") << ',' << c.trials
       << ',' << c.detected << ',' << c.correct << ',' << fmt("%.6f", c.pcc()) << ','
       << (pccd ? fmt("%.6f", *pccd) : "") << ',' << fmt("%.6g", s.pfa_target) << ',' << (s.dic ? "true" : "false")
       << ',' << fmt("%.2f", s.nu_db) << ',' << s.seed << '\n';
  }
}

void write_sweep_csv(const std::string& path, const MetricsSummary& summary) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(path + ": cannot open for writing");
  write_sweep_csv(f, summary);
  if (!f) throw Error(path + ": write failed");
}

Psd pre_estimate_noise_psd(const ExperimentConfig& cfg, const BankConfig& bank, std::size_t captures,
                           std::uint64_t seed) {
  ExperimentConfig quiet = cfg;
  quiet.nu_db = 0.0;
  const TrialRunner runner(quiet, bank);
  std::vector<IqBuffer> bufs;
  for (std::size_t i = 0; i < captures; ++i) {
    bufs.push_back(runner.noise_capture(derive_seed(seed, {kPsdStream, i}), NuWorstCase::ForPfa));
  }
  return estimate_noise_psd(bufs, bank.wm.welch);
}

double DetectorStudyRow::pfa() const {
  return pfa_trials ? static_cast<double>(false_alarms) / static_cast<double>(pfa_trials) : 0.0;
}

std::vector<double> DetectorStudyRow::pmd() const {
  std::vector<double> out;
  for (std::size_t m : misses) out.push_back(static_cast<double>(m) / static_cast<double>(pmd_trials));
  return out;
}

namespace {

ThresholdMode study_mode(const DetectorStudyConfig& cfg, DetectorId id) {
  auto it = cfg.threshold_modes.find(id);
  if (it != cfg.threshold_modes.end()) return it->second;
  return id == DetectorId::CpSum ? ThresholdMode::Analytic : ThresholdMode::Empirical;
}

std::size_t study_samples(const DetectorStudyConfig& cfg) {
  return static_cast<std::size_t>(std::floor(cfg.observation_s * cfg.preset.native_rate_hz + 1e-9));
}

// Normalized metrics of every study detector on one buffer.
std::vector<double> study_metrics(const DetectorStudyConfig& cfg, const IqBuffer& y, bool dic) {
  const double power = dic ? estimate_power(y) : 1.0;
  std::vector<double> out;
  for (DetectorId d : cfg.detectors) {
    out.push_back(dic_normalize(ofdm_raw_metric(d, y, cfg.preset), power, dic_alpha(d)));
  }
  return out;
}

}  // namespace

std::map<DetectorId, BranchThreshold> study_thresholds(const DetectorStudyConfig& cfg) {
  const std::size_t n = study_samples(cfg);
  const double rate = cfg.preset.native_rate_hz;
  bool any_empirical = false;
  for (DetectorId d : cfg.detectors) any_empirical |= study_mode(cfg, d) == ThresholdMode::Empirical;
  std::vector<std::vector<double>> metrics;
  if (any_empirical) {
    metrics.resize(cfg.calibration_trials);
    parallel_for(cfg.calibration_trials, cfg.threads, [&](std::size_t t) {
      metrics[t] = study_metrics(cfg, gen_awgn(n, 1.0, rate, derive_seed(cfg.seed, {kStudyStream, 0, t})), true);
    });
  }
  std::map<DetectorId, BranchThreshold> out;
  for (std::size_t i = 0; i < cfg.detectors.size(); ++i) {
    const DetectorId d = cfg.detectors[i];
    BranchThreshold th;
    if (study_mode(cfg, d) == ThresholdMode::Empirical) {
      std::vector<double> column;
      for (const auto& m : metrics) column.push_back(m[i]);
      th.gamma = empirical_threshold(column, cfg.pfa);
      th.provenance = ThresholdProvenance::Empirical;
      th.trials = cfg.calibration_trials;
    } else if (d == DetectorId::TdscMrc) {
      const TdscParams tp = tdsc_params_for(cfg.preset, n);
      th.gamma = analytic_threshold_tdsc(tp.n_periods, tp.j, cfg.pfa);
    } else if (d == DetectorId::CpSum) {
      th.gamma = analytic_threshold_cpsum(cfg.pfa);
    } else {
      throw Error("no analytic threshold for " + to_string(d));
    }
    out[d] = th;
  }
  return out;
}

std::vector<DetectorStudyRow> run_detector_study(const DetectorStudyConfig& cfg,
                                                 const std::map<DetectorId, BranchThreshold>& thresholds) {
  const std::size_t n = study_samples(cfg);
  const double rate = cfg.preset.native_rate_hz;
  const std::size_t nd = cfg.detectors.size();
  std::vector<double> gamma(nd);
  for (std::size_t i = 0; i < nd; ++i) gamma[i] = thresholds.at(cfg.detectors[i]).gamma;

  const double pfa_power = apply_noise_uncertainty(1.0, cfg.nu_db, NuWorstCase::ForPfa);
  std::vector<std::vector<char>> fa(cfg.pfa_trials);
  parallel_for(cfg.pfa_trials, cfg.threads, [&](std::size_t t) {
    const auto m = study_metrics(cfg, gen_awgn(n, pfa_power, rate, derive_seed(cfg.seed, {kStudyStream, 1, t})),
                                 cfg.dic_enabled);
    fa[t].resize(nd);
    for (std::size_t i = 0; i < nd; ++i) fa[t][i] = m[i] >= gamma[i];
  });

  const double pmd_power = apply_noise_uncertainty(1.0, cfg.nu_db, NuWorstCase::ForPmd);
  const double offset = inband_offset_db(cfg.snr_inband, cfg.preset.occupied_bandwidth_hz(), rate);
  const std::size_t ns = cfg.snr_grid_db.size();
  std::vector<std::vector<char>> hit(ns * cfg.pmd_trials);
  parallel_for(hit.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t si = job / cfg.pmd_trials;
    const std::size_t t = job % cfg.pmd_trials;
    const std::uint64_t seed = derive_seed(cfg.seed, {kStudyStream, 2, si, t});
    IqBuffer s = generate(cfg.preset, cfg.observation_s, derive_seed(seed, {kSignalStream}));
    const IqBuffer w = gen_awgn(s.size(), pmd_power, rate, derive_seed(seed, {kNoiseStream}));
    const auto m = study_metrics(cfg, mix_at_snr(s, w, cfg.snr_grid_db[si] + offset), cfg.dic_enabled);
    hit[job].resize(nd);
    for (std::size_t i = 0; i < nd; ++i) hit[job][i] = m[i] >= gamma[i];
  });

  std::vector<DetectorStudyRow> rows(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    auto& r = rows[i];
    r.detector = cfg.detectors[i];
    r.gamma = gamma[i];
    r.provenance = thresholds.at(r.detector).provenance;
    r.pfa_trials = cfg.pfa_trials;
    for (const auto& f : fa) r.false_alarms += f[i];
    r.snr_db = cfg.snr_grid_db;
    r.pmd_trials = cfg.pmd_trials;
    r.misses.assign(ns, 0);
    for (std::size_t job = 0; job < hit.size(); ++job) r.misses[job / cfg.pmd_trials] += hit[job][i] ? 0 : 1;
  }
  return rows;
}

void write_study_csv(std::ostream& os, const DetectorStudyConfig& cfg, const std::vector<DetectorStudyRow>& rows) {
  os << "detector,snr_db,trials,errors,rate,kind,gamma,pfa_target,dic,nu_db,seed\n";
  for (const auto& r : rows) {
    const std::string tail = fmt("%.9g", r.gamma) + ',' + fmt("%.6g", cfg.pfa) + ',' +
                             (cfg.dic_enabled ? "true" : "false") + ',' + fmt("%.2f", cfg.nu_db) + ',' +
                             std::to_string(cfg.seed);
    os << to_string(r.detector) << ",," << r.pfa_trials << ',' << r.false_alarms << ',' << fmt("%.6f", r.pfa())
       << ",pfa," << tail << '\n';
    const auto pmd = r.pmd();
    for (std::size_t s = 0; s < r.snr_db.size(); ++s) {
      os << to_string(r.detector) << ',' << fmt("%.2f", r.snr_db[s]) << ',' << r.pmd_trials << ',' << r.misses[s]
         << ',' << fmt("%.6f", pmd[s]) << ",pmd," << tail << '\n';
    }
  }
}

}  // namespace specsense
