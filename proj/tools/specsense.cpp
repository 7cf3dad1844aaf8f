// Command-line front end: gen / calibrate / classify / sweep / study.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "specsense/calib.hpp"
#include "specsense/classify.hpp"
#include "specsense/config.hpp"
#include "specsense/harness.hpp"
#include "specsense/iqfile.hpp"

using namespace specsense;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> pfa;
  bool no_dic = false;
  std::optional<double> nu_db;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool fast = false;
};

ConfigDocument load(const Globals& g) {
  ConfigDocument doc = g.config_path.empty() ? default_config() : load_config(g.config_path);
  auto& e = doc.experiment;
  if (g.fast) {
    // 15 ms is the shortest observation giving the 8K DVB-T modes three pilot periods.
    e.observation_s = 0.015;
    e.trials_per_point = std::min<std::size_t>(e.trials_per_point, 50);
    e.calibration_trials = std::min<std::size_t>(e.calibration_trials, 2000);
  }
  if (g.seed) e.seed = *g.seed;
  if (g.pfa) e.pfa = *g.pfa;
  if (g.no_dic) e.dic_enabled = false;
  if (g.nu_db) e.nu_db = *g.nu_db;
  e.threads = g.threads;
  sync_bank(doc);
  validate(e);
  return doc;
}

// Thresholds from --thresholds, the config, or an in-process calibration.
ThresholdSet thresholds_for(const ConfigDocument& doc, const std::string& cli_path, bool quiet = false) {
  const std::string path = !cli_path.empty() ? cli_path : doc.thresholds_path.value_or("");
  if (!path.empty()) return load_thresholds(path);
  const auto& e = doc.experiment;
  const bool empirical = std::any_of(doc.bank.ofdm.begin(), doc.bank.ofdm.end(),
                                     [](const OfdmBranch& b) { return b.threshold_mode == ThresholdMode::Empirical; });
  if (!quiet && empirical) {
    std::fprintf(stderr, "calibrating thresholds (%zu noise-only trials, pfa %.4g)\n", e.calibration_trials, e.pfa);
  }
  return calibrate_bank(doc.bank, e.pfa, e.calibration_trials, e.seed, e.threads);
}

// Attaches thresholds and, if requested, the WM noise-floor estimate.
void prepare_bank(ConfigDocument& doc, const std::string& thresholds_path, bool quiet = false) {
  if (doc.noise_psd_path) {
    doc.bank.wm.noise_psd = load_psd(*doc.noise_psd_path);
  } else if (doc.wm_equalize) {
    doc.bank.wm.noise_psd = pre_estimate_noise_psd(doc.experiment, doc.bank, 40, derive_seed(doc.experiment.seed, {7}));
  }
  doc.bank.thresholds = thresholds_for(doc, thresholds_path, quiet);
}

std::vector<ClassKind> parse_classes(const std::vector<std::string>& names) {
  std::vector<ClassKind> out;
  for (const auto& n : names) out.push_back(class_kind_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum-occupancy classifier for TV white space channels"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--pfa", g.pfa, "Target false-alarm probability")->check(CLI::Range(1e-9, 1.0 - 1e-9));
  app.add_flag("--no-dic", g.no_dic, "Normalize by the nominal noise power instead of DIC");
  app.add_option("--nu-db", g.nu_db, "Noise uncertainty in dB")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--fast", g.fast, "Short observation and reduced trial counts");

  auto* gen = app.add_subcommand("gen", "Write one synthetic capture to an IQ file");
  std::string gen_class = "dvbt", gen_mode, gen_out;
  double gen_snr = 10.0;
  std::size_t gen_trial = 0;
  gen->add_option("--class", gen_class, "dvbt|lte|wran|ecma392|wm|noise");
  gen->add_option("--mode", gen_mode, "Preset name (default: random per mode weights)");
  gen->add_option("--snr", gen_snr, "In-band SNR in dB");
  gen->add_option("--trial", gen_trial, "Trial index (selects the random stream)");
  gen->add_option("--out", gen_out, "Output IQ file")->required();

  auto* cal = app.add_subcommand("calibrate", "Compute detector thresholds");
  std::string cal_out, cal_psd_out;
  std::optional<std::size_t> cal_trials;
  cal->add_option("--out", cal_out, "Threshold file")->required();
  cal->add_option("--trials", cal_trials, "Noise-only trials for empirical thresholds")->check(CLI::PositiveNumber);
  cal->add_option("--noise-psd-out", cal_psd_out, "Also write a WM noise-floor estimate");

  auto* cls = app.add_subcommand("classify", "Classify one IQ capture");
  std::string cls_in, cls_thresholds;
  cls->add_option("input", cls_in, "IQ file")->required()->check(CLI::ExistingFile);
  cls->add_option("--thresholds", cls_thresholds, "Threshold file")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo classification sweep to CSV");
  std::string sweep_out, sweep_thresholds;
  std::optional<std::size_t> sweep_trials;
  std::vector<double> sweep_snr;
  std::vector<std::string> sweep_classes;
  sweep->add_option("--out", sweep_out, "CSV output (default stdout)");
  sweep->add_option("--trials", sweep_trials, "Trials per (class, SNR) point")->check(CLI::PositiveNumber);
  sweep->add_option("--snr", sweep_snr, "SNR grid in dB")->delimiter(',');
  sweep->add_option("--classes", sweep_classes, "Classes under test")->delimiter(',');
  sweep->add_option("--thresholds", sweep_thresholds, "Threshold file")->check(CLI::ExistingFile);

  auto* study = app.add_subcommand("study", "Per-detector PFA / PMD study at the native rate");
  std::string study_preset = "dvbt-2k-cp1/4", study_out;
  double study_obs = 0.01;
  std::size_t study_pfa_trials = 10000, study_pmd_trials = 2000;
  std::vector<double> study_snr{-20, -18, -16, -14, -12, -10, -8, -6, -4, -2};
  study->add_option("--preset", study_preset, "OFDM preset");
  study->add_option("--observation", study_obs, "Observation time in seconds")->check(CLI::PositiveNumber);
  study->add_option("--pfa-trials", study_pfa_trials, "Noise-only trials")->check(CLI::PositiveNumber);
  study->add_option("--pmd-trials", study_pmd_trials, "Signal trials per SNR")->check(CLI::PositiveNumber);
  study->add_option("--snr", study_snr, "SNR grid in dB")->delimiter(',');
  study->add_option("--out", study_out, "CSV output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigDocument doc = load(g);
    auto& e = doc.experiment;

    if (*gen) {
      const ClassKind kind = class_kind_from_string(gen_class);
      if (!gen_mode.empty()) {
        const OfdmPreset& p = find_preset(doc.presets, gen_mode);
        if (p.kind != kind) throw Error("preset " + gen_mode + " does not belong to class " + gen_class);
        e.mode_weights.clear();
        for (const auto& q : doc.presets) e.mode_weights[q.name] = q.name == gen_mode ? 1.0 : 0.0;
      }
      e.classes = {kind};
      e.snr_grid_db = {gen_snr};
      const TrialRunner runner(e, doc.bank, doc.presets);
      std::string mode;
      write_iq_file(gen_out, runner.capture(kind, gen_snr, 0, gen_trial, &mode));
      std::printf("%s%s%s -> %s\n", to_string(kind).c_str(), mode.empty() ? "" : " ", mode.c_str(), gen_out.c_str());
      return 0;
    }

    if (*cal) {
      if (cal_trials) e.calibration_trials = *cal_trials;
      const ThresholdSet ts = calibrate_bank(doc.bank, e.pfa, e.calibration_trials, e.seed, e.threads);
      save_thresholds(cal_out, ts);
      if (!cal_psd_out.empty()) {
        save_psd(cal_psd_out, pre_estimate_noise_psd(e, doc.bank, 40, derive_seed(e.seed, {7})));
      }
      for (const auto& [label, th] : ts.branches) {
        std::printf("%-22s %-9s %.6g\n", label.c_str(), to_string(th.provenance).c_str(), th.gamma);
      }
      return 0;
    }

    if (*cls) {
      const IqBuffer buf = read_iq_file(cls_in);
      if (buf.rate() != e.capture_rate_hz) throw Error(cls_in + ": rate differs from the configured capture rate");
      if (buf.size() != doc.bank.capture_samples()) {
        e.observation_s = static_cast<double>(buf.size()) / buf.rate();
        sync_bank(doc);
      }
      prepare_bank(doc, cls_thresholds);
      const DetectorBank bank(doc.bank);
      const auto reports = bank.run(buf);
      const ClassDecision d = decide(reports);
      std::printf("%s\n", verdict_label(d, reports).c_str());
      std::printf("%-22s %-10s %14s %12s %10s\n", "branch", "detector", "metric", "threshold", "ratio");
      for (const auto& r : reports) {
        std::printf("%-22s %-10s %14.6g %12.6g %10.4f", r.branch.c_str(), to_string(r.detector).c_str(), r.dic_metric,
                    r.threshold, r.ratio);
        if (r.detector == DetectorId::WmParDs) std::printf("  par=%.4f ds=%.4f%s", r.par, r.ds, r.wm_flag ? " *" : "");
        std::printf("\n");
      }
      return 0;
    }

    if (*sweep) {
      if (sweep_trials) e.trials_per_point = *sweep_trials;
      if (!sweep_snr.empty()) e.snr_grid_db = sweep_snr;
      if (!sweep_classes.empty()) e.classes = parse_classes(sweep_classes);
      validate(e);
      prepare_bank(doc, sweep_thresholds);
      const MetricsSummary s = run_sweep(e, doc.bank, doc.presets);
      if (sweep_out.empty()) {
        write_sweep_csv(std::cout, s);
      } else {
        write_sweep_csv(sweep_out, s);
      }
      return 0;
    }

    if (*study) {
      DetectorStudyConfig sc;
      sc.preset = find_preset(doc.presets, study_preset);
      sc.observation_s = study_obs;
      sc.pfa = e.pfa;
      sc.nu_db = e.nu_db;
      sc.dic_enabled = e.dic_enabled;
      sc.snr_grid_db = study_snr;
      sc.pfa_trials = study_pfa_trials;
      sc.pmd_trials = study_pmd_trials;
      sc.calibration_trials = e.calibration_trials;
      sc.snr_inband = e.snr_inband;
      sc.seed = e.seed;
      sc.threads = e.threads;
      if (sc.preset.kind == ClassKind::LteDl || !sc.preset.pilot_period) {
        sc.detectors.erase(std::remove(sc.detectors.begin(), sc.detectors.end(), DetectorId::TdscMrc),
                           sc.detectors.end());
      }
      const auto rows = run_detector_study(sc, study_thresholds(sc));
      if (study_out.empty()) {
        write_study_csv(std::cout, sc, rows);
      } else {
        std::ofstream f(study_out, std::ios::trunc);
        if (!f) throw Error(study_out + ": cannot open for writing");
        write_study_csv(f, sc, rows);
      }
      return 0;
    }
  } catch (const Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
