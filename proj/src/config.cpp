#include "specsense/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace specsense {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw Error(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(where + "." + key + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(path + ": cannot open for writing");
  f << text;
  if (!f) throw Error(path + ": write failed");
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(what + ": " + e.what());
  }
}

OfdmPreset preset_from_json(const json& j) {
  const std::string where = "presets[" + j.value("name", std::string("?")) + "]";
  check_keys(j, where,
             {"name", "class", "n_dft", "n_cp", "n_cp_first", "symbols_per_frame", "pilot_period", "n_used",
              "dc_null", "native_rate_hz", "duty_cycle", "mean_burst_symbols"});
  OfdmPreset p;
  std::string cls = "dvbt";
  read(j, "name", p.name, where);
  read(j, "class", cls, where);
  p.kind = class_kind_from_string(cls);
  read(j, "n_dft", p.n_dft, where);
  read(j, "n_cp", p.n_cp, where);
  if (j.contains("n_cp_first")) p.n_cp_first = j.at("n_cp_first").get<std::size_t>();
  read(j, "symbols_per_frame", p.symbols_per_frame, where);
  if (j.contains("pilot_period")) p.pilot_period = j.at("pilot_period").get<std::size_t>();
  read(j, "n_used", p.n_used, where);
  read(j, "dc_null", p.dc_null, where);
  read(j, "native_rate_hz", p.native_rate_hz, where);
  read(j, "duty_cycle", p.duty_cycle, where);
  read(j, "mean_burst_symbols", p.mean_burst_symbols, where);
  return finalize_preset(p);
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

void experiment_from_json(const json& j, ExperimentConfig& e, const std::string& base_dir) {
  const std::string where = "experiment";
  check_keys(j, where,
             {"classes", "mode_weights", "snr_grid_db", "trials_per_point", "observation_s", "capture_rate_hz", "pfa",
              "nu_db", "seed", "method", "dic", "threads", "snr_inband", "wm_bandwidth_hz", "wm", "spur_offsets_hz",
              "spur_power_db", "floor_tilt_db", "floor_shape_bins", "multipath", "replay_noise_path",
              "calibration_trials"});
  if (j.contains("classes")) {
    e.classes.clear();
    for (const auto& c : j.at("classes")) e.classes.push_back(class_kind_from_string(c.get<std::string>()));
  }
  read(j, "mode_weights", e.mode_weights, where);
  read(j, "snr_grid_db", e.snr_grid_db, where);
  read(j, "trials_per_point", e.trials_per_point, where);
  read(j, "observation_s", e.observation_s, where);
  read(j, "capture_rate_hz", e.capture_rate_hz, where);
  read(j, "pfa", e.pfa, where);
  read(j, "nu_db", e.nu_db, where);
  read(j, "seed", e.seed, where);
  if (j.contains("method")) e.method = method_from_string(j.at("method").get<std::string>());
  read(j, "dic", e.dic_enabled, where);
  read(j, "threads", e.threads, where);
  read(j, "snr_inband", e.snr_inband, where);
  read(j, "wm_bandwidth_hz", e.wm_bandwidth_hz, where);
  if (j.contains("wm")) {
    const json& w = j.at("wm");
    check_keys(w, "experiment.wm", {"carrier_offset_hz", "audio_tone_hz", "fm_deviation_hz"});
    read(w, "carrier_offset_hz", e.wm.carrier_offset_hz, "experiment.wm");
    read(w, "audio_tone_hz", e.wm.audio_tone_hz, "experiment.wm");
    read(w, "fm_deviation_hz", e.wm.fm_deviation_hz, "experiment.wm");
  }
  read(j, "spur_offsets_hz", e.spur_offsets_hz, where);
  read(j, "spur_power_db", e.spur_power_db, where);
  read(j, "floor_tilt_db", e.floor_tilt_db, where);
  read(j, "floor_shape_bins", e.floor_shape_bins, where);
  if (j.contains("multipath")) {
    e.multipath.clear();
    for (const auto& t : j.at("multipath")) {
      check_keys(t, "experiment.multipath", {"gain_re", "gain_im", "delay"});
      MultipathTap tap;
      tap.gain = Complex(t.value("gain_re", 1.0), t.value("gain_im", 0.0));
      tap.delay = t.value("delay", std::size_t{0});
      e.multipath.push_back(tap);
    }
  }
  if (j.contains("replay_noise_path")) {
    e.replay_noise_path = resolve(base_dir, j.at("replay_noise_path").get<std::string>());
  }
  read(j, "calibration_trials", e.calibration_trials, where);
}

void bank_from_json(const json& j, ConfigDocument& doc, const std::string& base_dir) {
  const std::string where = "bank";
  check_keys(j, where,
             {"branches", "wm", "mitigation", "nominal_noise_power", "max_denominator", "thresholds_file",
              "noise_psd_file", "wm_equalize"});
  BankConfig& b = doc.bank;
  if (j.contains("branches")) {
    b.ofdm.clear();
    for (const auto& br : j.at("branches")) {
      check_keys(br, "bank.branches", {"label", "preset", "detector", "threshold_mode"});
      OfdmBranch ob;
      ob.preset = find_preset(doc.presets, br.at("preset").get<std::string>());
      ob.label = br.value("label", ob.preset.name);
      ob.detector = br.contains("detector") ? detector_id_from_string(br.at("detector").get<std::string>())
                                            : table1_detector(ob.preset.kind);
      ob.alpha = dic_alpha(ob.detector);
      ob.threshold_mode = ob.detector == DetectorId::CpSum ? ThresholdMode::Analytic : ThresholdMode::Empirical;
      if (br.contains("threshold_mode")) {
        ob.threshold_mode = threshold_mode_from_string(br.at("threshold_mode").get<std::string>());
      }
      b.ofdm.push_back(ob);
    }
  }
  if (j.contains("wm")) {
    const json& w = j.at("wm");
    const std::string ww = "bank.wm";
    check_keys(w, ww,
               {"welch_m", "welch_d", "phi", "psi", "rho", "spur_offsets_hz", "exclusion_halfwidth", "excluded_bins"});
    read(w, "welch_m", b.wm.welch.m, ww);
    read(w, "welch_d", b.wm.welch.d, ww);
    read(w, "phi", b.wm.thresholds.phi, ww);
    read(w, "psi", b.wm.thresholds.psi, ww);
    read(w, "rho", b.wm.thresholds.rho, ww);
    read(w, "spur_offsets_hz", b.wm.spur_offsets_hz, ww);
    read(w, "exclusion_halfwidth", b.wm.exclusion_halfwidth, ww);
    read(w, "excluded_bins", b.wm.excluded_bins, ww);
  }
  if (j.contains("mitigation") && !j.at("mitigation").is_null()) {
    const json& m = j.at("mitigation");
    check_keys(m, "bank.mitigation", {"stop_centers_hz", "stop_width_hz", "atten_db"});
    Mitigation mit;
    read(m, "stop_centers_hz", mit.stop_centers_hz, "bank.mitigation");
    read(m, "stop_width_hz", mit.stop_width_hz, "bank.mitigation");
    read(m, "atten_db", mit.atten_db, "bank.mitigation");
    b.mitigation = mit;
  }
  read(j, "nominal_noise_power", b.nominal_noise_power, where);
  read(j, "max_denominator", b.max_denominator, where);
  read(j, "wm_equalize", doc.wm_equalize, where);
  if (j.contains("thresholds_file")) doc.thresholds_path = resolve(base_dir, j.at("thresholds_file").get<std::string>());
  if (j.contains("noise_psd_file")) doc.noise_psd_path = resolve(base_dir, j.at("noise_psd_file").get<std::string>());
}

}  // namespace

void sync_bank(ConfigDocument& doc) {
  doc.bank.capture_rate_hz = doc.experiment.capture_rate_hz;
  doc.bank.observation_s = doc.experiment.observation_s;
  doc.bank.dic_enabled = doc.experiment.dic_enabled;
}

ConfigDocument default_config() {
  ConfigDocument doc;
  doc.bank = default_bank(doc.presets, doc.experiment.capture_rate_hz, doc.experiment.observation_s);
  sync_bank(doc);
  return doc;
}

ConfigDocument parse_config(const std::string& json_text, const std::string& base_dir) {
  const json j = parse_json(json_text, "config");
  check_keys(j, "config", {"experiment", "bank", "presets"});
  ConfigDocument doc = default_config();
  if (j.contains("presets")) {
    for (const auto& pj : j.at("presets")) {
      OfdmPreset p = preset_from_json(pj);
      auto it = std::find_if(doc.presets.begin(), doc.presets.end(),
                             [&](const OfdmPreset& q) { return q.name == p.name; });
      if (it != doc.presets.end()) {
        *it = p;
      } else {
        doc.presets.push_back(p);
      }
    }
    doc.bank = default_bank(doc.presets);
  }
  if (j.contains("experiment")) experiment_from_json(j.at("experiment"), doc.experiment, base_dir);
  if (j.contains("bank")) bank_from_json(j.at("bank"), doc, base_dir);
  sync_bank(doc);
  validate(doc.experiment);
  validate(doc.bank);
  return doc;
}

ConfigDocument load_config(const std::string& path) {
  const std::string dir = std::filesystem::path(path).parent_path().string();
  try {
    return parse_config(read_file(path), dir.empty() ? "." : dir);
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw Error(path + ": " + msg);
  }
}

std::string dump_thresholds(const ThresholdSet& ts) {
  json j;
  j["format"] = "specsense-thresholds";
  j["version"] = 1;
  j["pfa_target"] = ts.pfa_target;
  j["master_seed"] = ts.master_seed;
  j["capture_samples"] = ts.capture_samples;
  j["capture_rate_hz"] = ts.capture_rate_hz;
  json br = json::object();
  for (const auto& [label, th] : ts.branches) {
    json e;
    e["gamma"] = th.gamma;
    e["provenance"] = to_string(th.provenance);
    if (th.provenance == ThresholdProvenance::Empirical) e["trials"] = th.trials;
    br[label] = e;
  }
  j["branches"] = br;
  return j.dump(2) + "\n";
}

ThresholdSet parse_thresholds(const std::string& json_text) {
  const json j = parse_json(json_text, "thresholds");
  check_keys(j, "thresholds",
             {"format", "version", "pfa_target", "master_seed", "capture_samples", "capture_rate_hz", "branches"});
  if (j.value("format", std::string()) != "specsense-thresholds") throw Error("thresholds: wrong format tag");
  if (j.value("version", 0) != 1) throw Error("thresholds: unsupported version");
  ThresholdSet ts;
  read(j, "pfa_target", ts.pfa_target, "thresholds");
  read(j, "master_seed", ts.master_seed, "thresholds");
  read(j, "capture_samples", ts.capture_samples, "thresholds");
  read(j, "capture_rate_hz", ts.capture_rate_hz, "thresholds");
  if (!(ts.pfa_target > 0.0 && ts.pfa_target < 1.0)) throw Error("thresholds: pfa_target outside (0, 1)");
  for (auto it = j.at("branches").begin(); it != j.at("branches").end(); ++it) {
    check_keys(it.value(), "thresholds." + it.key(), {"gamma", "provenance", "trials"});
    BranchThreshold th;
    th.gamma = it.value().at("gamma").get<double>();
    th.provenance = provenance_from_string(it.value().at("provenance").get<std::string>());
    th.trials = it.value().value("trials", std::size_t{0});
    if (!(th.gamma > 0.0)) throw Error("thresholds." + it.key() + ": gamma must be positive");
    ts.branches[it.key()] = th;
  }
  return ts;
}

void save_thresholds(const std::string& path, const ThresholdSet& ts) { write_file(path, dump_thresholds(ts)); }

ThresholdSet load_thresholds(const std::string& path) {
  try {
    return parse_thresholds(read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string dump_psd(const Psd& psd) {
  json j;
  j["format"] = "specsense-noise-psd";
  j["version"] = 1;
  j["bins"] = psd.bins;
  j["excluded_bins"] = psd.excluded_bins;
  return j.dump(2) + "\n";
}

Psd parse_psd(const std::string& json_text) {
  const json j = parse_json(json_text, "noise PSD");
  check_keys(j, "noise PSD", {"format", "version", "bins", "excluded_bins"});
  if (j.value("format", std::string()) != "specsense-noise-psd") throw Error("noise PSD: wrong format tag");
  Psd p;
  p.bins = j.at("bins").get<std::vector<double>>();
  if (j.contains("excluded_bins")) p.excluded_bins = j.at("excluded_bins").get<std::set<std::size_t>>();
  return p;
}

void save_psd(const std::string& path, const Psd& psd) { write_file(path, dump_psd(psd)); }

Psd load_psd(const std::string& path) {
  try {
    return parse_psd(read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace specsense
