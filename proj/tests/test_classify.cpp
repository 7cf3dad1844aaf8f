#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specsense/calib.hpp"
#include "specsense/classify.hpp"
#include "specsense/harness.hpp"
#include "specsense/impair.hpp"

using namespace specsense;

namespace {

const std::vector<OfdmPreset>& presets() {
  static const auto all = default_presets();
  return all;
}

std::vector<OfdmPreset> pick(std::initializer_list<const char*> names) {
  std::vector<OfdmPreset> out;
  for (const char* n : names) out.push_back(find_preset(presets(), n));
  return out;
}

DetectorReport ofdm(const std::string& label, double ratio) {
  return make_report(DetectorId::CpSum, label, ratio, ratio, 1.0);
}

DetectorReport wm(bool flag) {
  DetectorReport r = make_report(DetectorId::WmParDs, "wm", 1.0, 1.0, 2.0);
  r.wm_flag = flag;
  return r;
}

// Six-branch bank at 5 ms, thresholds for pfa = 0.1 (1000 calibration trials).
const BankConfig& calibrated_bank() {
  static const BankConfig bank = [] {
    BankConfig b = default_bank(pick({"dvbt-2k-cp1/4", "dvbt-2k-cp1/16", "lte-5mhz-normal", "lte-5mhz-extended",
                                      "wran-8mhz-cp1/16", "ecma392-8mhz-cp1/16"}),
                                12.5e6, 0.005);
    b.thresholds = calibrate_bank(b, 0.1, 1000, 17);
    return b;
  }();
  return bank;
}

ExperimentConfig experiment_for(const BankConfig& bank) {
  ExperimentConfig e;
  e.observation_s = bank.observation_s;
  e.capture_rate_hz = bank.capture_rate_hz;
  e.pfa = bank.thresholds.pfa_target;
  e.seed = 23;
  // Draw only the modes the bank knows.
  for (const auto& p : presets()) {
    const bool in_bank = std::any_of(bank.ofdm.begin(), bank.ofdm.end(), [&](const auto& b) { return b.label == p.name; });
    if (!in_bank) e.mode_weights[p.name] = 0.0;
  }
  return e;
}

IqBuffer tone(std::size_t n, double f, double rate) {
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::polar(1.0, 2.0 * std::numbers::pi * f / rate * static_cast<double>(i));
  return IqBuffer(std::move(v), rate);
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("condition: identity, exact ratio, anti-alias") {
    OfdmPreset same = find_preset(presets(), "ecma392-8mhz-cp1/16");
    const IqBuffer w = gen_awgn(5000, 1.0, same.native_rate_hz, 1);
    CHECK(condition(w, same, std::nullopt) == w);

    const dsp::Resampler lte(12.5e6, 7.68e6);
    CHECK(lte.ratio().p == 384);
    CHECK(lte.ratio().q == 625);
    CHECK(12.5e6 * static_cast<double>(lte.ratio().p) / static_cast<double>(lte.ratio().q) == 7.68e6);

    // 5 MHz lies outside the LTE branch's 3.84 MHz Nyquist band.
    const OfdmPreset& p = find_preset(presets(), "lte-5mhz-normal");
    const IqBuffer t = tone(125000, 5.0e6, 12.5e6);
    const IqBuffer y = condition(t, p, std::nullopt);
    CHECK(y.rate() == 7.68e6);
    CHECK(y.size() == 125000 * 384 / 625);
    const double out_power = estimate_power(y.samples().subspan(2000, y.size() - 4000));
    CHECK(10.0 * std::log10(1.0 / out_power) >= 40.0);

    CHECK_THROWS_AS(condition(t, p, std::nullopt, 100), Error);
    CHECK_THROWS_AS(condition(gen_awgn(100, 1.0, 5.0e6, 1), p, std::nullopt), Error);

    // Band-stop first: a +2.5 MHz spur is gone from a 9.14 MS/s branch.
    const OfdmPreset& wr = find_preset(presets(), "wran-8mhz-cp1/16");
    const IqBuffer s = tone(125000, 2.5e6, 12.5e6);
    const IqBuffer ys = condition(s, wr, Mitigation{{2.5e6}, 50e3, 40.0});
    CHECK(10.0 * std::log10(1.0 / estimate_power(ys.samples().subspan(3000, ys.size() - 6000))) >= 40.0);
  }

  TEST_CASE("bank validation") {
    const BankConfig good = default_bank(pick({"dvbt-2k-cp1/4", "lte-5mhz-normal", "ecma392-8mhz-cp1/16"}));
    CHECK_NOTHROW(validate(good));
    CHECK(good.capture_samples() == 250000);
    CHECK(good.ofdm[0].detector == DetectorId::TdscMrc);
    CHECK(good.ofdm[0].alpha == 2);
    CHECK(good.ofdm[0].threshold_mode == ThresholdMode::Empirical);
    CHECK(good.ofdm[1].detector == DetectorId::CpSw);
    CHECK(good.ofdm[2].detector == DetectorId::CpSum);
    CHECK(good.ofdm[2].threshold_mode == ThresholdMode::Analytic);

    BankConfig bad = good;
    bad.ofdm[0].detector = DetectorId::CpSum;
    bad.ofdm[0].alpha = 1;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = good;
    bad.ofdm[2].alpha = 2;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = good;
    bad.ofdm[1].label = bad.ofdm[0].label;
    CHECK_THROWS_WITH_AS(validate(bad), "duplicate branch label: dvbt-2k-cp1/4", Error);
    bad = good;
    bad.ofdm[0].label = "vacant";
    CHECK_THROWS_AS(validate(bad), Error);
    bad = good;
    bad.ofdm[1].threshold_mode = ThresholdMode::Analytic;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = good;
    bad.capture_rate_hz = 8.0e6;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = good;
    bad.ofdm.clear();
    CHECK_THROWS_AS(validate(bad), Error);
    bad = good;
    bad.wm.welch.m = 100;
    CHECK_THROWS_AS(validate(bad), Error);

    CHECK(table1_detector(ClassKind::Wran) == DetectorId::CpSum);
    CHECK(table1_detector(ClassKind::WirelessMic) == DetectorId::WmParDs);
    CHECK_THROWS_AS(table1_detector(ClassKind::NoiseOnly), Error);
  }

  TEST_CASE("decide: Eq. (16) examples") {
    CHECK(decide({ofdm("a", 0.5), ofdm("b", 0.9), ofdm("c", 0.3), wm(false)}).kind == ClassDecision::Kind::Vacant);
    const auto r = std::vector<DetectorReport>{ofdm("a", 1.2), ofdm("b", 2.0), ofdm("c", 0.8), wm(false)};
    CHECK(decide(r) == ClassDecision{ClassDecision::Kind::Ofdm, 1});
    CHECK(verdict_label(decide(r), r) == "b");
    CHECK(decide({ofdm("a", 1.5), ofdm("b", 3.0), wm(true)}).kind == ClassDecision::Kind::Wm);
    // Boundary: a ratio of exactly 1 detects.
    CHECK(decide({ofdm("a", 1.0), wm(false)}).kind == ClassDecision::Kind::Ofdm);
    // The WM report may come anywhere.
    CHECK(decide({wm(false), ofdm("a", 0.2), ofdm("b", 1.1)}) == ClassDecision{ClassDecision::Kind::Ofdm, 2});

    CHECK_THROWS_WITH_AS(decide({ofdm("a", 1.0)}), "missing WM report", Error);
    CHECK_THROWS_AS(decide({ofdm("a", 1.0), wm(false), wm(true)}), Error);
    CHECK_THROWS_AS(decide({wm(false)}), Error);
  }

  TEST_CASE("decide: ties, permutation invariance, totality") {
    // Exact tie: first declared branch wins.
    const auto tie = std::vector<DetectorReport>{ofdm("a", 0.4), ofdm("b", 1.7), ofdm("c", 1.7), wm(false)};
    CHECK(verdict_label(decide(tie), tie) == "b");

    std::vector<DetectorReport> r{ofdm("a", 0.3), ofdm("b", 1.9), ofdm("c", 1.2), ofdm("d", 0.99), wm(false)};
    const std::string label = verdict_label(decide(r), r);
    std::sort(r.begin(), r.begin() + 4, [](const auto& x, const auto& y) { return x.branch < y.branch; });
    do {
      REQUIRE(verdict_label(decide(r), r) == label);
    } while (std::next_permutation(r.begin(), r.begin() + 4,
                                   [](const auto& x, const auto& y) { return x.branch < y.branch; }));

    for (double a : {0.0, 0.5, 1.0, 3.0}) {
      for (double b : {0.0, 0.99, 1.0, 2.0}) {
        for (bool f : {false, true}) {
          const auto d = decide({ofdm("a", a), ofdm("b", b), wm(f)});
          const bool expect_wm = f;
          const bool expect_ofdm = !f && std::max(a, b) >= 1.0;
          REQUIRE((d.kind == ClassDecision::Kind::Wm) == expect_wm);
          REQUIRE((d.kind == ClassDecision::Kind::Ofdm) == expect_ofdm);
          REQUIRE((d.kind == ClassDecision::Kind::Vacant) == (!expect_wm && !expect_ofdm));
        }
      }
    }
  }

  TEST_CASE("verdict labels and classes") {
    const BankConfig cfg = default_bank(pick({"dvbt-2k-cp1/4", "lte-5mhz-normal"}));
    const std::vector<DetectorReport> r{ofdm("dvbt-2k-cp1/4", 0.1), ofdm("lte-5mhz-normal", 4.0), wm(false)};
    const ClassDecision d = decide(r);
    CHECK(verdict_label(d, r) == "lte-5mhz-normal");
    CHECK(verdict_class(d, r, cfg) == SignalClass{ClassKind::LteDl, "lte-5mhz-normal"});
    CHECK(verdict_label({ClassDecision::Kind::Wm, 0}, r) == "wm");
    CHECK(verdict_class({ClassDecision::Kind::Wm, 0}, r, cfg) == SignalClass{ClassKind::WirelessMic, ""});
    CHECK(verdict_label({ClassDecision::Kind::Vacant, 0}, r) == "vacant");
    CHECK(verdict_class({ClassDecision::Kind::Vacant, 0}, r, cfg) == SignalClass{ClassKind::NoiseOnly, ""});
    const std::vector<DetectorReport> stray{ofdm("elsewhere", 2.0), wm(false)};
    CHECK_THROWS_AS(verdict_class(decide(stray), stray, cfg), Error);
  }

  TEST_CASE("run_bank errors") {
    BankConfig cfg = default_bank(pick({"ecma392-8mhz-cp1/16"}), 12.5e6, 0.002);
    cfg.thresholds = calibrate_bank(cfg, 0.01, 0, 1);
    const std::size_t n = cfg.capture_samples();
    CHECK_THROWS_WITH_AS(run_bank(IqBuffer(std::vector<Complex>(n), 12.5e6), cfg), "zero-power input", Error);
    CHECK_THROWS_AS(run_bank(gen_awgn(n - 1, 1.0, 12.5e6, 1), cfg), Error);
    CHECK_THROWS_AS(run_bank(gen_awgn(n, 1.0, 10.0e6, 1), cfg), Error);
    CHECK_NOTHROW(run_bank(gen_awgn(n, 1.0, 12.5e6, 1), cfg));
    BankConfig missing = cfg;
    missing.thresholds.branches.clear();
    CHECK_THROWS_WITH_AS(run_bank(gen_awgn(n, 1.0, 12.5e6, 1), missing), "missing threshold for branch ecma392-8mhz-cp1/16",
                         Error);
  }

  TEST_CASE("reports: ratios, order independence, WM on the raw buffer") {
    const BankConfig& cfg = calibrated_bank();
    const DetectorBank bank(cfg);
    const IqBuffer y = gen_awgn(cfg.capture_samples(), 1.0, cfg.capture_rate_hz, 5);
    const auto reports = bank.run(y);
    REQUIRE(reports.size() == 7);
    CHECK(reports.back().detector == DetectorId::WmParDs);
    for (const auto& r : reports) CHECK(r.ratio == r.dic_metric / r.threshold);

    BankConfig reversed = cfg;
    std::reverse(reversed.ofdm.begin(), reversed.ofdm.end());
    const auto rev = DetectorBank(reversed).run(y);
    for (const auto& r : reports) {
      const auto it = std::find_if(rev.begin(), rev.end(), [&](const auto& x) { return x.branch == r.branch; });
      REQUIRE(it != rev.end());
      CHECK(it->ratio == r.ratio);
      CHECK(it->raw_metric == r.raw_metric);
    }
    const Psd psd = estimate_psd_welch(y, cfg.wm.welch);
    CHECK(reports.back().par == psd_par(psd));
    CHECK(reports.back().ds == psd_ds(psd, cfg.wm.thresholds.rho));
  }

  TEST_CASE("noise-only: all ratios below 1 at about (1-pfa)^branches") {
    const BankConfig& cfg = calibrated_bank();
    const DetectorBank bank(cfg);
    const std::size_t trials = 1500;
    std::size_t all_below = 0, vacant = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const IqBuffer y = gen_awgn(cfg.capture_samples(), 1.0, cfg.capture_rate_hz, derive_seed(404, {t}));
      const auto r = bank.run(y);
      all_below += std::all_of(r.begin(), r.end() - 1, [](const auto& x) { return x.ratio < 1.0; });
      vacant += decide(r).kind == ClassDecision::Kind::Vacant;
    }
    const double expected = std::pow(1.0 - cfg.thresholds.pfa_target, 6.0);
    const double measured = static_cast<double>(all_below) / trials;
    MESSAGE("all-below rate " << measured << " vs (1-pfa)^6 = " << expected);
    const double sigma = std::sqrt(expected * (1.0 - expected) / trials);
    CHECK(std::abs(measured - expected) <= 4.0 * sigma + 0.02);
    // Union bound on the false-occupancy rate (WM branch included).
    CHECK(1.0 - static_cast<double>(vacant) / trials <= 6.0 * cfg.thresholds.pfa_target + 0.01);
  }

  TEST_CASE("high-SNR signals win on their own branch") {
    const BankConfig& cfg = calibrated_bank();
    const TrialRunner runner(experiment_for(cfg), cfg, presets());
    struct Case {
      ClassKind kind;
      DetectorId detector;
    };
    for (const Case c : {Case{ClassKind::DvbT, DetectorId::TdscMrc}, Case{ClassKind::LteDl, DetectorId::CpSw},
                         Case{ClassKind::Ecma, DetectorId::CpSum}}) {
      for (std::size_t t = 0; t < 4; ++t) {
        std::string mode;
        const IqBuffer y = runner.capture(c.kind, 10.0, 0, t, &mode);
        CAPTURE(mode);
        const auto r = runner.bank().run(y);
        const ClassDecision d = decide(r);
        REQUIRE(d.kind == ClassDecision::Kind::Ofdm);
        CHECK(r[d.branch].detector == c.detector);
        CHECK(r[d.branch].ratio >= 1.0);
        CHECK(verdict_class(d, r, cfg).kind == c.kind);
        // Unique maximum.
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
          if (i != d.branch) CHECK(r[i].ratio < r[d.branch].ratio);
        }
      }
    }
  }

  TEST_CASE("end-to-end scale invariance") {
    const BankConfig& cfg = calibrated_bank();
    const TrialRunner runner(experiment_for(cfg), cfg, presets());
    for (ClassKind k : {ClassKind::DvbT, ClassKind::LteDl, ClassKind::Wran, ClassKind::WirelessMic, ClassKind::NoiseOnly}) {
      CAPTURE(to_string(k));
      const IqBuffer y = runner.capture(k, -3.0, 0, 1);
      const auto base = runner.bank().run(y);
      const ClassDecision d0 = decide(base);
      for (double c : {1.0e-3, 1.0e3}) {
        const auto r = runner.bank().run(scale(y, c));
        CHECK(decide(r) == d0);
        for (std::size_t i = 0; i < r.size(); ++i) {
          CHECK(r[i].ratio == doctest::Approx(base[i].ratio).epsilon(1e-9));
          CHECK(r[i].wm_flag == base[i].wm_flag);
        }
      }
    }
  }

  TEST_CASE("threshold mode strings") {
    CHECK(to_string(ThresholdMode::Empirical) == "empirical");
    CHECK(threshold_mode_from_string("analytic") == ThresholdMode::Analytic);
    CHECK_THROWS_AS(threshold_mode_from_string("magic"), Error);
  }
}
