#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "specsense/calib.hpp"
#include "specsense/classify.hpp"
#include "specsense/detect.hpp"
#include "specsense/impair.hpp"

using namespace specsense;

namespace {

std::vector<OfdmPreset> pick(std::initializer_list<const char*> names) {
  static const auto all = default_presets();
  std::vector<OfdmPreset> out;
  for (const char* n : names) out.push_back(find_preset(all, n));
  return out;
}

}  // namespace

TEST_SUITE("calib") {
  TEST_CASE("analytic TDSC-MRC threshold") {
    CHECK(analytic_threshold_tdsc(4, 2, 0.01) == doctest::Approx(std::sqrt(8.0 * 4.60517)).epsilon(1e-6));
    CHECK(analytic_threshold_tdsc(4, 2, 0.01) == doctest::Approx(6.0697).epsilon(1e-4));
    CHECK(analytic_threshold_tdsc(3, 1, std::exp(-1.0)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(analytic_threshold_tdsc(8, 6, 1.0 - 1e-12) < 1e-4);
    CHECK_THROWS_AS(analytic_threshold_tdsc(4, 3, 0.01), Error);
    CHECK_THROWS_AS(analytic_threshold_tdsc(4, 0, 0.01), Error);
    CHECK_THROWS_AS(analytic_threshold_tdsc(2, 1, 0.01), Error);
    CHECK_THROWS_AS(analytic_threshold_tdsc(4, 2, 0.0), Error);
    CHECK_THROWS_AS(analytic_threshold_tdsc(4, 2, 1.0), Error);
  }

  TEST_CASE("analytic CP-SUM threshold") {
    CHECK(analytic_threshold_cpsum(0.01) == doctest::Approx(2.14597).epsilon(1e-5));
    CHECK(analytic_threshold_cpsum(std::exp(-4.0)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(analytic_threshold_cpsum(0.5) == doctest::Approx(0.83255).epsilon(1e-5));
    CHECK_THROWS_AS(analytic_threshold_cpsum(0.0), Error);
    CHECK_THROWS_AS(analytic_threshold_cpsum(1.5), Error);
  }

  TEST_CASE("analytic thresholds decrease with pfa") {
    double prev_t = 1e300, prev_c = 1e300;
    for (double pfa : {1e-4, 1e-3, 0.01, 0.05, 0.1, 0.5, 0.9}) {
      const double t = analytic_threshold_tdsc(10, 8, pfa);
      const double c = analytic_threshold_cpsum(pfa);
      CHECK(t < prev_t);
      CHECK(c < prev_c);
      prev_t = t;
      prev_c = c;
    }
  }

  TEST_CASE("empirical threshold") {
    std::vector<double> seq(100);
    std::iota(seq.begin(), seq.end(), 1.0);
    std::shuffle(seq.begin(), seq.end(), std::mt19937_64(3));
    // 100 samples only satisfy the 100/pfa rule at pfa = 1.
    CHECK_THROWS_WITH_AS(empirical_threshold(seq, 0.01), "insufficient samples for empirical threshold: need 10000, got 100",
                         Error);
    std::vector<double> big(10000);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i % 100 + 1);
    CHECK(empirical_threshold(big, 0.01) == 100.0);
    CHECK(empirical_threshold(std::vector<double>(1000, 4.25), 0.1) == 4.25);
    CHECK(empirical_threshold(std::vector<double>(20000, 4.25), 0.01) == 4.25);

    std::mt19937_64 rng(12);
    std::exponential_distribution<double> e;
    std::vector<double> ex(100000);
    for (auto& v : ex) v = e(rng);
    CHECK(empirical_threshold(ex, 0.01) == doctest::Approx(-std::log(0.01)).epsilon(0.05));
    // Monotone in pfa on a fixed sample.
    CHECK(empirical_threshold(ex, 0.001) > empirical_threshold(ex, 0.01));
    CHECK(empirical_threshold(ex, 0.01) > empirical_threshold(ex, 0.1));
  }

  TEST_CASE("empirical order statistic index") {
    // 1000 values 1..1000 at pfa=0.1: floor(0.9*1000)+1 = 901.
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    std::reverse(v.begin(), v.end());
    CHECK(empirical_threshold(v, 0.1) == 901.0);
    // Non-integer (1-pfa) n: 1002 values at pfa=0.0999 -> floor(901.9)+1 = 902.
    std::vector<double> w(1002);
    std::iota(w.begin(), w.end(), 1.0);
    CHECK(empirical_threshold(w, 0.0999) == 902.0);
  }

  TEST_CASE("CP-SUM analytic vs empirical thresholds (1e5 trials)") {
    // Short buffers keep this in seconds; the CLT argument behind Eq. (11)
    // only needs N - n_dft >> 1.
    const std::size_t n = 4096, n_dft = 512, trials = 100000;
    std::vector<double> m(trials);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    std::vector<Complex> y(n);
    for (std::size_t t = 0; t < trials; ++t) {
      for (auto& v : y) v = {g(rng), g(rng)};
      const IqBuffer b(y, 1.0);
      m[t] = dic_normalize(cp_sum_metric(b, n_dft), estimate_power(b), 1);
    }
    for (double pfa : {0.1, 0.01}) {
      CAPTURE(pfa);
      CHECK(empirical_threshold(m, pfa) == doctest::Approx(analytic_threshold_cpsum(pfa)).epsilon(0.05));
    }
  }

  TEST_CASE("calibrate_bank delegates analytic branches") {
    BankConfig bank = default_bank(pick({"dvbt-2k-cp1/4", "wran-8mhz-cp1/16", "ecma392-8mhz-cp1/16"}), 12.5e6, 0.01);
    for (auto& b : bank.ofdm) b.threshold_mode = ThresholdMode::Analytic;
    const ThresholdSet ts = calibrate_bank(bank, 0.01, 0, 5);
    CHECK(ts.pfa_target == 0.01);
    CHECK(ts.master_seed == 5);
    CHECK(ts.capture_samples == 125000);
    CHECK(ts.capture_rate_hz == 12.5e6);
    const DetectorBank db(bank);
    const TdscParams tp = tdsc_params_for(bank.ofdm[0].preset, db.conditioned_length(0));
    CHECK(ts.at("dvbt-2k-cp1/4").gamma == analytic_threshold_tdsc(tp.n_periods, tp.j, 0.01));
    CHECK(ts.at("dvbt-2k-cp1/4").provenance == ThresholdProvenance::Analytic);
    CHECK(ts.at("wran-8mhz-cp1/16").gamma == analytic_threshold_cpsum(0.01));
    CHECK(ts.at("ecma392-8mhz-cp1/16").gamma == analytic_threshold_cpsum(0.01));
    CHECK(ts.at("ecma392-8mhz-cp1/16").trials == 0);
    CHECK_THROWS_WITH_AS((void)ts.at("nope"), "missing threshold for branch nope", Error);
  }

  TEST_CASE("calibrate_bank: trial count check and thread independence") {
    const BankConfig bank = default_bank(pick({"lte-5mhz-normal", "ecma392-8mhz-cp1/16"}), 12.5e6, 0.002);
    CHECK_THROWS_AS(calibrate_bank(bank, 0.01, 9999, 1), Error);
    const ThresholdSet a = calibrate_bank(bank, 0.1, 1000, 7, 1);
    const ThresholdSet b = calibrate_bank(bank, 0.1, 1000, 7, 3);
    CHECK(a.at("lte-5mhz-normal").gamma == b.at("lte-5mhz-normal").gamma);
    CHECK(a.at("lte-5mhz-normal").provenance == ThresholdProvenance::Empirical);
    CHECK(a.at("lte-5mhz-normal").trials == 1000);
    CHECK(a.at("ecma392-8mhz-cp1/16").provenance == ThresholdProvenance::Analytic);
    CHECK(calibrate_bank(bank, 0.1, 1000, 8, 1).at("lte-5mhz-normal").gamma != a.at("lte-5mhz-normal").gamma);
  }

  TEST_CASE("LTE CP-SW threshold reproducible within 3% across seeds (1e4 trials)") {
    const BankConfig bank = default_bank(pick({"lte-5mhz-normal"}), 12.5e6, 0.002);
    const double g1 = calibrate_bank(bank, 0.01, 10000, 1).at("lte-5mhz-normal").gamma;
    const double g2 = calibrate_bank(bank, 0.01, 10000, 2).at("lte-5mhz-normal").gamma;
    CHECK(g2 == doctest::Approx(g1).epsilon(0.03));
  }

  TEST_CASE("provenance strings") {
    CHECK(to_string(ThresholdProvenance::Analytic) == "analytic");
    CHECK(provenance_from_string("empirical") == ThresholdProvenance::Empirical);
    CHECK_THROWS_AS(provenance_from_string("guess"), Error);
  }
}
