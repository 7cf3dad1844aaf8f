#include "specsense/calib.hpp"

#include <algorithm>
#include <cmath>

#include "specsense/classify.hpp"
#include "specsense/impair.hpp"
#include "specsense/parallel.hpp"

namespace specsense {

namespace {

void check_pfa(double pfa) {
  if (!(pfa > 0.0 && pfa < 1.0)) throw Error("pfa must lie in (0, 1)");
}

constexpr std::uint64_t kCalibStream = 0xCA1B;

}  // namespace

std::string to_string(ThresholdProvenance p) { return p == ThresholdProvenance::Analytic ? "analytic" : "empirical"; }

ThresholdProvenance provenance_from_string(const std::string& text) {
  if (text == "analytic") return ThresholdProvenance::Analytic;
  if (text == "empirical") return ThresholdProvenance::Empirical;
  throw Error("unknown threshold provenance: " + text);
}

const BranchThreshold& ThresholdSet::at(const std::string& branch) const {
  auto it = branches.find(branch);
  if (it == branches.end()) throw Error("missing threshold for branch " + branch);
  return it->second;
}

double analytic_threshold_tdsc(std::size_t n_p, std::size_t j, double pfa) {
  check_pfa(pfa);
  if (n_p < 3 || j < 1 || j > n_p - 2) throw Error("TDSC-MRC needs 1 <= J <= Np - 2");
  double s = 0.0;
  for (std::size_t k = 1; k <= j; ++k) s += static_cast<double>((n_p - k) * (n_p - k - 1));
  return std::sqrt(-s * std::log(pfa));
}

double analytic_threshold_cpsum(double pfa) {
  check_pfa(pfa);
  return std::sqrt(-std::log(pfa));
}

double empirical_threshold(std::span<const double> metric_samples, double pfa) {
  check_pfa(pfa);
  const auto required = static_cast<std::size_t>(std::ceil(100.0 / pfa - 1e-9));
  if (metric_samples.size() < required) {
    throw Error("insufficient samples for empirical threshold: need " + std::to_string(required) + ", got " +
                std::to_string(metric_samples.size()));
  }
  std::vector<double> sorted(metric_samples.begin(), metric_samples.end());
  const auto n = static_cast<double>(sorted.size());
  // floor((1 - pfa) n) + 1: equals ceil((1 - pfa) n) unless that product is an
  // integer, where the next order statistic is taken (conservative side).
  auto idx = static_cast<std::size_t>(std::floor((1.0 - pfa) * n + 1e-9)) + 1;
  idx = std::clamp<std::size_t>(idx, 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx - 1), sorted.end());
  return sorted[idx - 1];
}

ThresholdSet calibrate_bank(const BankConfig& bank, double pfa, std::size_t trials, std::uint64_t seed,
                            unsigned threads) {
  check_pfa(pfa);
  const DetectorBank db(bank);
  ThresholdSet out;
  out.pfa_target = pfa;
  out.master_seed = seed;
  out.capture_samples = bank.capture_samples();
  out.capture_rate_hz = bank.capture_rate_hz;

  const bool any_empirical = std::any_of(bank.ofdm.begin(), bank.ofdm.end(), [](const OfdmBranch& b) {
    return b.threshold_mode == ThresholdMode::Empirical;
  });
  std::vector<std::vector<double>> metrics;
  if (any_empirical) {
    const auto required = static_cast<std::size_t>(std::ceil(100.0 / pfa - 1e-9));
    if (trials < required) {
      throw Error("calibration needs at least " + std::to_string(required) + " trials, got " +
                  std::to_string(trials));
    }
    metrics.resize(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      const IqBuffer noise = gen_awgn(out.capture_samples, bank.nominal_noise_power, bank.capture_rate_hz,
                                      derive_seed(seed, {kCalibStream, t}));
      metrics[t] = db.ofdm_metrics(noise);
    });
  }

  for (std::size_t i = 0; i < bank.ofdm.size(); ++i) {
    const auto& b = bank.ofdm[i];
    BranchThreshold th;
    if (b.threshold_mode == ThresholdMode::Empirical) {
      std::vector<double> column(trials);
      for (std::size_t t = 0; t < trials; ++t) column[t] = metrics[t][i];
      th.gamma = empirical_threshold(column, pfa);
      th.provenance = ThresholdProvenance::Empirical;
      th.trials = trials;
    } else if (b.detector == DetectorId::TdscMrc) {
      const TdscParams tp = tdsc_params_for(b.preset, db.conditioned_length(i));
      th.gamma = analytic_threshold_tdsc(tp.n_periods, tp.j, pfa);
    } else if (b.detector == DetectorId::CpSum) {
      th.gamma = analytic_threshold_cpsum(pfa);
    } else {
      throw Error("branch " + b.label + ": no analytic threshold for " + to_string(b.detector));
    }
    out.branches[b.label] = th;
  }
  return out;
}

}  // namespace specsense
