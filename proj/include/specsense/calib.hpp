#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "specsense/core.hpp"

namespace specsense {

enum class ThresholdProvenance { Analytic, Empirical };

std::string to_string(ThresholdProvenance p);
ThresholdProvenance provenance_from_string(const std::string& text);

/// Dimensionless (DIC-domain) threshold of one detector branch.
struct BranchThreshold {
  double gamma = 1.0;
  ThresholdProvenance provenance = ThresholdProvenance::Analytic;
  std::size_t trials = 0;  // Empirical only
};

struct ThresholdSet {
  std::map<std::string, BranchThreshold> branches;
  double pfa_target = 0.01;
  std::uint64_t master_seed = 0;
  std::size_t capture_samples = 0;  // buffer length the thresholds belong to; 0 = any
  double capture_rate_hz = 0.0;

  [[nodiscard]] const BranchThreshold& at(const std::string& branch) const;
};

/// sqrt(-sum_{k=1}^{J} (Np-k)(Np-k-1) ln pfa); the sigma_w^4 factor cancels
/// after DIC normalization.
double analytic_threshold_tdsc(std::size_t n_p, std::size_t j, double pfa);

/// sqrt(-ln pfa).
double analytic_threshold_cpsum(double pfa);

/// Order statistic at 1-based index floor((1 - pfa) n) + 1 of the ascending
/// sort (clamped to n). Needs at least 100/pfa samples.
double empirical_threshold(std::span<const double> metric_samples, double pfa);

struct BankConfig;

/// Thresholds for every OFDM branch of a bank. Analytic branches use the
/// closed forms; empirical branches (always CP-SW) take the (1-pfa) quantile
/// of `trials` noise-only runs through the bank's conditioning and DIC path.
/// Trial t draws its noise from derive_seed(seed, {t}), so the result does
/// not depend on `threads`.
ThresholdSet calibrate_bank(const BankConfig& bank, double pfa, std::size_t trials, std::uint64_t seed,
                            unsigned threads = 1);

}  // namespace specsense
