#include "specsense/core.hpp"

#include <cmath>

namespace specsense {

IqBuffer::IqBuffer(std::vector<Complex> samples, double sample_rate_hz)
    : samples_(std::move(samples)), rate_(sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw Error("sample rate must be positive");
  }
}

std::string to_string(ClassKind kind) {
  switch (kind) {
    case ClassKind::DvbT: return "dvbt";
    case ClassKind::LteDl: return "lte";
    case ClassKind::Wran: return "wran";
    case ClassKind::Ecma: return "ecma392";
    case ClassKind::WirelessMic: return "wm";
    case ClassKind::NoiseOnly: return "noise";
  }
  return "unknown";
}

ClassKind class_kind_from_string(const std::string& text) {
  for (auto k : {ClassKind::DvbT, ClassKind::LteDl, ClassKind::Wran, ClassKind::Ecma, ClassKind::WirelessMic,
                 ClassKind::NoiseOnly}) {
    if (to_string(k) == text) return k;
  }
  throw Error("unknown signal class '" + text + "'");
}

std::string to_string(DetectorId id) {
  switch (id) {
    case DetectorId::TdscMrc: return "tdsc-mrc";
    case DetectorId::CpSw: return "cp-sw";
    case DetectorId::CpSum: return "cp-sum";
    case DetectorId::WmParDs: return "wm-par-ds";
  }
  return "unknown";
}

DetectorId detector_id_from_string(const std::string& text) {
  for (auto d : {DetectorId::TdscMrc, DetectorId::CpSw, DetectorId::CpSum, DetectorId::WmParDs}) {
    if (to_string(d) == text) return d;
  }
  throw Error("unknown detector '" + text + "'");
}

int dic_alpha(DetectorId id) {
  switch (id) {
    case DetectorId::TdscMrc: return 2;
    case DetectorId::CpSw:
    case DetectorId::CpSum: return 1;
    case DetectorId::WmParDs: return 0;
  }
  return 1;
}

DetectorReport make_report(DetectorId id, std::string branch, double raw, double dic, double threshold) {
  if (!(threshold > 0.0)) throw Error("threshold must be positive for branch '" + branch + "'");
  DetectorReport r;
  r.detector = id;
  r.branch = std::move(branch);
  r.raw_metric = raw;
  r.dic_metric = dic;
  r.threshold = threshold;
  r.ratio = dic / threshold;
  return r;
}

double estimate_power(std::span<const Complex> samples) {
  if (samples.empty()) throw Error("empty input");
  const double total = blocked_sum<double>(samples.size(), [&](std::size_t i) { return std::norm(samples[i]); });
  return total / static_cast<double>(samples.size());
}

double estimate_power(const IqBuffer& buf) { return estimate_power(buf.samples()); }

IqBuffer scale(const IqBuffer& buf, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error("scale factor must be positive");
  std::vector<Complex> out(buf.samples().begin(), buf.samples().end());
  for (auto& s : out) s *= c;
  return IqBuffer(std::move(out), buf.rate());
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = splitmix64(master);
  for (auto i : indices) h = splitmix64(h ^ splitmix64(i + 0x632BE59BD9B4E019ULL));
  return h;
}

}  // namespace specsense
