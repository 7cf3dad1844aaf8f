#pragma once

#include <string>

#include "specsense/core.hpp"

namespace specsense {

/// Little-endian "IQF1" file: u32 version (1), f64 rate, u64 count, then
/// count interleaved f32 I/Q pairs. Samples are narrowed to float.
void write_iq_file(const std::string& path, const IqBuffer& buf);

/// Reads and validates an IQ file. An empty payload yields an empty buffer.
IqBuffer read_iq_file(const std::string& path);

}  // namespace specsense
