#include "specsense/iqfile.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace specsense {

namespace {

constexpr std::array<char, 4> kMagic{'I', 'Q', 'F', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

static_assert(std::endian::native == std::endian::little, "IQ file I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
  T v;
  std::memcpy(&v, in.data() + offset, sizeof(T));
  return v;
}

}  // namespace

void write_iq_file(const std::string& path, const IqBuffer& buf) {
  std::string out;
  out.reserve(kHeaderBytes + 8 * buf.size());
  out.append(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<double>(out, buf.rate());
  put<std::uint64_t>(out, buf.size());
  for (const Complex& s : buf.samples()) {
    put<float>(out, static_cast<float>(s.real()));
    put<float>(out, static_cast<float>(s.imag()));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(path + ": cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(path + ": write failed");
}

IqBuffer read_iq_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(path + ": cannot open for reading");
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < kHeaderBytes) throw Error(path + ": truncated header");
  if (std::memcmp(in.data(), kMagic.data(), kMagic.size()) != 0) throw Error(path + ": bad magic");
  const auto version = get<std::uint32_t>(in, 4);
  if (version != kVersion) throw Error(path + ": unsupported version " + std::to_string(version));
  const auto rate = get<double>(in, 8);
  const auto count = get<std::uint64_t>(in, 16);
  const std::size_t found = (in.size() - kHeaderBytes) / 8;
  if (found < count) {
    throw Error(path + ": truncated payload: expected " + std::to_string(count) + ", found " +
                std::to_string(found));
  }
  std::vector<Complex> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = kHeaderBytes + 8 * i;
    samples[i] = Complex(get<float>(in, at), get<float>(in, at + 4));
  }
  return IqBuffer(std::move(samples), rate);
}

}  // namespace specsense
