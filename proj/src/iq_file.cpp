#include "isac/harness.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

namespace isac {

namespace {

constexpr double kFullScale = 32767.0;

void put_le16(std::ostream& out, std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  const char b[2] = {static_cast<char>(u & 0xff), static_cast<char>(u >> 8)};
  out.write(b, 2);
}

std::int16_t quantize(double v, double scale) {
  const double q = std::round(v / scale * kFullScale);
  return static_cast<std::int16_t>(std::clamp(q, -kFullScale, kFullScale));
}

}  // namespace

void write_iq(const std::string& path, const IqBuffer& x, const std::string& polarization) {
  detail::require_signal(x, "write_iq");
  double scale = 0;
  for (const auto& v : x.samples) scale = std::max({scale, std::abs(v.real()), std::abs(v.imag())});
  if (scale == 0) scale = 1;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_iq: cannot open " + path);
  for (const auto& v : x.samples) {
    put_le16(out, quantize(v.real(), scale));
    put_le16(out, quantize(v.imag(), scale));
  }
  if (!out) throw Error("write_iq: write failed for " + path);

  std::ofstream meta(path + ".meta");
  if (!meta) throw Error("write_iq: cannot open " + path + ".meta");
  meta << "format = int16_le_iq\n"
       << "sample_rate = " << format_number(x.sample_rate) << "\n"
       << "sample_count = " << x.size() << "\n"
       << "polarization = " << polarization << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", scale);
  meta << "scale = " << buf << "\n";
}

IqCapture read_iq(const std::string& path) {
  std::ifstream meta(path + ".meta");
  if (!meta) throw Error("read_iq: missing sidecar " + path + ".meta");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"sample_rate", "sample_count", "scale"})
    if (!kv.count(key)) throw Error(std::string("read_iq: sidecar lacks ") + key);
  if (kv.count("format") && kv["format"] != "int16_le_iq") throw Error("read_iq: unsupported format " + kv["format"]);

  IqCapture cap;
  const double fs = std::stod(kv["sample_rate"]);
  const long long count = std::stoll(kv["sample_count"]);
  cap.scale = std::stod(kv["scale"]);
  if (kv.count("polarization")) cap.polarization = kv["polarization"];
  if (count < 1) throw Error("read_iq: empty capture");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_iq: cannot open " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() < static_cast<std::size_t>(4 * count))
    throw Error("read_iq: payload truncated: " + std::to_string(raw.size()) + " bytes for " + std::to_string(count) +
                " samples");
  CVec s(count);
  auto get = [&](std::size_t off) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(raw[off] | (raw[off + 1] << 8)));
  };
  for (long long n = 0; n < count; ++n) {
    const auto off = static_cast<std::size_t>(4 * n);
    s[n] = cdouble(get(off) * cap.scale / kFullScale, get(off + 2) * cap.scale / kFullScale);
  }
  cap.buffer = {std::move(s), fs};
  return cap;
}

}  // namespace isac
