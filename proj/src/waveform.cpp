#include "isac/waveform.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace isac {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int ilog2(std::size_t v) {
  int r = 0;
  while (v > 1) {
    v >>= 1;
    ++r;
  }
  return r;
}

std::string mhz(double hz) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g MHz", hz / 1e6);
  return buf;
}

}  // namespace

const char* to_string(Polarization p) { return p == Polarization::V ? "V" : "H"; }

Eigen::Index Codebook::samples_per_chirp() const {
  return static_cast<Eigen::Index>(std::llround(chirp_duration * sample_rate));
}

int Codebook::im_bits() const { return entry_count() == 0 ? 0 : ilog2(entry_count()); }

int Codebook::bits_per_symbol() const { return ilog2(static_cast<std::size_t>(psk_order)); }

std::pair<int, int> Codebook::entry_indices(std::size_t entry) const {
  const auto nf = center_freq_options.size();
  return {static_cast<int>(entry / nf), static_cast<int>(entry % nf)};
}

std::size_t Codebook::entry_of(int bandwidth_index, int center_index) const {
  return static_cast<std::size_t>(bandwidth_index) * center_freq_options.size() +
         static_cast<std::size_t>(center_index);
}

double Codebook::bandwidth_of(std::size_t entry) const {
  return bandwidth_options[entry_indices(entry).first];
}

double Codebook::center_of(std::size_t entry) const {
  return center_freq_options[entry_indices(entry).second];
}

double Codebook::symbol_phase(int symbol) const { return 2.0 * kPi * symbol / psk_order; }

double Codebook::max_rate() const { return bits_per_codeword() / chirp_duration; }

double Codebook::mean_bandwidth() const {
  return std::accumulate(bandwidth_options.begin(), bandwidth_options.end(), 0.0) /
         static_cast<double>(bandwidth_options.size());
}

double Codebook::mean_center_freq() const {
  return std::accumulate(center_freq_options.begin(), center_freq_options.end(), 0.0) /
         static_cast<double>(center_freq_options.size());
}

int Codebook::segment_of(Eigen::Index n) const {
  return static_cast<int>((n * segments) / samples_per_chirp());
}

Codebook build_codebook(const CodebookConfig& c) {
  if (!(c.sample_rate > 0)) throw Error("codebook: sample_rate must be positive");
  if (!(c.chirp_duration > 0)) throw Error("codebook: chirp_duration must be positive");
  if (!(c.psk_order == 1 || (is_power_of_two(c.psk_order) && c.psk_order >= 2)))
    throw Error("codebook: psk_order must be 1 or a power of two");
  if (c.segments < 1) throw Error("codebook: segments must be at least 1");
  if (!(c.beta >= 0 && c.beta <= 1)) throw Error("codebook: beta must lie in [0, 1]");
  if (c.chirps_per_frame < 2) throw Error("codebook: chirps_per_frame must be at least 2");

  Codebook cb;
  cb.psk_order = c.psk_order;
  cb.segments = c.segments;
  cb.chirp_duration = c.chirp_duration;
  cb.sample_rate = c.sample_rate;
  cb.allocated_bandwidth = c.allocated_bandwidth;
  cb.beta = c.beta;
  cb.chirps_per_frame = c.chirps_per_frame;

  if (!c.bandwidths.empty()) {
    cb.bandwidth_options = c.bandwidths;
  } else {
    if (!(c.bandwidth_step > 0)) throw Error("codebook: bandwidth_step must be positive");
    if (!(c.bandwidth_min > 0) || c.bandwidth_max < c.bandwidth_min)
      throw Error("codebook: need 0 < bandwidth_min <= bandwidth_max");
    const auto count = static_cast<int>(
        std::floor((c.bandwidth_max - c.bandwidth_min) / c.bandwidth_step + 1e-9)) + 1;
    for (int k = 0; k < count; ++k) cb.bandwidth_options.push_back(c.bandwidth_min + k * c.bandwidth_step);
  }
  for (double b : cb.bandwidth_options)
    if (!(b > 0)) throw Error("codebook: bandwidths must be positive");

  if (!c.center_freqs.empty()) {
    cb.center_freq_options = c.center_freqs;
  } else {
    if (!(c.center_freq_step > 0)) throw Error("codebook: center_freq_step must be positive");
    const double widest = *std::max_element(cb.bandwidth_options.begin(), cb.bandwidth_options.end());
    if (c.allocated_bandwidth < widest * (1 - 1e-12))
      throw Error("codebook: allocated_bandwidth " + mhz(c.allocated_bandwidth) +
                  " narrower than widest chirp " + mhz(widest));
    const auto count = static_cast<int>(
        std::floor((c.allocated_bandwidth - widest) / c.center_freq_step + 1e-9)) + 1;
    for (int k = 0; k < count; ++k)
      cb.center_freq_options.push_back((k - (count - 1) / 2.0) * c.center_freq_step);
  }

  const double nyquist = c.sample_rate / 2;
  for (double b : cb.bandwidth_options)
    for (double f : cb.center_freq_options)
      if (std::abs(f) + b / 2 > nyquist * (1 + 1e-12))
        throw Error("codebook: pair (f=" + mhz(f) + ", b=" + mhz(b) + ") exceeds Nyquist band of " +
                    mhz(nyquist));
  if (c.allocated_bandwidth / 2 > nyquist * (1 + 1e-12))
    throw Error("codebook: allocated_bandwidth exceeds the sample rate");

  const auto ns = cb.samples_per_chirp();
  if (ns < 2) throw Error("codebook: fewer than two samples per chirp");
  if (cb.segments > ns) throw Error("codebook: more segments than samples per chirp");
  return cb;
}

int gray_decode(int g) {
  int v = 0;
  for (; g; g >>= 1) v ^= g;
  return v;
}

std::size_t bits_to_index(const Bits& bits, std::size_t offset, int count) {
  std::size_t v = 0;
  for (int k = 0; k < count; ++k) v = (v << 1) | (bits[offset + k] & 1u);
  return v;
}

void append_index_bits(Bits& out, std::size_t value, int count) {
  for (int k = count - 1; k >= 0; --k) out.push_back(static_cast<std::uint8_t>((value >> k) & 1u));
}

ChirpParams make_chirp_params(std::size_t entry, const std::vector<int>& symbols, Polarization p,
                              const Codebook& cb) {
  ChirpParams cp;
  cp.center_freq = cb.center_of(entry);
  cp.bandwidth = cb.bandwidth_of(entry);
  cp.duration = cb.chirp_duration;
  cp.polarization = p;
  cp.segment_phases.reserve(symbols.size());
  for (int m : symbols) cp.segment_phases.push_back(cb.symbol_phase(m));
  return cp;
}

Codeword encode(const Bits& bits, const Codebook& cb) {
  const auto expected = static_cast<std::size_t>(cb.bits_per_codeword());
  if (bits.size() != expected)
    throw Error("encode: expected " + std::to_string(expected) + " bits, got " + std::to_string(bits.size()));
  const int nim = cb.im_bits();
  const int k = cb.bits_per_symbol();
  Codeword cw;
  cw.bits = bits;
  cw.v_entry = bits_to_index(bits, 0, nim);
  cw.h_entry = bits_to_index(bits, nim, nim);
  std::size_t pos = 2 * static_cast<std::size_t>(nim);
  for (auto* symbols : {&cw.v_symbols, &cw.h_symbols}) {
    symbols->resize(cb.segments);
    for (int l = 0; l < cb.segments; ++l, pos += k)
      (*symbols)[l] = gray_decode(static_cast<int>(bits_to_index(bits, pos, k)));
  }
  cw.v_params = make_chirp_params(cw.v_entry, cw.v_symbols, Polarization::V, cb);
  cw.h_params = make_chirp_params(cw.h_entry, cw.h_symbols, Polarization::H, cb);
  return cw;
}

Bits decode(std::size_t v_entry, std::size_t h_entry, const std::vector<int>& v_symbols,
            const std::vector<int>& h_symbols, const Codebook& cb) {
  Bits out;
  out.reserve(cb.bits_per_codeword());
  const int nim = cb.im_bits();
  append_index_bits(out, v_entry, nim);
  append_index_bits(out, h_entry, nim);
  const int k = cb.bits_per_symbol();
  for (const auto* symbols : {&v_symbols, &h_symbols}) {
    if (static_cast<int>(symbols->size()) != cb.segments) throw Error("decode: symbol count mismatch");
    for (int m : *symbols) append_index_bits(out, static_cast<std::size_t>(gray_encode(m)), k);
  }
  return out;
}

RVec chirp_phase(double center_freq, double bandwidth, const Codebook& cb) {
  const auto ns = cb.samples_per_chirp();
  const double slope = bandwidth / cb.chirp_duration;
  const double start = center_freq - bandwidth / 2;
  RVec theta(ns);
  for (Eigen::Index n = 0; n < ns; ++n) {
    const double t = static_cast<double>(n) / cb.sample_rate;
    theta[n] = kPi * (slope * t * t + 2 * start * t);
  }
  return theta;
}

RVec rectangular_phases(const std::vector<double>& segment_phases, const Codebook& cb) {
  if (static_cast<int>(segment_phases.size()) != cb.segments)
    throw Error("segment phase count does not match codebook segments");
  const auto ns = cb.samples_per_chirp();
  RVec phi(ns);
  for (Eigen::Index n = 0; n < ns; ++n) phi[n] = segment_phases[cb.segment_of(n)];
  return phi;
}

RVec smooth_phases(const std::vector<double>& segment_phases, const Codebook& cb, double beta) {
  if (!(beta > 0 && beta <= 1)) throw Error("smooth_phases: beta must lie in (0, 1]");
  RVec phi = rectangular_phases(segment_phases, cb);
  const double segment_samples = static_cast<double>(cb.samples_per_chirp()) / cb.segments;
  const auto half = static_cast<Eigen::Index>(std::floor(beta * segment_samples / 2));
  if (half < 1) return phi;
  const double sigma = beta * segment_samples / 6;
  RVec kernel(2 * half + 1);
  for (Eigen::Index d = -half; d <= half; ++d)
    kernel[d + half] = std::exp(-0.5 * (d / sigma) * (d / sigma));
  kernel /= kernel.sum();
  const CVec phasors = phi.unaryExpr([](double p) { return std::polar(1.0, p); });
  const CVec smoothed = convolve_linear(kernel, phasors, ConvMode::Same);
  return smoothed.unaryExpr([](const cdouble& z) { return std::arg(z); });
}

namespace {

IqBuffer modulate(const RVec& theta, const RVec& phi, double fs) {
  CVec x(theta.size());
  for (Eigen::Index n = 0; n < theta.size(); ++n) x[n] = std::polar(1.0, theta[n] + phi[n]);
  return {std::move(x), fs};
}

}  // namespace

IqBuffer synth_chirp(const ChirpParams& p, const Codebook& cb) {
  const RVec theta = chirp_phase(p.center_freq, p.bandwidth, cb);
  const RVec phi = cb.beta > 0 ? smooth_phases(p.segment_phases, cb, cb.beta)
                               : rectangular_phases(p.segment_phases, cb);
  return modulate(theta, phi, cb.sample_rate);
}

IqBuffer synth_plain_chirp(double center_freq, double bandwidth, const Codebook& cb) {
  const RVec theta = chirp_phase(center_freq, bandwidth, cb);
  return modulate(theta, RVec::Zero(theta.size()), cb.sample_rate);
}

IqBuffer pilot_chirp(const Codebook& cb) { return synth_plain_chirp(0.0, cb.allocated_bandwidth, cb); }

IqBuffer Frame::stream(Polarization p) const {
  const IqBuffer& pilot = p == Polarization::V ? pilot_v : pilot_h;
  const auto& data = p == Polarization::V ? data_v : data_h;
  const auto ns = pilot.size();
  CVec out(ns * static_cast<Eigen::Index>(1 + data.size()));
  out.head(ns) = pilot.samples;
  for (std::size_t i = 0; i < data.size(); ++i)
    out.segment(ns * static_cast<Eigen::Index>(i + 1), ns) = data[i].samples;
  return {std::move(out), pilot.sample_rate};
}

Frame build_frame(const Bits& bit_stream, const Codebook& cb) {
  const auto per = static_cast<std::size_t>(cb.bits_per_codeword());
  const auto data_chirps = static_cast<std::size_t>(cb.chirps_per_frame - 1);
  const auto needed = per * data_chirps;
  if (bit_stream.size() < needed)
    throw Error("build_frame: need " + std::to_string(needed) + " bits, got " +
                std::to_string(bit_stream.size()));
  Frame f;
  f.chirp_count = cb.chirps_per_frame;
  f.pilot_v = pilot_chirp(cb);
  f.pilot_h = f.pilot_v;
  for (std::size_t i = 0; i < data_chirps; ++i) {
    Bits chunk(bit_stream.begin() + static_cast<std::ptrdiff_t>(i * per),
               bit_stream.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    f.codewords.push_back(encode(chunk, cb));
    f.data_v.push_back(synth_chirp(f.codewords.back().v_params, cb));
    f.data_h.push_back(synth_chirp(f.codewords.back().h_params, cb));
  }
  return f;
}

Bits random_bits(std::size_t count, std::mt19937_64& rng) {
  Bits out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<std::uint8_t>(rng() >> 63);
  return out;
}

}  // namespace isac
