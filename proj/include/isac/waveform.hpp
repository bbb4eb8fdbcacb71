#pragma once

// IM/PM codebook, bit mapping and chirp synthesis.
//
// A chirp carries two kinds of data. Index modulation picks one
// (bandwidth, center frequency) pair out of the codebook; phase modulation
// puts one M-PSK symbol on each of L equal-length segments.

#include "isac/dsp.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace isac {

using Bits = std::vector<std::uint8_t>;

enum class Polarization { V, H };

const char* to_string(Polarization p);

struct CodebookConfig {
  double sample_rate = 80e6;
  double chirp_duration = 10e-6;
  double bandwidth_min = 40e6;
  double bandwidth_max = 55e6;
  double bandwidth_step = 2e6;
  double center_freq_step = 2e6;
  double allocated_bandwidth = 60e6;
  int psk_order = 64;
  int segments = 20;
  double beta = 0.2;  // 0 disables phase smoothing
  int chirps_per_frame = 50;
  // When non-empty these replace the arithmetic enumerations above.
  std::vector<double> bandwidths;
  std::vector<double> center_freqs;
};

struct Codebook {
  std::vector<double> bandwidth_options;
  std::vector<double> center_freq_options;
  int psk_order = 1;
  int segments = 1;
  double chirp_duration = 0;
  double sample_rate = 0;
  double allocated_bandwidth = 0;
  double beta = 0;
  int chirps_per_frame = 2;

  Eigen::Index samples_per_chirp() const;
  std::size_t entry_count() const { return bandwidth_options.size() * center_freq_options.size(); }
  int im_bits() const;
  // Entries addressable by im_bits(); the remainder of the enumeration is unused.
  std::size_t used_entry_count() const { return std::size_t{1} << im_bits(); }
  int bits_per_symbol() const;
  int pm_bits() const { return segments * bits_per_symbol(); }
  int bits_per_codeword() const { return 2 * im_bits() + 2 * pm_bits(); }
  // Bandwidth-major: entry = bandwidth_index * N_f + center_index.
  std::pair<int, int> entry_indices(std::size_t entry) const;
  std::size_t entry_of(int bandwidth_index, int center_index) const;
  double bandwidth_of(std::size_t entry) const;
  double center_of(std::size_t entry) const;
  double symbol_phase(int symbol) const;
  double max_rate() const;
  double mean_bandwidth() const;
  double mean_center_freq() const;
  // Segment owning sample n.
  int segment_of(Eigen::Index n) const;
};

struct ChirpParams {
  double center_freq = 0;
  double bandwidth = 0;
  double duration = 0;
  std::vector<double> segment_phases;
  Polarization polarization = Polarization::V;

  double slope() const { return bandwidth / duration; }
};

struct Codeword {
  ChirpParams v_params;
  ChirpParams h_params;
  std::size_t v_entry = 0;
  std::size_t h_entry = 0;
  std::vector<int> v_symbols;
  std::vector<int> h_symbols;
  Bits bits;
};

struct Frame {
  IqBuffer pilot_v;
  IqBuffer pilot_h;
  std::vector<Codeword> codewords;
  std::vector<IqBuffer> data_v;
  std::vector<IqBuffer> data_h;
  int chirp_count = 0;

  // Pilot followed by the data chirps, back to back.
  IqBuffer stream(Polarization p) const;
};

Codebook build_codebook(const CodebookConfig& config);

inline int gray_encode(int value) { return value ^ (value >> 1); }
int gray_decode(int gray);

// Reads `count` bits MSB first starting at `offset`.
std::size_t bits_to_index(const Bits& bits, std::size_t offset, int count);
void append_index_bits(Bits& out, std::size_t value, int count);

Codeword encode(const Bits& bits, const Codebook& codebook);
Bits decode(std::size_t v_entry, std::size_t h_entry, const std::vector<int>& v_symbols,
            const std::vector<int>& h_symbols, const Codebook& codebook);

ChirpParams make_chirp_params(std::size_t entry, const std::vector<int>& symbols, Polarization p,
                              const Codebook& codebook);

// Quadratic chirp phase over one chirp: pi * (S t^2 + 2 (f - b/2) t).
RVec chirp_phase(double center_freq, double bandwidth, const Codebook& codebook);

// Piecewise-constant segment phases, one value per sample.
RVec rectangular_phases(const std::vector<double>& segment_phases, const Codebook& codebook);

// Gaussian-smoothed phase trajectory with a kernel spanning beta of a segment.
RVec smooth_phases(const std::vector<double>& segment_phases, const Codebook& codebook, double beta);

// Uses codebook.beta; beta == 0 keeps the rectangular phases.
IqBuffer synth_chirp(const ChirpParams& params, const Codebook& codebook);

// Same chirp without any phase code.
IqBuffer synth_plain_chirp(double center_freq, double bandwidth, const Codebook& codebook);

// Unmodulated up-chirp spanning the allocated band.
IqBuffer pilot_chirp(const Codebook& codebook);

Frame build_frame(const Bits& bit_stream, const Codebook& codebook);

Bits random_bits(std::size_t count, std::mt19937_64& rng);

}  // namespace isac
