#pragma once

// Scenario configuration, Monte Carlo runners, IQ capture and CSV I/O.

#include "isac/channel.hpp"
#include "isac/comm_rx.hpp"
#include "isac/metrics.hpp"
#include "isac/radar_rx.hpp"
#include "isac/waveform.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace isac {

enum class ChannelModel { Identity, Awgn, Rician };

struct RmseConfig {
  std::vector<double> snr_db{10, 20, 30};
  int trials = 200;
  int chirps_per_trial = 8;
  double min_range = 50;  // true ranges are drawn uniformly over one grid cell from here
};

struct RadarSceneConfig {
  int chirps = 64;
  double carrier_freq = 0;    // 0 uses the band carrier
  double chirp_duration = 0;  // 0 uses the waveform chirp duration
  double snr_db = kInf;
  std::vector<RadarTarget> targets;
  double max_range = 150;
  double range_spacing = 0;  // 0 gives c / (4 b_ref)
  bool hann_range = false;
  bool hann_doppler = false;
  int decimation = 1;
  double threshold_db = -20;
  RmseConfig rmse;
};

struct MetricsConfig {
  int codewords = 100;
  std::vector<int> segments{1, 10, 50, 100};
  double chirp_duration = 50e-6;
  int doppler_points = 64;
};

struct SweepConfig {
  std::vector<int> segments{10, 50, 100};
  std::vector<int> psk_orders;          // empty keeps the waveform value
  std::vector<double> chirp_durations;  // empty keeps the waveform value
  std::vector<double> betas;            // empty keeps the waveform value
};

struct ScenarioConfig {
  std::string band = "B1";
  double carrier_freq = 2.4e9;
  CodebookConfig waveform;
  ChannelModel channel_model = ChannelModel::Rician;
  CommChannelConfig channel;
  std::vector<double> snr_db{0, 5, 10, 15, 20, 25, 30};
  int trials = 500;
  std::uint64_t seed = 1;
  int threads = 1;
  RadarSceneConfig radar;
  MetricsConfig metrics;
  SweepConfig sweep;

  void validate() const;
  // Channel settings actually applied for a given SNR point.
  CommChannelConfig channel_at(double snr_db) const;
};

ScenarioConfig band_preset(const std::string& band);
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// ---- link level ----

struct LinkRow {
  double snr_db = 0;
  double im_block_error = 0;
  double pm_block_error = 0;
  double nmse_db = 0;
  double throughput = 0;  // bit/s counted from correct blocks
  double rate = 0;        // bit/s from block error rates
  double max_rate = 0;
  std::size_t bit_errors = 0;
  std::size_t chirps = 0;
};

// One trial is one frame. Trial t uses seed + t for data, channel and noise,
// shared across SNR points.
std::vector<LinkRow> run_link_sweep(const ScenarioConfig& cfg);

struct NmseRow {
  double snr_db = 0;
  double nmse_db = 0;
};

// Pilot-only channel estimation accuracy, averaged in linear scale.
std::vector<NmseRow> run_nmse_sweep(const ScenarioConfig& cfg);

// ---- radar ----

struct RadarSceneResult {
  RangeDopplerMap corrected;
  RangeDopplerMap naive;
  std::vector<Detection> detections;
  std::vector<Detection> naive_detections;
  RangeGrid grid;
  std::vector<ChirpParams> chirps;
  // Per target: spread (max - min) of per-chirp peak bins.
  std::vector<Eigen::Index> corrected_spread;
  std::vector<Eigen::Index> naive_spread;
};

RadarSceneResult run_radar_scene(const ScenarioConfig& cfg);

struct RmseRow {
  double snr_db = 0;
  double rmse = 0;   // m
  double rcrlb = 0;  // m
  std::size_t estimates = 0;
};

std::vector<RmseRow> run_range_rmse(const ScenarioConfig& cfg);

// ---- waveform metrics ----

Codebook codebook_with(const ScenarioConfig& cfg, int segments, double chirp_duration, double beta, int psk_order = 0);

struct IslRow {
  int segments = 0;
  int pm_bits = 0;  // per chirp and polarization
  double isl_db = 0;
};

// ISL of the mean zero-Doppler cut over random codewords.
double mean_isl(const Codebook& cb, int codewords, std::uint64_t seed);
std::vector<IslRow> isl_table(const ScenarioConfig& cfg);

struct OobRow {
  int segments = 0;
  double smoothed_db = 0;
  double rectangular_db = 0;
};

double mean_oob(const Codebook& cb, int codewords, std::uint64_t seed);
std::vector<OobRow> oob_table(const ScenarioConfig& cfg);

struct CrlbRow {
  double snr_db = 0;
  double bandwidth = 0;  // 0 marks the averaged row
  double crlb = 0;       // m^2
};

std::vector<CrlbRow> crlb_table(const ScenarioConfig& cfg);

struct SweepRow {
  int segments = 0;
  int psk_order = 0;
  double chirp_duration = 0;
  double beta = 0;
  int pm_bits = 0;
  double max_rate = 0;
  double isl_db = 0;
  double oob_db = 0;
};

std::vector<SweepRow> run_parameter_sweep(const ScenarioConfig& cfg);

// ---- files ----

struct IqCapture {
  IqBuffer buffer;
  std::string polarization = "V";
  double scale = 1;
};

// Payload at `path`, sidecar at `path + ".meta"`.
void write_iq(const std::string& path, const IqBuffer& x, const std::string& polarization = "V");
IqCapture read_iq(const std::string& path);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

std::string format_number(double v);

void write_link_csv(std::ostream& out, const std::vector<LinkRow>& rows);
void write_nmse_csv(std::ostream& out, const std::vector<NmseRow>& rows);
void write_rd_map_csv(std::ostream& out, const RangeDopplerMap& map);
void write_detections_csv(std::ostream& out, const std::vector<Detection>& corrected,
                          const std::vector<Detection>& naive);
void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows);
void write_isl_csv(std::ostream& out, const std::vector<IslRow>& rows);
void write_oob_csv(std::ostream& out, const std::vector<OobRow>& rows);
void write_crlb_csv(std::ostream& out, const std::vector<CrlbRow>& rows);
void write_af_csv(std::ostream& out, const AmbiguitySurface& s);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Deterministic 64-bit seed derivation (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Uniformly random used codebook entry with uniformly random PSK symbols.
ChirpParams random_chirp(const Codebook& cb, std::mt19937_64& rng, Polarization p = Polarization::V);

// Mean of |AF| over random codewords.
AmbiguitySurface mean_ambiguity(const Codebook& cb, int codewords, std::uint64_t seed, int doppler_points);

// Runs body(t) for t in [0, count) over `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace isac
