#include "isac/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace isac;

namespace {

const char* kUsage =
    "usage: isac_cli <command> [options]\n"
    "\n"
    "commands:\n"
    "  synth       write one frame as V/H IQ captures\n"
    "  run-link    link-level Monte Carlo sweep -> link.csv (--nmse adds nmse.csv)\n"
    "  run-radar   range-Doppler scene -> rd_*.csv, detections.csv, range_spread.csv (--rmse adds rmse.csv)\n"
    "  metrics     waveform metrics -> isl.csv, oob.csv, crlb.csv, af.csv\n"
    "  sweep       ISL / OOB / rate over segments, PSK order, chirp duration, beta -> sweep.csv\n"
    "  decode      decode IQ captures written by synth\n"
    "\n"
    "common options: --config <path|B1|B2> --seed <n> --out <dir> --trials <n> --threads <n>\n";

struct Common {
  std::string config;
  std::string out = ".";
  long long seed = -1;
  int trials = 0;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario file, or B1 / B2 for a band preset");
  cmd->add_option("--seed", c.seed, "base random seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--trials", c.trials, "Monte Carlo trials");
  cmd->add_option("--threads", c.threads, "worker threads");
}

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg;
  std::string upper = c.config;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
  if (c.config.empty()) {
    cfg = band_preset("B1");
  } else if ((upper == "B1" || upper == "B2") && !fs::exists(c.config)) {
    cfg = band_preset(upper);
  } else {
    cfg = load_config(c.config);
  }
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.trials > 0) {
    cfg.trials = c.trials;
    cfg.radar.rmse.trials = c.trials;
  }
  if (c.threads > 0) cfg.threads = c.threads;
  cfg.validate();
  fs::create_directories(c.out);
  return cfg;
}

std::ofstream open_out(const Common& c, const std::string& name) {
  std::ofstream f(fs::path(c.out) / name);
  if (!f) throw Error("cannot write " + (fs::path(c.out) / name).string());
  return f;
}

void write_bits(std::ostream& out, const Bits& bits) {
  for (auto b : bits) out << static_cast<char>('0' + b);
  out << "\n";
}

Bits read_bits(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Bits bits;
  char ch;
  while (in.get(ch)) {
    if (ch == '0' || ch == '1') bits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return bits;
}

int cmd_synth(const Common& c, const std::string& bits_path) {
  const ScenarioConfig cfg = resolve(c);
  const Codebook cb = build_codebook(cfg.waveform);
  Bits bits;
  if (!bits_path.empty()) {
    bits = read_bits(bits_path);
  } else {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0));
    bits = random_bits(static_cast<std::size_t>(cb.bits_per_codeword()) * (cb.chirps_per_frame - 1), rng);
  }
  const Frame frame = build_frame(bits, cb);
  write_iq((fs::path(c.out) / "frame_v.iq").string(), frame.stream(Polarization::V), "V");
  write_iq((fs::path(c.out) / "frame_h.iq").string(), frame.stream(Polarization::H), "H");
  auto f = open_out(c, "bits.txt");
  bits.resize(static_cast<std::size_t>(cb.bits_per_codeword()) * (cb.chirps_per_frame - 1));
  write_bits(f, bits);
  return 0;
}

int cmd_decode(const Common& c, const std::string& in_dir, double noise_var) {
  const ScenarioConfig cfg = resolve(c);
  const Codebook cb = build_codebook(cfg.waveform);
  const IqCapture v = read_iq((fs::path(in_dir) / "frame_v.iq").string());
  const IqCapture h = read_iq((fs::path(in_dir) / "frame_h.iq").string());
  if (v.buffer.sample_rate != cb.sample_rate) throw Error("decode: capture sample rate differs from config");
  const IqBuffer pilot = pilot_chirp(cb);
  const Eigen::Index offset = synchronize(v.buffer, pilot);
  const auto ns = cb.samples_per_chirp();
  const auto len = ns * cb.chirps_per_frame;
  if (offset + len > v.buffer.size() || offset + len > h.buffer.size()) throw Error("decode: capture shorter than a frame");
  const IqBuffer rv = v.buffer.slice(offset, len);
  const IqBuffer rh = h.buffer.slice(offset, len);
  const ChannelEstimate est =
      estimate_channel(rv.slice(0, ns), rh.slice(0, ns), pilot, pilot, {noise_var, noise_var, 0.0, 0.0});
  const CommReceiver rx(cb);
  const FrameDecode dec = decode_frame(rv, rh, rx, est);
  auto f = open_out(c, "decoded_bits.txt");
  write_bits(f, dec.bits);
  return 0;
}

int cmd_run_link(const Common& c, bool with_nmse) {
  const ScenarioConfig cfg = resolve(c);
  auto f = open_out(c, "link.csv");
  write_link_csv(f, run_link_sweep(cfg));
  if (with_nmse) {
    auto g = open_out(c, "nmse.csv");
    write_nmse_csv(g, run_nmse_sweep(cfg));
  }
  return 0;
}

void write_map_meta(const Common& c, const std::string& name, const RangeDopplerMap& m) {
  auto f = open_out(c, name);
  f << "range_bins = " << m.range_axis.size() << "\n"
    << "range_first_m = " << format_number(m.range_axis[0]) << "\n"
    << "range_spacing_m = " << format_number(m.range_axis.size() > 1 ? m.range_axis[1] - m.range_axis[0] : 0.0) << "\n"
    << "doppler_bins = " << m.velocity_axis.size() << "\n"
    << "velocity_first_mps = " << format_number(m.velocity_axis[0]) << "\n"
    << "velocity_spacing_mps = " << format_number(m.velocity_axis[1] - m.velocity_axis[0]) << "\n"
    << "reference_bandwidth_hz = " << format_number(m.reference_bandwidth) << "\n"
    << "reference_center_hz = " << format_number(m.reference_center) << "\n";
}

int cmd_run_radar(const Common& c, bool with_rmse) {
  const ScenarioConfig cfg = resolve(c);
  const RadarSceneResult r = run_radar_scene(cfg);
  {
    auto f = open_out(c, "rd_corrected.csv");
    write_rd_map_csv(f, r.corrected);
  }
  {
    auto f = open_out(c, "rd_naive.csv");
    write_rd_map_csv(f, r.naive);
  }
  write_map_meta(c, "rd_corrected.meta", r.corrected);
  write_map_meta(c, "rd_naive.meta", r.naive);
  {
    auto f = open_out(c, "detections.csv");
    write_detections_csv(f, r.detections, r.naive_detections);
  }
  {
    auto f = open_out(c, "range_spread.csv");
    CsvWriter w(f, {"target_range_m", "target_velocity_mps", "pipeline", "peak_bin_spread"});
    for (std::size_t i = 0; i < cfg.radar.targets.size(); ++i) {
      const auto& t = cfg.radar.targets[i];
      w.cell(t.range).cell(t.velocity).cell(std::string("corrected")).cell(static_cast<long long>(r.corrected_spread[i]));
      w.end_row();
      w.cell(t.range).cell(t.velocity).cell(std::string("naive")).cell(static_cast<long long>(r.naive_spread[i]));
      w.end_row();
    }
  }
  if (with_rmse) {
    auto f = open_out(c, "rmse.csv");
    write_rmse_csv(f, run_range_rmse(cfg));
  }
  return 0;
}

int cmd_metrics(const Common& c) {
  const ScenarioConfig cfg = resolve(c);
  {
    auto f = open_out(c, "isl.csv");
    write_isl_csv(f, isl_table(cfg));
  }
  {
    auto f = open_out(c, "oob.csv");
    write_oob_csv(f, oob_table(cfg));
  }
  {
    auto f = open_out(c, "crlb.csv");
    write_crlb_csv(f, crlb_table(cfg));
  }
  {
    const Codebook cb = build_codebook(cfg.waveform);
    auto f = open_out(c, "af.csv");
    write_af_csv(f, mean_ambiguity(cb, cfg.metrics.codewords, cfg.seed, cfg.metrics.doppler_points));
  }
  return 0;
}

int cmd_sweep(const Common& c) {
  const ScenarioConfig cfg = resolve(c);
  auto f = open_out(c, "sweep.csv");
  write_sweep_csv(f, run_parameter_sweep(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  static const std::vector<std::string> known = {"synth", "run-link", "run-radar", "metrics", "sweep", "decode"};
  if (argc < 2) {
    std::cerr << kUsage;
    return 2;
  }
  const std::string first = argv[1];
  if (first == "-h" || first == "--help") {
    std::cout << kUsage;
    return 0;
  }
  if (std::find(known.begin(), known.end(), first) == known.end()) {
    std::cerr << "unknown command '" << first << "'\n" << kUsage;
    return 2;
  }

  CLI::App app{"IM-PM-FMCW sensing and communication simulator", "isac_cli"};
  app.require_subcommand(1);
  Common common;
  std::string bits_path, in_dir;
  double noise_var = 1e-6;
  bool with_rmse = false, with_nmse = false;

  auto* synth = app.add_subcommand("synth", "write one frame as V/H IQ captures");
  add_common(synth, common);
  synth->add_option("--bits", bits_path, "text file of 0/1 payload bits");
  auto* link = app.add_subcommand("run-link", "link-level sweep");
  add_common(link, common);
  link->add_flag("--nmse", with_nmse, "also run the pilot-only channel estimation sweep");
  auto* radar = app.add_subcommand("run-radar", "range-Doppler scene");
  add_common(radar, common);
  radar->add_flag("--rmse", with_rmse, "also run the range RMSE study");
  auto* metrics = app.add_subcommand("metrics", "waveform metric tables");
  add_common(metrics, common);
  auto* sweep = app.add_subcommand("sweep", "waveform parameter sweep");
  add_common(sweep, common);
  auto* dec = app.add_subcommand("decode", "decode IQ captures");
  add_common(dec, common);
  dec->add_option("--in", in_dir, "directory holding frame_v.iq and frame_h.iq")->required();
  dec->add_option("--noise-var", noise_var, "per-sample noise variance used by the estimator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(common, bits_path);
    if (link->parsed()) return cmd_run_link(common, with_nmse);
    if (radar->parsed()) return cmd_run_radar(common, with_rmse);
    if (metrics->parsed()) return cmd_metrics(common);
    if (sweep->parsed()) return cmd_sweep(common);
    if (dec->parsed()) return cmd_decode(common, in_dir, noise_var);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
