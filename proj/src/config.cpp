#include "isac/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace isac {

namespace {

class Reader {
 public:
  Reader(const YAML::Node& node, std::string path)
      : node_(!node || node.IsNull() ? YAML::Node(YAML::NodeType::Map) : node), path_(std::move(path)) {
    if (!node_.IsMap()) throw Error("config: '" + path_ + "' must be a mapping");
  }

  void allow(std::initializer_list<const char*> keys) {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) throw Error("config: unknown key '" + join(key) + "'");
    }
  }

  YAML::Node child(const char* key) const { return node_[key]; }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const char* key, T& out) const {
    const YAML::Node n = child(key);
    if (!n || n.IsNull()) return;
    try {
      out = convert<T>(n);
    } catch (const YAML::Exception&) {
      throw Error("config: bad value for '" + join(key) + "'");
    }
  }

  Reader section(const char* key) const { return Reader(child(key), join(key)); }

 private:
  template <typename T>
  static T convert(const YAML::Node& n) {
    if constexpr (std::is_same_v<T, double>) {
      const auto s = n.as<std::string>();
      if (s == "inf" || s == "+inf" || s == ".inf") return kInf;
      if (s == "-inf" || s == "-.inf") return -kInf;
      return n.as<double>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      std::vector<double> v;
      for (const auto& e : n) v.push_back(convert<double>(e));
      return v;
    } else {
      return n.as<T>();
    }
  }

  YAML::Node node_;
  std::string path_;
};

ChannelModel parse_model(const std::string& s) {
  if (s == "identity") return ChannelModel::Identity;
  if (s == "awgn") return ChannelModel::Awgn;
  if (s == "rician") return ChannelModel::Rician;
  throw Error("config: channel.model must be identity, awgn or rician");
}

bool parse_window(const std::string& s, const char* key) {
  if (s == "none") return false;
  if (s == "hann") return true;
  throw Error(std::string("config: ") + key + " must be none or hann");
}

}  // namespace

ScenarioConfig band_preset(const std::string& band) {
  ScenarioConfig c;
  c.band = band;
  auto& w = c.waveform;
  if (band == "B1") {
    c.carrier_freq = 2.4e9;
    w.sample_rate = 80e6;
    w.bandwidth_min = 40e6;
    w.bandwidth_max = 55e6;
    w.bandwidth_step = 2e6;
    w.center_freq_step = 2e6;
    w.allocated_bandwidth = 60e6;
    w.segments = 20;
  } else if (band == "B2") {
    c.carrier_freq = 24e9;
    w.sample_rate = 400e6;
    w.bandwidth_min = 150e6;
    w.bandwidth_max = 250e6;
    w.bandwidth_step = 3e6;
    w.center_freq_step = 3e6;
    w.allocated_bandwidth = 340e6;
    w.segments = 40;
  } else {
    throw Error("config: band must be B1 or B2");
  }
  w.chirp_duration = 10e-6;
  w.psk_order = 64;
  w.beta = 0.2;
  w.chirps_per_frame = 50;
  c.channel.carrier_freq = c.carrier_freq;
  c.radar.targets = {{100.0, -40.0, 0.0}, {50.0, 30.0, 0.0}};
  return c;
}

void ScenarioConfig::validate() const {
  const Codebook cb = build_codebook(waveform);
  channel.validate(cb.chirp_duration);
  if (trials < 1) throw Error("config: trials must be at least 1");
  if (threads < 1) throw Error("config: threads must be at least 1");
  if (snr_db.empty()) throw Error("config: link.snr_db must not be empty");
  if (!(carrier_freq > 0)) throw Error("config: carrier_freq must be positive");
  if (radar.chirps < 2) throw Error("config: radar.chirps must be at least 2");
  if (radar.decimation < 1) throw Error("config: radar.decimation must be at least 1");
  if (radar.rmse.trials < 1 || radar.rmse.chirps_per_trial < 1)
    throw Error("config: radar.rmse trials and chirps_per_trial must be positive");
  if (metrics.codewords < 1) throw Error("config: metrics.codewords must be at least 1");
  for (int l : metrics.segments)
    if (l < 1) throw Error("config: metrics.segments entries must be positive");
}

CommChannelConfig ScenarioConfig::channel_at(double snr) const {
  CommChannelConfig c = channel;
  c.snr_db = snr;
  if (channel_model != ChannelModel::Rician) {
    c.k_factor_db = kInf;
    c.crosspol_leakage_db = -kInf;
    c.los_delay = 0;
    c.los_doppler = 0;
    c.nlos_path_count = 0;
    c.nlos_delays.clear();
    c.nlos_dopplers.clear();
  }
  if (channel_model == ChannelModel::Identity) c.snr_db = kInf;
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(std::string("config: parse error: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  Reader top(root, "");
  top.allow({"band", "carrier_freq", "seed", "threads", "waveform", "channel", "link", "radar", "metrics", "sweep"});

  std::string band = "B1";
  top.get("band", band);
  ScenarioConfig c = band_preset(band);
  top.get("carrier_freq", c.carrier_freq);
  c.channel.carrier_freq = c.carrier_freq;
  top.get("seed", c.seed);
  top.get("threads", c.threads);

  Reader w = top.section("waveform");
  w.allow({"sample_rate", "chirp_duration", "bandwidth_min", "bandwidth_max", "bandwidth_step", "center_freq_step",
           "allocated_bandwidth", "psk_order", "segments", "beta", "chirps_per_frame", "bandwidths", "center_freqs"});
  auto& wf = c.waveform;
  w.get("sample_rate", wf.sample_rate);
  w.get("chirp_duration", wf.chirp_duration);
  w.get("bandwidth_min", wf.bandwidth_min);
  w.get("bandwidth_max", wf.bandwidth_max);
  w.get("bandwidth_step", wf.bandwidth_step);
  w.get("center_freq_step", wf.center_freq_step);
  w.get("allocated_bandwidth", wf.allocated_bandwidth);
  w.get("psk_order", wf.psk_order);
  w.get("segments", wf.segments);
  w.get("beta", wf.beta);
  w.get("chirps_per_frame", wf.chirps_per_frame);
  w.get("bandwidths", wf.bandwidths);
  w.get("center_freqs", wf.center_freqs);

  Reader ch = top.section("channel");
  ch.allow({"model", "k_factor_db", "nlos_path_count", "nlos_max_delay", "nlos_delays", "nlos_dopplers", "los_delay",
            "los_doppler", "crosspol_leakage_db", "carrier_freq"});
  std::string model = "rician";
  ch.get("model", model);
  c.channel_model = parse_model(model);
  ch.get("k_factor_db", c.channel.k_factor_db);
  ch.get("nlos_path_count", c.channel.nlos_path_count);
  ch.get("nlos_max_delay", c.channel.nlos_max_delay);
  ch.get("nlos_delays", c.channel.nlos_delays);
  ch.get("nlos_dopplers", c.channel.nlos_dopplers);
  ch.get("los_delay", c.channel.los_delay);
  ch.get("los_doppler", c.channel.los_doppler);
  ch.get("crosspol_leakage_db", c.channel.crosspol_leakage_db);
  ch.get("carrier_freq", c.channel.carrier_freq);

  Reader link = top.section("link");
  link.allow({"snr_db", "trials"});
  link.get("snr_db", c.snr_db);
  link.get("trials", c.trials);

  Reader r = top.section("radar");
  r.allow({"chirps", "carrier_freq", "chirp_duration", "snr_db", "targets", "max_range", "range_spacing", "window",
           "doppler_window", "decimation", "threshold_db", "rmse"});
  r.get("chirps", c.radar.chirps);
  r.get("carrier_freq", c.radar.carrier_freq);
  r.get("chirp_duration", c.radar.chirp_duration);
  r.get("snr_db", c.radar.snr_db);
  r.get("max_range", c.radar.max_range);
  r.get("range_spacing", c.radar.range_spacing);
  r.get("decimation", c.radar.decimation);
  r.get("threshold_db", c.radar.threshold_db);
  std::string window = "none";
  r.get("window", window);
  c.radar.hann_range = parse_window(window, "radar.window");
  std::string dwindow = window;
  r.get("doppler_window", dwindow);
  c.radar.hann_doppler = parse_window(dwindow, "radar.doppler_window");
  if (const auto targets = r.child("targets")) {
    if (!targets.IsSequence()) throw Error("config: radar.targets must be a list");
    c.radar.targets.clear();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      Reader t(targets[i], "radar.targets[" + std::to_string(i) + "]");
      t.allow({"range", "velocity", "rcs_db"});
      RadarTarget target;
      t.get("range", target.range);
      t.get("velocity", target.velocity);
      t.get("rcs_db", target.rcs_gain_db);
      c.radar.targets.push_back(target);
    }
  }
  Reader rm = r.section("rmse");
  rm.allow({"snr_db", "trials", "chirps_per_trial", "min_range"});
  rm.get("snr_db", c.radar.rmse.snr_db);
  rm.get("trials", c.radar.rmse.trials);
  rm.get("chirps_per_trial", c.radar.rmse.chirps_per_trial);
  rm.get("min_range", c.radar.rmse.min_range);

  Reader m = top.section("metrics");
  m.allow({"codewords", "segments", "chirp_duration", "doppler_points"});
  m.get("codewords", c.metrics.codewords);
  m.get("segments", c.metrics.segments);
  m.get("chirp_duration", c.metrics.chirp_duration);
  m.get("doppler_points", c.metrics.doppler_points);

  Reader s = top.section("sweep");
  s.allow({"segments", "psk_orders", "chirp_durations", "betas"});
  s.get("segments", c.sweep.segments);
  s.get("psk_orders", c.sweep.psk_orders);
  s.get("chirp_durations", c.sweep.chirp_durations);
  s.get("betas", c.sweep.betas);

  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace isac
