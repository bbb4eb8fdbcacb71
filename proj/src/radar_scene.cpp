#include "isac/harness.hpp"

#include <algorithm>

namespace isac {

namespace {

Codebook radar_codebook(const ScenarioConfig& cfg) {
  CodebookConfig w = cfg.waveform;
  if (cfg.radar.chirp_duration > 0) w.chirp_duration = cfg.radar.chirp_duration;
  return build_codebook(w);
}

double radar_carrier(const ScenarioConfig& cfg) {
  return cfg.radar.carrier_freq > 0 ? cfg.radar.carrier_freq : cfg.carrier_freq;
}

RangeGrid radar_grid(const ScenarioConfig& cfg, const Codebook& cb) {
  const double spacing =
      cfg.radar.range_spacing > 0 ? cfg.radar.range_spacing : kSpeedOfLight / (4 * cb.mean_bandwidth());
  return make_range_grid(cfg.radar.max_range, spacing);
}

Eigen::Index spread(const std::vector<Eigen::Index>& bins) {
  const auto [lo, hi] = std::minmax_element(bins.begin(), bins.end());
  return *hi - *lo;
}

}  // namespace

ChirpParams random_chirp(const Codebook& cb, std::mt19937_64& rng, Polarization p) {
  std::uniform_int_distribution<std::size_t> entry(0, cb.used_entry_count() - 1);
  std::uniform_int_distribution<int> symbol(0, cb.psk_order - 1);
  const std::size_t e = entry(rng);
  std::vector<int> symbols(cb.segments);
  for (auto& s : symbols) s = symbol(rng);
  return make_chirp_params(e, symbols, p, cb);
}

RadarSceneResult run_radar_scene(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.radar.targets.empty()) throw Error("radar scene: no targets");
  const Codebook cb = radar_codebook(cfg);
  const double carrier = radar_carrier(cfg);
  const double f_ref = cb.mean_center_freq();
  const double b_ref = cb.mean_bandwidth();

  RadarSceneResult res;
  res.grid = radar_grid(cfg, cb);
  std::mt19937_64 rng(mix_seed(cfg.seed, 10));
  std::vector<IqBuffer> deramped;
  for (int i = 0; i < cfg.radar.chirps; ++i) {
    res.chirps.push_back(random_chirp(cb, rng));
    const IqBuffer tx = synth_chirp(res.chirps.back(), cb);
    RadarEchoConfig ec;
    ec.carrier_freq = carrier;
    ec.snr_db = cfg.radar.snr_db;
    ec.seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i));
    ec.start_time = i * cb.chirp_duration;
    deramped.push_back(decimate(deramp(apply_radar_echo(tx, cfg.radar.targets, ec), tx), cfg.radar.decimation));
  }

  const AlignOptions opt{cfg.radar.hann_range};
  const CMat aligned = range_align(deramped, res.chirps, res.grid, opt);
  const CMat corrected = phase_correct(aligned, res.chirps, res.grid, f_ref, b_ref);
  const CMat naive = naive_range_profile(deramped, b_ref / cb.chirp_duration, res.grid, opt);
  res.corrected = doppler_map(corrected, res.grid, cb.chirp_duration, carrier, cfg.radar.hann_doppler);
  res.naive = doppler_map(naive, res.grid, cb.chirp_duration, carrier, cfg.radar.hann_doppler);
  for (auto* m : {&res.corrected, &res.naive}) {
    m->reference_bandwidth = b_ref;
    m->reference_center = f_ref;
  }
  res.detections = extract_targets(res.corrected, cfg.radar.threshold_db);
  res.naive_detections = extract_targets(res.naive, cfg.radar.threshold_db);

  for (const auto& t : cfg.radar.targets) {
    const Eigen::Index lo = res.grid.nearest(0.7 * t.range);
    const Eigen::Index hi = res.grid.nearest(1.3 * t.range);
    res.corrected_spread.push_back(spread(per_chirp_peak_bins(aligned, lo, hi)));
    res.naive_spread.push_back(spread(per_chirp_peak_bins(naive, lo, hi)));
  }
  return res;
}

std::vector<RmseRow> run_range_rmse(const ScenarioConfig& cfg) {
  cfg.validate();
  const Codebook cb = radar_codebook(cfg);
  const double carrier = radar_carrier(cfg);
  const RangeGrid grid = radar_grid(cfg, cb);
  const auto& rc = cfg.radar.rmse;
  const int per_trial = rc.chirps_per_trial;

  std::vector<RmseRow> rows;
  for (double snr : rc.snr_db) {
    std::vector<double> sq(static_cast<std::size_t>(rc.trials), 0.0);
    const Eigen::Index samples = (cb.samples_per_chirp() + cfg.radar.decimation - 1) / cfg.radar.decimation;
    parallel_for(rc.trials, cfg.threads, [&](int trial) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
      std::mt19937_64 rng(mix_seed(seed, 20));
      const double truth = rc.min_range + std::uniform_real_distribution<double>(0, 1)(rng) * grid.spacing;
      const std::vector<RadarTarget> target{{truth, 0.0, 0.0}};
      double acc = 0;
      for (int i = 0; i < per_trial; ++i) {
        const ChirpParams p = random_chirp(cb, rng);
        const IqBuffer tx = synth_chirp(p, cb);
        RadarEchoConfig ec;
        ec.carrier_freq = carrier;
        ec.snr_db = snr;
        ec.seed = mix_seed(seed, 2000 + static_cast<std::uint64_t>(i));
        ec.start_time = i * cb.chirp_duration;
        const IqBuffer y = decimate(deramp(apply_radar_echo(tx, target, ec), tx), cfg.radar.decimation);
        const double e = estimate_range(y, p.slope(), grid) - truth;
        acc += e * e;
      }
      sq[static_cast<std::size_t>(trial)] = acc;
    });
    double total = 0;
    for (double v : sq) total += v;
    RmseRow r;
    r.snr_db = snr;
    r.estimates = static_cast<std::size_t>(rc.trials) * static_cast<std::size_t>(per_trial);
    r.rmse = std::sqrt(total / static_cast<double>(r.estimates));
    r.rcrlb = crlb_range({from_db10(snr), samples, cb.bandwidth_options}).rcrlb;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace isac
