#include "isac/harness.hpp"

namespace isac {

Codebook codebook_with(const ScenarioConfig& cfg, int segments, double chirp_duration, double beta, int psk_order) {
  CodebookConfig w = cfg.waveform;
  w.segments = segments;
  w.chirp_duration = chirp_duration;
  w.beta = beta;
  if (psk_order > 0) w.psk_order = psk_order;
  return build_codebook(w);
}

double mean_isl(const Codebook& cb, int codewords, std::uint64_t seed) {
  if (codewords < 1) throw Error("mean_isl: need at least one codeword");
  std::mt19937_64 rng(mix_seed(seed, 30));
  RVec acc;
  for (int c = 0; c < codewords; ++c) {
    const RVec cut = zero_doppler_cut(synth_chirp(random_chirp(cb, rng), cb));
    if (acc.size() == 0) acc = RVec::Zero(cut.size());
    acc += cut;
  }
  acc /= codewords;
  const RVec axis = lag_axis(cb.samples_per_chirp(), cb.sample_rate);
  return isl(axis, acc, default_isl_bounds(axis, acc));
}

double mean_oob(const Codebook& cb, int codewords, std::uint64_t seed) {
  if (codewords < 1) throw Error("mean_oob: need at least one codeword");
  std::mt19937_64 rng(mix_seed(seed, 40));
  double acc = 0;
  for (int c = 0; c < codewords; ++c) {
    const ChirpParams p = random_chirp(cb, rng);
    acc += oob_fraction(synth_chirp(p, cb), p.center_freq, p.bandwidth);
  }
  return acc / codewords;
}

AmbiguitySurface mean_ambiguity(const Codebook& cb, int codewords, std::uint64_t seed, int doppler_points) {
  if (codewords < 1) throw Error("mean_ambiguity: need at least one codeword");
  std::mt19937_64 rng(mix_seed(seed, 50));
  const RVec doppler = default_doppler_axis(cb.chirp_duration, doppler_points);
  AmbiguitySurface mean;
  for (int c = 0; c < codewords; ++c) {
    const IqBuffer x = synth_chirp(random_chirp(cb, rng), cb);
    AmbiguitySurface s = ambiguity(x, x.size() - 1, doppler);
    if (c == 0) {
      mean = std::move(s);
    } else {
      mean.values += s.values;
    }
  }
  mean.values /= codewords;
  return mean;
}

std::vector<IslRow> isl_table(const ScenarioConfig& cfg) {
  std::vector<IslRow> rows;
  for (int l : cfg.metrics.segments) {
    const Codebook cb = codebook_with(cfg, l, cfg.metrics.chirp_duration, cfg.waveform.beta);
    rows.push_back({l, cb.pm_bits(), mean_isl(cb, cfg.metrics.codewords, cfg.seed)});
  }
  return rows;
}

std::vector<OobRow> oob_table(const ScenarioConfig& cfg) {
  std::vector<OobRow> rows;
  for (int l : cfg.metrics.segments) {
    const Codebook smooth = codebook_with(cfg, l, cfg.metrics.chirp_duration, cfg.waveform.beta);
    const Codebook rect = codebook_with(cfg, l, cfg.metrics.chirp_duration, 0.0);
    rows.push_back({l, mean_oob(smooth, cfg.metrics.codewords, cfg.seed), mean_oob(rect, cfg.metrics.codewords, cfg.seed)});
  }
  return rows;
}

std::vector<CrlbRow> crlb_table(const ScenarioConfig& cfg) {
  CodebookConfig w = cfg.waveform;
  if (cfg.radar.chirp_duration > 0) w.chirp_duration = cfg.radar.chirp_duration;
  const Codebook cb = build_codebook(w);
  const Eigen::Index samples = (cb.samples_per_chirp() + cfg.radar.decimation - 1) / cfg.radar.decimation;
  std::vector<CrlbRow> rows;
  for (double snr : cfg.radar.rmse.snr_db) {
    const CrlbResult r = crlb_range({from_db10(snr), samples, cb.bandwidth_options});
    for (std::size_t i = 0; i < r.per_bandwidth.size(); ++i) rows.push_back({snr, cb.bandwidth_options[i], r.per_bandwidth[i]});
    rows.push_back({snr, 0.0, r.average});
  }
  return rows;
}

std::vector<SweepRow> run_parameter_sweep(const ScenarioConfig& cfg) {
  const auto& s = cfg.sweep;
  const std::vector<int> orders = s.psk_orders.empty() ? std::vector<int>{cfg.waveform.psk_order} : s.psk_orders;
  const std::vector<double> durations =
      s.chirp_durations.empty() ? std::vector<double>{cfg.waveform.chirp_duration} : s.chirp_durations;
  const std::vector<double> betas = s.betas.empty() ? std::vector<double>{cfg.waveform.beta} : s.betas;
  std::vector<SweepRow> rows;
  for (double tc : durations)
    for (double beta : betas)
      for (int m : orders)
        for (int l : s.segments) {
          const Codebook cb = codebook_with(cfg, l, tc, beta, m);
          SweepRow r;
          r.segments = l;
          r.psk_order = m;
          r.chirp_duration = tc;
          r.beta = beta;
          r.pm_bits = cb.pm_bits();
          r.max_rate = cb.max_rate();
          r.isl_db = mean_isl(cb, cfg.metrics.codewords, cfg.seed);
          r.oob_db = mean_oob(cb, cfg.metrics.codewords, cfg.seed);
          rows.push_back(r);
        }
  return rows;
}

}  // namespace isac
