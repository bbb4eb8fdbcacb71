#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace isac {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t salt) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

struct Tally {
  std::size_t im_errors = 0;
  std::size_t pm_errors = 0;
  std::size_t good_bits = 0;
  std::size_t bit_errors = 0;
  std::size_t chirps = 0;
  double nmse_err = 0;
  double nmse_ref = 0;

  void add(const Tally& o) {
    im_errors += o.im_errors;
    pm_errors += o.pm_errors;
    good_bits += o.good_bits;
    bit_errors += o.bit_errors;
    chirps += o.chirps;
    nmse_err += o.nmse_err;
    nmse_ref += o.nmse_ref;
  }
};

void accumulate_nmse(Tally& t, const ChannelEstimate& est, const ChannelTruth& truth,
                     const std::vector<Eigen::Index>& bins) {
  for (Eigen::Index k : bins) {
    t.nmse_err += std::norm(est.h_v.bins[k] - truth.v[k]) + std::norm(est.h_h.bins[k] - truth.h[k]);
    t.nmse_ref += std::norm(truth.v[k]) + std::norm(truth.h[k]);
  }
}

IqBuffer aligned_slice(const IqBuffer& rx, Eigen::Index offset, Eigen::Index length) {
  CVec out = CVec::Zero(length);
  const Eigen::Index n = std::min(length, rx.size() - offset);
  if (n > 0) out.head(n) = rx.samples.segment(offset, n);
  return {std::move(out), rx.sample_rate};
}

ChannelEstimate estimate_from(const CommChannelOutput& out, const IqBuffer& pilot, Eigen::Index ns) {
  return estimate_channel(out.rx_v.slice(0, ns), out.rx_h.slice(0, ns), pilot, pilot, NoiseLevels::from(out));
}

double pilot_reference_time(const Codebook& cb) { return static_cast<double>(cb.samples_per_chirp()) / 2.0 / cb.sample_rate; }

}  // namespace

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(threads, count); ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<LinkRow> run_link_sweep(const ScenarioConfig& cfg) {
  cfg.validate();
  const Codebook cb = build_codebook(cfg.waveform);
  const CommReceiver receiver(cb);
  const auto ns = cb.samples_per_chirp();
  const auto frame_len = ns * cb.chirps_per_frame;
  const auto bins = occupied_bins(cb);
  const std::size_t points = cfg.snr_db.size();
  std::vector<std::vector<Tally>> tallies(static_cast<std::size_t>(cfg.trials), std::vector<Tally>(points));

  parallel_for(cfg.trials, cfg.threads, [&](int trial) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
    std::mt19937_64 data_rng(mix_seed(seed, 0));
    const Frame frame = build_frame(random_bits(static_cast<std::size_t>(cb.bits_per_codeword()) *
                                                    static_cast<std::size_t>(cb.chirps_per_frame - 1),
                                                data_rng),
                                    cb);
    const IqBuffer tx_v = frame.stream(Polarization::V);
    const IqBuffer tx_h = frame.stream(Polarization::H);
    const ChannelRealization real = cfg.channel_model == ChannelModel::Rician
                                        ? draw_realization(cfg.channel_at(0), mix_seed(seed, 1))
                                        : identity_realization(cfg.channel_at(0));
    for (std::size_t p = 0; p < points; ++p) {
      const CommChannelConfig ch = cfg.channel_at(cfg.snr_db[p]);
      const CommChannelOutput out = apply_comm_channel(tx_v, tx_h, ch, real, mix_seed(seed, 2));
      Tally& t = tallies[static_cast<std::size_t>(trial)][p];
      t.chirps = frame.codewords.size();
      Eigen::Index offset = 0;
      try {
        offset = synchronize(out.rx_v, frame.pilot_v);
      } catch (const Error&) {
        t.im_errors = t.pm_errors = 2 * t.chirps;
        t.bit_errors = t.chirps * static_cast<std::size_t>(cb.bits_per_codeword());
        continue;
      }
      CommChannelOutput aligned = out;
      aligned.rx_v = aligned_slice(out.rx_v, offset, frame_len);
      aligned.rx_h = aligned_slice(out.rx_h, offset, frame_len);
      const ChannelEstimate est = estimate_from(aligned, frame.pilot_v, ns);
      accumulate_nmse(t, est, channel_response(ch, real, cb.sample_rate, ns, pilot_reference_time(cb)), bins);
      const FrameDecode dec = decode_frame(aligned.rx_v, aligned.rx_h, receiver, est);
      const LinkStats s = link_stats(dec.chirps, frame.codewords, cb);
      const double blocks = 2.0 * static_cast<double>(s.chirps);
      t.im_errors = static_cast<std::size_t>(std::llround(s.im_block_error * blocks));
      t.pm_errors = static_cast<std::size_t>(std::llround(s.pm_block_error * blocks));
      t.good_bits = static_cast<std::size_t>(std::llround(s.measured_rate * static_cast<double>(s.chirps) * cb.chirp_duration));
      t.bit_errors = s.bit_errors;
    }
  });

  std::vector<LinkRow> rows;
  for (std::size_t p = 0; p < points; ++p) {
    Tally total;
    for (const auto& per_trial : tallies) total.add(per_trial[p]);
    LinkRow r;
    r.snr_db = cfg.snr_db[p];
    const double blocks = 2.0 * static_cast<double>(total.chirps);
    r.im_block_error = static_cast<double>(total.im_errors) / blocks;
    r.pm_block_error = static_cast<double>(total.pm_errors) / blocks;
    r.nmse_db = total.nmse_ref > 0 ? (total.nmse_err > 0 ? std::max(kFloorDb, db10(total.nmse_err / total.nmse_ref)) : kFloorDb)
                                   : kFloorDb;
    r.throughput = static_cast<double>(total.good_bits) / (static_cast<double>(total.chirps) * cb.chirp_duration);
    r.rate = instantaneous_rate(r.im_block_error, r.pm_block_error, cb);
    r.max_rate = cb.max_rate();
    r.bit_errors = total.bit_errors;
    r.chirps = total.chirps;
    rows.push_back(r);
  }
  return rows;
}

std::vector<NmseRow> run_nmse_sweep(const ScenarioConfig& cfg) {
  cfg.validate();
  const Codebook cb = build_codebook(cfg.waveform);
  const IqBuffer pilot = pilot_chirp(cb);
  const auto ns = cb.samples_per_chirp();
  const auto bins = occupied_bins(cb);
  const std::size_t points = cfg.snr_db.size();
  std::vector<std::vector<Tally>> tallies(static_cast<std::size_t>(cfg.trials), std::vector<Tally>(points));

  parallel_for(cfg.trials, cfg.threads, [&](int trial) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(trial);
    const ChannelRealization real = cfg.channel_model == ChannelModel::Rician
                                        ? draw_realization(cfg.channel_at(0), mix_seed(seed, 1))
                                        : identity_realization(cfg.channel_at(0));
    for (std::size_t p = 0; p < points; ++p) {
      const CommChannelConfig ch = cfg.channel_at(cfg.snr_db[p]);
      const CommChannelOutput out = apply_comm_channel(pilot, pilot, ch, real, mix_seed(seed, 2));
      const ChannelEstimate est = estimate_from(out, pilot, ns);
      accumulate_nmse(tallies[static_cast<std::size_t>(trial)][p], est,
                      channel_response(ch, real, cb.sample_rate, ns, pilot_reference_time(cb)), bins);
    }
  });

  std::vector<NmseRow> rows;
  for (std::size_t p = 0; p < points; ++p) {
    Tally total;
    for (const auto& per_trial : tallies) total.add(per_trial[p]);
    const double ratio = total.nmse_err / total.nmse_ref;
    rows.push_back({cfg.snr_db[p], ratio > 0 ? std::max(kFloorDb, db10(ratio)) : kFloorDb});
  }
  return rows;
}

}  // namespace isac
