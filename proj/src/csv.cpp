#include "isac/harness.hpp"

#include <cstdio>
#include <ostream>

namespace isac {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0 ? 0.0 : v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (filled_ == columns_) throw Error("csv: too many cells in row");
  out_ << (filled_ ? "," : "") << v;
  ++filled_;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw Error("csv: row has " + std::to_string(filled_) + " of " + std::to_string(columns_) + " cells");
  out_ << "\n";
  filled_ = 0;
}

void write_link_csv(std::ostream& out, const std::vector<LinkRow>& rows) {
  CsvWriter w(out, {"snr_db", "im_block_error", "pm_block_error", "nmse_db", "throughput_bps", "rate_bps",
                    "max_rate_bps", "bit_errors", "chirps"});
  for (const auto& r : rows) {
    w.cell(r.snr_db).cell(r.im_block_error).cell(r.pm_block_error).cell(r.nmse_db).cell(r.throughput).cell(r.rate);
    w.cell(r.max_rate).cell(static_cast<long long>(r.bit_errors)).cell(static_cast<long long>(r.chirps));
    w.end_row();
  }
}

void write_nmse_csv(std::ostream& out, const std::vector<NmseRow>& rows) {
  CsvWriter w(out, {"snr_db", "nmse_db"});
  for (const auto& r : rows) {
    w.cell(r.snr_db).cell(r.nmse_db);
    w.end_row();
  }
}

void write_rd_map_csv(std::ostream& out, const RangeDopplerMap& map) {
  CsvWriter w(out, {"range_m", "velocity_mps", "power_db"});
  const double peak = map.cells.cwiseAbs2().maxCoeff();
  for (Eigen::Index m = 0; m < map.cells.rows(); ++m)
    for (Eigen::Index k = 0; k < map.cells.cols(); ++k) {
      const double p = std::norm(map.cells(m, k));
      w.cell(map.range_axis[m]).cell(map.velocity_axis[k]).cell(p > 0 ? std::max(kFloorDb, db10(p / peak)) : kFloorDb);
      w.end_row();
    }
}

void write_detections_csv(std::ostream& out, const std::vector<Detection>& corrected, const std::vector<Detection>& naive) {
  CsvWriter w(out, {"pipeline", "rank", "range_m", "velocity_mps", "power_db"});
  auto emit = [&](const char* name, const std::vector<Detection>& d) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      w.cell(std::string(name)).cell(static_cast<long long>(i)).cell(d[i].range).cell(d[i].velocity).cell(d[i].power_db);
      w.end_row();
    }
  };
  emit("corrected", corrected);
  emit("naive", naive);
}

void write_rmse_csv(std::ostream& out, const std::vector<RmseRow>& rows) {
  CsvWriter w(out, {"snr_db", "rmse_m", "rcrlb_m", "estimates"});
  for (const auto& r : rows) {
    w.cell(r.snr_db).cell(r.rmse).cell(r.rcrlb).cell(static_cast<long long>(r.estimates));
    w.end_row();
  }
}

void write_isl_csv(std::ostream& out, const std::vector<IslRow>& rows) {
  CsvWriter w(out, {"segments", "pm_bits", "isl_db"});
  for (const auto& r : rows) {
    w.cell(static_cast<long long>(r.segments)).cell(static_cast<long long>(r.pm_bits)).cell(r.isl_db);
    w.end_row();
  }
}

void write_oob_csv(std::ostream& out, const std::vector<OobRow>& rows) {
  CsvWriter w(out, {"segments", "smoothing", "oob_db"});
  for (const auto& r : rows) {
    w.cell(static_cast<long long>(r.segments)).cell(std::string("gaussian")).cell(r.smoothed_db);
    w.end_row();
    w.cell(static_cast<long long>(r.segments)).cell(std::string("none")).cell(r.rectangular_db);
    w.end_row();
  }
}

void write_crlb_csv(std::ostream& out, const std::vector<CrlbRow>& rows) {
  CsvWriter w(out, {"snr_db", "bandwidth_hz", "crlb_m2", "root_m"});
  for (const auto& r : rows) {
    w.cell(r.snr_db).cell(r.bandwidth).cell(r.crlb).cell(std::sqrt(r.crlb));
    w.end_row();
  }
}

void write_af_csv(std::ostream& out, const AmbiguitySurface& s) {
  CsvWriter w(out, {"delay_s", "doppler_hz", "af"});
  for (Eigen::Index j = 0; j < s.values.cols(); ++j)
    for (Eigen::Index k = 0; k < s.values.rows(); ++k) {
      w.cell(s.delay_axis[k]).cell(s.doppler_axis[j]).cell(s.values(k, j));
      w.end_row();
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  CsvWriter w(out, {"segments", "psk_order", "chirp_duration_s", "beta", "pm_bits", "max_rate_bps", "isl_db", "oob_db"});
  for (const auto& r : rows) {
    w.cell(static_cast<long long>(r.segments)).cell(static_cast<long long>(r.psk_order)).cell(r.chirp_duration);
    w.cell(r.beta).cell(static_cast<long long>(r.pm_bits)).cell(r.max_rate).cell(r.isl_db).cell(r.oob_db);
    w.end_row();
  }
}

}  // namespace isac
