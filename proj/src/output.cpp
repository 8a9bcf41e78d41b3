#include "dicke/output.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dicke {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

namespace {

// FIPS 180-4 SHA-256, enough for manifest checksums.
class Sha256 {
 public:
  void update(const void* data, size_t len) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    total_ += len;
    while (len > 0) {
      const size_t take = std::min(len, size_t{64} - buflen_);
      std::memcpy(buf_ + buflen_, p, take);
      buflen_ += take;
      p += take;
      len -= take;
      if (buflen_ == 64) {
        process(buf_);
        buflen_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const uint64_t bits = total_ * 8;
    uint8_t pad[72] = {0x80};
    const size_t pad_len = (buflen_ < 56) ? (56 - buflen_) : (120 - buflen_);
    update(pad, pad_len);
    uint8_t len_be[8];
    for (int i = 0; i < 8; ++i) len_be[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
    update(len_be, 8);
    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h_[i]);
    return std::string(out, 64);
  }

 private:
  static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void process(const uint8_t* p) {
    static constexpr uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
        0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
        0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
        0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
        0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
        0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (uint32_t(p[4 * i]) << 24) | (uint32_t(p[4 * i + 1]) << 16) |
             (uint32_t(p[4 * i + 2]) << 8) | uint32_t(p[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4], f = h_[5],
             g = h_[6], h = h_[7];
    for (int i = 0; i < 64; ++i) {
      const uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const uint32_t ch = (e & f) ^ (~e & g);
      const uint32_t t1 = h + s1 + ch + k[i] + w[i];
      const uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const uint32_t t2 = s0 + maj;
      h = g; g = f; f = e; e = d + t1;
      d = c; c = b; b = a; a = t1 + t2;
    }
    h_[0] += a; h_[1] += b; h_[2] += c; h_[3] += d;
    h_[4] += e; h_[5] += f; h_[6] += g; h_[7] += h;
  }

  uint32_t h_[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                    0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  uint64_t total_ = 0;
  uint8_t buf_[64];
  size_t buflen_ = 0;
};

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

json params_json(const ModelParams& p) {
  return json{{"n_atoms", p.n_atoms},       {"rabi", p.rabi},
              {"drive_phase", p.drive_phase}, {"gamma", p.gamma},
              {"n_bar", p.n_bar},           {"m_abs", p.m_abs},
              {"squeeze_phase", p.squeeze_phase}};
}

}  // namespace

std::string sha256_hex(const void* data, size_t len) {
  Sha256 s;
  s.update(data, len);
  return s.hex_digest();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256_file: cannot open " + path.string());
  Sha256 s;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    s.update(buf, static_cast<size_t>(in.gcount()));
  }
  return s.hex_digest();
}

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void OutputDir::write_text(const std::string& name, const std::string& contents) {
  write_binary(name, contents.data(), contents.size());
}

void OutputDir::write_binary(const std::string& name, const void* data, size_t len) {
  const auto path = root_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  out.close();
  entries_.push_back({name, sha256_hex(data, len), static_cast<uint64_t>(len)});
}

void OutputDir::write_manifest(const std::string& tool_version,
                               const std::string& config_json) {
  json manifest;
  manifest["created"] = iso8601_utc_now();
  manifest["tool_version"] = tool_version;
  if (!config_json.empty()) manifest["config"] = json::parse(config_json);
  manifest["files"] = json::array();
  for (const auto& e : entries_)
    manifest["files"].push_back({{"name", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  const std::string text = manifest.dump(2) + "\n";
  const auto path = root_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string spectrum_csv(const SpectrumResult& spec) {
  std::string out = "re_lambda,im_lambda,units\n";
  for (const Complex ev : spec.eigenvalues)
    out += format_double(ev.real()) + "," + format_double(ev.imag()) + "," +
           spec.units_tag + "\n";
  return out;
}

std::string gaps_json(const GapSummary& gaps, const std::string& units_tag) {
  json j;
  j["delta_1"] = gaps.delta_1 ? json(*gaps.delta_1) : json(nullptr);
  j["delta_2"] = gaps.delta_2 ? json(*gaps.delta_2) : json(nullptr);
  j["delta_omega"] = gaps.delta_omega ? json(*gaps.delta_omega) : json(nullptr);
  j["im_zero_tolerance"] = gaps.im_zero_tolerance;
  j["units"] = units_tag;
  return j.dump(2) + "\n";
}

std::string trace_csv(const TimeTrace& trace) {
  const bool with_var = !trace.var_x.empty();
  std::string out = "t,Sz_over_N,Sx_over_N,Sy_over_N";
  if (with_var) out += ",var_x,var_y";
  out += "\n";
  for (size_t i = 0; i < trace.times.size(); ++i) {
    out += format_double(trace.times[i]) + "," + format_double(trace.sz_over_n[i]) + "," +
           format_double(trace.sx_over_n[i]) + "," + format_double(trace.sy_over_n[i]);
    if (with_var)
      out += "," + format_double(trace.var_x[i]) + "," + format_double(trace.var_y[i]);
    out += "\n";
  }
  return out;
}

std::string fourier_csv(const FourierPeaks& peaks) {
  std::string out = "freq,amplitude\n";
  for (size_t i = 0; i < peaks.frequencies.size(); ++i)
    out += format_double(peaks.frequencies[i]) + "," + format_double(peaks.amplitudes[i]) +
           "\n";
  return out;
}

std::string wigner_csv(const WignerMap& map) {
  std::string out = "theta,phi,W\n";
  out.reserve(map.theta_grid.size() * map.phi_grid.size() * 60);
  for (size_t i = 0; i < map.theta_grid.size(); ++i)
    for (size_t p = 0; p < map.phi_grid.size(); ++p)
      out += format_double(map.theta_grid[i]) + "," + format_double(map.phi_grid[p]) + "," +
             format_double(map.values(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(p))) +
             "\n";
  return out;
}

std::vector<uint8_t> wigner_bin(const WignerMap& map) {
  // layout: magic[8], u32 version, u32 n_theta, u32 n_phi, u32 reserved,
  //         f64 theta0, dtheta, phi0, dphi, then row-major values
  std::vector<uint8_t> out;
  const char magic[8] = {'D', 'I', 'C', 'K', 'W', 'G', 'N', '1'};
  const uint32_t version = 1, n_theta = static_cast<uint32_t>(map.theta_grid.size()),
                 n_phi = static_cast<uint32_t>(map.phi_grid.size()), reserved = 0;
  const double header_d[4] = {map.theta_grid.front(),
                              map.theta_grid.size() > 1
                                  ? map.theta_grid[1] - map.theta_grid[0]
                                  : 0.0,
                              map.phi_grid.front(),
                              map.phi_grid.size() > 1 ? map.phi_grid[1] - map.phi_grid[0]
                                                      : 0.0};
  auto push = [&out](const void* p, size_t len) {
    const auto* b = static_cast<const uint8_t*>(p);
    out.insert(out.end(), b, b + len);
  };
  push(magic, 8);
  push(&version, 4);
  push(&n_theta, 4);
  push(&n_phi, 4);
  push(&reserved, 4);
  push(header_d, sizeof(header_d));
  for (uint32_t i = 0; i < n_theta; ++i)
    for (uint32_t p = 0; p < n_phi; ++p) {
      const double v = map.values(i, p);
      push(&v, 8);
    }
  return out;
}

std::string occupation_csv(const OccupationDistribution& dist) {
  std::string out = "m,p_m\n";
  for (size_t i = 0; i < dist.m_values.size(); ++i)
    out += format_double(dist.m_values[i]) + "," + format_double(dist.probabilities[i]) +
           "\n";
  return out;
}

std::string sweep_csv(const SweepTable& table) {
  std::string out =
      "point,n_atoms,rabi,gamma,n_bar,m_abs,drive_phase,squeeze_phase,"
      "Sz_over_N,Sx_over_N,Sy_over_N,var_x,var_y,delta_1,delta_2,delta_omega,error\n";
  for (const auto& r : table.rows) {
    const auto& p = r.params;
    out += format_double(r.point) + "," + std::to_string(p.n_atoms) + "," +
           format_double(p.rabi) + "," + format_double(p.gamma) + "," +
           format_double(p.n_bar) + "," + format_double(p.m_abs) + "," +
           format_double(p.drive_phase) + "," + format_double(p.squeeze_phase) + "," +
           opt_cell(r.sz_over_n) + "," + opt_cell(r.sx_over_n) + "," +
           opt_cell(r.sy_over_n) + "," + opt_cell(r.var_x) + "," + opt_cell(r.var_y) + "," +
           opt_cell(r.gaps.delta_1) + "," + opt_cell(r.gaps.delta_2) + "," +
           opt_cell(r.gaps.delta_omega) + "," + csv_quote(r.error) + "\n";
  }
  return out;
}

std::string sweep_meta_json(const SweepTable& table, const std::string& tool_version) {
  json j;
  switch (table.plan.axis) {
    case SweepAxis::drive: j["axis"] = "drive"; break;
    case SweepAxis::n_bar: j["axis"] = "n_bar"; break;
    case SweepAxis::size: j["axis"] = "size"; break;
  }
  j["points"] = table.plan.points;
  j["base_params"] = params_json(table.plan.base);
  j["perfect_squeezing"] = table.plan.perfect_squeezing;
  j["want_observables"] = table.plan.want_observables;
  j["want_variances"] = table.plan.want_variances;
  j["want_gaps"] = table.plan.want_gaps;
  j["k"] = table.plan.k;
  j["max_k"] = table.plan.max_k;
  j["n_harmonics"] = table.plan.n_harmonics;
  j["workers"] = table.plan.workers;
  j["tolerances"] = {{"residual_tol", table.plan.spectral.residual_tol},
                     {"im_zero_tolerance", table.plan.spectral.im_zero_tolerance},
                     {"steady_residual_tol", table.plan.spectral.steady_residual_tol},
                     {"dense_cap", table.plan.spectral.dense_cap}};
  j["started_at"] = table.started_at;
  j["finished_at"] = table.finished_at;
  j["tool_version"] = tool_version;
  j["units"] = "NGamma/2";
  return j.dump(2) + "\n";
}

std::string branches_csv(const SizeScanResult& scan) {
  std::string out =
      "branch,n_atoms,re_lambda,im_lambda,is_complex,flagged,"
      "fit_slope,fit_intercept,fit_residual_rms,fit_intercept_stderr\n";
  for (size_t b = 0; b < scan.branches.size(); ++b) {
    const auto& br = scan.branches[b];
    for (size_t i = 0; i < br.n_values.size(); ++i) {
      out += std::to_string(b) + "," + format_double(br.n_values[i]) + "," +
             format_double(br.lambdas[i].real()) + "," +
             format_double(br.lambdas[i].imag()) + "," +
             (br.is_complex ? "1" : "0") + "," + (br.flagged ? "1" : "0") + "," +
             format_double(br.re_fit.slope) + "," + format_double(br.re_fit.intercept) +
             "," + format_double(br.re_fit.residual_rms) + "," +
             format_double(br.re_fit.intercept_stderr) + "\n";
    }
  }
  return out;
}

}  // namespace dicke
