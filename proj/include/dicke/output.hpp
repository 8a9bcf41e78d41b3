#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dicke/dynamics.hpp"
#include "dicke/observables.hpp"
#include "dicke/spectral.hpp"
#include "dicke/sweeps.hpp"

namespace dicke {

// Shortest representation that round-trips a double (up to 17 significant
// digits, '.' decimal separator, lowercase 'e').
std::string format_double(double v);

std::string iso8601_utc_now();

std::string sha256_hex(const void* data, size_t len);
std::string sha256_file(const std::filesystem::path& path);

/// Collects every artifact written during one run and emits manifest.json.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Writes bytes and records the file in the manifest.
  void write_text(const std::string& name, const std::string& contents);
  void write_binary(const std::string& name, const void* data, size_t len);

  void write_manifest(const std::string& tool_version, const std::string& config_json);

 private:
  struct Entry {
    std::string name;
    std::string sha256;
    uint64_t bytes;
  };
  std::filesystem::path root_;
  std::vector<Entry> entries_;
};

// CSV / JSON serializers (comma-separated, '.' decimal, LF endings,
// 17-significant-digit round-trip formatting).
std::string spectrum_csv(const SpectrumResult& spec);
std::string gaps_json(const GapSummary& gaps, const std::string& units_tag);
std::string trace_csv(const TimeTrace& trace);
std::string fourier_csv(const FourierPeaks& peaks);
std::string wigner_csv(const WignerMap& map);
std::vector<uint8_t> wigner_bin(const WignerMap& map);
std::string occupation_csv(const OccupationDistribution& dist);
std::string sweep_csv(const SweepTable& table);
std::string sweep_meta_json(const SweepTable& table, const std::string& tool_version);
std::string branches_csv(const SizeScanResult& scan);

}  // namespace dicke
