#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "conecraft/density.hpp"
#include "conecraft/geometry.hpp"
#include "conecraft/leveling.hpp"
#include "conecraft/simulate.hpp"
#include "conecraft/skorokhod.hpp"
#include "json.hpp"

namespace conecraft {

/// 17 significant digits, '.' decimal point, no locale dependence.
std::string format_double(double value);

/// Minimal CSV builder; fields are numbers or plain identifiers (no quoting).
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& field(double value);
  CsvWriter& field(std::size_t value);
  CsvWriter& field(const std::string& value);
  void end_row();
  const std::string& str() const { return text_; }

 private:
  std::string text_;
  bool fresh_ = true;
};

/// Columns t, Z1..Zk, Y1..YN.
std::string path_csv(const SimPath& path, int faces);
/// Columns t, psi1..k, phi1..k, eta1..k, tv.
std::string reflected_path_csv(const ReflectedPath& path);
std::string floor_csv(const FloorReport& report);
std::string gap_csv(const GapCurve& curve);

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const FloorReport& report);
nlohmann::json to_json(const GapCurve& curve);

/// Increment record: 16-byte header (uint32 magic, uint32 k, uint64 step
/// count) followed by step count * k little-endian IEEE doubles.
inline constexpr std::uint32_t kIncrementMagic = 0x434E4357u;  // "WCNC" on disk
void write_increments(const std::filesystem::path& file, int dim, const std::vector<Vec>& increments);
std::vector<Vec> read_increments(const std::filesystem::path& file);

/// Two-column (t, value) CSV with an optional header line.
PiecewisePath read_path_csv(const std::string& text);

void write_text_file(const std::filesystem::path& file, const std::string& content);
std::string read_text_file(const std::filesystem::path& file);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

}  // namespace conecraft
