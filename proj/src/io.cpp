#include "conecraft/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "conecraft/errors.hpp"

namespace conecraft {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_u64(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
  for (const auto& h : header) field(h);
  end_row();
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(std::size_t value) { return field(std::to_string(value)); }

CsvWriter& CsvWriter::field(const std::string& value) {
  if (!fresh_) text_.push_back(',');
  text_ += value;
  fresh_ = false;
  return *this;
}

void CsvWriter::end_row() {
  text_.push_back('\n');
  fresh_ = true;
}

std::string path_csv(const SimPath& path, int faces) {
  const int k = path.z.empty() ? 0 : static_cast<int>(path.z.front().size());
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= k; ++i) header.push_back("Z" + std::to_string(i));
  for (int i = 1; i <= faces; ++i) header.push_back("Y" + std::to_string(i));
  CsvWriter csv(header);
  for (std::size_t j = 0; j < path.times.size(); ++j) {
    csv.field(path.times[j]);
    for (int i = 0; i < k; ++i) csv.field(path.z[j][i]);
    for (int i = 0; i < faces; ++i) csv.field(path.pushes[j][i]);
    csv.end_row();
  }
  return csv.str();
}

std::string reflected_path_csv(const ReflectedPath& path) {
  const int k = path.phi.empty() ? 0 : static_cast<int>(path.phi.front().size());
  std::vector<std::string> header{"t"};
  for (const char* name : {"psi", "phi", "eta"})
    for (int i = 1; i <= k; ++i) header.push_back(name + std::to_string(i));
  header.push_back("tv");
  CsvWriter csv(header);
  for (std::size_t j = 0; j < path.times.size(); ++j) {
    csv.field(path.times[j]);
    for (const auto* series : {&path.psi, &path.phi, &path.eta})
      for (int i = 0; i < k; ++i) csv.field((*series)[j][i]);
    csv.field(path.total_variation[j]);
    csv.end_row();
  }
  return csv.str();
}

std::string floor_csv(const FloorReport& report) {
  const int k = report.rows.empty() ? 0 : static_cast<int>(report.rows.front().start.size());
  std::vector<std::string> header{"epsilon", "start_index"};
  for (int i = 1; i <= k; ++i) header.push_back("start" + std::to_string(i));
  for (const char* h : {"floor", "lcb99", "stderr", "min_count", "kappa0", "kappa0_stderr"}) header.push_back(h);
  CsvWriter csv(header);
  for (const auto& row : report.rows) {
    csv.field(row.epsilon).field(row.start_index);
    for (int i = 0; i < k; ++i) csv.field(row.start[i]);
    csv.field(row.floor).field(row.lcb99).field(row.std_error).field(static_cast<std::size_t>(row.min_count));
    csv.field(row.kappa0).field(row.kappa0_std_error);
    csv.end_row();
  }
  return csv.str();
}

std::string gap_csv(const GapCurve& curve) {
  CsvWriter csv({"epsilon", "gap", "stderr", "censor_rate"});
  for (const auto& p : curve.points) {
    csv.field(p.epsilon).field(p.gap).field(p.std_error).field(p.censor_rate);
    csv.end_row();
  }
  return csv.str();
}

nlohmann::json to_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", number(c.margin)}, {"detail", c.detail}});
  return {
      {"ok", report.ok()},
      {"checks", checks},
      {"interior_point", to_json(report.interior_point)},
      {"interior_margin", number(report.interior_margin)},
      {"spectrum",
       {{"min_real_part", number(report.spectrum.min_real_part)},
        {"max_real_part", number(report.spectrum.max_real_part)},
        {"spectral_radius", number(report.spectrum.spectral_radius)},
        {"offdiagonal_radius", number(report.spectrum.offdiagonal_radius)}}},
  };
}

nlohmann::json to_json(const FloorReport& report) {
  nlohmann::json eps = nlohmann::json::array(), floor = nlohmann::json::array(),
                 lcb = nlohmann::json::array(), se = nlohmann::json::array(),
                 counts = nlohmann::json::array(), kappa0 = nlohmann::json::array(),
                 kappa0_lcb = nlohmann::json::array(), inconclusive = nlohmann::json::array();
  for (const auto& e : report.per_epsilon) {
    eps.push_back(number(e.epsilon));
    floor.push_back(number(e.floor));
    lcb.push_back(number(e.lcb99));
    se.push_back(number(e.std_error));
    counts.push_back(e.min_count);
    kappa0.push_back(number(e.kappa0));
    kappa0_lcb.push_back(number(e.kappa0_lcb99));
    inconclusive.push_back(e.inconclusive);
  }
  const FloorGeometry& g = report.geometry;
  nlohmann::json out = {
      {"epsilon", eps},
      {"floor", floor},
      {"lcb99", lcb},
      {"stderr", se},
      {"min_count", counts},
      {"inconclusive", inconclusive},
      {"kappa_min", number(report.kappa_min)},
      {"verdict", to_string(report.verdict)},
      {"geometry",
       {{"kind", g.kind},
        {"center", to_json(g.center)},
        {"target_radius", number(g.target_radius)},
        {"shared_radius", number(g.shared_radius)},
        {"outer_radius", number(g.outer_radius)},
        {"time", number(g.time)},
        {"start_set", g.start_set},
        {"starts", g.starts},
        {"target_bins", g.target_bins}}},
      {"warnings", report.warnings},
  };
  if (g.kind == "minorization") {
    out["kappa0"] = kappa0;
    out["kappa0_lcb99"] = kappa0_lcb;
  }
  return out;
}

nlohmann::json to_json(const GapCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points)
    points.push_back({{"epsilon", number(p.epsilon)},
                      {"gap", number(p.gap)},
                      {"stderr", number(p.std_error)},
                      {"censor_rate", number(p.censor_rate)},
                      {"horizon", number(p.horizon)},
                      {"doublings", p.doublings},
                      {"replicas", p.replicas},
                      {"coalesced", p.coalesced},
                      {"censored", p.censored}});
  return {
      {"points", points},
      {"slope", curve.slope ? number(*curve.slope) : nlohmann::json(nullptr)},
      {"delta1_hat", curve.delta1_hat ? number(*curve.delta1_hat) : nlohmann::json(nullptr)},
      {"fit_points", curve.fit_points},
      {"censoring", curve.censoring},
      {"strictly_decreasing", curve.strictly_decreasing},
      {"bounded", curve.bounded},
      {"verdict", to_string(curve.verdict)},
  };
}

void write_increments(const std::filesystem::path& file, int dim, const std::vector<Vec>& increments) {
  require(dim >= 1, ErrorCode::Precondition, "increment dimension must be positive");
  std::string bytes;
  bytes.reserve(16 + increments.size() * static_cast<std::size_t>(dim) * 8);
  put_u32(bytes, kIncrementMagic);
  put_u32(bytes, static_cast<std::uint32_t>(dim));
  put_u64(bytes, increments.size());
  for (const Vec& dw : increments) {
    require(dw.size() == dim, ErrorCode::Precondition, "increment dimension mismatch");
    for (int i = 0; i < dim; ++i) put_u64(bytes, std::bit_cast<std::uint64_t>(dw[i]));
  }
  write_text_file(file, bytes);
}

std::vector<Vec> read_increments(const std::filesystem::path& file) {
  const std::string bytes = read_text_file(file);
  require(bytes.size() >= 16, ErrorCode::Io, "increment file too short: " + file.string());
  require(get_u64(bytes, 0, 4) == kIncrementMagic, ErrorCode::Io, "bad increment magic: " + file.string());
  const auto dim = static_cast<int>(get_u64(bytes, 4, 4));
  const std::uint64_t steps = get_u64(bytes, 8, 8);
  require(dim >= 1 && dim <= kMaxDim, ErrorCode::Io, "bad increment dimension");
  require(bytes.size() == 16 + steps * static_cast<std::uint64_t>(dim) * 8, ErrorCode::Io,
          "increment file size does not match its header");
  std::vector<Vec> out(steps, Vec(dim));
  std::size_t at = 16;
  for (auto& dw : out)
    for (int i = 0; i < dim; ++i, at += 8) dw[i] = std::bit_cast<double>(get_u64(bytes, at, 8));
  return out;
}

PiecewisePath read_path_csv(const std::string& text) {
  PiecewisePath path;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::Parse,
            "line " + std::to_string(line_no) + ": expected 't,value'");
    double t = 0.0, v = 0.0;
    const char* a = line.data();
    const auto r1 = std::from_chars(a, a + comma, t);
    const auto r2 = std::from_chars(a + comma + 1, a + line.size(), v);
    const bool numeric = r1.ec == std::errc() && r1.ptr == a + comma && r2.ec == std::errc() &&
                         r2.ptr == a + line.size();
    if (!numeric) {
      require(path.times.empty() && line_no == 1, ErrorCode::Parse,
              "line " + std::to_string(line_no) + ": non-numeric field");
      continue;  // header
    }
    path.times.push_back(t);
    path.values.push_back(make_vec({v}));
  }
  require(!path.times.empty(), ErrorCode::Parse, "path CSV has no data rows");
  path.check();
  return path;
}

void write_text_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open for writing: " + file.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "write failed: " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) == 1,
          ErrorCode::Io, "SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& file) { return sha256_hex(read_text_file(file)); }

}  // namespace conecraft
