#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "conecraft/config.hpp"
#include "conecraft/errors.hpp"
#include "conecraft/io.hpp"
#include "conecraft/leveling.hpp"
#include "conecraft/runner.hpp"
#include "doctest.h"

using namespace conecraft;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conecraft_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_text(const std::string& config, ErrorCode expected) {
  try {
    parse_config(config);
  } catch (const Error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("expected an error");
  return "";
}

const char* kMinimalLeveling = R"(kind = leveling
seed = 3
[leveling]
x = [0.4, 0.1]
y = [0.1, 0.4]
)";

}  // namespace

TEST_CASE("minimal leveling config: defaults filled and echoed") {
  const ExperimentConfig c = parse_config(kMinimalLeveling);
  CHECK(c.kind == "leveling");
  CHECK(c.seed == 3);
  CHECK(c.params.number("dt") == 1e-3);
  CHECK(c.params.number("replicas") == 10000);
  CHECK(c.params.line("dt") == 0);
  CHECK(c.params.line("x") == 4);
  CHECK(c.cone.text("preset") == "orthant");
  const nlohmann::json echo = c.echo();
  CHECK(echo["leveling"]["dt"] == 1e-3);
  CHECK(echo["leveling"]["replicas"] == 10000);
  CHECK(echo["model"]["drift"] == "reference");
  CHECK(build_cone(c).dim() == 2);
  CHECK(epsilon_grid(c) == std::vector<double>{1.0});
}

TEST_CASE("parse errors carry line numbers") {
  const std::string text = "kind = leveling\nseed = 3\n[leveling]\nx = [0.4, 0.1]\ny = [0.1, 0.4]\nbogus = 1\n";
  const std::string msg = error_text(text, ErrorCode::Parse);
  CHECK(msg.find("line 6") != std::string::npos);
  CHECK(msg.find("bogus") != std::string::npos);

  const std::string many = error_text("kind = leveling\nseed = x\n[nowhere]\nnot a line\n", ErrorCode::Parse);
  CHECK(many.find("line 2") != std::string::npos);
  CHECK(many.find("line 3") != std::string::npos);
  CHECK(many.find("line 4") != std::string::npos);

  CHECK(error_text("kind = validate\n", ErrorCode::Parse).find("seed") != std::string::npos);
  CHECK(error_text("kind = validate\nseed = 1\nseed = 2\n", ErrorCode::Parse).find("duplicate") != std::string::npos);
  CHECK(error_text("kind = simulate\nseed = 1\n[simulate]\nx0 = [1, 2\n", ErrorCode::Parse).find("line 4") !=
        std::string::npos);
}

TEST_CASE("semantic errors name the rule") {
  const std::string radius = error_text(
      "kind = minorization\nseed = 1\n[model]\nepsilon_grid = [0.4]\n[minorization]\nx0 = [0.5, 0.5]\nr0 = 0.3\n",
      ErrorCode::Validate);
  CHECK(radius.find("r0 < r1") != std::string::npos);
  CHECK(error_text("kind = simulate\nseed = 1\n[simulate]\nx0 = [-1, 1]\n", ErrorCode::Validate).find("x0") !=
        std::string::npos);
  CHECK(error_text("kind = simulate\nseed = 1\n[model]\ndrift = constant\n[simulate]\nx0 = [1, 1]\n",
                   ErrorCode::Validate)
            .find("drift_vector") != std::string::npos);
  CHECK(error_text("kind = validate\nseed = 1\n[cone]\npreset = custom\nnormals = [[1, 0], [0, 1]]\n"
                   "directions = [[1, 0], [1, -1]]\n",
                   ErrorCode::Validate)
            .size() > 0);
}

TEST_CASE("custom cones and matrices parse") {
  const ExperimentConfig c = parse_config(
      "kind = validate  # trailing comment\nseed = 18446744073709551615\n[cone]\npreset = custom\n"
      "normals = [[1, 0], [0, 1]]\ndirections = [[1, 0.5], [0.5, 1]]\nnormalize = true\n[model]\ndrift = constant\n"
      "drift_vector = [-1, -0.5]\ndispersion = constant\ndispersion_matrix = [[2, 0], [0, 1]]\n");
  CHECK(c.seed == 18446744073709551615ull);
  const DiffusionModel m = build_model(c);
  CHECK(m.constants().gamma2 == doctest::Approx(2.0));
  CHECK(m.constants().sigma_lower == doctest::Approx(1.0));
  CHECK(build_cone(c).num_faces() == 2);
}

TEST_CASE("validate run: one report, status 0, digests in the manifest") {
  const fs::path out = scratch("validate");
  RunOptions options;
  options.out_dir = out;
  const RunResult r = run(parse_config("kind = validate\nseed = 1\n[validate]\nmodel_pairs = 200\n"), options);
  CHECK(r.status == "PASS");
  CHECK(r.exit_status == 0);
  CHECK(fs::exists(out / "manifest.json"));
  REQUIRE(r.manifest["files"].size() == 1);
  const auto& file = r.manifest["files"][0];
  CHECK(file["name"] == "validation.json");
  CHECK(file["sha256"] == sha256_file(out / "validation.json"));
  CHECK(r.manifest["version"] == kVersion);
  CHECK(r.manifest.contains("wall_clock_seconds"));
  CHECK(r.manifest["stages"].size() >= 1);
}

TEST_CASE("same config twice gives identical digests") {
  const std::string text = R"(kind = minorization
seed = 12
[model]
epsilon_grid = [0.4, 0.2]
[minorization]
x0 = [0.5, 0.5]
lattice = 3
replicas = 500
dt = 1e-2
)";
  RunOptions a, b;
  a.out_dir = scratch("digest_a");
  b.out_dir = scratch("digest_b");
  b.threads = 2;
  const RunResult ra = run(parse_config(text), a);
  const RunResult rb = run(parse_config(text), b);
  CHECK(ra.manifest["files"] == rb.manifest["files"]);
  std::vector<std::string> names;
  for (const auto& f : ra.manifest["files"]) names.push_back(f["name"]);
  CHECK(names == std::vector<std::string>{"floor.json", "floor.csv"});
  CHECK(ra.exit_status == exit_status_for(ra.status));

  // the seed override changes the outputs
  RunOptions c;
  c.out_dir = scratch("digest_c");
  c.seed = 13;
  const RunResult rc = run(parse_config(text), c);
  CHECK(rc.manifest["files"] != ra.manifest["files"]);
  CHECK(rc.manifest["config"]["seed"] == 13);
}

TEST_CASE("exit status trichotomy") {
  CHECK(exit_status_for("COMPLETE") == 0);
  CHECK(exit_status_for("PASS") == 0);
  CHECK(exit_status_for("INCONCLUSIVE") == 2);
  CHECK(exit_status_for("CENSORING") == 2);
  CHECK(exit_status_for("FAIL") == 1);
}

TEST_CASE("standard errors halve when replicas quadruple") {
  LevelingSetup s;
  s.x = make_vec({0.4, 0.1});
  s.y = make_vec({0.1, 0.4});
  s.eps_grid = {0.6};
  s.dt = 1e-2;
  s.horizon = 200;
  s.mc.seed = 99;
  const auto f = [](const Vec& z) { return z[0] > z[1] ? 1.0 : 0.0; };
  s.replicas = 1000;
  const double small = leveling_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s, f).points[0].std_error;
  s.replicas = 4000;
  const double large = leveling_gap(PolyhedralCone::orthant(2), models::reference(2, 1.0), s, f).points[0].std_error;
  REQUIRE(small > 0.0);
  CHECK(large / small == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5).find(',') == std::string::npos);
  CsvWriter csv({"a", "b"});
  csv.field(1.5).field(std::size_t{7});
  csv.end_row();
  CHECK(csv.str() == "a,b\n1.5,7\n");
}

TEST_CASE("increment records round-trip") {
  const fs::path dir = scratch("increments");
  fs::create_directories(dir);
  std::vector<Vec> inc{make_vec({0.1, -0.2}), make_vec({1e-300, 3.0}), make_vec({-0.0, 2.5})};
  write_increments(dir / "w.bin", 2, inc);
  CHECK(fs::file_size(dir / "w.bin") == 16 + 3 * 2 * 8);
  const std::vector<Vec> back = read_increments(dir / "w.bin");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == inc[i]);
  std::ifstream raw(dir / "w.bin", std::ios::binary);
  unsigned char head[4];
  raw.read(reinterpret_cast<char*>(head), 4);
  CHECK(head[0] == 0x57);  // 'W', magic stored little-endian
  write_text_file(dir / "bad.bin", "not a record");
  CHECK_THROWS_AS(read_increments(dir / "bad.bin"), Error);
}

TEST_CASE("path csv reader") {
  const PiecewisePath p = read_path_csv("t,value\n0,1\n0.5,-1\n1,2\n");
  REQUIRE(p.times.size() == 3);
  CHECK(p.values[1][0] == -1.0);
  const PiecewisePath q = read_path_csv("0,1\n1,0\n");
  CHECK(q.times.size() == 2);
  CHECK_THROWS_AS(read_path_csv("0,1\n0.5\n"), Error);
}

TEST_CASE("sha256 known answer") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
