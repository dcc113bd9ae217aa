#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "optomech/cli.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"

using namespace optomech;
namespace fs = std::filesystem;

namespace {

const std::string kConfig = OPTOMECH_SOURCE_DIR "/configs/paper_defaults.cfg";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_main(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("optomech_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("modes lists jmax^2 rows with the fundamental near 0.8 MHz") {
  const auto dir = scratch("modes");
  const auto r = run({"modes", "--config", kConfig, "--out", dir.string(), "--jmax", "8"});
  REQUIRE(r.code == 0);
  const auto t = read_csv_file(dir / "modes.csv");
  CHECK(t.rows.size() == 64);
  const int cj = t.column("j"), ck = t.column("k"), cf = t.column("frequency_hz");
  REQUIRE(cf >= 0);
  bool found = false;
  for (const auto& row : t.rows) {
    if (row[cj] == 1 && row[ck] == 1) {
      CHECK(row[cf] / 1e6 == doctest::Approx(0.8165).epsilon(1e-4));
      found = true;
    }
  }
  CHECK(found);
  CHECK(fs::exists(dir / "modes.report.txt"));
}

TEST_CASE("identical invocations give byte-identical outputs") {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(run({"overlap", "--config", kConfig, "--out", dir.string(), "--jmax", "3"}).code == 0);
  }
  CHECK(slurp(a / "overlap.csv") == slurp(b / "overlap.csv"));
  // the report carries a digest of the arguments, which differ only in --out
  CHECK(slurp(a / "overlap.csv").size() > 0);
}

TEST_CASE("written CSV values round-trip exactly") {
  const auto dir = scratch("roundtrip");
  REQUIRE(run({"ted-limit", "--config", kConfig, "--out", dir.string(), "--freq-steps", "7"}).code == 0);
  const auto text = slurp(dir / "ted_limit.csv");
  const auto t = read_csv_file(dir / "ted_limit.csv");
  CsvWriter w(t.header);
  for (const auto& row : t.rows) w.add_row(row);
  CHECK(w.str() == text);
  CHECK(t.rows.front()[0] == 1e5);
  CHECK(t.rows.back()[0] == 1e8);
}

TEST_CASE("cooling sweep approaches room temperature far off resonance") {
  const auto dir = scratch("cool");
  REQUIRE(run({"cooling-sweep", "--config", kConfig, "--out", dir.string(), "--mode", "6,6",
               "--detuning-min", "-200e6", "--detuning-max", "-1e6", "--detuning-steps", "50"})
              .code == 0);
  const auto t = read_csv_file(dir / "cooling_sweep.csv");
  const int ct = t.column("temperature_k");
  CHECK(t.rows.front()[ct] == doctest::Approx(295.0).epsilon(0.01));
  double coldest = 1e300;
  for (const auto& row : t.rows) coldest = std::min(coldest, row[ct]);
  CHECK(coldest < 295.0);
}

TEST_CASE("occupation sweep minimum lies between 0.5 and 2") {
  const auto dir = scratch("occ");
  const auto r = run({"occupation", "--config", kConfig, "--out", dir.string(), "--geff-steps", "80",
                     "--geff-max", "3e6"});
  REQUIRE(r.code == 0);
  const auto t = read_csv_file(dir / "occupation.csv");
  double best = 1e300;
  for (const auto& row : t.rows) {
    if (row[2] == 1.0) best = std::min(best, row[1]);
  }
  CHECK(best > 0.5);
  CHECK(best < 2.0);
  CHECK(r.err.find("unstable") != std::string::npos);
}

TEST_CASE("nms map writes spectra and peak table") {
  const auto dir = scratch("nms");
  REQUIRE(run({"nms-map", "--config", kConfig, "--out", dir.string(), "--gamma-steps", "5",
               "--omega-steps", "400"})
              .code == 0);
  CHECK(read_csv_file(dir / "nms_map.csv").rows.size() > 0);
  CHECK(read_csv_file(dir / "nms_peaks.csv").rows.size() == 5);
}

TEST_CASE("ringdown fit through the command line") {
  const auto dir = scratch("ring");
  {
    std::ofstream tr(dir / "trace.csv");
    tr << "time_s,amplitude\n";
    for (int i = 0; i < 40; ++i) {
      const double t = i * 0.01;
      tr << t << "," << std::exp(-0.5 * 3.0 * t) << "\n";
    }
  }
  REQUIRE(run({"ringdown-fit", "--config", kConfig, "--out", dir.string(), "--trace",
               (dir / "trace.csv").string(), "--mode", "6,6"})
              .code == 0);
  auto t = read_csv_file(dir / "ringdown_fit.csv");
  const int cg = t.column("damping_gamma_m_hz");
  REQUIRE(cg >= 0);
  const double field = t.rows[0][cg];
  REQUIRE(run({"ringdown-fit", "--config", kConfig, "--out", dir.string(), "--trace",
               (dir / "trace.csv").string(), "--mode", "6,6", "--amplitude-convention", "energy"})
              .code == 0);
  t = read_csv_file(dir / "ringdown_fit.csv");
  CHECK(t.rows[0][cg] == doctest::Approx(0.5 * field).epsilon(1e-12));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"modes"}).code == 2);
  CHECK(run({"modes", "--config", "/nonexistent.cfg", "--out", dir.string()}).code == 2);
  CHECK(run({"modes", "--config", kConfig, "--out", dir.string(), "--jmax", "0"}).code == 2);
  CHECK(run({"ringdown-fit", "--config", kConfig, "--out", dir.string(), "--trace",
             "/nonexistent.csv"})
            .code == 3);
  {
    std::ofstream tr(dir / "short.csv");
    tr << "time_s,amplitude\n0,1\n1,0.5\n";
  }
  const auto r = run({"ringdown-fit", "--config", kConfig, "--out", dir.string(), "--trace",
                      (dir / "short.csv").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(run({"modes", "--help"}).code == 0);
  CHECK(InstabilityError("x").exit_code() == 4);
  CHECK(SearchFailure("x").exit_code() == 4);
}
