#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "trapent/spectrum.hpp"

using namespace trapent;
using namespace trapent::cli;
using doctest::Approx;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Non-comment lines split into rows of cells; the first row is the header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("format_number") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(0.001) == "0.001");
  CHECK(format_number(3.14159265358979) == "3.141592654");
  CHECK(format_number(-2.0279347204) == "-2.02793472");
  CHECK(format_number(1e-4) == "1.000000000e-04");
  CHECK(format_number(1234567.0) == "1.234567000e+06");
  CHECK(format_number(999999.0) == "999999");
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(NAN) == "nan");
}

TEST_CASE("parse_range") {
  const auto r = parse_range("-1:1:5", "--x");
  CHECK(r.values() == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(parse_range("2:2:1", "--x").values() == std::vector<double>{2.0});
  CHECK_THROWS_AS(parse_range("1:0:3", "--x"), UsageError);
  CHECK_THROWS_AS(parse_range("0:1:0", "--x"), UsageError);
  CHECK_THROWS_AS(parse_range("0:1", "--x"), UsageError);
  CHECK_THROWS_AS(parse_range("a:1:3", "--x"), UsageError);
  CHECK_THROWS_AS(parse_range("0:1:2.5", "--x"), UsageError);
  CHECK_THROWS_AS(parse_range("0:1:1", "--x"), UsageError);
}

TEST_CASE("parse_branches and parse_modes") {
  CHECK(parse_branches("all") == std::vector<int>{0, 1, 2});
  CHECK(parse_branches("2,0") == std::vector<int>{2, 0});
  CHECK_THROWS_AS(parse_branches("3"), UsageError);
  CHECK_THROWS_AS(parse_branches("x"), UsageError);
  const auto m = parse_modes("1:0,2:3");
  REQUIRE(m.size() == 2u);
  CHECK(m[1] == std::pair<int, int>{2, 3});
  CHECK_THROWS_AS(parse_modes("0:1"), UsageError);
  CHECK_THROWS_AS(parse_modes("1-0"), UsageError);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke({}).code == kUsage);
  CHECK(invoke({"no-such-command"}).code == kUsage);
  CHECK(invoke({"spectrum-sweep", "--e-range", "3:1:5"}).code == kUsage);
  CHECK(invoke({"spectrum-sweep", "--e-range", "1.5:1.5:1"}).code == kUsage);
  CHECK(invoke({"spectrum-sweep", "--e-range", "1.4995:1.5005:3"}).code == kUsage);
  CHECK(invoke({"spectrum-sweep", "--format", "xml"}).code == kUsage);
  CHECK(invoke({"density", "--dr", "0.03", "--r-max", "1"}).code == kUsage);
  CHECK(invoke({"schmidt"}).code == kUsage);
  CHECK(invoke({"schmidt", "--unitarity", "3"}).code == kUsage);
  CHECK(invoke({"schmidt", "--inv-a", "1,2"}).code == kUsage);
  CHECK(invoke({"schmidt", "--inv-a", "1", "--branch", "7"}).code == kUsage);
  const auto r = invoke({"k-sweep", "--inv-a", "1", "--inv-a-range", "0:1:2"});
  CHECK(r.code == kUsage);
  CHECK(r.err.find("usage error") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("help exits with 0") {
  const auto r = invoke({"--help"});
  CHECK(r.code == kOk);
  CHECK(r.out.find("k-sweep") != std::string::npos);
}

TEST_CASE("convergence failures exit with 3") {
  // bound state far below the solver's energy floor
  const auto r = invoke({"schmidt", "--inv-a", "500", "--l-max", "2", "--dr", "0.1"});
  CHECK(r.code == kNotConverged);
  CHECK(r.err.find("not converged") != std::string::npos);
}

TEST_CASE("spectrum-sweep single point and header") {
  const auto r = invoke({"spectrum-sweep", "--e-range", "-2:-2:1"});
  REQUIRE(r.code == kOk);
  CHECK(r.out.find("# trapent ") == 0);
  CHECK(r.out.find("# eigenvalue condition: " + std::string(kEigenConditionVariant)) !=
        std::string::npos);
  CHECK(r.out.find("# completeness defect: n/a") != std::string::npos);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 2u);
  CHECK(rows[0] == std::vector<std::string>{"E", "inv_a", "branch"});
  CHECK(rows[1][0] == "-2");
  CHECK(rows[1][1] == format_number(inv_a_of_energy(-2.0)));
  CHECK(rows[1][2] == "0");
}

TEST_CASE("spectrum-sweep skips pole windows and labels branches") {
  const auto r = invoke({"spectrum-sweep", "--e-range", "1.4:1.6:5"});
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  // E = 1.5 is dropped, its neighbours straddle the divergence of 1/a
  REQUIRE(rows.size() == 5u);
  CHECK(rows[2][0] == "1.45");
  CHECK(rows[3][0] == "1.55");
  CHECK(rows[2][2] == "0");
  CHECK(rows[3][2] == "1");
  CHECK(std::stod(rows[2][1]) < -5.0);
  CHECK(std::stod(rows[3][1]) > 5.0);
}

TEST_CASE("spectrum-sweep over 1/a") {
  const auto r = invoke({"spectrum-sweep", "--inv-a", "-2,0", "--branch", "0"});
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 3u);
  CHECK(rows[1][1] == format_number(energy_of_inv_a(-2.0, 0).energy));
  CHECK(rows[2][1] == "0.5");
}

TEST_CASE("density columns integrate to one") {
  const auto r = invoke({"density", "--inv-a", "-2,0,2", "--branch", "0"});
  REQUIRE(r.code == kOk);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 351u);
  CHECK(rows[1][0] == "0.005");
  for (std::size_t col = 1; col < rows[0].size(); ++col) {
    double sum = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) sum += std::stod(rows[i][col]) * 0.01;
    CAPTURE(rows[0][col]);
    CHECK(sum == Approx(1.0).epsilon(1e-4));
  }
  // excited branches spread further out; give them room
  const auto wide = invoke({"density", "--inv-a", "-2", "--branch", "1,2", "--r-max", "6"});
  const auto wrows = csv_rows(wide.out);
  for (std::size_t col = 1; col < wrows[0].size(); ++col) {
    double sum = 0.0;
    for (std::size_t i = 1; i < wrows.size(); ++i) sum += std::stod(wrows[i][col]) * 0.01;
    CHECK(sum == Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("schmidt json output") {
  const auto r = invoke({"schmidt", "--unitarity", "0", "--dr", "0.05", "--r-max", "3",
                         "--l-max", "6", "--top", "4"});
  REQUIRE(r.code == kOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["provenance"]["l_max"] == 6);
  CHECK(j["provenance"]["eigenvalue_condition"] == std::string(kEigenConditionVariant));
  CHECK(j["state"]["kind"] == "unitarity");
  CHECK(j["top_modes"].size() == 4u);
  CHECK(j["top_modes"][0]["n"] == 1);
  CHECK(j["top_modes"][0]["l"] == 0);
  double sum_sq = 0.0;
  for (const auto& e : j["lambda_table"]) {
    sum_sq += e["Lambda"].get<double>() * e["Lambda"].get<double>();
  }
  CHECK(j["K"].get<double>() == Approx(1.0 / sum_sq).epsilon(1e-8));
  CHECK(j["convergence"].is_null());
}

TEST_CASE("schmidt with --converge carries the trace") {
  const auto r = invoke({"schmidt", "--inv-a", "-2", "--dr", "0.05", "--r-max", "3", "--l-max",
                         "4", "--converge"});
  REQUIRE(r.code == kOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["convergence"]["trace"].size() >= 2u);
  CHECK(j["convergence"]["grid_checked"] == true);
}

TEST_CASE("k-sweep caps branch 0 and is deterministic across job counts") {
  const std::vector<std::string> base{"k-sweep", "--inv-a-range", "1:3:3", "--dr", "0.1",
                                      "--r-max", "3", "--l-max", "4"};
  auto serial = base;
  serial.insert(serial.end(), {"--jobs", "1"});
  auto threaded = base;
  threaded.insert(threaded.end(), {"--jobs", "3"});
  const auto a = invoke(serial);
  const auto b = invoke(threaded);
  REQUIRE(a.code == kOk);
  CHECK(a.out == b.out);
  CHECK(invoke(serial).out == a.out);
  const auto rows = csv_rows(a.out);
  REQUIRE(rows.size() == 4u);
  CHECK(rows[0][1] == "K_b0");
  CHECK(!rows[2][1].empty());  // 1/a = 2 kept
  CHECK(rows[3][1].empty());   // 1/a = 3 dropped

  auto uncapped = serial;
  uncapped.insert(uncapped.end(), {"--branch0-max-inv-a", "5"});
  CHECK(!csv_rows(invoke(uncapped).out)[3][1].empty());
}

TEST_CASE("unitarity cross-check") {
  const auto r = invoke({"unitarity", "--dr", "0.1", "--r-max", "3", "--l-max", "4",
                         "--cross-check", "--jobs", "2"});
  REQUIRE(r.code == kOk);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["states"].size() == 3u);
  for (const auto& s : j["states"]) CHECK(s["relative_difference"].get<double>() < 1e-8);
}

TEST_CASE("modes output and --out") {
  const auto path = std::filesystem::temp_directory_path() / "trapent_modes_test.csv";
  std::filesystem::remove(path);
  const auto r = invoke({"modes", "--inv-a", "-2", "--dr", "0.05", "--r-max", "3", "--l-max",
                         "3", "--modes", "1:0,2:0,1:2", "--out", path.string()});
  REQUIRE(r.code == kOk);
  CHECK(r.out.empty());
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  const auto rows = csv_rows(text.str());
  REQUIRE(rows.size() == 61u);
  CHECK(rows[0][1] == "u_1_0");
  CHECK(rows[0][4] == "rho_1_0");
  for (int col = 4; col <= 6; ++col) {
    double sum = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) sum += std::stod(rows[i][col]) * 0.05;
    CHECK(sum == Approx(1.0).epsilon(1e-6));
  }
  std::filesystem::remove(path);

  CHECK(invoke({"modes", "--inv-a", "-2", "--l-max", "1", "--dr", "0.1", "--r-max", "2",
                "--modes", "1:4"})
            .code == kUsage);
}
