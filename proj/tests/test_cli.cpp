#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "msheston/msheston.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = MSHESTON_CLI;
const fs::path kWork = fs::path(MSHESTON_WORK_DIR) / "cli_test";

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = "env -u MSHESTON_CONFIG " + kCli + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void fresh_dir(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
}

}  // namespace

TEST_CASE("price") {
  const Run a = run("price --v3e 0.0959");
  const Run b = run("price --v3e 0.0959");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const json j = json::parse(a.out);
  const msh_heston_params p{1.0, 0.24, 0.39, -0.35 * std::exp(-0.5), 0.24, 0.05};
  const msh_group_params v{0.0, 0.0, 0.0959, 0.0};
  msh_price ref{};
  REQUIRE(msh_price_option(100.0, 100.0, 1.0, MSH_CALL, &p, &v, nullptr, &ref) == MSH_OK);
  CHECK(j["price"]["total"].get<double>() == doctest::Approx(ref.total).epsilon(1e-14));
  CHECK(j["model"]["theta"] == 0.24);

  SUBCASE("table output") {
    const Run t = run("price --table --strike 110 --put");
    CHECK(t.code == 0);
    CHECK(t.out.find("total") != std::string::npos);
  }
}

TEST_CASE("configuration file and environment") {
  fresh_dir(kWork);
  const fs::path cfg = kWork / "cfg.json";
  std::ofstream(cfg) << R"({"model": {"z": 0.1}})";
  const json a = json::parse(run("--config " + cfg.string() + " price").out);
  CHECK(a["model"]["z"] == 0.1);
  const std::string env_cmd = "MSHESTON_CONFIG=" + cfg.string() + " " + kCli + " price";
  FILE* pipe = popen(env_cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  pclose(pipe);
  CHECK(json::parse(out)["model"]["z"] == 0.1);
  CHECK(run("--config " + cfg.string() + " price --z 0.2").out.find("0.2") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(run("price --kappa abc").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("calibrate").code == 2);
  CHECK(run("calibrate --chain /nonexistent/chain.csv").code == 2);
  CHECK(run("--config /nonexistent/cfg.json price").code == 2);
  CHECK(run("price --strike -5").code == 2);
  CHECK(run("group-params --rho-xy 0.9 --rho-xz 0.9 --rho-yz -0.9").code == 3);
}

TEST_CASE("surface and sweep") {
  fresh_dir(kWork);
  const std::string grid = " --expiries 0.5 1 --strikes 90 100 110";
  const Run s = run("surface" + grid);
  REQUIRE(s.code == 0);
  std::istringstream lines(s.out);
  std::string header, line;
  std::getline(lines, header);
  CHECK(header == "expiry_years,strike,implied_vol,source");
  int rows = 0;
  while (std::getline(lines, line)) rows += !line.empty();
  CHECK(rows == 6);

  SUBCASE("a zero sweep value reproduces the Heston surface") {
    REQUIRE(run("sweep --values 0 0.02 --out-dir " + kWork.string() + grid).code == 0);
    CHECK(slurp(kWork / "smile_v3e_000.csv") == s.out);
    CHECK(slurp(kWork / "smile_v3e_001.csv") != s.out);
    const json index = json::parse(slurp(kWork / "index.json"));
    REQUIRE(index.size() == 2);
    CHECK(index[1]["value"] == 0.02);
    CHECK(index[1]["file"] == "smile_v3e_001.csv");
  }
  SUBCASE("range sweep names files by position") {
    REQUIRE(run("sweep --param v1e --from -0.01 --to 0.01 --count 3 --out-dir " + kWork.string() + grid).code == 0);
    CHECK(fs::exists(kWork / "smile_v1e_002.csv"));
  }
  SUBCASE("file output") {
    REQUIRE(run("surface --out " + (kWork / "s.csv").string() + grid).code == 0);
    CHECK(slurp(kWork / "s.csv") == s.out);
  }
}

TEST_CASE("group parameters") {
  const Run r = run("group-params --epsilon 0.01");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["rho_effective"].get<double>() == doctest::Approx(-0.35 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(j["group"]["v3e"].get<double>() == doctest::Approx(0.0959).epsilon(1e-3));
  CHECK(j["mean_f2"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("validate-mc") {
  const std::string args = "validate-mc --paths 200 --dt 0.01 --epsilon 0.1 --seed 5";
  const Run a = run(args);
  REQUIRE(a.code == 0);
  CHECK(run(args).out == a.out);
  const json j = json::parse(a.out);
  for (const char* key : {"epsilon", "sqrt_eps_v3", "analytic", "heston", "mc_price", "mc_std_error", "abs_gap",
                          "gap_in_std_errors", "n_paths", "n_steps", "dt", "seed", "truncation_fraction",
                          "truncation_exceeded"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  CHECK(j["n_paths"] == 200);
  CHECK(j["seed"] == 5);
  CHECK(run("validate-mc --paths 3").code == 2);
}

TEST_CASE("calibrate end to end") {
  fresh_dir(kWork);
  const msh_heston_params truth{2.0, 0.04, 0.3, -0.6, 0.05, 0.05};
  std::ofstream chain(kWork / "chain.csv");
  chain << "quote_date,expiry_date,strike,option_type,bid,ask,open_interest,underlying_price,rate,dividend_yield\n";
  const std::pair<int, const char*> expiries[] = {{91, "2024-04-02"}, {182, "2024-07-02"}};
  for (const auto& [days, date] : expiries) {
    for (double k : {85.0, 95.0, 100.0, 105.0, 115.0, 125.0}) {
      msh_price pr{};
      REQUIRE(msh_price_option(100.0, k, days / 365.0, MSH_CALL, &truth, nullptr, nullptr, &pr) == MSH_OK);
      char row[256];
      std::snprintf(row, sizeof row, "2024-01-02,%s,%g,C,%.15g,%.15g,500,100,0.05,0\n", date, k, pr.total, pr.total);
      chain << row;
    }
  }
  chain.close();
  const std::string args = "calibrate --chain " + (kWork / "chain.csv").string() +
                           " --kappa 1.5 --theta 0.05 --sigma 0.4 --rho -0.4 --z 0.04";
  const Run r = run(args);
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["heston"]["params"]["kappa"].get<double>() == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(j["heston"]["converged"] == true);
  CHECK(j["n_quotes"] == 12);
  CHECK(j["residual_table"].size() == 2);
  CHECK(j["residual_table"][0]["days"] == 91);
  CHECK(run(args).out == r.out);
  REQUIRE(run(args + " --out " + (kWork / "cal.json").string()).code == 0);
  CHECK(slurp(kWork / "cal.json") == r.out);
}
