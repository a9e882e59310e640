// End-to-end checks of the dpselect binary: exit codes, output formats and
// reproducibility. The binary path comes in through DPSELECT_BIN.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

std::string binary() {
#ifdef DPSELECT_BIN
  return DPSELECT_BIN;
#else
  return "./dpselect";
#endif
}

int run(const std::string& args, const std::string& out_file = "") {
  std::string cmd = binary() + " " + args + " >/dev/null 2>/dev/null";
  if (!out_file.empty()) {
    cmd = binary() + " " + args + " --out " + out_file + " 2>/dev/null";
  }
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The runtime_ms column is wall-clock and legitimately varies between runs;
// everything else must reproduce exactly.
std::string without_runtime_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.rfind(',');
    out << (comma == std::string::npos ? line : line.substr(0, comma)) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("missing dataset exits with the configuration code") {
  CHECK(run("percentile --dataset /nonexistent/values.csv") == 2);
  CHECK(run("tree --dataset /nonexistent/rows.csv --schema /nonexistent/s.json") == 2);
}

TEST_CASE("counterexample reproduces and exits cleanly") {
  CHECK(run("counterexample") == 0);
  const std::string path = "/tmp/snm_cli_counterexample.json";
  CHECK(run("counterexample", path) == 0);
  const auto j = nlohmann::json::parse(slurp(path));
  CHECK(j["reproduced"] == true);
  CHECK(std::abs(j["p_x_c3"].get<double>() - 0.04) < 0.005);
  CHECK(std::abs(j["p_y_c3"].get<double>() - 0.10) < 0.005);
  std::remove(path.c_str());
}

TEST_CASE("oracle percentile runs are byte-identical across invocations") {
  const std::string a = "/tmp/snm_cli_perc_a.csv";
  const std::string b = "/tmp/snm_cli_perc_b.csv";
  const std::string args =
      "percentile --mechanisms em snm-lap --epsilons 1 10 --seed 7 --j 3";
  CHECK(run(args, a) == 0);
  CHECK(run(args, b) == 0);
  const std::string ca = slurp(a);
  CHECK(without_runtime_column(ca) == without_runtime_column(slurp(b)));
  CHECK(ca.find("# config") == 0);
  CHECK(ca.find("\"seed\":7") != std::string::npos);
  CHECK(ca.find("mechanism,epsilon,aee,bound,j,runtime_ms") != std::string::npos);
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("audit flags the unsafe mechanism and clears snm") {
  const std::string path = "/tmp/snm_cli_audit.json";
  CHECK(run("audit --mechanism em-smooth-unsafe --epsilon 0.5 --trials 150000 "
            "--seed 3",
            path) == 1);
  const auto j = nlohmann::json::parse(slurp(path));
  CHECK(j["any_flag"] == true);
  CHECK(j["outcomes"][2]["flagged"] == true);  // C3
  std::remove(path.c_str());

  CHECK(run("audit --mechanism snm-lap --epsilon 0.5 --trials 150000 --seed 3") == 0);
}

TEST_CASE("bounds coincide at s equal to half the global sensitivity") {
  const std::string path = "/tmp/snm_cli_bounds.csv";
  CHECK(run("bounds --s 0.5 --delta-u 1 --epsilons 1 --r-count 8", path) == 0);
  const std::string csv = slurp(path);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // config
  std::getline(in, line);  // header
  std::getline(in, line);
  std::istringstream row(line);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(row, field, ',')) fields.push_back(field);
  REQUIRE(fields.size() == 5);
  CHECK(fields[3] == fields[4]);  // snm_bound == rnm_bound
  std::remove(path.c_str());
}

TEST_CASE("tree and forest commands emit accuracy tables on synthetic data") {
  const std::string path = "/tmp/snm_cli_tree.csv";
  CHECK(run("tree --mechanisms none snm-lap --epsilons 1 --depth 2 --folds 4 "
            "--runs 1 --synthetic-rows 128 --seed 5",
            path) == 0);
  std::string csv = slurp(path);
  CHECK(csv.find("application,mechanism,epsilon,delta,metric,value,bound,seed,"
                 "runtime_ms") != std::string::npos);
  CHECK(csv.find("tree,snm-lap,1,") != std::string::npos);
  CHECK(csv.find("accuracy_mean") != std::string::npos);
  CHECK(csv.find("accuracy_std") != std::string::npos);
  std::remove(path.c_str());

  const std::string fpath = "/tmp/snm_cli_forest.csv";
  CHECK(run("forest --mechanisms snm-lap --epsilons 1000000 --trees 8 --depth 4 "
            "--runs 2 --synthetic-rows 512 --synthetic-flips 0 --seed 5",
            fpath) == 0);
  csv = slurp(fpath);
  CHECK(csv.find("forest,snm-lap,1000000,") != std::string::npos);
  // separable data at a huge budget: the mean accuracy field must be high
  std::istringstream in(csv);
  std::string line;
  double mean = 0.0;
  while (std::getline(in, line)) {
    if (line.find("accuracy_mean") != std::string::npos) {
      std::istringstream row(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(row, field, ',')) fields.push_back(field);
      mean = std::stod(fields[5]);
    }
  }
  CHECK(mean >= 0.95);
  std::remove(fpath.c_str());
}

TEST_CASE("thread cap variable is accepted") {
  const int status = std::system(
      (std::string("DP_SELECT_THREADS=1 ") + binary() +
       " bounds --s 1 --epsilons 1 >/dev/null 2>&1")
          .c_str());
  CHECK(WEXITSTATUS(status) == 0);
}
