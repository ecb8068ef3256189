#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "atekit/cli.hpp"
#include "atekit/dataio.hpp"
#include "helpers.hpp"

using namespace atekit;
using Json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ate_toolkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("atekit_cli_" + name)).string();
}

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = temp_path(name);
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream ss;
  ss << "y,w";
  for (std::size_t j = 0; j < ds.d(); ++j) ss << ",x" << j;
  ss << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ds.n()); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", ds.Y()[i]);
    ss << buf << "," << ds.W()[i];
    for (Eigen::Index j = 0; j < ds.X().cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.X()(i, j));
      ss << "," << buf;
    }
    ss << "\n";
  }
  return ss.str();
}

const std::string kTiny = "y,w,x\n1,0,0\n3,0,1\n2,1,0\n6,1,1\n";

}  // namespace

TEST_CASE("estimate prints one naive estimate as JSON") {
  const auto path = write_temp("tiny.csv", kTiny);
  const auto r = run({"estimate", "--data", path, "--outcome", "y", "--treatment", "w", "--methods", "naive",
                      "--estimand", "ate"});
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  CHECK(j[0]["method"] == "naive");
  CHECK(j[0]["estimate"].get<double>() == doctest::Approx(4.0 - 2.0));
  CHECK(j[0]["n_used"] == 4);
  CHECK(r.err.rfind("config {", 0) == 0);
}

TEST_CASE("estimate with several methods and a bootstrap s.e.") {
  const auto s = dataio::generate_synthetic(dataio::named_dgp("confounded_linear", 300), 3);
  const auto path = write_temp("conf.csv", dataset_csv(s.dataset));
  const std::vector<std::string> args = {"estimate", "--data", path, "--outcome", "y", "--treatment", "w",
                                         "--methods", "naive,ols,dre", "--estimand", "att", "--seed", "4",
                                         "--bootstrap", "20"};
  const auto r = run(args);
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  REQUIRE(j.size() == 3);
  CHECK(j[2]["method"] == "dre");
  CHECK(j[2]["estimand"] == "att");
  for (const auto& e : j) CHECK(e["se"].get<double>() > 0.0);
  CHECK(run(args).out == r.out);
}

TEST_CASE("usage and validation failures exit with 2") {
  const auto tiny = write_temp("tiny2.csv", kTiny);
  const auto missing = run({"estimate", "--outcome", "y", "--treatment", "w", "--methods", "naive"});
  CHECK(missing.code == cli::kExitValidation);
  CHECK(missing.err.find("--data") != std::string::npos);
  CHECK(missing.out.empty());

  const auto yes = write_temp("yes.csv", "y,w,x\n1,0,0\n2,yes,1\n3,1,0\n");
  const auto nb = run({"estimate", "--data", yes, "--outcome", "y", "--treatment", "w", "--methods", "naive"});
  CHECK(nb.code == cli::kExitValidation);
  CHECK(nb.err.find("NonBinaryTreatment") != std::string::npos);
  CHECK(nb.err.find("(row 1)") != std::string::npos);

  CHECK(run({"estimate", "--data", tiny, "--outcome", "y", "--treatment", "w", "--methods", "magic"}).code ==
        cli::kExitValidation);
  CHECK(run({"estimate", "--data", tiny, "--outcome", "y", "--treatment", "w", "--bogus"}).code ==
        cli::kExitValidation);
  CHECK(run({"estimate", "--data", "/nonexistent.csv", "--outcome", "y", "--treatment", "w"}).code ==
        cli::kExitValidation);
  CHECK(run({"estimate", "--data", tiny, "--outcome", "nope", "--treatment", "w"}).code == cli::kExitValidation);
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"simulate", "--dgp", "lalonde", "--reps", "1"}).code == cli::kExitValidation);

  const auto help = run({"--help"});
  CHECK(help.code == cli::kExitOk);
  CHECK(help.out.empty());
  CHECK(help.err.find("simulate") != std::string::npos);
}

TEST_CASE("a single-arm file is an estimation failure") {
  const auto path = write_temp("onearm.csv", "y,w,x\n1,1,0\n2,1,1\n3,1,0\n");
  const auto r = run({"estimate", "--data", path, "--outcome", "y", "--treatment", "w", "--methods", "naive"});
  CHECK(r.code == cli::kExitEstimation);
  CHECK(r.err.find("EmptyArm") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("report writes six rows and a histogram CSV") {
  const auto s = dataio::generate_synthetic(dataio::named_dgp("confounded_linear", 500), 5);
  const auto data = write_temp("rep.csv", dataset_csv(s.dataset));
  const auto out = temp_path("rep.json");
  const auto hist = temp_path("rep_hist.csv");
  const auto r = run({"report", "--data", data, "--outcome", "y", "--treatment", "w", "--methods", "all",
                      "--estimand", "ate", "--seed", "2", "--bootstrap", "10", "--half-sample-reps", "4",
                      "--trees", "50", "--out", out, "--hist", hist});
  REQUIRE(r.code == cli::kExitOk);
  const Json status = Json::parse(r.out);
  CHECK(status["rows"] == 6);
  CHECK(status["rows_with_estimate"] == 6);

  const Json rep = Json::parse(read_file(out));
  REQUIRE(rep["rows"].size() == 6);
  CHECK(rep["rows"][0]["method"] == "naive");
  CHECK(rep["rows"][5]["method"] == "dmle");
  CHECK(rep["meta"]["seed"] == 2);

  std::istringstream csv(read_file(hist));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "bin_left,bin_right,count");
  long total = 0;
  while (std::getline(csv, line)) total += std::stol(line.substr(line.rfind(',') + 1));
  CHECK(total == 500);
}

TEST_CASE("report histogram can be an SVG chart") {
  const auto s = dataio::generate_synthetic(dataio::named_dgp("randomized", 120), 6);
  const auto data = write_temp("svg.csv", dataset_csv(s.dataset));
  const auto svg = temp_path("hist.svg");
  const auto r = run({"report", "--data", data, "--outcome", "y", "--treatment", "w", "--methods", "naive",
                      "--bootstrap", "5", "--half-sample-reps", "2", "--trees", "30", "--out", temp_path("svg.json"),
                      "--hist", svg});
  REQUIRE(r.code == cli::kExitOk);
  const std::string text = read_file(svg);
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("</svg>") != std::string::npos);
}

TEST_CASE("simulate: randomized naive is unbiased") {
  const auto r = run({"simulate", "--dgp", "randomized", "--n", "200", "--reps", "500", "--methods", "naive",
                      "--seed", "1"});
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  const auto& row = j["methods"][0];
  CHECK(row["n_ok"] == 500);
  CHECK(std::abs(row["bias"].get<double>()) < 3 * row["sd"].get<double>() / std::sqrt(500.0));
}

TEST_CASE("simulate: doubly robust beats naive under confounding") {
  const auto r = run({"simulate", "--dgp", "confounded_linear", "--n", "1000", "--reps", "20", "--methods",
                      "naive,dre", "--seed", "2"});
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  CHECK(std::abs(j["methods"][1]["bias"].get<double>()) < std::abs(j["methods"][0]["bias"].get<double>()));
}

TEST_CASE("simulate: poor overlap shrinks the overlap-weighted bound") {
  const auto r = run({"simulate", "--dgp", "poor_overlap", "--n", "2000", "--reps", "5", "--methods", "naive",
                      "--seed", "3"});
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  CHECK(j["bound_ratio_overlap_to_ate"]["mean_ratio"].get<double>() < 0.5);
}

TEST_CASE("bias-hist writes bins summing to n") {
  const auto s = dataio::generate_synthetic(dataio::named_dgp("confounded_linear", 300), 7);
  const auto data = write_temp("bh.csv", dataset_csv(s.dataset));
  const auto csv_path = temp_path("bh_bins.csv");
  const auto r = run({"bias-hist", "--data", data, "--outcome", "y", "--treatment", "w", "--bins", "7",
                      "--trees", "50", "--csv", csv_path});
  REQUIRE(r.code == cli::kExitOk);
  const Json j = Json::parse(r.out);
  CHECK(j["histogram"].size() == 7);
  long total = 0;
  for (const auto& b : j["histogram"]) total += b["count"].get<long>();
  CHECK(total == 300);
  CHECK(j["q025"].get<double>() <= j["median"].get<double>());
  CHECK(read_file(csv_path).rfind("bin_left,bin_right,count\n", 0) == 0);
}
