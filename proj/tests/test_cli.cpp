#include "locsolv/cli.hpp"
#include "locsolv/linalg.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace locsolv;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
  Json json() const { return Json::parse(out); }
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("locsolv-test-" + std::to_string(rd()));
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void check_one_line_error(const Result& r, const std::string& kind) {
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  REQUIRE(!r.err.empty());
  CHECK(r.err.find('\n') == r.err.size() - 1);
  const Json e = Json::parse(r.err);
  CHECK(e["error"] == kind);
  CHECK(e["message"].is_string());
}

}  // namespace

TEST_CASE("sigma subcommand returns the m=2 threshold values") {
  const Result r = run({"sigma", "--m", "2", "--window", "-8,0"});
  REQUIRE(r.code == 0);
  const Json j = r.json();
  const std::vector<double> elements = j["outputs"]["elements"];
  REQUIRE(elements.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(elements[k] - (-7.0 + 2 * k)) < 1e-6);
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["provenance"]["basis_dim"].get<int>() >= 64);
}

TEST_CASE("decide subcommand") {
  const Json on = run({"decide", "--m", "2", "--a0", "-1", "--taylor", "1,1", "--order", "4"}).json();
  CHECK(on["outputs"]["verdict"] == "Solvable");
  CHECK(on["outputs"]["witness_order"] == 4);
  const Json flat = run({"decide", "--m", "2", "--a0", "-1", "--order", "4"}).json();
  CHECK(flat["outputs"]["verdict"] == "NonsolvableToOrder");
  const Result off = run({"decide", "--m", "2", "--a0", "-0.5", "--order", "4"});
  CHECK(off.code == 0);
  CHECK(off.json()["outputs"]["verdict"] == "NotOnSigma_Solvable");
}

TEST_CASE("exact route prints rationals") {
  const Json j = run({"polys", "--m", "2", "--a0", "-1", "--order", "2", "--exact"}).json();
  CHECK(j["outputs"]["lambdas"][2]["a2"] == "1/4");
  CHECK(j["outputs"]["lambdas"][2]["a1^2"] == "-1/4");
  const Json l = run({"lambda", "--m", "2", "--a0", "-3", "--taylor", "1/2,0.25", "--order", "2", "--exact"}).json();
  CHECK(l["outputs"]["lambdas"].size() == 3);
  const Json mu = run({"moments", "--m", "2", "--a0", "-1", "--exact", "--j-max", "4"}).json();
  CHECK(mu["outputs"]["mu"] == Json({"1", "0", "1/2", "0", "3/4"}));
}

TEST_CASE("numeric moments report the recurrence residuals") {
  const Json j = run({"moments", "--m", "3", "--a0", "-1.5", "--j-max", "12"}).json();
  CHECK(j["outputs"]["mu"].size() == 13);
  for (const auto& row : j["outputs"]["recurrence"]) CHECK(row["relative"].get<double>() < 1e-6);
}

TEST_CASE("precondition violations exit 2 with one line of JSON") {
  check_one_line_error(run({"decide", "--m", "2", "--a0", "-1", "--order", "4", "--bogus"}), "precondition");
  check_one_line_error(run({"decide", "--m", "2", "--a0", "x1", "--order", "4"}), "precondition");
  check_one_line_error(run({"decide", "--m", "2", "--a0", "-1", "--taylor", "1,,2", "--order", "4"}), "precondition");
  check_one_line_error(run({"decide", "--m", "2", "--a0", "-1"}), "precondition");
  check_one_line_error(run({"lambda", "--m", "3", "--a0", "-1.5", "--order", "2", "--exact"}), "precondition");
  check_one_line_error(run({"sigma", "--m", "2"}), "precondition");
  check_one_line_error(run({"sigma", "--m", "2", "--window", "0,-1"}), "precondition");
  check_one_line_error(run({"frobnicate", "--m", "2"}), "precondition");
  check_one_line_error(run({"lambda", "--m", "2", "--a0", "-0.5", "--order", "2"}), "precondition");
  check_one_line_error(run({"decide", "--m", "2", "--a0", "-1", "--order", "2", "--format", "xml"}), "precondition");
  check_one_line_error(run({"decide", "--m", "1", "--a0", "-1", "--order", "2"}), "precondition");
}

TEST_CASE("help exits 0") {
  const Result r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("decide") != std::string::npos);
}

TEST_CASE("identical flags give identical envelopes apart from wall time") {
  const std::vector<std::string> args{"lambda", "--m", "3", "--a0", "-1.5", "--taylor", "0.2,0.1", "--order", "4"};
  Json a = run(args).json();
  Json b = run(args).json();
  a["provenance"].erase("wall_time_s");
  b["provenance"].erase("wall_time_s");
  CHECK(a == b);
}

TEST_CASE("csv and text renderings") {
  const Result csv = run({"sweep", "--m", "2", "--a0", "-1", "--taylor", "1,0", "--format", "csv"});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("eps,small_eigenvalue\n", 0) == 0);
  CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 9);
  const Result text = run({"decide", "--m", "2", "--a0", "-1", "--order", "2", "--format", "text"});
  CHECK(text.out.find("verdict: \"NonsolvableToOrder\"") != std::string::npos);
}

TEST_CASE("witness subcommand produces one row per frequency") {
  const Result r = run({"witness", "--m", "2", "--a0", "-1", "--A", "2", "--lambdas", "128,256", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("lambda,ratio,", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
  const Result refused = run({"witness", "--m", "2", "--a0", "-1", "--taylor", "1,0", "--A", "2", "--lambdas", "128"});
  CHECK(refused.code == 2);
}

TEST_CASE("--out writes the rendering to a file") {
  const TempDir dir;
  fs::create_directories(dir.path);
  const fs::path file = dir.path / "out.json";
  const Result r = run({"decide", "--m", "2", "--a0", "-0.5", "--order", "2", "--out", file.string()});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(file);
  const Json j = Json::parse(in);
  CHECK(j["outputs"]["verdict"] == "NotOnSigma_Solvable");
}

TEST_CASE("envelope round trip") {
  ResultEnvelope e;
  e.inputs = {{"m", 3}, {"taylor", {"0.1", "1/3"}}};
  e.outputs = {{"values", {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567}}, {"name", "x"}};
  e.provenance = {{"basis_dim", 128}};
  const ResultEnvelope back = ResultEnvelope::from_json(Json::parse(e.dump()));
  CHECK(back == e);
  CHECK(back.dump() == e.dump());
  CHECK_THROWS_AS(ResultEnvelope::from_json(Json{{"inputs", {}}}), PreconditionError);
}

TEST_CASE("cache: store, load, version bump, corruption, missing directory") {
  const TempDir dir;
  const ResultCache cache(dir.path / "nested");
  CacheKey key{"sigma", 2, "+", -8.0, 0.0, 1e-10, 64, 1.0};
  ResultEnvelope e;
  e.outputs = {{"elements", {-7.0, -5.0, -3.0, -1.0 + 1e-16}}};
  std::vector<std::string> warnings;
  CHECK(!cache.load(key, warnings));
  cache.store(key, e);
  CHECK(fs::exists(dir.path / "nested"));
  const auto loaded = cache.load(key, warnings);
  REQUIRE(loaded);
  CHECK(*loaded == e);
  CHECK(loaded->dump() == e.dump());

  CacheKey bumped = key;
  bumped.code_version = "999";
  CHECK(!cache.load(bumped, warnings));
  CHECK(warnings.empty());

  {
    std::ofstream corrupt(cache.path_for(key), std::ios::trunc);
    corrupt << "{ not json";
  }
  CHECK(!cache.load(key, warnings));
  CHECK(warnings.size() == 1);
}

TEST_CASE("sigma uses the cache directory") {
  const TempDir dir;
  const std::vector<std::string> args{"sigma", "--m", "2", "--window", "-4,0", "--cache", dir.path.string()};
  const Json first = run(args).json();
  CHECK(first["provenance"]["cache"] == "miss");
  const Json second = run(args).json();
  CHECK(second["provenance"]["cache"] == "hit");
  CHECK(first["outputs"] == second["outputs"]);
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    std::ofstream(entry.path(), std::ios::trunc) << "garbage";
  }
  const Result third = run(args);
  CHECK(third.code == 0);
  CHECK(third.json()["provenance"]["cache"] == "miss");
  CHECK(third.err.find("corrupt cache file") != std::string::npos);
}
