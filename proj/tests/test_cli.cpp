#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "imputekit/imputekit.h"

using nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const std::string command = std::string(IMPUTEKIT_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  ik_free_string(s);
  return out;
}

struct TempDir {
  std::filesystem::path path = std::filesystem::temp_directory_path() / "imputekit_cli_test";
  TempDir() { std::filesystem::create_directories(path); }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run("--help").status == 0);
  CHECK(run("frobnicate").status == 1);
  CHECK(run("ampute --builtin iris --fraction 0.1").status == 1);
  CHECK(run("impute --builtin iris --method mice").status == 1);
  CHECK(run("describe --builtin nope").status == 1);
  CHECK(run("describe --builtin concrete").status == 3);
  CHECK(run("pipeline --builtin wwtp-fixture --seed 1 --format csv").status == 1);
  CHECK(run("ampute --builtin iris --fraction 1.5 --seed 1").status == 1);
  CHECK(run("ampute --builtin iris --fraction 0.995 --seed 1").status == 2);
}

TEST_CASE("cli output equals library output") {
  TempDir dir;
  ik_table* iris = nullptr;
  REQUIRE(ik_table_load_builtin("iris", &iris) == IK_OK);
  ik_table* amputed = nullptr;
  ik_mask* mask = nullptr;
  REQUIRE(ik_ampute_mcar(iris, 0.1, 17, &amputed, &mask) == IK_OK);

  const auto amp = run("ampute --builtin iris --fraction 0.1 --seed 17 --mask " + (dir / "mask.csv"));
  REQUIRE(amp.status == 0);
  char* csv = nullptr;
  REQUIRE(ik_table_to_csv(amputed, &csv) == IK_OK);
  CHECK(amp.out == take(csv));
  REQUIRE(ik_mask_to_csv(mask, &csv) == IK_OK);
  CHECK(slurp(dir / "mask.csv") == take(csv));

  {
    std::ofstream(dir / "amputed.csv") << amp.out;
    char* schema = nullptr;
    REQUIRE(ik_table_schema_json(iris, &schema) == IK_OK);
    std::ofstream(dir / "iris.schema.json") << take(schema);
  }
  const std::string source = "-i " + (dir / "amputed.csv") + " --schema " + (dir / "iris.schema.json");

  const auto knn = run("impute " + source + " --method knn --k 3");
  REQUIRE(knn.status == 0);
  ik_table* imputed = nullptr;
  REQUIRE(ik_impute(amputed, "knn", R"({"k": 3})", 0, &imputed, nullptr) == IK_OK);
  REQUIRE(ik_table_to_csv(imputed, &csv) == IK_OK);
  CHECK(knn.out == take(csv));
  ik_table_free(imputed);

  const auto forest = run("impute " + source + " --method missforest --seed 9 --ntree 15 --threads 2 -o " +
                          (dir / "mf.csv") + " --format json");
  REQUIRE(forest.status == 0);
  CHECK(json::parse(forest.out).at("method") == "missforest");
  REQUIRE(ik_impute(amputed, "missforest", R"({"ntree": 15})", 9, &imputed, nullptr) == IK_OK);
  REQUIRE(ik_table_to_csv(imputed, &csv) == IK_OK);
  CHECK(slurp(dir / "mf.csv") == take(csv));
  ik_table_free(imputed);

  ik_table* rock = nullptr;
  REQUIRE(ik_table_load_builtin("rock", &rock) == IK_OK);
  char* described = nullptr;
  REQUIRE(ik_describe(rock, &described) == IK_OK);
  const auto desc = run("describe --builtin rock");
  REQUIRE(desc.status == 0);
  CHECK(json::parse(desc.out) == json::parse(take(described)));
  CHECK(run("describe --builtin rock --format text").out.find("rho_abs") != std::string::npos);

  ik_table_free(rock);
  ik_mask_free(mask);
  ik_table_free(amputed);
  ik_table_free(iris);
}

TEST_CASE("bench through the cli") {
  TempDir dir;
  const std::string config =
      R"({"datasets": ["rock"], "fractions": [0.1], "methods": ["knn"], "trials": 2, "seed": 3})";
  std::ofstream(dir / "bench.json") << config;
  const auto a = run("bench --config " + (dir / "bench.json") + " --no-timing --threads 1");
  const auto b = run("bench --config " + (dir / "bench.json") + " --no-timing --threads 2");
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  const auto report = json::parse(a.out);
  for (const char* key : {"config", "datasets", "cells", "table4", "table5", "table6", "figure5", "failures"}) {
    CHECK(report.contains(key));
  }
  const auto csv = run("bench --config " + (dir / "bench.json") + " --format csv --trials 1");
  REQUIRE(csv.status == 0);
  CHECK(csv.out.rfind("dataset,method,fraction,statistic", 0) == 0);
  std::ofstream(dir / "bad.json") << R"({"datasets": ["rock"]})";
  CHECK(run("bench --config " + (dir / "bad.json")).status == 1);
}

TEST_CASE("pipeline through the cli") {
  TempDir dir;
  const auto r = run("pipeline --builtin wwtp-fixture --seed 2 --repetitions 1 --ntree 10 --no-timing "
                     "--format json -o " + (dir / "out.csv"));
  REQUIRE(r.status == 0);
  const auto report = json::parse(r.out);
  CHECK(report.at("retained").size() == 8);
  CHECK(std::filesystem::exists(dir / "out.csv"));
}
