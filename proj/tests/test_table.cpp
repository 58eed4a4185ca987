#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "imputekit/bench.hpp"
#include "support.hpp"

using namespace imputekit;
using test::NA;

namespace {

MixedTable parse(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  return parse_csv(in, schema);
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("imputekit_test_" + name);
}

}  // namespace

TEST_CASE("column kinds") {
  CHECK_THROWS_AS(ColumnKind::categorical({"only"}), Error);
  CHECK(code_of([] { ColumnKind::categorical({"a", "a"}); }) == ErrorCode::SchemaInvalid);
  const auto k = ColumnKind::categorical({"lo", "mid", "hi"}, true);
  CHECK(k.ordered());
  CHECK(k.level_index("mid") == 1u);
  CHECK_FALSE(k.level_index("x"));
  CHECK(ColumnKind::quantitative().is_quantitative());
}

TEST_CASE("schema validation and json round trip") {
  CHECK(code_of([] { Schema({test::quant("a"), test::quant("a")}); }) == ErrorCode::SchemaInvalid);
  const Schema s({test::quant("x"), test::cat("g", {"a", "b"}, true),
                  {"z", ColumnKind::quantitative(), {"?", "NA"}}});
  CHECK(Schema::from_json(s.to_json()) == s);
  const auto parsed = Schema::from_json(
      R"({"columns":[{"name":"x","kind":"quantitative"},{"name":"g","kind":"categorical","levels":["a","b"]}]})");
  CHECK(parsed[0].missing_tokens == std::vector<std::string>{"NA", ""});
  CHECK(parsed[1].kind.level_count() == 2);
  CHECK(code_of([] { Schema::from_json(R"({"columns":[{"name":"x","kind":"text"}]})"); }) ==
        ErrorCode::SchemaInvalid);
  CHECK(s.require("z") == 2);
  CHECK(code_of([&] { s.require("nope"); }) == ErrorCode::UnknownColumn);
}

TEST_CASE("load_csv maps missing tokens") {
  const Schema s({test::quant("x"), test::cat("g", {"yes", "no"})});
  const auto t = parse("x,g\n1.5,yes\nNA,no\n3,yes\n", s);
  CHECK(t.rows() == 3);
  CHECK(t.missing_count() == 1);
  CHECK(t.is_missing(1, 0));
  CHECK(t.cell(0, 0) == Cell{1.5});
  CHECK(t.cell(1, 1) == Cell{Level{1}});
}

TEST_CASE("load_csv errors carry coordinates") {
  const Schema s({test::quant("x"), test::cat("g", {"yes", "no"})});
  try {
    parse("x,g\n1,yes\n2,maybe\n", s);
    FAIL("expected UnknownLevel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownLevel);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("'g'") != std::string::npos);
  }
  CHECK(code_of([&] { parse("x,h\n1,yes\n", s); }) == ErrorCode::HeaderMismatch);
  CHECK(code_of([&] { parse("x,g\n1\n", s); }) == ErrorCode::MalformedRow);
  CHECK(code_of([&] { parse("x,g\nabc,yes\n", s); }) == ErrorCode::UnparseableNumber);
  CHECK(code_of([&] { parse("x,g\ninf,yes\n", s); }) == ErrorCode::UnparseableNumber);
  CHECK(code_of([&] { parse("", s); }) == ErrorCode::HeaderMismatch);
}

TEST_CASE("rfc 4180 quoting") {
  const Schema s({test::cat("name", {"plain", "with,comma", "with \"quote\"", "multi\nline"}),
                  test::quant("v")});
  const auto t = test::table(s.columns(), {{0, 1, 2, 3}, {1, 2, 3, 4}});
  const std::string csv = to_csv_string(t);
  CHECK(csv.find("\"with,comma\"") != std::string::npos);
  CHECK(csv.find("\"with \"\"quote\"\"\"") != std::string::npos);
  CHECK(parse(csv, s) == t);
  CHECK(parse("name,v\r\nplain,1\r\n", s).rows() == 1);
}

TEST_CASE("write_csv round trip") {
  SUBCASE("empty table gives header only") {
    const MixedTable t(Schema({test::quant("a"), test::quant("b")}), 0);
    CHECK(to_csv_string(t) == "a,b\n");
  }
  SUBCASE("missing cells use the first token and survive the round trip") {
    const Schema s({{"a", ColumnKind::quantitative(), {"?", "NA"}}, test::cat("g", {"u", "v"})});
    const auto t = test::table(s.columns(), {{1.0, NA, 0.1 + 0.2}, {NA, 0, 1}});
    const auto csv = to_csv_string(t);
    CHECK(csv == "a,g\n1,NA\n?,u\n0.30000000000000004,v\n");
    CHECK(parse(csv, s) == t);
  }
  SUBCASE("bundled datasets are byte identical after load, write, load") {
    for (const auto& info : dataset_registry()) {
      if (info.file.empty()) continue;
      const auto csv_path = data_dir() / (info.file + ".csv");
      if (!std::filesystem::exists(csv_path)) continue;
      CAPTURE(info.name);
      const auto t = load_builtin(info.name);
      const auto path = temp_path(info.name + ".csv");
      write_csv(t, path);
      const auto again = load_csv(path, t.schema());
      CHECK(again == t);
      CHECK(to_csv_string(again) == to_csv_string(t));
      std::filesystem::remove(path);
    }
  }
  SUBCASE("unwritable path is an Io error") {
    const MixedTable t(Schema({test::quant("a")}), 1);
    CHECK(code_of([&] { write_csv(t, "/nonexistent-dir/x.csv"); }) == ErrorCode::Io);
  }
}

TEST_CASE("cells are validated against column kinds") {
  MixedTable t(Schema({test::quant("x"), test::cat("g", {"a", "b"})}), 2);
  CHECK(t.missing_count() == 4);
  t.set(0, 0, 2.0);
  t.set(0, 1, Level{1});
  CHECK(code_of([&] { t.set(1, 0, Level{0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { t.set(1, 1, Level{2}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { t.set(1, 0, std::numeric_limits<double>::infinity()); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] {
          test::table({test::cat("g", {"a", "b"})}, {{0.5}});
        }) == ErrorCode::InvalidArgument);
  t.set(0, 0, Missing{});
  CHECK(t.is_missing(0, 0));
}

TEST_CASE("missing mask") {
  const auto t = test::table({test::quant("a"), test::quant("b")}, {{1, NA, 3}, {NA, 5, NA}});
  const auto m = MissingMask::original(t);
  CHECK(m.size() == 3);
  CHECK(m.count(Provenance::Original) == 3);
  CHECK(m.contains(0, 1));
  CHECK_FALSE(m.contains(0, 0));
  CHECK(code_of([&] { MissingMask(t, {{0, 0, Provenance::Amputed}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] {
          MissingMask(t, {{1, 0, Provenance::Amputed}, {1, 0, Provenance::Original}});
        }) == ErrorCode::InvalidArgument);
  const MissingMask mixed(t, {{2, 1, Provenance::Amputed}, {1, 0, Provenance::Original}});
  CHECK(mixed.entries().front().row == 1);
  CHECK(mixed.to_csv() == "row,col,provenance\n1,0,original\n2,1,amputed\n");
  const auto path = temp_path("mask.csv");
  mixed.write_csv(path);
  CHECK(MissingMask::read_csv(path, t) == mixed);
  std::filesystem::remove(path);
}

TEST_CASE("column and cumulative missingness") {
  const auto complete = test::table({test::quant("a")}, {{1, 2, 3, 4}});
  CHECK(column_missingness(complete).per_column == std::vector<double>{0.0});
  CHECK(cumulative_missingness(complete, std::vector<std::string>{"a"}) == std::vector<double>{0.0});

  const auto t = test::table({test::quant("a"), test::quant("b")}, {{1, NA, 3, 4}, {NA, NA, 1, 1}});
  const auto m = column_missingness(t);
  CHECK(m.per_column[0] == doctest::Approx(0.25));
  CHECK(m.per_column[1] == doctest::Approx(0.5));
  CHECK(m.overall == doctest::Approx(3.0 / 8.0));

  const auto disjoint = test::table({test::quant("a"), test::quant("b")},
                                    {{NA, NA, 1, 1}, {1, 1, NA, NA}});
  const auto cum = cumulative_missingness(disjoint, std::vector<std::string>{"a", "b"});
  CHECK(cum == std::vector<double>{0.5, 0.5});
  CHECK(code_of([&] { cumulative_missingness(disjoint, std::vector<std::string>{"z"}); }) ==
        ErrorCode::UnknownColumn);
}

TEST_CASE("drop_sparse_columns") {
  const auto t = test::table({test::quant("a"), test::quant("b"), test::quant("c")},
                             {{1, 2, 3, 4}, {NA, NA, NA, 1}, {NA, NA, NA, NA}});
  const auto r = drop_sparse_columns(t, 0.5);
  CHECK(r.dropped == std::vector<std::string>{"b", "c"});
  CHECK(r.table.cols() == 1);
  CHECK(drop_sparse_columns(r.table, 0.5).table == r.table);
  CHECK(drop_sparse_columns(t, 1.0).table == t);
  CHECK(code_of([&] { drop_sparse_columns(t, 0.0); }) == ErrorCode::InvalidArgument);
  const auto empty = test::table({test::quant("a")}, {{NA, NA}});
  CHECK(code_of([&] { drop_sparse_columns(empty, 0.5); }) == ErrorCode::EmptyResult);
}

TEST_CASE("group_mean_aggregate") {
  SUBCASE("means per group") {
    const auto t = test::table({test::cat("k", {"g1", "g2"}), test::quant("v")},
                               {{0, 0, 1, 1}, {1, 3, 5, 7}});
    const auto g = group_mean_aggregate(t, "k");
    CHECK(g.rows() == 2);
    CHECK(g.raw(0, 1) == 2.0);
    CHECK(g.raw(1, 1) == 6.0);
    CHECK(g.raw(1, 0) == 1.0);
  }
  SUBCASE("all-missing group stays missing, unobserved levels and missing keys vanish") {
    const auto t = test::table(
        {test::cat("k", {"a", "b", "c"}), test::quant("v"), test::cat("m", {"x", "y"})},
        {{0, 0, 2, NA}, {NA, NA, 4, 9}, {1, 0, 1, 0}});
    const auto g = group_mean_aggregate(t, "k");
    CHECK(g.rows() == 2);
    CHECK(g.is_missing(0, 1));
    CHECK(g.raw(0, 2) == 0.0);  // tie between x and y goes to the lower level
    CHECK(g.raw(1, 0) == 2.0);
    CHECK(g.raw(1, 1) == 4.0);
  }
  SUBCASE("errors") {
    const auto t = test::table({test::quant("k"), test::quant("v")}, {{1, 2}, {3, 4}});
    CHECK(code_of([&] { group_mean_aggregate(t, "k"); }) == ErrorCode::KeyNotCategorical);
    CHECK(code_of([&] { group_mean_aggregate(t, "zz"); }) == ErrorCode::UnknownColumn);
  }
  SUBCASE("daily fixture against a brute-force recomputation") {
    const auto daily = make_wwtp_daily(40, 30, 99);
    const auto g = group_mean_aggregate(daily, "plant");
    CHECK(g.rows() == 40);
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, int>> sums;
    for (std::size_t r = 0; r < daily.rows(); ++r) {
      for (std::size_t c = 2; c < daily.cols(); ++c) {
        if (daily.is_missing(r, c)) continue;
        auto& s = sums[{static_cast<std::size_t>(daily.raw(r, 0)), c}];
        s.first += daily.raw(r, c);
        s.second += 1;
      }
    }
    for (std::size_t plant = 0; plant < 40; ++plant) {
      for (std::size_t c = 2; c < daily.cols(); ++c) {
        const auto it = sums.find({plant, c});
        if (it == sums.end()) {
          CHECK(g.is_missing(plant, c));
        } else {
          CHECK(g.raw(plant, c) == doctest::Approx(it->second.first / it->second.second).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("wwtp fixture reproduces the published missingness profile") {
  const auto t = make_wwtp_fixture();
  CHECK(t.rows() == 789);
  CHECK(t.cols() == 11);
  const double expected[] = {0.0, 0.0, 0.0013, 0.0013, 0.0025, 0.0101,
                             0.0469, 0.238, 0.967, 0.984, 0.992};
  const auto m = column_missingness(t);
  for (std::size_t c = 0; c < 11; ++c) {
    CAPTURE(t.name(c));
    CHECK(std::abs(m.per_column[c] - expected[c]) < 0.001);
  }
  std::vector<std::string> order;
  for (std::size_t c = 0; c < t.cols(); ++c) order.push_back(t.name(c));
  const auto cum = cumulative_missingness(t, order);
  CHECK(std::abs(cum[5] - 0.0025) < 0.0002);
  CHECK(std::abs(cum[10] - 0.295) < 0.001);
  const auto d = drop_sparse_columns(t, 0.9);
  CHECK(d.dropped == std::vector<std::string>{"Q.MSR", "CaCO3", "Ntk"});
  CHECK(d.table.cols() == 8);
  CHECK(std::abs(column_missingness(d.table).overall - 0.0375) < 0.001);
}
