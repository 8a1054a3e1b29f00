#include <sstream>

#include "discfa/io.hpp"
#include "doctest.h"

using namespace discfa;
using doctest::Approx;

TEST_CASE("csv load and write round trip") {
  std::istringstream in("a,b\n0,1\n2,3\n1,1\n");
  const Dataset d = load_csv(in);
  CHECK(d.n_rows() == 3);
  CHECK(d.n_cols() == 2);
  CHECK(d.names() == std::vector<std::string>{"a", "b"});
  CHECK(d.column(0) == std::vector<int>{0, 2, 1});

  std::ostringstream out;
  write_csv(d, out);
  CHECK(out.str() == "a,b\n0,1\n2,3\n1,1\n");
}

TEST_CASE("csv loader names the offending cell") {
  {
    std::istringstream in("a,b\n0,-1\n");
    CHECK_THROWS_WITH_AS(load_csv(in),
                         "<stream>: negative values in the data (row 1, column 'b')",
                         DataError);
  }
  {
    std::istringstream in("a,b\n0,1.5\n");
    CHECK_THROWS_WITH_AS(load_csv(in), "<stream>: non-integer value '1.5' at row 1, column 'b'",
                         DataError);
  }
  {
    std::istringstream in("a,b\n0,\n");
    CHECK_THROWS_AS(load_csv(in), DataError);
  }
  {
    std::istringstream in("a,b\n0\n");
    CHECK_THROWS_AS(load_csv(in), DataError);
  }
  {
    std::istringstream in("a,b\nx,1\n");
    CHECK_THROWS_AS(load_csv(in), DataError);
  }
  {
    std::istringstream in("");
    CHECK_THROWS_AS(load_csv(in), DataError);
  }
  {
    std::istringstream in("a,b\n");
    CHECK_THROWS_AS(load_csv(in), DataError);
  }
}

TEST_CASE("csv loader tolerates crlf and blank trailing lines") {
  std::istringstream in("a,b\r\n1,2\r\n\n");
  const Dataset d = load_csv(in);
  CHECK(d.n_rows() == 1);
  CHECK(d.column(1) == std::vector<int>{2});
}

TEST_CASE("shift_dataset subtracts and validates") {
  const Dataset d({{1, 2}, {3, 1}}, {"a", "b"});
  const Dataset s = shift_dataset(d, 1);
  CHECK(s.column(0) == std::vector<int>{0, 1});
  CHECK(s.column(1) == std::vector<int>{2, 0});
  CHECK_THROWS_AS(shift_dataset(d, 2), DataError);
}

TEST_CASE("simspec json parses and re-canonicalizes") {
  const auto j = nlohmann::json::parse(R"({
    "partition": [[3, 2], [1]],
    "family": {"base": "negbin", "zero_inflated": true, "trunc": 6},
    "params": [
      {"factor": {"r": 1.0, "p": 0.5, "pi": 0.3},
       "variables": [{"r": 2.0, "p": 0.6, "pi": 0.1}, {"r": 3.0, "p": 0.7, "pi": 0.2}]},
      {"variables": [{"r": 4.0, "p": 0.8}]}
    ],
    "n": 50,
    "seed": 7
  })");
  const SimSpec spec = simspec_from_json(j);
  CHECK(spec.partition == canonicalize_partition({{1}, {2, 3}}));
  CHECK(spec.family.code() == "zinbt");
  CHECK(spec.n == 50);
  CHECK(spec.seed == 7);
  // group {1} comes first after canonicalization, carrying its own bundle
  CHECK(!spec.params[0].factor.has_value());
  CHECK(spec.params[0].variables[0].base.r == 4.0);
  // members of [3, 2] were sorted to [2, 3] with their params following
  CHECK(spec.params[1].factor->pi == 0.3);
  CHECK(spec.params[1].variables[0].base.r == 3.0);  // written for var 3... sorted to var 2
  CHECK(spec.params[1].variables[1].base.r == 2.0);
}

TEST_CASE("simspec json rejects malformed documents") {
  auto parse = [](const char* text) { return simspec_from_json(nlohmann::json::parse(text)); };
  // params/partition misalignment
  CHECK_THROWS_AS(parse(R"({"partition": [[1],[2]],
                            "family": {"base": "poisson"},
                            "params": [{"variables": [{"theta": 1.0}]}],
                            "n": 5})"),
                  ConfigError);
  // unknown base
  CHECK_THROWS_AS(parse(R"({"partition": [[1]],
                            "family": {"base": "gaussian"},
                            "params": [{"variables": [{"theta": 1.0}]}],
                            "n": 5})"),
                  ConfigError);
  // pi given for a family without zero inflation
  CHECK_THROWS_AS(parse(R"({"partition": [[1]],
                            "family": {"base": "poisson"},
                            "params": [{"variables": [{"theta": 1.0, "pi": 0.2}]}],
                            "n": 5})"),
                  ConfigError);
  // overlapping groups
  CHECK_THROWS_AS(parse(R"({"partition": [[1, 2],[2]],
                            "family": {"base": "poisson"},
                            "params": [{"factor": {"theta": 1.0},
                                        "variables": [{"theta": 1.0}, {"theta": 1.0}]},
                                       {"variables": [{"theta": 1.0}]}],
                            "n": 5})"),
                  ConfigError);
  // invalid rate
  CHECK_THROWS_AS(parse(R"({"partition": [[1]],
                            "family": {"base": "poisson"},
                            "params": [{"variables": [{"theta": -2.0}]}],
                            "n": 5})"),
                  ConfigError);
}

TEST_CASE("simspec member permutation follows the variable labels") {
  // distinct rates per variable, written out of order: simulated means must
  // line up with the labels, not with the written slot order
  const auto j = nlohmann::json::parse(R"({
    "partition": [[2, 1]],
    "family": {"base": "poisson"},
    "params": [
      {"factor": {"theta": 0.2},
       "variables": [{"theta": 4.0}, {"theta": 0.3}]}
    ],
    "n": 4000,
    "seed": 11
  })");
  const SimSpec spec = simspec_from_json(j);
  const Dataset d = simulate(spec);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < d.n_rows(); ++i) {
    m1 += d.column(0)[static_cast<std::size_t>(i)];
    m2 += d.column(1)[static_cast<std::size_t>(i)];
  }
  m1 /= d.n_rows();
  m2 /= d.n_rows();
  CHECK(m1 == Approx(0.5).epsilon(0.2));   // Var1: theta 0.3 + factor 0.2
  CHECK(m2 == Approx(4.2).epsilon(0.05));  // Var2: theta 4.0 + factor 0.2
}
