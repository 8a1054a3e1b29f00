#include <vector>

#include "discfa/simulate.hpp"
#include "discfa/types.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace discfa;

TEST_CASE("canonicalize_partition sorts groups by smallest index") {
  const Partition p = canonicalize_partition({{3}, {1, 2}});
  CHECK(p.groups() == std::vector<std::vector<int>>{{1, 2}, {3}});
  CHECK(p.display() == "(2, 1)");

  CHECK(canonicalize_partition({{1}, {2}, {3}}).display() == "(1, 1, 1)");

  const Partition q = canonicalize_partition({{2, 4}, {1}, {3}});
  CHECK(q.groups() == std::vector<std::vector<int>>{{1}, {2, 4}, {3}});
  CHECK(q.display() == "(1, 2, 1)");
}

TEST_CASE("canonicalize_partition is idempotent") {
  const Partition p = canonicalize_partition({{4, 2}, {3}, {5, 1}});
  CHECK(canonicalize_partition(p.groups()) == p);
}

TEST_CASE("canonicalize_partition rejects overlap and gaps") {
  CHECK_THROWS_AS(canonicalize_partition({{1, 2}, {2, 3}}), StructuralError);
  CHECK_THROWS_AS(canonicalize_partition({{1}, {3}}), StructuralError);
  CHECK_THROWS_AS(canonicalize_partition({{1}, {}}), StructuralError);
  CHECK_THROWS_AS(canonicalize_partition({{1, 1}, {2}}), StructuralError);
}

TEST_CASE("merge_groups merges and re-canonicalizes") {
  const Partition p = canonicalize_partition({{1}, {2}, {3}});
  CHECK(merge_groups(p, 1, 2) == canonicalize_partition({{1, 2}, {3}}));

  const Partition q = canonicalize_partition({{1, 2}, {3}, {4}, {5}});
  const Partition merged = merge_groups(q, 1, 3);
  CHECK(merged == canonicalize_partition({{1, 2, 4}, {3}, {5}}));
  CHECK(merged.display() == "(3, 1, 1)");

  const Partition r = canonicalize_partition({{1, 2}, {3, 4}});
  CHECK(merge_groups(r, 1, 2).display() == "(4)");

  CHECK_THROWS_AS(merge_groups(p, 1, 1), StructuralError);
  CHECK_THROWS_AS(merge_groups(p, 0, 2), StructuralError);
  CHECK_THROWS_AS(merge_groups(p, 1, 4), StructuralError);
}

TEST_CASE("repeated merging reaches the single group in N-1 merges") {
  Rng rng(11);
  for (int n_vars : {2, 3, 5, 8}) {
    Partition p = Partition::independence(n_vars);
    int merges = 0;
    while (p.group_count() > 1) {
      const int g = p.group_count();
      const int i = testutil::int_in(rng, 1, g);
      int j = testutil::int_in(rng, 1, g - 1);
      if (j >= i) ++j;
      p = merge_groups(p, i, j);
      ++merges;
    }
    CHECK(merges == n_vars - 1);
    CHECK(p == Partition::single_group(n_vars));
  }
}

TEST_CASE("parameter_count follows the per-entity rule") {
  const ModelFamily plain_p = ModelFamily::from_code("p");
  const ModelFamily zinb = ModelFamily::from_code("zinb");

  const Partition ex = canonicalize_partition({{1}, {2, 3, 4}, {5, 6, 7, 8}, {9, 10}});
  CHECK(ex.display() == "(1, 3, 4, 2)");
  CHECK(parameter_count(ex, plain_p) == 13);  // 10 variable rates + 3 factor rates

  CHECK(parameter_count(Partition::independence(3), plain_p) == 3);
  CHECK(parameter_count(Partition::single_group(2), zinb) == 9);  // 3 entities x (r,p,pi)
}

TEST_CASE("parameter_count delta under merging matches the counting rule") {
  Rng rng(21);
  for (int iter = 0; iter < 100; ++iter) {
    const int n_vars = testutil::int_in(rng, 2, 9);
    Partition p = Partition::independence(n_vars);
    const int pre_merges = testutil::int_in(rng, 0, n_vars - 2);
    for (int t = 0; t < pre_merges; ++t) {
      const int g = p.group_count();
      const int i = testutil::int_in(rng, 1, g);
      int j = testutil::int_in(rng, 1, g - 1);
      if (j >= i) ++j;
      p = merge_groups(p, i, j);
    }
    const ModelFamily f = testutil::family_by_index(testutil::int_in(rng, 0, 7), 6);
    const int g = p.group_count();
    if (g < 2) continue;
    const int i = testutil::int_in(rng, 1, g);
    int j = testutil::int_in(rng, 1, g - 1);
    if (j >= i) ++j;
    const int k = f.params_per_entity();
    const int released =
        (p.groups()[i - 1].size() >= 2 ? k : 0) + (p.groups()[j - 1].size() >= 2 ? k : 0);
    CHECK(parameter_count(merge_groups(p, i, j), f) ==
          parameter_count(p, f) + k - released);

    // direct recount
    int direct = 0;
    for (const auto& grp : p.groups()) {
      direct += k * static_cast<int>(grp.size());
      if (grp.size() >= 2) direct += k;
    }
    CHECK(parameter_count(p, f) == direct);
  }
}

TEST_CASE("group listing round-trips through parse_groups") {
  Rng rng(31);
  for (int iter = 0; iter < 50; ++iter) {
    const int n_vars = testutil::int_in(rng, 1, 9);
    Partition p = Partition::independence(n_vars);
    while (p.group_count() > 1 && rng.uniform() < 0.6) {
      const int g = p.group_count();
      const int i = testutil::int_in(rng, 1, g);
      int j = testutil::int_in(rng, 1, g - 1);
      if (j >= i) ++j;
      p = merge_groups(p, i, j);
    }
    const Partition back = Partition::parse_groups(p.format_groups());
    CHECK(back == p);
    CHECK(back.display() == p.display());
  }
}

TEST_CASE("ModelFamily codes round-trip and gate truncation") {
  for (const char* code : ModelFamily::all_codes()) {
    const bool needs_t = ModelFamily::code_requires_truncation(code);
    const ModelFamily f =
        ModelFamily::from_code(code, needs_t ? std::optional<int>(6) : std::nullopt);
    CHECK(f.code() == code);
    CHECK(f.truncated() == needs_t);
  }
  CHECK_THROWS_AS(ModelFamily::from_code("pt"), ConfigError);
  CHECK_THROWS_AS(ModelFamily::from_code("p", 6), ConfigError);
  CHECK_THROWS_AS(ModelFamily::from_code("gaussian"), ConfigError);
  CHECK_THROWS_AS(ModelFamily::from_code("pt", 0), DomainError);
}

TEST_CASE("params_per_entity spans 1 to 3") {
  CHECK(ModelFamily::from_code("p").params_per_entity() == 1);
  CHECK(ModelFamily::from_code("zip").params_per_entity() == 2);
  CHECK(ModelFamily::from_code("nb").params_per_entity() == 2);
  CHECK(ModelFamily::from_code("zinbt", 6).params_per_entity() == 3);
}

TEST_CASE("Dataset validates shape, values, and names") {
  CHECK_THROWS_AS(Dataset({{0, 1}, {2, -1}}, {"a", "b"}), DataError);
  CHECK_THROWS_AS(Dataset({{0, 1}, {2}}, {"a", "b"}), DataError);
  CHECK_THROWS_AS(Dataset({{0, 1}, {2, 3}}, {"a", "a"}), DataError);
  CHECK_THROWS_AS(Dataset({{0, 1}}, {"a", "b"}), DataError);

  const Dataset d({{0, 1, 2}, {3, 0, 1}}, {"a", "b"});
  CHECK(d.n_rows() == 3);
  CHECK(d.n_cols() == 2);
  CHECK(d.max_value() == 3);
}

TEST_CASE("GroupParameters validation enforces the factor convention") {
  const ModelFamily f = ModelFamily::from_code("p");
  GroupParameters gp;
  gp.variables = {ComponentParams{BaseParams::poisson(1.0), 0.0}};
  CHECK_NOTHROW(gp.validate(f, 1));

  // singleton must not carry a factor
  gp.factor = ComponentParams{BaseParams::poisson(1.0), 0.0};
  CHECK_THROWS_AS(gp.validate(f, 1), StructuralError);

  // a pair must
  gp.variables.push_back(ComponentParams{BaseParams::poisson(2.0), 0.0});
  CHECK_NOTHROW(gp.validate(f, 2));
  gp.factor.reset();
  CHECK_THROWS_AS(gp.validate(f, 2), StructuralError);

  // pi on a non-zero-inflated family
  gp.factor = ComponentParams{BaseParams::poisson(1.0), 0.0};
  gp.variables[0].pi = 0.2;
  CHECK_THROWS_AS(gp.validate(f, 2), StructuralError);
  CHECK_NOTHROW(gp.validate(ModelFamily::from_code("zip"), 2));
}
