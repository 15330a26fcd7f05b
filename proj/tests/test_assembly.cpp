// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>
#include <map>
#include <set>

#include "sdn/assembly.hpp"
#include "sdn/oracles.hpp"

using namespace sdn;

TEST_CASE("bundled catalog: 16 connected parts, base chassis") {
  PartCatalog cat = default_catalog();
  CHECK(cat.part_count() == 16);
  CHECK(cat.part(cat.base_part).name == "chassis");
  CHECK(state_valid(cat, full_state(cat)));
  CHECK(cat.bounding_radius() > 1.0);
}

TEST_CASE("catalog validation rejects broken documents") {
  SUBCASE("isolated part") {
    CHECK_THROWS_AS(load_catalog(R"({"base_part":"a","parts":[
      {"id":1,"name":"a","color":[1,2,3],"boxes":[{"center":[0,0,0],"size":[1,1,1]}]},
      {"id":2,"name":"b","color":[4,5,6],"boxes":[{"center":[0,0,0],"size":[1,1,1]}]}],
      "adjacency":[]})"),
                    ValidationError);
  }
  SUBCASE("missing base part") {
    CHECK_THROWS_AS(load_catalog(R"({"base_part":"nope","parts":[
      {"id":1,"name":"a","color":[1,2,3],"boxes":[{"center":[0,0,0],"size":[1,1,1]}]}],
      "adjacency":[]})"),
                    ValidationError);
  }
  SUBCASE("non-positive box extent") {
    CHECK_THROWS_AS(load_catalog(R"({"base_part":"a","parts":[
      {"id":1,"name":"a","color":[1,2,3],"boxes":[{"center":[0,0,0],"size":[1,0,1]}]}],
      "adjacency":[]})"),
                    ValidationError);
  }
  SUBCASE("duplicate colors") {
    CHECK_THROWS_AS(load_catalog(R"({"base_part":"a","parts":[
      {"id":1,"name":"a","color":[1,2,3],"boxes":[{"center":[0,0,0],"size":[1,1,1]}]},
      {"id":2,"name":"b","color":[1,2,3],"boxes":[{"center":[0,0,0],"size":[1,1,1]}]}],
      "adjacency":[["a","b"]]})"),
                    ValidationError);
  }
  SUBCASE("garbage text") { CHECK_THROWS_AS(load_catalog("{nope"), ParseError); }
}

TEST_CASE("sample_state keeps states connected with base present") {
  PartCatalog cat = default_catalog();
  Rng rng(21);
  std::set<uint32_t> distinct;
  bool saw_full = false;
  for (int i = 0; i < 2000; ++i) {
    AssemblyState s = sample_state(cat, rng);
    CHECK(s.contains(cat.base_part));
    CHECK(state_valid(cat, s));
    distinct.insert(s.mask);
    saw_full = saw_full || (s.mask == full_state(cat).mask);
  }
  CHECK(distinct.size() >= 100);
  CHECK(saw_full);  // zero removal steps occur
}

TEST_CASE("valid-state lattice matches an independent tree count") {
  PartCatalog cat = default_catalog();
  auto states = enumerate_valid_states(cat);
  // the bundled adjacency is a tree; connected subgraphs containing the root
  // are counted by f(v) = prod over children (1 + f(child))
  std::map<int, std::vector<int>> children;
  {
    std::vector<int> parent(static_cast<size_t>(cat.part_count()) + 1, 0);
    std::vector<int> stack{cat.base_part};
    parent[static_cast<size_t>(cat.base_part)] = cat.base_part;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (int nb : cat.neighbors(cur))
        if (parent[static_cast<size_t>(nb)] == 0) {
          parent[static_cast<size_t>(nb)] = cur;
          children[cur].push_back(nb);
          stack.push_back(nb);
        }
    }
  }
  std::function<uint64_t(int)> count = [&](int v) -> uint64_t {
    uint64_t f = 1;
    for (int c : children[v]) f *= 1 + count(c);
    return f;
  };
  CHECK(states.size() == count(cat.base_part));
  // sampler support is a subset of the enumerated lattice
  std::set<uint32_t> universe(states.begin(), states.end());
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) CHECK(universe.count(sample_state(cat, rng).mask) == 1);
}

TEST_CASE("part_diff computes the exact symmetric difference") {
  PartCatalog cat = default_catalog();
  AssemblyState full = full_state(cat);

  SUBCASE("identical states") {
    PartDiff d = part_diff(full, full);
    CHECK(d.only_in_a.empty());
    CHECK(d.only_in_b.empty());
    CHECK(d.count() == 0);
  }

  SUBCASE("full minus wheel_3") {
    AssemblyState b = full;
    b.remove(cat.id_of("wheel_3"));
    PartDiff d = part_diff(full, b);
    CHECK(d.only_in_a == std::vector<int>{cat.id_of("wheel_3")});
    CHECK(d.only_in_b.empty());
  }

  SUBCASE("random pairs match the set-algebra oracle") {
    Rng rng(41);
    for (int i = 0; i < 300; ++i) {
      AssemblyState a = sample_state(cat, rng), b = sample_state(cat, rng);
      PartDiff got = part_diff(a, b);
      PartDiff want = oracle::part_diff_reference(cat, a, b);
      CHECK(got.only_in_a == want.only_in_a);
      CHECK(got.only_in_b == want.only_in_b);
      PartDiff swapped = part_diff(b, a);
      CHECK(swapped.only_in_a == got.only_in_b);
      CHECK(swapped.only_in_b == got.only_in_a);
    }
  }
}

TEST_CASE("sample_state_pair respects bounds and constraints") {
  PartCatalog cat = default_catalog();
  Rng rng(51);

  SUBCASE("d_min = d_max = 0 gives identical states") {
    for (int i = 0; i < 50; ++i) {
      auto [a, b] = sample_state_pair(cat, 0, 0, {}, rng);
      CHECK(a.mask == b.mask);
    }
  }

  SUBCASE("training bounds [1, 6] hold over many draws") {
    for (int i = 0; i < 2000; ++i) {
      auto [a, b] = sample_state_pair(cat, 1, 6, {}, rng);
      int d = part_diff(a, b).count();
      CHECK(d >= 1);
      CHECK(d <= 6);
    }
  }

  SUBCASE("never-present and always-present constraints hold") {
    StateConstraints c;
    c.never_present = {cat.id_of("pulley"), cat.id_of("wheel_4")};
    c.always_present = {cat.id_of("front_bracket")};
    for (int i = 0; i < 500; ++i) {
      auto [a, b] = sample_state_pair(cat, 1, 6, c, rng);
      for (const AssemblyState* s : {&a, &b}) {
        CHECK(!s->contains(cat.id_of("pulley")));
        CHECK(!s->contains(cat.id_of("wheel_4")));
        CHECK(s->contains(cat.id_of("front_bracket")));
      }
    }
  }

  SUBCASE("infeasible bounds raise a generation error") {
    CHECK_THROWS_AS(sample_state_pair(cat, 16, 16, {}, rng, 2000), GenerationError);
  }

  SUBCASE("invalid bounds are rejected") {
    CHECK_THROWS_AS(sample_state_pair(cat, 4, 2, {}, rng), InvalidArgument);
  }
}
