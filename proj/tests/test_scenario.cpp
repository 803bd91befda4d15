#include <doctest.h>

#include <cmath>

#include "qinf/pipeline.hpp"
#include "qinf/scenario.hpp"

using namespace qinf;

namespace {

std::string bell_json() {
  return R"({
    "nodes": [
      {"id": "rho", "kind": "latent"},
      {"id": "X", "kind": "observed", "cardinality": 2},
      {"id": "Y", "kind": "observed", "cardinality": 2},
      {"id": "A", "kind": "observed", "cardinality": 2},
      {"id": "B", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["rho","A"],["rho","B"],["X","A"],["Y","B"]]
  })";
}

std::string instrumental_json() {
  return R"({
    "nodes": [
      {"id": "rho", "kind": "latent"},
      {"id": "X", "kind": "observed", "cardinality": 2},
      {"id": "A", "kind": "observed", "cardinality": 2},
      {"id": "B", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["X","A"],["rho","A"],["A","B"],["rho","B"]]
  })";
}

std::string shared_setting_triangle_json() {
  return R"({
    "nodes": [
      {"id": "rhoCA", "kind": "latent"},
      {"id": "rhoAB", "kind": "latent"},
      {"id": "rhoBC", "kind": "latent"},
      {"id": "X", "kind": "observed", "cardinality": 2},
      {"id": "A", "kind": "observed", "cardinality": 2},
      {"id": "B", "kind": "observed", "cardinality": 2},
      {"id": "C", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["rhoCA","A"],["rhoAB","A"],["rhoAB","B"],["rhoBC","B"],
              ["rhoBC","C"],["rhoCA","C"],["X","A"],["X","B"],["X","C"]]
  })";
}

std::string fig6a_json() {
  return R"({
    "nodes": [
      {"id": "rhoAS", "kind": "latent"},
      {"id": "rhoBC", "kind": "latent"},
      {"id": "S", "kind": "observed", "cardinality": 2},
      {"id": "A", "kind": "observed", "cardinality": 2},
      {"id": "B", "kind": "observed", "cardinality": 2},
      {"id": "C", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["rhoAS","A"],["rhoAS","rhoBC"],["S","rhoBC"],
              ["rhoBC","B"],["rhoBC","C"]]
  })";
}

}  // namespace

TEST_CASE("parse_structure accepts the triangle and rejects bad input") {
  CausalStructure tri = parse_structure(triangle_scenario_json());
  CHECK(tri.nodes.size() == 6);
  CHECK(tri.edges.size() == 6);

  CHECK_THROWS_WITH_AS(parse_structure(R"({"nodes": [], "edges": []})"),
                       doctest::Contains("no nodes"), Error);
  CHECK_THROWS_WITH_AS(
      parse_structure(R"({"nodes": [{"id":"A","kind":"observed"}], "edges": [["A","A"]]})"),
      doctest::Contains("cycle"), Error);
  CHECK_THROWS_WITH_AS(
      parse_structure(
          R"({"nodes": [{"id":"A"},{"id":"A"}], "edges": []})"),
      doctest::Contains("duplicate"), Error);
  CHECK_THROWS_WITH_AS(
      parse_structure(R"({"nodes": [{"id":"A"}], "edges": [["A","Z"]]})"),
      doctest::Contains("unknown node"), Error);
  CHECK_THROWS_WITH_AS(parse_structure("{nodes"), doctest::Contains("syntax"), Error);
}

TEST_CASE("classify identifies the paper scenarios") {
  CHECK(classify(parse_structure(triangle_scenario_json())) ==
        ScenarioClass::Correlation);
  CHECK(classify(parse_structure(bell_json())) == ScenarioClass::Network);
  CHECK(classify(parse_structure(instrumental_json())) ==
        ScenarioClass::LatentExogenous);
  CHECK(classify(parse_structure(shared_setting_triangle_json())) ==
        ScenarioClass::LatentExogenous);
}

TEST_CASE("interrupt maps the instrumental scenario to the Bell scenario") {
  CausalStructure s = parse_structure(instrumental_json());
  auto [net, report] = interrupt(s);
  CHECK(classify(net) == ScenarioClass::Network);
  // A kept its parents and lost its child to the copy A_1#.
  CHECK(net.find("A_1#") != nullptr);
  CHECK(net.parents("B") == std::vector<std::string>{"A_1#", "rho"});
  CHECK(net.children("A").empty());
  REQUIRE(report.post_selection.size() == 1);
  CHECK(report.post_selection[0].original == "A");
  CHECK(report.post_selection[0].copy == "A_1#");

  // Re-running on the output changes nothing.
  auto [again, report2] = interrupt(net);
  CHECK(structure_to_json(again) == structure_to_json(net));
  CHECK(report2.post_selection.empty());
}

TEST_CASE("interrupt splits a shared setting into three iid copies") {
  CausalStructure s = parse_structure(shared_setting_triangle_json());
  auto [net, report] = interrupt(s);
  CHECK(classify(net) == ScenarioClass::Network);
  CHECK(net.find("X") == nullptr);  // pure root removed after the split
  CHECK(net.find("X_1#") != nullptr);
  CHECK(net.find("X_2#") != nullptr);
  CHECK(net.find("X_3#") != nullptr);
  CHECK(report.post_selection.size() == 3);
  for (const auto& ps : report.post_selection) CHECK(ps.original == "X");
}

TEST_CASE("interrupt rejects non-exogenous input") {
  CausalStructure s = parse_structure(fig6a_json());
  // add rhoBC as latent (fixture has it only as an edge target)
  CHECK_THROWS_AS(interrupt(s), Error);
}

TEST_CASE("exogenize merges Bob and Charlie into one endogenous group") {
  std::string text = R"({
    "nodes": [
      {"id": "rhoAS", "kind": "latent"},
      {"id": "rhoBC", "kind": "latent"},
      {"id": "S", "kind": "observed", "cardinality": 2},
      {"id": "A", "kind": "observed", "cardinality": 2},
      {"id": "B", "kind": "observed", "cardinality": 2},
      {"id": "C", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["rhoAS","A"],["rhoAS","rhoBC"],["S","rhoBC"],
              ["rhoBC","B"],["rhoBC","C"]]
  })";
  CausalStructure s = parse_structure(text);
  CHECK(classify(s) == ScenarioClass::NonExogenous);
  auto [exo, report] = exogenize(s);
  CHECK(classify(exo) != ScenarioClass::NonExogenous);
  REQUIRE(exo.groups.size() == 1);
  CHECK(exo.groups[0].members == std::vector<std::string>{"B", "C"});
  CHECK(exo.groups[0].settings == std::vector<std::string>{"S"});
  CHECK(exo.groups[0].sources == std::vector<std::string>{"rhoAS"});
  CHECK(exo.find("rhoBC") == nullptr);

  NetworkScenario net = to_network(exo);
  int b = net.party_index("B");
  REQUIRE(b >= 0);
  CHECK(net.parties[b].setting_parents == std::vector<std::string>{"S"});
  CHECK(net.parties[b].slots.size() == 1);
  CHECK(net.parties[b].slots[0].sources == std::vector<std::string>{"rhoAS"});
  CHECK(net.parties[b].slots[0].group == 0);

  // already exogenous: unchanged
  auto [same, rep2] = exogenize(exo);
  CHECK(structure_to_json(same) == structure_to_json(exo));
  CHECK(rep2.setting_factorization.empty());
}

TEST_CASE("exogenize handles two latent parents (double inflation indices)") {
  std::string text = R"({
    "nodes": [
      {"id": "rhoL", "kind": "latent"},
      {"id": "rhoM", "kind": "latent"},
      {"id": "rhoR", "kind": "latent"},
      {"id": "rhoBC", "kind": "latent"},
      {"id": "A", "kind": "observed", "cardinality": 2},
      {"id": "B", "kind": "observed", "cardinality": 2},
      {"id": "C", "kind": "observed", "cardinality": 2},
      {"id": "D", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["rhoL","A"],["rhoL","rhoBC"],["rhoM","rhoBC"],["rhoM","D"],
              ["rhoR","C"],["rhoR","D"],["rhoBC","B"],["rhoBC","C"]]
  })";
  CausalStructure s = parse_structure(text);
  auto [exo, report] = exogenize(s);
  REQUIRE(exo.groups.size() == 1);
  CHECK(exo.groups[0].members == std::vector<std::string>{"B", "C"});
  CHECK(exo.groups[0].sources == std::vector<std::string>{"rhoL", "rhoM"});
  NetworkScenario net = to_network(exo);
  int b = net.party_index("B");
  int c = net.party_index("C");
  REQUIRE(b >= 0);
  REQUIRE(c >= 0);
  // B carries the double index (i, j); C also keeps its own rhoR slot.
  CHECK(net.parties[b].slots.size() == 1);
  CHECK(net.parties[b].slots[0].sources ==
        std::vector<std::string>{"rhoL", "rhoM"});
  CHECK(net.parties[c].slots.size() == 2);
}

TEST_CASE("exogenize rejects latent nodes with no observed descendant") {
  std::string text = R"({
    "nodes": [
      {"id": "rhoA", "kind": "latent"},
      {"id": "rhoB", "kind": "latent"},
      {"id": "A", "kind": "observed", "cardinality": 2}
    ],
    "edges": [["rhoA","rhoB"],["rhoA","A"]]
  })";
  CHECK_THROWS_WITH_AS(exogenize(parse_structure(text)),
                       doctest::Contains("no observed descendant"), Error);
}

TEST_CASE("conditional_target computes conditionals and the product test") {
  CausalStructure bell = parse_structure(bell_json());
  TransformReport empty_report;

  SUBCASE("uniform settings pass the factorization test") {
    DistributionTable joint;
    joint.variables = {"X", "Y", "A", "B"};
    joint.cardinalities = {2, 2, 2, 2};
    joint.table.assign(16, 0.0);
    // P(a,b|x,y): a = b = x & y (deterministic AND), settings uniform.
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        int ab = x & y;
        joint.table[joint.index_of({x, y, ab, ab})] = 0.25;
      }
    ConditionalTarget t = conditional_target(joint, bell, empty_report);
    CHECK(t.factorization_ok);
    CHECK(t.factorization_deviation == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(t.settings == std::vector<std::string>{"X", "Y"});
    CHECK(t.outputs == std::vector<std::string>{"A", "B"});
    // Rows sum to one where defined.
    std::size_t n_out = 4;
    for (std::size_t si = 0; si < 4; ++si) {
      double s = 0;
      for (std::size_t oi = 0; oi < n_out; ++oi) s += t.table[si * n_out + oi];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("perfectly correlated settings fail the product test") {
    DistributionTable joint;
    joint.variables = {"X", "Y", "A", "B"};
    joint.cardinalities = {2, 2, 2, 2};
    joint.table.assign(16, 0.0);
    joint.table[joint.index_of({0, 0, 0, 0})] = 0.5;
    joint.table[joint.index_of({1, 1, 0, 0})] = 0.5;
    ConditionalTarget t = conditional_target(joint, bell, empty_report);
    CHECK(!t.factorization_ok);
    CHECK(t.factorization_deviation == doctest::Approx(0.25));
    // The off-diagonal settings have zero probability: skipped with warnings.
    CHECK(t.warnings.size() == 2);
    CHECK(t.defined[0]);
    CHECK(!t.defined[1]);
  }

  SUBCASE("instrumental conditional is P(a,b,x)/P(x)") {
    CausalStructure inst = parse_structure(instrumental_json());
    DistributionTable joint;
    joint.variables = {"X", "A", "B"};
    joint.cardinalities = {2, 2, 2};
    joint.table = {0.10, 0.15, 0.20, 0.15, 0.08, 0.12, 0.09, 0.11};
    ConditionalTarget t = conditional_target(joint, inst, empty_report);
    CHECK(t.settings == std::vector<std::string>{"X"});
    double px0 = 0.10 + 0.15 + 0.20 + 0.15;
    // outputs (A,B) row-major within the x=0 row
    CHECK(t.table[0] == doctest::Approx(0.10 / px0));
    CHECK(t.table[3] == doctest::Approx(0.15 / px0));
  }
}

TEST_CASE("to_network lays out the triangle in edge order") {
  NetworkScenario net = triangle_network();
  REQUIRE(net.parties.size() == 3);
  CHECK(net.sources == std::vector<std::string>{"rhoCA", "rhoAB", "rhoBC"});
  CHECK(net.parties[0].id == "A");
  CHECK(net.parties[0].slots[0].sources == std::vector<std::string>{"rhoCA"});
  CHECK(net.parties[0].slots[1].sources == std::vector<std::string>{"rhoAB"});
  CHECK(net.parties[1].slots[0].sources == std::vector<std::string>{"rhoAB"});
  CHECK(net.parties[2].slots[1].sources == std::vector<std::string>{"rhoCA"});
}
