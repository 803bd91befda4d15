#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qinf/common.hpp"

// Causal structures and their reduction to network scenarios.
//
// A structure enters as a DAG of latent and observed nodes. classify() sorts
// it into one of four classes; interrupt() and exogenize() rewrite the two
// non-network classes step by step until a two-layer network remains, while
// a TransformReport tracks the post-selection and factorization obligations
// that keep the rewritten scenario statistically equivalent to the original.

namespace qinf {

enum class NodeKind { Latent, Observed };

struct CausalNode {
  std::string id;
  NodeKind kind = NodeKind::Observed;
  int cardinality = 0;  // observed nodes only; >= 1
};

struct CausalEdge {
  std::string from, to;
  int via_group = -1;  // set by exogenize: edge routed through removed node
};

// Endogenous group produced by exogenize (one per removed non-exogenous
// latent node): the named observed members jointly carry the removed node's
// setting indices and one inflation index per listed root source.
struct EndogenousGroup {
  std::vector<std::string> members;
  std::vector<std::string> settings;
  std::vector<std::string> sources;
};

struct CausalStructure {
  std::vector<CausalNode> nodes;
  std::vector<CausalEdge> edges;
  std::vector<EndogenousGroup> groups;

  const CausalNode* find(const std::string& id) const;
  std::vector<std::string> parents(const std::string& id) const;
  std::vector<std::string> children(const std::string& id) const;
  void validate() const;  // ids unique, edges resolve, acyclic, cardinalities
};

enum class ScenarioClass { Correlation, Network, LatentExogenous, NonExogenous };

std::string to_string(ScenarioClass c);

// One entry per split copy: the copy must equal the observed value of the
// original node.
struct PostSelection {
  std::string original;
  std::string copy;
};

struct TransformReport {
  std::vector<PostSelection> post_selection;
  // Groups of original setting variables whose joint distribution must be a
  // product; one group per independence obligation.
  std::vector<std::vector<std::string>> setting_factorization;
};

CausalStructure parse_structure(const std::string& json_text);
std::string structure_to_json(const CausalStructure& s);

ScenarioClass classify(const CausalStructure& s);

// Maximal interruption: split every observed non-leaf node connected to more
// than one node into one copy per outgoing edge. Requires a latent-exogenous
// input; network inputs pass through unchanged.
std::pair<CausalStructure, TransformReport> interrupt(const CausalStructure& s);

// Remove non-exogenous latent nodes innermost-first, merging their observed
// descendants into endogenous groups that carry setting indices (observed
// parents) and per-root inflation indices.
std::pair<CausalStructure, TransformReport> exogenize(const CausalStructure& s);

// --- distributions ------------------------------------------------------

struct DistributionTable {
  std::vector<std::string> variables;  // index order; last varies fastest
  std::vector<int> cardinalities;
  std::vector<double> table;  // row-major

  std::size_t index_of(const std::vector<int>& assignment) const;  // 0-based values
  double sum() const;
};

DistributionTable parse_distribution(const std::string& json_text,
                                     const CausalStructure& s);
std::string distribution_to_json(const DistributionTable& d);

struct ConditionalTarget {
  std::vector<std::string> outputs;    // measured variables
  std::vector<std::string> settings;   // conditioned variables (observed roots
                                       // with children in the original DAG)
  std::vector<int> output_cards, setting_cards;
  // P(outputs | settings), row-major with settings as the outer index block;
  // defined[s] marks setting rows with positive marginal probability.
  std::vector<double> table;
  std::vector<bool> defined;
  bool factorization_ok = true;
  double factorization_deviation = 0.0;
  std::vector<std::string> warnings;  // e.g. zero-probability setting rows
};

ConditionalTarget conditional_target(const DistributionTable& joint,
                                     const CausalStructure& s,
                                     const TransformReport& report);

// --- network form -------------------------------------------------------

struct SlotSpec {
  // Source ids feeding this incoming arrow. Exactly one for plain networks;
  // endogenous slots list every root ancestor routed through a removed node.
  std::vector<std::string> sources;
  int group = -1;  // index into NetworkScenario::groups, or -1
};

struct PartySpec {
  std::string id;
  int outcomes = 2;                           // M_v
  std::vector<std::string> setting_parents;   // observed-root parents
  std::vector<int> setting_cards;             // aligned with setting_parents
  std::vector<SlotSpec> slots;
  int settings() const;  // product of setting_cards, min 1
};

struct NetworkScenario {
  std::vector<std::string> sources;
  std::vector<PartySpec> parties;
  std::vector<EndogenousGroup> groups;

  int source_index(const std::string& id) const;
  int party_index(const std::string& id) const;
  void validate() const;
};

// Interpret a network-classified CausalStructure as a NetworkScenario.
NetworkScenario to_network(const CausalStructure& s);

}  // namespace qinf
