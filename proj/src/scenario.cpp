#include "qinf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qinf {

using json = nlohmann::ordered_json;

const CausalNode* CausalStructure::find(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::vector<std::string> CausalStructure::parents(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.to == id) out.push_back(e.from);
  return out;
}

std::vector<std::string> CausalStructure::children(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.from == id) out.push_back(e.to);
  return out;
}

void CausalStructure::validate() const {
  require(!nodes.empty(), "no nodes");
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    require(!n.id.empty(), "node with empty id");
    require(ids.insert(n.id).second, "duplicate id: " + n.id);
    if (n.kind == NodeKind::Observed)
      require(n.cardinality >= 1,
              "observed node " + n.id + " needs cardinality >= 1");
  }
  for (const auto& e : edges) {
    require(ids.count(e.from), "unknown node reference: " + e.from);
    require(ids.count(e.to), "unknown node reference: " + e.to);
  }
  // Kahn's algorithm; leftover nodes mean a cycle.
  std::map<std::string, int> indeg;
  for (const auto& n : nodes) indeg[n.id] = 0;
  for (const auto& e : edges) indeg[e.to]++;
  std::vector<std::string> queue;
  for (auto& [id, d] : indeg)
    if (d == 0) queue.push_back(id);
  std::size_t done = 0;
  while (!queue.empty()) {
    std::string v = queue.back();
    queue.pop_back();
    ++done;
    for (const auto& e : edges)
      if (e.from == v && --indeg[e.to] == 0) queue.push_back(e.to);
  }
  require(done == nodes.size(), "cycle detected");
  for (const auto& g : groups)
    for (const auto& m : g.members)
      require(ids.count(m), "group references unknown node: " + m);
}

std::string to_string(ScenarioClass c) {
  switch (c) {
    case ScenarioClass::Correlation: return "correlation";
    case ScenarioClass::Network: return "network";
    case ScenarioClass::LatentExogenous: return "latentExogenous";
    case ScenarioClass::NonExogenous: return "nonExogenous";
  }
  return "?";
}

// ---------------------------------------------------------------- JSON I/O

CausalStructure parse_structure(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("scenario syntax error: ") + e.what());
  }
  CausalStructure s;
  require(j.contains("nodes") && j["nodes"].is_array(), "missing 'nodes' array");
  for (const auto& n : j["nodes"]) {
    CausalNode node;
    require(n.contains("id"), "node without id");
    node.id = n["id"].get<std::string>();
    std::string kind = n.value("kind", "observed");
    if (kind == "latent")
      node.kind = NodeKind::Latent;
    else if (kind == "observed")
      node.kind = NodeKind::Observed;
    else
      throw Error("node " + node.id + ": unknown kind '" + kind + "'");
    if (node.kind == NodeKind::Observed)
      node.cardinality = n.value("cardinality", 2);
    s.nodes.push_back(node);
  }
  if (j.contains("edges"))
    for (const auto& e : j["edges"]) {
      require(e.is_array() && e.size() == 2, "edge must be a [parent, child] pair");
      s.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>(), -1});
    }
  if (j.contains("groups"))
    for (const auto& g : j["groups"]) {
      EndogenousGroup grp;
      for (const auto& m : g.value("members", json::array()))
        grp.members.push_back(m.get<std::string>());
      for (const auto& m : g.value("settings", json::array()))
        grp.settings.push_back(m.get<std::string>());
      for (const auto& m : g.value("sources", json::array()))
        grp.sources.push_back(m.get<std::string>());
      s.groups.push_back(grp);
    }
  // Recover group routing for re-parsed structures: an edge from a group
  // source to a group member runs through the removed node.
  for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
    const auto& g = s.groups[gi];
    for (auto& e : s.edges) {
      bool src = std::count(g.sources.begin(), g.sources.end(), e.from) ||
                 std::count(g.settings.begin(), g.settings.end(), e.from);
      bool mem = std::count(g.members.begin(), g.members.end(), e.to);
      if (src && mem) e.via_group = static_cast<int>(gi);
    }
  }
  s.validate();
  return s;
}

std::string structure_to_json(const CausalStructure& s) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : s.nodes) {
    json node;
    node["id"] = n.id;
    node["kind"] = n.kind == NodeKind::Latent ? "latent" : "observed";
    if (n.kind == NodeKind::Observed) node["cardinality"] = n.cardinality;
    j["nodes"].push_back(node);
  }
  j["edges"] = json::array();
  for (const auto& e : s.edges) j["edges"].push_back({e.from, e.to});
  if (!s.groups.empty()) {
    j["groups"] = json::array();
    for (const auto& g : s.groups) {
      json grp;
      grp["members"] = g.members;
      grp["settings"] = g.settings;
      grp["sources"] = g.sources;
      j["groups"].push_back(grp);
    }
  }
  return j.dump(2) + "\n";
}

// ------------------------------------------------------------ classification

namespace {

// Outgoing edges of an observed root that run into one endogenous group act
// as a single logical child (the group node of Fig 6(c)).
int logical_child_count(const CausalStructure& s, const std::string& id) {
  std::set<std::string> plain;
  std::set<int> grouped;
  for (const auto& e : s.edges)
    if (e.from == id) {
      if (e.via_group >= 0)
        grouped.insert(e.via_group);
      else
        plain.insert(e.to);
    }
  return static_cast<int>(plain.size() + grouped.size());
}

}  // namespace

ScenarioClass classify(const CausalStructure& s) {
  s.validate();
  for (const auto& n : s.nodes)
    if (n.kind == NodeKind::Latent && !s.parents(n.id).empty())
      return ScenarioClass::NonExogenous;

  bool network = true, has_settings = false;
  for (const auto& n : s.nodes) {
    if (n.kind != NodeKind::Observed) continue;
    if (s.children(n.id).empty()) continue;  // leaf (party) or isolated
    has_settings = true;
    // An observed node with children must be a root feeding one logical child.
    if (!s.parents(n.id).empty() || logical_child_count(s, n.id) != 1)
      network = false;
  }
  if (!network) return ScenarioClass::LatentExogenous;
  return has_settings ? ScenarioClass::Network : ScenarioClass::Correlation;
}

// ------------------------------------------------------------rewrite rules

namespace {

std::vector<std::string> topo_order(const CausalStructure& s) {
  std::map<std::string, int> indeg;
  for (const auto& n : s.nodes) indeg[n.id] = 0;
  for (const auto& e : s.edges) indeg[e.to]++;
  std::vector<std::string> order, queue;
  for (const auto& n : s.nodes)
    if (indeg[n.id] == 0) queue.push_back(n.id);
  while (!queue.empty()) {
    std::string v = queue.front();
    queue.erase(queue.begin());
    order.push_back(v);
    for (const auto& e : s.edges)
      if (e.from == v && --indeg[e.to] == 0) queue.push_back(e.to);
  }
  return order;
}

}  // namespace

std::pair<CausalStructure, TransformReport> interrupt(const CausalStructure& s) {
  ScenarioClass c = classify(s);
  require(c != ScenarioClass::NonExogenous, "input not latentExogenous");

  CausalStructure out = s;
  TransformReport report;

  // Leaves upward, so copies of a node exist before its parents are visited.
  std::vector<std::string> order = topo_order(s);
  std::reverse(order.begin(), order.end());

  for (const auto& id : order) {
    const CausalNode* node = out.find(id);
    if (!node || node->kind != NodeKind::Observed) continue;
    std::size_t n_in = out.parents(id).size();
    int n_out = logical_child_count(out, id);
    if (n_out == 0) continue;                  // leaf
    if (n_in == 0 && n_out == 1) continue;     // already a setting root
    // Split: one copy per logical outgoing arrow; edges tagged with the same
    // endogenous group count as a single arrow and share one copy.
    int copy_index = 0;
    std::map<int, std::string> group_copy;
    for (auto& e : out.edges) {
      if (e.from != id) continue;
      std::string copy_id;
      if (e.via_group >= 0 && group_copy.count(e.via_group)) {
        copy_id = group_copy[e.via_group];
      } else {
        ++copy_index;
        copy_id = id + "_" + std::to_string(copy_index) + "#";
        out.nodes.push_back({copy_id, NodeKind::Observed, node->cardinality});
        report.post_selection.push_back({id, copy_id});
        if (e.via_group >= 0) group_copy[e.via_group] = copy_id;
      }
      e.from = copy_id;
    }
    for (auto& [gi, copy_id] : group_copy)
      for (auto& sid : out.groups[gi].settings)
        if (sid == id) sid = copy_id;
    if (n_in == 0) {
      out.nodes.erase(std::remove_if(out.nodes.begin(), out.nodes.end(),
                                     [&](const CausalNode& n) { return n.id == id; }),
                      out.nodes.end());
    }
  }

  // Variables the original problem conditions on must be jointly independent.
  std::vector<std::string> conditioned;
  for (const auto& n : s.nodes)
    if (n.kind == NodeKind::Observed && !s.children(n.id).empty() &&
        s.parents(n.id).empty())
      conditioned.push_back(n.id);
  if (conditioned.size() >= 2) report.setting_factorization.push_back(conditioned);

  out.validate();
  return {out, report};
}

std::pair<CausalStructure, TransformReport> exogenize(const CausalStructure& s) {
  s.validate();
  for (const auto& n : s.nodes) {
    if (n.kind != NodeKind::Latent) continue;
    // The hierarchy needs every latent system to end in a measurement.
    std::set<std::string> seen;
    std::vector<std::string> stack{n.id};
    bool reaches_observed = false;
    while (!stack.empty() && !reaches_observed) {
      std::string v = stack.back();
      stack.pop_back();
      for (const auto& c : s.children(v)) {
        if (!seen.insert(c).second) continue;
        if (s.find(c)->kind == NodeKind::Observed)
          reaches_observed = true;
        else
          stack.push_back(c);
      }
    }
    require(reaches_observed,
            "unsupported structure: latent node " + n.id +
                " has no observed descendant");
  }

  CausalStructure out = s;
  TransformReport report;

  // Distance to the closest observed descendant; process innermost first.
  auto depth = [&](const std::string& id) {
    int best = 1 << 20;
    std::vector<std::pair<std::string, int>> stack{{id, 0}};
    while (!stack.empty()) {
      auto [v, d] = stack.back();
      stack.pop_back();
      for (const auto& c : out.children(v)) {
        if (out.find(c)->kind == NodeKind::Observed)
          best = std::min(best, d + 1);
        else
          stack.push_back({c, d + 1});
      }
    }
    return best;
  };

  while (true) {
    std::vector<std::string> nonexo;
    for (const auto& n : out.nodes)
      if (n.kind == NodeKind::Latent && !out.parents(n.id).empty())
        nonexo.push_back(n.id);
    if (nonexo.empty()) break;
    std::stable_sort(nonexo.begin(), nonexo.end(),
                     [&](const std::string& a, const std::string& b) {
                       return depth(a) < depth(b);
                     });
    const std::string d = nonexo.front();

    std::vector<std::string> latent_parents, setting_parents;
    for (const auto& p : out.parents(d)) {
      const CausalNode* pn = out.find(p);
      if (pn->kind == NodeKind::Latent) {
        require(out.parents(p).empty(),
                "unsupported structure: non-exogenous node " + d +
                    " has a non-root latent parent " + p);
        latent_parents.push_back(p);
      } else {
        require(out.parents(p).empty(),
                "unsupported structure: non-exogenous node " + d +
                    " has a non-root observed parent " + p);
        setting_parents.push_back(p);
      }
    }
    std::vector<std::string> members;
    for (const auto& c : out.children(d)) {
      require(out.find(c)->kind == NodeKind::Observed,
              "unsupported structure: latent child below non-exogenous node " + d);
      if (!std::count(members.begin(), members.end(), c)) members.push_back(c);
    }

    EndogenousGroup grp;
    grp.members = members;
    grp.settings = setting_parents;
    grp.sources = latent_parents;
    int gi = static_cast<int>(out.groups.size());
    out.groups.push_back(grp);

    // Remove the node; its root parents now feed the members directly.
    out.edges.erase(std::remove_if(out.edges.begin(), out.edges.end(),
                                   [&](const CausalEdge& e) {
                                     return e.from == d || e.to == d;
                                   }),
                    out.edges.end());
    out.nodes.erase(std::remove_if(out.nodes.begin(), out.nodes.end(),
                                   [&](const CausalNode& n) { return n.id == d; }),
                    out.nodes.end());
    for (const auto& L : latent_parents)
      for (const auto& m : members) out.edges.push_back({L, m, gi});
    for (const auto& x : setting_parents)
      for (const auto& m : members) out.edges.push_back({x, m, gi});
  }

  std::vector<std::string> conditioned;
  for (const auto& n : s.nodes)
    if (n.kind == NodeKind::Observed && !s.children(n.id).empty() &&
        s.parents(n.id).empty())
      conditioned.push_back(n.id);
  if (!out.groups.empty() && conditioned.size() >= 2)
    report.setting_factorization.push_back(conditioned);

  out.validate();
  return {out, report};
}

// ------------------------------------------------------------ distributions

std::size_t DistributionTable::index_of(const std::vector<int>& assignment) const {
  require(assignment.size() == variables.size(), "assignment arity mismatch");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    require(assignment[i] >= 0 && assignment[i] < cardinalities[i],
            "assignment out of range");
    idx = idx * cardinalities[i] + assignment[i];
  }
  return idx;
}

double DistributionTable::sum() const {
  double s = 0;
  for (double v : table) s += v;
  return s;
}

DistributionTable parse_distribution(const std::string& text,
                                     const CausalStructure& s) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("distribution syntax error: ") + e.what());
  }
  DistributionTable d;
  require(j.contains("variables") && j.contains("table"),
          "distribution document needs 'variables' and 'table'");
  for (const auto& v : j["variables"]) d.variables.push_back(v.get<std::string>());
  std::size_t expect = 1;
  for (const auto& v : d.variables) {
    const CausalNode* n = s.find(v);
    require(n && n->kind == NodeKind::Observed,
            "distribution variable " + v + " is not an observed node");
    d.cardinalities.push_back(n->cardinality);
    expect *= n->cardinality;
  }
  for (const auto& x : j["table"]) {
    double p = x.get<double>();
    require(p >= -1e-12, "negative probability in table");
    d.table.push_back(std::max(0.0, p));
  }
  require(d.table.size() == expect, "table size does not match cardinalities");
  return d;
}

std::string distribution_to_json(const DistributionTable& d) {
  json j;
  j["variables"] = d.variables;
  j["table"] = d.table;
  return j.dump(2) + "\n";
}

ConditionalTarget conditional_target(const DistributionTable& joint,
                                     const CausalStructure& s,
                                     const TransformReport& /*report*/) {
  require(std::abs(joint.sum() - 1.0) <= 1e-9,
          "distribution not normalized over the observed variables");

  ConditionalTarget out;
  for (const auto& n : s.nodes) {
    if (n.kind != NodeKind::Observed) continue;
    bool is_setting = !s.children(n.id).empty() && s.parents(n.id).empty();
    if (is_setting) {
      out.settings.push_back(n.id);
      out.setting_cards.push_back(n.cardinality);
    } else {
      out.outputs.push_back(n.id);
      out.output_cards.push_back(n.cardinality);
    }
  }
  std::vector<int> var_pos;  // position of each joint variable in (settings, outputs)
  for (const auto& v : joint.variables) {
    bool found = false;
    for (std::size_t i = 0; i < out.settings.size() && !found; ++i)
      if (out.settings[i] == v) found = true;
    for (std::size_t i = 0; i < out.outputs.size() && !found; ++i)
      if (out.outputs[i] == v) found = true;
    require(found, "distribution variable " + v + " not in structure");
  }
  require(joint.variables.size() == out.settings.size() + out.outputs.size(),
          "distribution must cover every observed variable exactly once");

  auto card_prod = [](const std::vector<int>& c) {
    std::size_t p = 1;
    for (int x : c) p *= x;
    return p;
  };
  const std::size_t n_set = card_prod(out.setting_cards);
  const std::size_t n_out = card_prod(out.output_cards);

  auto joint_prob = [&](const std::vector<int>& setv, const std::vector<int>& outv) {
    std::vector<int> a(joint.variables.size());
    for (std::size_t i = 0; i < joint.variables.size(); ++i) {
      const std::string& v = joint.variables[i];
      for (std::size_t k = 0; k < out.settings.size(); ++k)
        if (out.settings[k] == v) a[i] = setv[k];
      for (std::size_t k = 0; k < out.outputs.size(); ++k)
        if (out.outputs[k] == v) a[i] = outv[k];
    }
    return joint.table[joint.index_of(a)];
  };
  auto decode = [](std::size_t idx, const std::vector<int>& cards) {
    std::vector<int> v(cards.size());
    for (std::size_t i = cards.size(); i-- > 0;) {
      v[i] = static_cast<int>(idx % cards[i]);
      idx /= cards[i];
    }
    return v;
  };

  // Setting marginal and its product test.
  std::vector<double> marg(n_set, 0.0);
  for (std::size_t si = 0; si < n_set; ++si) {
    auto setv = decode(si, out.setting_cards);
    for (std::size_t oi = 0; oi < n_out; ++oi)
      marg[si] += joint_prob(setv, decode(oi, out.output_cards));
  }
  std::vector<std::vector<double>> single(out.settings.size());
  for (std::size_t k = 0; k < out.settings.size(); ++k)
    single[k].assign(out.setting_cards[k], 0.0);
  for (std::size_t si = 0; si < n_set; ++si) {
    auto setv = decode(si, out.setting_cards);
    for (std::size_t k = 0; k < setv.size(); ++k) single[k][setv[k]] += marg[si];
  }
  double dev = 0.0;
  for (std::size_t si = 0; si < n_set; ++si) {
    auto setv = decode(si, out.setting_cards);
    double prod = 1.0;
    for (std::size_t k = 0; k < setv.size(); ++k) prod *= single[k][setv[k]];
    dev = std::max(dev, std::abs(marg[si] - prod));
  }
  out.factorization_deviation = dev;
  out.factorization_ok = dev <= 1e-9;

  out.table.assign(n_set * n_out, 0.0);
  out.defined.assign(n_set, true);
  for (std::size_t si = 0; si < n_set; ++si) {
    auto setv = decode(si, out.setting_cards);
    if (marg[si] <= 0.0) {
      out.defined[si] = false;
      std::ostringstream w;
      w << "setting combination [";
      for (std::size_t k = 0; k < setv.size(); ++k)
        w << (k ? "," : "") << setv[k];
      w << "] has zero probability; its constraints are skipped";
      out.warnings.push_back(w.str());
      continue;
    }
    for (std::size_t oi = 0; oi < n_out; ++oi)
      out.table[si * n_out + oi] =
          joint_prob(setv, decode(oi, out.output_cards)) / marg[si];
  }
  return out;
}

// ------------------------------------------------------------- network form

int PartySpec::settings() const {
  int s = 1;
  for (int c : setting_cards) s *= c;
  return s;
}

int NetworkScenario::source_index(const std::string& id) const {
  for (std::size_t i = 0; i < sources.size(); ++i)
    if (sources[i] == id) return static_cast<int>(i);
  return -1;
}

int NetworkScenario::party_index(const std::string& id) const {
  for (std::size_t i = 0; i < parties.size(); ++i)
    if (parties[i].id == id) return static_cast<int>(i);
  return -1;
}

void NetworkScenario::validate() const {
  require(!parties.empty(), "network scenario has no parties");
  for (const auto& p : parties) {
    require(!p.slots.empty(), "party " + p.id + " has no incoming source slot");
    require(p.outcomes >= 2, "party " + p.id + " needs outcome cardinality >= 2");
    require(p.settings() >= 1, "party " + p.id + " has invalid setting cardinality");
    for (const auto& sl : p.slots) {
      require(!sl.sources.empty(), "party " + p.id + " has an empty slot");
      for (const auto& s : sl.sources)
        require(source_index(s) >= 0, "slot references unknown source " + s);
    }
  }
  for (const auto& g : groups)
    for (const auto& m : g.members)
      require(party_index(m) >= 0, "group references unknown party " + m);
}

NetworkScenario to_network(const CausalStructure& s) {
  ScenarioClass c = classify(s);
  require(c == ScenarioClass::Correlation || c == ScenarioClass::Network,
          "structure is not a network scenario (classify first, then "
          "exogenize/interrupt)");
  NetworkScenario net;
  net.groups = s.groups;
  for (const auto& n : s.nodes)
    if (n.kind == NodeKind::Latent) net.sources.push_back(n.id);

  for (const auto& n : s.nodes) {
    if (n.kind != NodeKind::Observed) continue;
    if (!s.children(n.id).empty()) continue;  // setting root
    PartySpec p;
    p.id = n.id;
    p.outcomes = n.cardinality;
    std::set<int> group_slot_done;
    for (const auto& e : s.edges) {
      if (e.to != n.id) continue;
      const CausalNode* pn = s.find(e.from);
      if (e.via_group >= 0) {
        if (group_slot_done.insert(e.via_group).second &&
            pn->kind == NodeKind::Latent) {
          SlotSpec sl;
          sl.sources = s.groups[e.via_group].sources;
          sl.group = e.via_group;
          p.slots.push_back(sl);
        }
        continue;  // group settings are attached below
      }
      if (pn->kind == NodeKind::Latent) {
        p.slots.push_back({{e.from}, -1});
      } else {
        p.setting_parents.push_back(e.from);
        p.setting_cards.push_back(pn->cardinality);
      }
    }
    for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
      const auto& g = s.groups[gi];
      if (!std::count(g.members.begin(), g.members.end(), n.id)) continue;
      for (const auto& x : g.settings) {
        if (std::count(p.setting_parents.begin(), p.setting_parents.end(), x))
          continue;
        p.setting_parents.push_back(x);
        p.setting_cards.push_back(s.find(x)->cardinality);
      }
    }
    net.parties.push_back(p);
  }
  net.validate();
  return net;
}

}  // namespace qinf
