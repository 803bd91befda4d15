#include "qinf/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace qinf {

using json = nlohmann::ordered_json;

void RunConfig::validate() const {
  require(n >= 1, "n must be >= 1");
  require(k >= 1, "k must be >= 1");
  require(r >= 1, "r must be >= 1");
  require(norm_bound > 0, "C must be > 0");
  require(epsilon >= 0, "epsilon must be >= 0");
  require(tol > 0, "solver tolerance must be > 0");
}

namespace {

Compilation compile_impl(const RunConfig& config, CausalStructure original,
                         const DistributionTable* joint) {
  config.validate();
  Compilation comp;
  comp.original = original;
  comp.original_class = classify(original);
  comp.stats.scenario_class = to_string(comp.original_class);

  CausalStructure current = std::move(original);
  if (comp.original_class == ScenarioClass::NonExogenous) {
    auto [exo, rep] = exogenize(current);
    current = std::move(exo);
    comp.report = rep;
  }
  if (classify(current) == ScenarioClass::LatentExogenous) {
    auto [net_struct, rep] = interrupt(current);
    current = std::move(net_struct);
    for (const auto& ps : rep.post_selection) comp.report.post_selection.push_back(ps);
    for (const auto& g : rep.setting_factorization)
      comp.report.setting_factorization.push_back(g);
  }
  comp.network_structure = current;
  comp.net = to_network(current);

  if (joint) {
    comp.target = conditional_target(*joint, comp.original, comp.report);
    if (!comp.target->factorization_ok)
      comp.warnings.push_back(
          "conditioned variables are not a product distribution (max deviation " +
          std::to_string(comp.target->factorization_deviation) + ")");
    for (const auto& w : comp.target->warnings) comp.warnings.push_back(w);
  }

  AlgebraParams ap;
  ap.n = config.n;
  ap.r = config.r;
  ap.norm_bound = config.norm_bound;
  ap.hermitian_generators = config.hermitian_generators;
  ap.legacy_projective = config.legacy_projective;
  comp.alphabet = std::make_unique<Alphabet>(comp.net, ap);
  comp.group = std::make_unique<InflationGroup>(*comp.alphabet);
  comp.assembly =
      std::make_unique<MomentAssembly>(*comp.alphabet, *comp.group, config.real_moments);

  comp.basis = enumerate_basis(*comp.alphabet, config.k);
  comp.gamma = moment_matrix(comp.basis, *comp.assembly);

  RelationSet rel = comp.alphabet->build_relations();
  for (const auto& q : rel.positivity)
    comp.localizing.push_back(localizing_matrix(q, comp.basis, config.k, *comp.assembly));
  for (const auto& q : rel.norm_polys)
    comp.localizing.push_back(localizing_matrix(q, comp.basis, config.k, *comp.assembly));
  for (const auto& l : comp.localizing)
    if (l.deferred) {
      comp.warnings.push_back(l.note);
      comp.stats.deferred_constraints++;
    }

  if (comp.target) {
    comp.bundle = probability_constraints(*comp.assembly, *comp.target, comp.report,
                                          config.mode, config.legacy_marginals);
    for (const auto& w : comp.bundle.warnings) comp.warnings.push_back(w);
  }

  comp.problem = assemble(*comp.assembly, comp.gamma, comp.localizing, comp.bundle);

  comp.stats.generator_alphabet_size = comp.alphabet->size_with_identity();
  for (int d = 0; d <= config.k; ++d)
    comp.stats.basis_sizes.push_back(comp.basis.size_at_degree(d));
  comp.stats.words_before_merge = comp.assembly->words_registered();
  comp.stats.orbit_classes_after_merge = comp.assembly->orbit_classes();
  comp.stats.sdp_variables = comp.problem.sdp.num_vars;
  comp.stats.equality_rows = static_cast<int>(comp.problem.sdp.equalities.size());
  comp.stats.block_dims = comp.problem.block_dims;
  return comp;
}

}  // namespace

Compilation compile(const RunConfig& config, const std::string& scenario_json,
                    const std::string& dist_json) {
  CausalStructure s = parse_structure(scenario_json);
  if (dist_json.empty()) return compile_impl(config, std::move(s), nullptr);
  DistributionTable joint = parse_distribution(dist_json, s);
  return compile_impl(config, std::move(s), &joint);
}

Compilation compile_network(const RunConfig& config, const NetworkScenario& net,
                            const DistributionTable* dist) {
  // Wrap the network as a causal structure so the shared path applies.
  CausalStructure s;
  for (const auto& src : net.sources) s.nodes.push_back({src, NodeKind::Latent, 0});
  std::vector<std::string> settings_done;
  for (const auto& p : net.parties) {
    s.nodes.push_back({p.id, NodeKind::Observed, p.outcomes});
    for (std::size_t k = 0; k < p.setting_parents.size(); ++k) {
      if (std::count(settings_done.begin(), settings_done.end(), p.setting_parents[k]))
        continue;
      settings_done.push_back(p.setting_parents[k]);
      s.nodes.push_back({p.setting_parents[k], NodeKind::Observed, p.setting_cards[k]});
    }
  }
  for (const auto& p : net.parties) {
    for (const auto& sl : p.slots)
      for (const auto& src : sl.sources) s.edges.push_back({src, p.id, sl.group});
    for (const auto& x : p.setting_parents) s.edges.push_back({x, p.id, -1});
  }
  s.groups = net.groups;
  if (!dist) return compile_impl(config, std::move(s), nullptr);
  return compile_impl(config, std::move(s), dist);
}

CertifyOutcome run_solve(const RunConfig& config, Compilation& comp) {
  SolverOptions opts;
  opts.tol = config.tol;
  opts.time_limit_seconds = config.time_limit_seconds;
  opts.max_variables = config.max_variables;
  CertifyOutcome out;
  out.result = solve(comp.problem.sdp, opts);
  out.decision = certify(out.result, config.epsilon, config.tol);
  return out;
}

namespace {

json config_to_json(const RunConfig& c) {
  json j;
  j["n"] = c.n;
  j["k"] = c.k;
  j["r"] = c.r;
  j["C"] = c.norm_bound;
  j["epsilon"] = c.epsilon;
  switch (c.mode) {
    case ConstraintMode::PolarizedObjective: j["mode"] = "polarizedObjective"; break;
    case ConstraintMode::LinearConstraints: j["mode"] = "linearConstraints"; break;
    case ConstraintMode::QuadraticEpigraph: j["mode"] = "quadraticEpigraph"; break;
  }
  j["profile"] = {{"hermitianGenerators", c.hermitian_generators},
                  {"legacyProjective", c.legacy_projective},
                  {"legacyMarginals", c.legacy_marginals},
                  {"realMoments", c.real_moments}};
  j["tol"] = c.tol;
  j["timeLimit"] = c.time_limit_seconds;
  j["seed"] = c.seed;
  return j;
}

}  // namespace

std::string report_to_json(const RunConfig& config, const Compilation& comp,
                           const CertifyOutcome* outcome) {
  json j;
  j["config"] = config_to_json(config);
  json stats;
  stats["scenarioClass"] = comp.stats.scenario_class;
  stats["generatorAlphabetSize"] = comp.stats.generator_alphabet_size;
  stats["basisSizes"] = comp.stats.basis_sizes;
  stats["wordsBeforeMerge"] = comp.stats.words_before_merge;
  stats["orbitClassesAfterMerge"] = comp.stats.orbit_classes_after_merge;
  stats["sdpVariables"] = comp.stats.sdp_variables;
  stats["equalityRows"] = comp.stats.equality_rows;
  stats["blockDimensions"] = comp.stats.block_dims;
  stats["deferredConstraints"] = comp.stats.deferred_constraints;
  j["statistics"] = stats;

  json transforms;
  transforms["postSelection"] = json::array();
  for (const auto& ps : comp.report.post_selection)
    transforms["postSelection"].push_back({{"original", ps.original},
                                           {"copy", ps.copy}});
  transforms["settingFactorization"] = comp.report.setting_factorization;
  if (comp.target) {
    transforms["factorizationOk"] = comp.target->factorization_ok;
    transforms["factorizationDeviation"] = comp.target->factorization_deviation;
  }
  j["transforms"] = transforms;
  j["warnings"] = comp.warnings;

  if (outcome) {
    json r;
    r["status"] = to_string(outcome->result.status);
    if (outcome->result.status == SolveStatus::Optimal ||
        outcome->result.status == SolveStatus::Inaccurate)
      r["value"] = outcome->result.value;
    r["residuals"] = {{"primal", outcome->result.primal_residual},
                      {"equality", outcome->result.equality_residual},
                      {"dual", outcome->result.dual_residual},
                      {"gap", outcome->result.gap}};
    r["iterations"] = outcome->result.iterations;
    r["seconds"] = outcome->result.seconds;
    if (!outcome->result.note.empty()) r["note"] = outcome->result.note;
    j["result"] = r;
    j["decision"] = to_string(outcome->decision);
  }
  return j.dump(2) + "\n";
}

std::string triangle_scenario_json(int cardinality) {
  json j;
  j["nodes"] = json::array();
  for (const char* src : {"rhoCA", "rhoAB", "rhoBC"})
    j["nodes"].push_back({{"id", src}, {"kind", "latent"}});
  for (const char* party : {"A", "B", "C"})
    j["nodes"].push_back(
        {{"id", party}, {"kind", "observed"}, {"cardinality", cardinality}});
  // Slot order matches the usual convention: E^{ij} acts on copy i of the CA
  // source and copy j of the AB source, and cyclically for B and C.
  j["edges"] = json::array();
  for (auto [from, to] : std::initializer_list<std::pair<const char*, const char*>>{
           {"rhoCA", "A"}, {"rhoAB", "A"}, {"rhoAB", "B"},
           {"rhoBC", "B"}, {"rhoBC", "C"}, {"rhoCA", "C"}})
    j["edges"].push_back(json::array({from, to}));
  return j.dump(2) + "\n";
}

NetworkScenario triangle_network(int outcomes) {
  return to_network(parse_structure(triangle_scenario_json(outcomes)));
}

}  // namespace qinf
