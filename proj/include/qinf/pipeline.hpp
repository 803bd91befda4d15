#pragma once

#include <memory>
#include <optional>

#include "qinf/oracle.hpp"
#include "qinf/sdp.hpp"

// End-to-end orchestration: scenario -> transforms -> algebra -> moment
// specs -> numeric SDP, plus the certification run and JSON reports.

namespace qinf {

struct RunConfig {
  int n = 1;
  int k = 1;
  int r = 1;
  double norm_bound = 1.0;  // C
  double epsilon = 0.0;
  ConstraintMode mode = ConstraintMode::QuadraticEpigraph;
  bool hermitian_generators = true;
  bool legacy_projective = false;
  bool legacy_marginals = false;
  bool real_moments = false;
  double tol = 1e-8;
  double time_limit_seconds = 600;
  int max_variables = 20000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CompileStats {
  std::string scenario_class;
  int generator_alphabet_size = 0;  // generators + identity
  std::vector<int> basis_sizes;     // d_0 .. d_k
  int words_before_merge = 0;
  int orbit_classes_after_merge = 0;
  int sdp_variables = 0;
  int equality_rows = 0;
  std::vector<int> block_dims;
  int deferred_constraints = 0;
};

struct Compilation {
  CausalStructure original;
  ScenarioClass original_class = ScenarioClass::Correlation;
  CausalStructure network_structure;
  TransformReport report;
  NetworkScenario net;
  std::optional<ConditionalTarget> target;

  std::unique_ptr<Alphabet> alphabet;
  std::unique_ptr<InflationGroup> group;
  std::unique_ptr<MomentAssembly> assembly;
  MonomialBasis basis;
  MomentMatrixSpec gamma;
  std::vector<LocalizingSpec> localizing;
  ProbabilityBundle bundle;
  CompiledProblem problem;

  CompileStats stats;
  std::vector<std::string> warnings;
};

// scenario_json is required; dist_json may be empty (feasibility-only
// compile, no probability constraints).
Compilation compile(const RunConfig& config, const std::string& scenario_json,
                    const std::string& dist_json);

// Compile a network scenario directly (tests, oracle-generated instances).
Compilation compile_network(const RunConfig& config, const NetworkScenario& net,
                            const DistributionTable* dist);

struct CertifyOutcome {
  SolveResult result;
  Decision decision = Decision::Inconclusive;
};

CertifyOutcome run_solve(const RunConfig& config, Compilation& comp);

std::string report_to_json(const RunConfig& config, const Compilation& comp,
                           const CertifyOutcome* outcome);

// Shared fixtures (also used heavily by the test suites).
std::string triangle_scenario_json(int cardinality = 2);
NetworkScenario triangle_network(int outcomes = 2);

// Oracle bridge: moment slot values of a finite model (product extension at
// the assembly's inflation level), entry evaluation, and dense instantiation
// of symbolic specs. Together these realize the feasibility direction of the
// hierarchy and double as the cross-module test oracle.
std::vector<double> oracle_slot_values(const MomentAssembly& asmb,
                                       const FiniteModel& model);
cx eval_entry(const EntryExpr& e, const std::vector<double>& slots);
Eigen::MatrixXcd instantiate(const MomentMatrixSpec& spec,
                             const std::vector<double>& slots);
Eigen::MatrixXcd instantiate(const LocalizingSpec& spec,
                             const std::vector<double>& slots);

}  // namespace qinf
