#pragma once

#include <iosfwd>

#include "qinf/moment.hpp"

// Numeric conic form: minimize c.y subject to per-block
// S_b(y) = C_b + sum_i y_i A_{b,i}  being PSD and E y = d. Complex Hermitian
// specs are realified with the standard [[X, -Y], [Y, X]] doubling.

namespace qinf {

struct BlockEntry {
  int var;      // -1 for the constant part
  int row, col; // row <= col; value applies symmetrically
  double value;
};

struct SdpBlock {
  std::string name;
  int dim = 0;
  std::vector<BlockEntry> entries;
};

struct LinearRow {
  std::vector<std::pair<int, double>> coeffs;
  double rhs = 0;
};

struct SdpProblem {
  int num_vars = 0;
  std::vector<SdpBlock> blocks;
  std::vector<LinearRow> equalities;
  std::vector<double> objective;  // length num_vars
  double objective_offset = 0;

  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, Inaccurate, Timeout };

std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::Inaccurate;
  double value = 0;                 // meaningful for Optimal / Inaccurate
  std::vector<double> y;
  double primal_residual = 0;       // PSD-constraint residual norm
  double equality_residual = 0;
  double dual_residual = 0;
  double gap = 0;
  int iterations = 0;
  double seconds = 0;
  std::string note;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  double time_limit_seconds = 600;
  int max_variables = 20000;  // guard against accidentally huge problems
};

SolveResult solve(const SdpProblem& p, const SolverOptions& opts);

// --- assembly of compiled moment problems ---------------------------------

struct CompiledProblem {
  SdpProblem sdp;
  // slot -> SDP variable index (identity slot is eliminated, epigraph last)
  std::vector<int> slot_to_var;
  int epigraph_var = -1;
  std::vector<std::string> block_names;
  std::vector<int> block_dims;
  bool realified = false;  // true when Hermitian doubling was applied
};

CompiledProblem assemble(const MomentAssembly& asmb, const MomentMatrixSpec& gamma,
                         const std::vector<LocalizingSpec>& localizing,
                         const ProbabilityBundle& bundle);

// Plug a full slot assignment (from the oracle) into the compiled problem:
// returns max equality violation and min block eigenvalue.
struct FeasibilityCheck {
  double max_equality_violation = 0;
  double min_block_eigenvalue = 0;
  double objective_value = 0;
};
FeasibilityCheck check_assignment(const CompiledProblem& cp,
                                  const std::vector<double>& slot_values,
                                  double epigraph_value = 0);

// --- SDPA sparse format ----------------------------------------------------

// Equalities are exported as +/- paired rows of a trailing diagonal block and
// recognized again on import, so export -> import is exact.
std::string export_sdpa(const SdpProblem& p);
SdpProblem import_sdpa(const std::string& text);

// --- rejection rule --------------------------------------------------------

enum class Decision { Rejected, NotRejected, Inconclusive };

std::string to_string(Decision d);

// Rejects when a trusted optimum exceeds epsilon by more than the numerical
// margin (10 * tol); solver failures are inconclusive.
Decision certify(const SolveResult& result, double epsilon, double tol);

}  // namespace qinf
