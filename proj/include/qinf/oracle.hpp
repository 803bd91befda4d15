#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "qinf/algebra.hpp"
#include "qinf/scenario.hpp"

// Explicit finite-dimensional realizations of a network scenario: concrete
// matrices for every generator plus a product state over the sources. These
// models are the independent oracle against which the symbolic pipeline is
// checked, and the instance generator for feasible test problems.

namespace qinf {

using Mat = Eigen::MatrixXcd;

struct OpKey {
  int party = 0, slot = 0, outcome = 1, alpha = 1, setting = 1;
  auto operator<=>(const OpKey&) const = default;
};

struct ModelSource {
  std::string id;
  // One endpoint per (party, slot, position) this source feeds, in scenario
  // order; dims aligned with endpoints.
  std::vector<std::array<int, 3>> endpoints;
  std::vector<int> dims;
  Mat state;  // density matrix on the tensor product of the endpoints
};

struct FiniteModel {
  NetworkScenario net;
  std::vector<ModelSource> sources;  // aligned with net.sources
  // Copy-independent assignment; a letter with copy tuple c acts with
  // ops[key] on the copy-c factors of its slot's sources.
  std::map<OpKey, Mat> ops;
  double norm_bound = 1.0;  // largest factor operator norm (recorded C)
  std::uint64_t seed = 0;

  int endpoint_dim(int source, int party, int slot, int pos) const;
};

// trace(state . product of assigned matrices in word order), evaluated per
// connected component of touched (source, copy) units. Handles any inflation
// level; copies of a source share its state independently.
cx eval_word(const FiniteModel& m, const Alphabet& alphabet, const Word& w);
cx eval_poly(const FiniteModel& m, const Alphabet& alphabet, const Polynomial& p);
std::vector<cx> eval_moments(const FiniteModel& m, const Alphabet& alphabet,
                             const std::vector<Word>& words);

// Identical to eval_moments; named separately because level-n words against
// the n-fold product state are the feasibility certificate of the hierarchy.
std::vector<cx> product_extension(const FiniteModel& m, const Alphabet& alphabet,
                                  const std::vector<Word>& words);

// P(outcomes | settings) induced by the model, uniform over settings when
// the scenario has any. Variables are the party ids in scenario order
// (settings first when present, as separate variables).
DistributionTable model_distribution(const FiniteModel& m);

// Structural checks: state PSD/trace-1, POVM completion and positivity,
// factor norms within the recorded bound.
void validate_model(const FiniteModel& m, double tol = 1e-9);

// Random rank-constrained model: product Wishart states per source, POVM
// elements built from <= r products of PSD local factors, scaled so the
// completion element stays positive. Deterministic in the seed.
std::pair<FiniteModel, DistributionTable> sample_model(const NetworkScenario& net,
                                                       const std::vector<int>& dims,
                                                       int r, std::uint64_t seed);

// The maximally entangled magic-basis example: one party, two qubit sources
// with nCopies inflation copies, M = 4 outcomes, Schmidt rank 4 with Pauli
// factors. Criterion helpers materialize E^{ij}_a and the commutant pair.
FiniteModel magic_basis_model(int n_copies);
Mat magic_povm_matrix(int n_copies, int i, int j, int a);  // on 2^(2n) dims
Mat magic_xbar(int n_copies);
Mat magic_zbar(int n_copies);

// Operator-Schmidt decomposition via reshuffling + SVD.
struct SchmidtDecomposition {
  std::vector<double> values;  // singular values, descending
  std::vector<Mat> left, right;  // E = sum_k values[k] * kron(left[k], right[k])
};
SchmidtDecomposition operator_schmidt(const Mat& E, int dim_a, int dim_b);

// Lemma-style truncation: elements 1..M-1 are cut to operator-Schmidt rank r
// and mixed with delta*I, the last element is restored by completion.
// Requires the truncation error of every element to stay within delta.
std::vector<Mat> schmidt_truncate(const std::vector<Mat>& povm, int dim_a,
                                  int dim_b, int r, double delta);

// Model (de)serialization; files are self-contained (scenario included).
std::string model_to_json(const FiniteModel& m);
FiniteModel model_from_json(const std::string& text);

std::string network_to_json(const NetworkScenario& net);
NetworkScenario network_from_json(const std::string& text);

// Deterministic gaussian source used by sample_model (fixed across
// platforms, unlike std::normal_distribution).
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ^ 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next_u64();
  double uniform();   // [0, 1)
  double gaussian();  // standard normal (Box-Muller)
  cx cgaussian();
};

}  // namespace qinf
