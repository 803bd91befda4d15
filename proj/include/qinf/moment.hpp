#pragma once

#include <set>

#include "qinf/inflation.hpp"

// Monomial bases, symbolic moment and localizing matrices, and the
// probability-side constraints. Symmetry reduction happens at variable
// registration: every monomial is keyed by its orbit-canonical form, and
// adjoint pairs share one (re, im) slot pair, so entries of all specs
// reference a common merged variable table.

namespace qinf {

struct MonomialBasis {
  std::vector<Word> words;  // degree-then-lex; words[0] is the identity
  int degree = 0;
  std::vector<int> degree_offsets;  // first index of each degree 0..k+1
  int size_at_degree(int d) const;  // d_k values
};

MonomialBasis enumerate_basis(const Alphabet& alphabet, int k);

struct MomentVariable {
  Word key;            // orbit-canonical owner (min of the class and its adjoint)
  bool self_adjoint;   // conj(rho(key)) == rho(key) forced by merging
  int re_slot = -1;
  int im_slot = -1;    // -1 when self-adjoint or moments forced real
};

// Linear expression in SDP slot variables with a complex constant.
struct EntryExpr {
  std::vector<std::pair<int, cx>> terms;  // (slot, coefficient), slot-sorted
  cx constant{0.0, 0.0};
};

class MomentAssembly {
 public:
  MomentAssembly(const Alphabet& alphabet, const InflationGroup& group,
                 bool real_moments);

  const Alphabet& alphabet() const { return *alph_; }
  const InflationGroup& group() const { return *group_; }
  bool real_moments() const { return real_moments_; }

  // Orbit-canonical registration; returns the expression for rho(p).
  EntryExpr resolve(const Polynomial& p);

  const std::vector<MomentVariable>& variables() const { return vars_; }
  int slot_count() const { return slot_count_; }
  int identity_slot() const { return 0; }

  // Stats: distinct canonical words seen (before merge), distinct orbit
  // classes (after merge), and adjoint-paired variables (SDP unknowns).
  int words_registered() const { return static_cast<int>(words_seen_.size()); }
  int orbit_classes() const { return static_cast<int>(orbit_keys_.size()); }
  int paired_variables() const { return static_cast<int>(vars_.size()); }

 private:
  const Alphabet* alph_;
  const InflationGroup* group_;
  bool real_moments_;
  std::vector<MomentVariable> vars_;
  std::map<Word, std::pair<int, bool>> index_;  // orbit key -> (var, conjugated)
  std::set<Word> words_seen_;
  std::set<Word> orbit_keys_;
  std::map<Word, Word> orbit_cache_;
  int slot_count_ = 0;

  Word orbit_of(const Word& canonical);
  std::pair<int, bool> refer(const Word& canonical);
};

struct MomentMatrixSpec {
  int dim = 0;
  // Upper triangle, row-major: entry (i, j) with i <= j at index
  // i*dim - i*(i-1)/2 + (j - i).
  std::vector<EntryExpr> upper;
  const EntryExpr& at(int i, int j) const;
};

MomentMatrixSpec moment_matrix(const MonomialBasis& basis, MomentAssembly& asmb);

struct LocalizingSpec {
  Polynomial q;
  int dim = 0;          // 0 when deferred
  bool deferred = false;
  std::string note;
  std::vector<EntryExpr> upper;
  const EntryExpr& at(int i, int j) const;
};

// Lambda_q over the degree-(k-l) prefix of the basis, l minimal with
// deg(q) <= 2l. If k < l the constraint is deferred with a warning note.
LocalizingSpec localizing_matrix(const Polynomial& q, const MonomialBasis& basis,
                                 int k, MomentAssembly& asmb);

// --- polynomials in the state and probability data ------------------------

// sum_t coeff_t * rho(factor_1) * rho(factor_2) * ... (degree = #factors)
struct StatePolynomial {
  struct Term {
    cx coeff;
    std::vector<Polynomial> factors;  // copy-1 polynomials
  };
  std::vector<Term> terms;
  int degree() const;
};

// Embed the j-th factor of each term into inflation copy j and multiply out.
Polynomial polarize(const StatePolynomial& objective, const InflationGroup& group);

enum class ConstraintMode { PolarizedObjective, LinearConstraints, QuadraticEpigraph };

struct ProbabilityBundle {
  std::vector<std::pair<EntryExpr, double>> equalities;
  std::vector<EntryExpr> deviations;  // m(cell) - p(cell), epigraph mode
  EntryExpr objective;                // polarized mode
  bool epigraph = false;
  std::vector<std::string> warnings;
};

// Build the compatibility constraints for a (conditional) target
// distribution against the diagonal copy-1 POVM products. The post-selection
// report maps split-copy settings back to original variables.
ProbabilityBundle probability_constraints(MomentAssembly& asmb,
                                          const ConditionalTarget& target,
                                          const TransformReport& report,
                                          ConstraintMode mode,
                                          bool legacy_marginals);

}  // namespace qinf
