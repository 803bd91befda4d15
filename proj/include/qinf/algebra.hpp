#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "qinf/common.hpp"
#include "qinf/scenario.hpp"

// The free *-algebra of an inflated network scenario, presented by
// generators and relations. Letters are local Schmidt factors such as
// e_-^i(a,alpha); words are monomials reduced to a canonical form in the
// partially commutative monoid induced by the locality constraints.

namespace qinf {

constexpr int kMaxTupleArity = 4;

struct InflationTuple {
  std::uint8_t arity = 0;
  std::array<std::uint8_t, kMaxTupleArity> v{};  // copy indices, 1-based

  static InflationTuple of(std::initializer_list<int> xs);
  bool operator==(const InflationTuple&) const = default;
  auto operator<=>(const InflationTuple&) const = default;
};

struct Letter {
  std::uint8_t party = 0;     // index into NetworkScenario::parties
  std::uint8_t slot = 0;      // incoming-arrow index within the party
  InflationTuple copies;      // one copy index per source of the slot
  std::uint8_t outcome = 1;   // 1..M-1 (schmidt mode) or 1..M-1 (projective)
  std::uint8_t alpha = 1;     // 1..r
  std::uint16_t setting = 1;  // 1..S_v (composite, mixed radix)
  bool starred = false;

  bool operator==(const Letter&) const = default;
  // Total order: (party, slot, copies, outcome, alpha, setting, starred).
  // Letters of one local algebra share the leading keys, so a commuting
  // class is a contiguous range and the trace normal form groups families.
  auto operator<=>(const Letter&) const = default;
};

// A word is a sequence of letter ids of some Alphabet; {} is the identity.
using Word = std::vector<std::uint16_t>;

using Polynomial = std::map<Word, cx>;

void poly_add(Polynomial& p, const Word& w, cx coeff);
Polynomial poly_scale(const Polynomial& p, cx c);
bool poly_equal(const Polynomial& a, const Polynomial& b, double tol = 0.0);

struct AlgebraParams {
  int n = 1;                        // inflation level
  int r = 1;                        // Schmidt rank bound
  double norm_bound = 1.0;          // C
  bool hermitian_generators = true; // collapse the star flag
  bool legacy_projective = false;   // opaque projective POVM generators
};

struct RelationSet {
  double norm_bound = 0;
  std::vector<Polynomial> positivity;   // includes completion elements X_M
  std::vector<Polynomial> norm_polys;   // C^2 I - g* g per generator
  // Reported counts for the projective profile (enforced by rewriting).
  int completeness_relations = 0;
  int idempotency_relations = 0;
};

class Alphabet {
 public:
  // Schmidt-factor generators (default) or projective POVM generators.
  Alphabet(const NetworkScenario& net, const AlgebraParams& params);

  const NetworkScenario& net() const { return net_; }
  const AlgebraParams& params() const { return params_; }

  int letter_count() const { return static_cast<int>(letters_.size()); }
  // Generators (unstarred letters); the advertised alphabet size counts
  // these plus the identity, e.g. 6(M-1)rn+1 for the triangle.
  int generator_count() const { return generator_count_; }
  int size_with_identity() const { return generator_count_ + 1; }
  const Letter& letter(std::uint16_t id) const { return letters_[id]; }
  std::uint16_t id_of(const Letter& l) const;

  bool commutes(std::uint16_t a, std::uint16_t b) const {
    return commute_[a * letters_.size() + b];
  }
  bool commutes(const Letter& a, const Letter& b) const;

  // Lexicographically least representative of the trace of w.
  Word canonicalize(const Word& w) const;
  bool is_canonical(const Word& w) const;

  // Involution on words and polynomials: reverse, toggle stars, conjugate.
  Word star_word(const Word& w) const;  // not canonicalized
  Polynomial involution(const Polynomial& p) const;

  // Product with the mode's rewrite rules applied (projective collapse,
  // delta coefficients); result is canonical.
  Polynomial multiply(const Word& a, const Word& b) const;
  Polynomial multiply(const Polynomial& a, const Polynomial& b) const;

  // POVM element X_a for the given party/setting/inflation assignment.
  // copies[k] selects the copy for slot k's sources, one index per source.
  // a == M returns the completion I - sum of the others.
  Polynomial povm_element(int party, int outcome,
                          const std::vector<InflationTuple>& copies,
                          int setting = 1) const;

  RelationSet build_relations() const;

  std::uint16_t star_id(std::uint16_t id) const { return star_map_[id]; }

 private:
  NetworkScenario net_;
  AlgebraParams params_;
  std::vector<Letter> letters_;           // sorted; index == letter id
  std::vector<char> commute_;
  std::vector<std::uint16_t> star_map_;
  int generator_count_ = 0;

  bool letters_commute(const Letter& a, const Letter& b) const;
  // Projective-profile collapse of adjacent same-block letters; nullopt = 0.
  std::optional<Word> reduce(Word w) const;
};

// Convenience: alphabet + relation count check used by callers and tests.
RelationSet build_relations(const Alphabet& alphabet);

}  // namespace qinf
