#pragma once

#include <vector>

#include "qinf/algebra.hpp"

// Permutation symmetry of inflation copies: one permutation of {1..n} per
// latent source, acting on the copy indices of every letter whose slot is
// fed by that source. Orbit-canonical representatives identify moment
// variables that the symmetric state cannot distinguish.

namespace qinf {

struct PermutationTuple {
  // perms[s][i-1] is the image of copy i under the permutation attached to
  // source s (1-based values).
  std::vector<std::vector<std::uint8_t>> perms;

  static PermutationTuple identity(int num_sources, int n);
  bool is_identity() const;
  PermutationTuple compose(const PermutationTuple& then) const;  // this after then
};

class InflationGroup {
 public:
  InflationGroup(const Alphabet& alphabet);

  const Alphabet& alphabet() const { return *alph_; }
  int n() const;
  int num_sources() const;

  Word act(const PermutationTuple& g, const Word& w) const;

  // Minimum of the orbit of w in word order. Enumerates the full group when
  // small, otherwise closes over adjacent transpositions.
  Word orbit_canonical(const Word& w) const;

  // Every distinct word reachable from w (used by tests and the merge
  // correctness checks).
  std::vector<Word> orbit(const Word& w) const;

  // Replace inflation index 1 by j in every tuple position; the input must
  // only touch copy 1.
  Polynomial diagonal_embed(const Polynomial& p, int j) const;

 private:
  const Alphabet* alph_;
  // source index per (letter id, tuple position)
  std::vector<std::vector<int>> letter_sources_;
  std::uint16_t apply_to_letter(const PermutationTuple& g, std::uint16_t id) const;
};

}  // namespace qinf
