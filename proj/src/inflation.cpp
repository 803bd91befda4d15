#include "qinf/inflation.hpp"

#include <algorithm>
#include <set>

namespace qinf {

PermutationTuple PermutationTuple::identity(int num_sources, int n) {
  PermutationTuple g;
  g.perms.assign(num_sources, {});
  for (auto& p : g.perms) {
    p.resize(n);
    for (int i = 0; i < n; ++i) p[i] = static_cast<std::uint8_t>(i + 1);
  }
  return g;
}

bool PermutationTuple::is_identity() const {
  for (const auto& p : perms)
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] != i + 1) return false;
  return true;
}

PermutationTuple PermutationTuple::compose(const PermutationTuple& then) const {
  PermutationTuple out = *this;
  for (std::size_t s = 0; s < perms.size(); ++s)
    for (std::size_t i = 0; i < perms[s].size(); ++i)
      out.perms[s][i] = perms[s][then.perms[s][i] - 1];
  return out;
}

InflationGroup::InflationGroup(const Alphabet& alphabet) : alph_(&alphabet) {
  const NetworkScenario& net = alph_->net();
  letter_sources_.resize(alph_->letter_count());
  for (int id = 0; id < alph_->letter_count(); ++id) {
    const Letter& l = alph_->letter(static_cast<std::uint16_t>(id));
    const PartySpec& p = net.parties[l.party];
    std::vector<int> srcs;
    if (alph_->params().legacy_projective) {
      for (const auto& sl : p.slots)
        for (const auto& s : sl.sources) srcs.push_back(net.source_index(s));
    } else {
      for (const auto& s : p.slots[l.slot].sources)
        srcs.push_back(net.source_index(s));
    }
    letter_sources_[id] = srcs;
  }
}

int InflationGroup::n() const { return alph_->params().n; }

int InflationGroup::num_sources() const {
  return static_cast<int>(alph_->net().sources.size());
}

std::uint16_t InflationGroup::apply_to_letter(const PermutationTuple& g,
                                              std::uint16_t id) const {
  const std::vector<int>& srcs = letter_sources_[id];
  Letter l = alph_->letter(id);
  for (std::size_t k = 0; k < srcs.size(); ++k) {
    int copy = l.copies.v[k];
    require(copy >= 1 && copy <= n(), "inflation index out of range");
    l.copies.v[k] = g.perms[srcs[k]][copy - 1];
  }
  return alph_->id_of(l);
}

Word InflationGroup::act(const PermutationTuple& g, const Word& w) const {
  require(static_cast<int>(g.perms.size()) == num_sources(),
          "permutation tuple must have one permutation per source");
  Word out;
  out.reserve(w.size());
  for (auto id : w) out.push_back(apply_to_letter(g, id));
  return alph_->canonicalize(out);
}

namespace {

// All permutations of 1..n as index maps.
std::vector<std::vector<std::uint8_t>> all_perms(int n) {
  std::vector<std::uint8_t> base(n);
  for (int i = 0; i < n; ++i) base[i] = static_cast<std::uint8_t>(i + 1);
  std::vector<std::vector<std::uint8_t>> out;
  do {
    out.push_back(base);
  } while (std::next_permutation(base.begin(), base.end()));
  return out;
}

double group_size(int touched, int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  double total = 1;
  for (int s = 0; s < touched; ++s) total *= f;
  return total;
}

}  // namespace

std::vector<Word> InflationGroup::orbit(const Word& w) const {
  const int S = num_sources();
  std::vector<char> touched(S, 0);
  for (auto id : w)
    for (int s : letter_sources_[id]) touched[s] = 1;
  int num_touched = 0;
  for (char t : touched) num_touched += t;

  Word w0 = alph_->canonicalize(w);
  std::set<Word> seen{w0};

  if (group_size(num_touched, n()) <= 1e4) {
    // Full enumeration over the touched sources.
    auto perms = all_perms(n());
    std::vector<int> touched_idx;
    for (int s = 0; s < S; ++s)
      if (touched[s]) touched_idx.push_back(s);
    PermutationTuple g = PermutationTuple::identity(S, n());
    std::vector<std::size_t> pick(touched_idx.size(), 0);
    while (true) {
      for (std::size_t k = 0; k < touched_idx.size(); ++k)
        g.perms[touched_idx[k]] = perms[pick[k]];
      seen.insert(act(g, w0));
      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == perms.size()) pick[k++] = 0;
      if (k == pick.size() && !pick.empty()) break;
      if (pick.empty()) break;
    }
  } else {
    // Worklist closure under adjacent transpositions, which generate the
    // full product of symmetric groups.
    std::vector<PermutationTuple> gens;
    for (int s = 0; s < S; ++s) {
      if (!touched[s]) continue;
      for (int i = 1; i < n(); ++i) {
        PermutationTuple g = PermutationTuple::identity(S, n());
        std::swap(g.perms[s][i - 1], g.perms[s][i]);
        gens.push_back(g);
      }
    }
    std::vector<Word> work{w0};
    while (!work.empty()) {
      Word cur = work.back();
      work.pop_back();
      for (const auto& g : gens) {
        Word img = act(g, cur);
        if (seen.insert(img).second) work.push_back(img);
      }
    }
  }
  return {seen.begin(), seen.end()};
}

Word InflationGroup::orbit_canonical(const Word& w) const {
  if (n() == 1) return alph_->canonicalize(w);
  std::vector<Word> orb = orbit(w);
  return *std::min_element(orb.begin(), orb.end(), [](const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
}

Polynomial InflationGroup::diagonal_embed(const Polynomial& p, int j) const {
  require(j >= 1 && j <= n(), "target copy out of range");
  Polynomial out;
  for (const auto& [w, c] : p) {
    Word img;
    img.reserve(w.size());
    for (auto id : w) {
      Letter l = alph_->letter(id);
      for (int k = 0; k < l.copies.arity; ++k) {
        require(l.copies.v[k] == 1, "diagonal_embed input must live on copy 1");
        l.copies.v[k] = static_cast<std::uint8_t>(j);
      }
      img.push_back(alph_->id_of(l));
    }
    poly_add(out, alph_->canonicalize(img), c);
  }
  return out;
}

}  // namespace qinf
