#include "qinf/algebra.hpp"

#include <algorithm>
#include <cmath>

namespace qinf {

InflationTuple InflationTuple::of(std::initializer_list<int> xs) {
  InflationTuple t;
  require(xs.size() <= kMaxTupleArity, "inflation tuple too long");
  for (int x : xs) t.v[t.arity++] = static_cast<std::uint8_t>(x);
  return t;
}

void poly_add(Polynomial& p, const Word& w, cx coeff) {
  auto it = p.find(w);
  if (it == p.end()) {
    if (coeff != 0.0) p.emplace(w, coeff);
    return;
  }
  it->second += coeff;
  if (it->second == 0.0) p.erase(it);
}

Polynomial poly_scale(const Polynomial& p, cx c) {
  Polynomial out;
  if (c == 0.0) return out;
  for (const auto& [w, v] : p) out.emplace(w, v * c);
  return out;
}

bool poly_equal(const Polynomial& a, const Polynomial& b, double tol) {
  Polynomial diff = a;
  for (const auto& [w, v] : b) poly_add(diff, w, -v);
  for (const auto& [w, v] : diff)
    if (std::abs(v) > tol) return false;
  return true;
}

// --------------------------------------------------------------- alphabet

namespace {

// Every combination of one copy index per source, each in 1..n.
std::vector<InflationTuple> enumerate_tuples(int arity, int n) {
  std::vector<InflationTuple> out;
  InflationTuple t;
  t.arity = static_cast<std::uint8_t>(arity);
  std::vector<int> idx(arity, 1);
  while (true) {
    for (int k = 0; k < arity; ++k) t.v[k] = static_cast<std::uint8_t>(idx[k]);
    out.push_back(t);
    int k = arity - 1;
    while (k >= 0 && ++idx[k] > n) idx[k--] = 1;
    if (k < 0) break;
  }
  return out;
}

}  // namespace

Alphabet::Alphabet(const NetworkScenario& net, const AlgebraParams& params)
    : net_(net), params_(params) {
  require(params.n >= 1, "inflation level n must be >= 1");
  require(params.r >= 1, "Schmidt rank r must be >= 1");
  net_.validate();
  for (const auto& p : net_.parties)
    require(p.outcomes >= 2, "party " + p.id + " needs M >= 2");

  const int n = params.n;
  for (std::size_t pi = 0; pi < net_.parties.size(); ++pi) {
    const PartySpec& p = net_.parties[pi];
    if (params.legacy_projective) {
      int arity = 0;
      for (const auto& sl : p.slots) arity += static_cast<int>(sl.sources.size());
      require(arity <= kMaxTupleArity, "party " + p.id + " has too many sources");
      for (const auto& t : enumerate_tuples(arity, n))
        for (int a = 1; a <= p.outcomes - 1; ++a)
          for (int x = 1; x <= p.settings(); ++x) {
            Letter l;
            l.party = static_cast<std::uint8_t>(pi);
            l.slot = 0;
            l.copies = t;
            l.outcome = static_cast<std::uint8_t>(a);
            l.alpha = 1;
            l.setting = static_cast<std::uint16_t>(x);
            letters_.push_back(l);
          }
    } else {
      for (std::size_t si = 0; si < p.slots.size(); ++si) {
        int arity = static_cast<int>(p.slots[si].sources.size());
        require(arity <= kMaxTupleArity, "slot with too many sources");
        for (const auto& t : enumerate_tuples(arity, n))
          for (int a = 1; a <= p.outcomes - 1; ++a)
            for (int al = 1; al <= params.r; ++al)
              for (int x = 1; x <= p.settings(); ++x) {
                Letter l;
                l.party = static_cast<std::uint8_t>(pi);
                l.slot = static_cast<std::uint8_t>(si);
                l.copies = t;
                l.outcome = static_cast<std::uint8_t>(a);
                l.alpha = static_cast<std::uint8_t>(al);
                l.setting = static_cast<std::uint16_t>(x);
                letters_.push_back(l);
              }
      }
    }
  }
  generator_count_ = static_cast<int>(letters_.size());
  if (!params.hermitian_generators) {
    std::size_t base = letters_.size();
    for (std::size_t i = 0; i < base; ++i) {
      Letter l = letters_[i];
      l.starred = true;
      letters_.push_back(l);
    }
  }
  std::sort(letters_.begin(), letters_.end());
  require(letters_.size() < 65535, "alphabet too large");

  const std::size_t L = letters_.size();
  commute_.assign(L * L, 0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      char c = letters_commute(letters_[i], letters_[j]) ? 1 : 0;
      commute_[i * L + j] = c;
      commute_[j * L + i] = c;
    }
  star_map_.resize(L);
  for (std::size_t i = 0; i < L; ++i) {
    if (params_.hermitian_generators) {
      star_map_[i] = static_cast<std::uint16_t>(i);
    } else {
      Letter l = letters_[i];
      l.starred = !l.starred;
      star_map_[i] = id_of(l);
    }
  }
}

std::uint16_t Alphabet::id_of(const Letter& l) const {
  auto it = std::lower_bound(letters_.begin(), letters_.end(), l);
  require(it != letters_.end() && *it == l, "letter not in alphabet");
  return static_cast<std::uint16_t>(it - letters_.begin());
}

namespace {

bool all_components_differ(const InflationTuple& a, const InflationTuple& b) {
  for (int k = 0; k < a.arity; ++k)
    if (a.v[k] == b.v[k]) return false;
  return true;
}

bool all_components_equal(const InflationTuple& a, const InflationTuple& b) {
  for (int k = 0; k < a.arity; ++k)
    if (a.v[k] != b.v[k]) return false;
  return true;
}

}  // namespace

bool Alphabet::letters_commute(const Letter& a, const Letter& b) const {
  // Expand each letter into its (slot, per-slot copy tuple) constituents;
  // the letters commute iff every constituent pair does.
  struct Part {
    int party, slot, group;
    InflationTuple t;
  };
  auto parts_of = [&](const Letter& l) {
    std::vector<Part> out;
    const PartySpec& p = net_.parties[l.party];
    if (!params_.legacy_projective) {
      out.push_back({l.party, l.slot, p.slots[l.slot].group, l.copies});
    } else {
      int off = 0;
      for (std::size_t si = 0; si < p.slots.size(); ++si) {
        Part part;
        part.party = l.party;
        part.slot = static_cast<int>(si);
        part.group = p.slots[si].group;
        part.t.arity = static_cast<std::uint8_t>(p.slots[si].sources.size());
        for (int k = 0; k < part.t.arity; ++k) part.t.v[k] = l.copies.v[off + k];
        off += part.t.arity;
        out.push_back(part);
      }
    }
    return out;
  };

  auto group_setting_equal = [&](const Letter& x, const Letter& y, int g) {
    // Compare the values of the group's controlling settings as decoded from
    // each party's composite setting index.
    const EndogenousGroup& grp = net_.groups[g];
    auto value_of = [&](const Letter& l, const std::string& sid) -> int {
      const PartySpec& p = net_.parties[l.party];
      int rem = l.setting - 1;
      int val = -1;
      for (std::size_t k = p.setting_parents.size(); k-- > 0;) {
        int digit = rem % p.setting_cards[k];
        rem /= p.setting_cards[k];
        if (p.setting_parents[k] == sid) val = digit;
      }
      return val;
    };
    for (const auto& sid : grp.settings)
      if (value_of(x, sid) != value_of(y, sid)) return false;
    return true;
  };

  for (const Part& pa : parts_of(a))
    for (const Part& pb : parts_of(b)) {
      if (pa.party == pb.party && pa.slot == pb.slot) {
        // Same local algebra: only fully disjoint copies commute.
        if (!all_components_differ(pa.t, pb.t)) return false;
      } else if (pa.group >= 0 && pa.group == pb.group) {
        // Endogenous co-members: commute when acting on the same state copy
        // with the same setting, or on fully independent copies.
        bool same = all_components_equal(pa.t, pb.t) &&
                    group_setting_equal(a, b, pa.group);
        bool disjoint = all_components_differ(pa.t, pb.t);
        if (!same && !disjoint) return false;
      }
    }
  return true;
}

bool Alphabet::commutes(const Letter& a, const Letter& b) const {
  Letter a0 = a, b0 = b;
  a0.starred = false;
  b0.starred = false;
  return commutes(id_of(a0), id_of(b0));
}

Word Alphabet::canonicalize(const Word& w) const {
  auto reduced = reduce(w);
  require(reduced.has_value(),
          "canonicalize called on a word that rewrites to zero");
  return *reduced;
}

bool Alphabet::is_canonical(const Word& w) const { return canonicalize(w) == w; }

// Greedy normal form: repeatedly emit the least letter whose occurrence
// commutes with everything still ahead of it. This is the lexicographically
// least representative of the trace and is invariant under commuting swaps.
namespace {

void normal_form(const std::vector<char>& commute, std::size_t L, Word& w) {
  const std::size_t len = w.size();
  if (len < 2) return;
  Word out;
  out.reserve(len);
  std::vector<std::uint16_t> alive(w.begin(), w.end());
  while (!alive.empty()) {
    std::size_t best = alive.size();
    for (std::size_t p = 0; p < alive.size(); ++p) {
      if (best < alive.size() && alive[best] <= alive[p]) continue;
      bool available = true;
      for (std::size_t q = 0; q < p; ++q)
        if (!commute[alive[q] * L + alive[p]]) {
          available = false;
          break;
        }
      if (available) best = p;
    }
    out.push_back(alive[best]);
    alive.erase(alive.begin() + best);
  }
  w = std::move(out);
}

}  // namespace

std::optional<Word> Alphabet::reduce(Word w) const {
  const std::size_t L = letters_.size();
  normal_form(commute_, L, w);
  if (!params_.legacy_projective) return w;
  // Projective collapse: adjacent letters of one measurement block obey
  // E_a E_a' = delta_{a a'} E_a.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      const Letter& x = letters_[w[i]];
      const Letter& y = letters_[w[i + 1]];
      if (x.party == y.party && x.copies == y.copies && x.setting == y.setting) {
        if (x.outcome != y.outcome) return std::nullopt;  // orthogonal
        w.erase(w.begin() + i + 1);                       // idempotent
        changed = true;
        break;
      }
    }
    if (changed) normal_form(commute_, L, w);
  }
  return w;
}

Word Alphabet::star_word(const Word& w) const {
  Word out(w.rbegin(), w.rend());
  for (auto& id : out) id = star_map_[id];
  return out;
}

Polynomial Alphabet::involution(const Polynomial& p) const {
  Polynomial out;
  for (const auto& [w, c] : p) poly_add(out, canonicalize(star_word(w)), std::conj(c));
  return out;
}

Polynomial Alphabet::multiply(const Word& a, const Word& b) const {
  Word w;
  w.reserve(a.size() + b.size());
  w.insert(w.end(), a.begin(), a.end());
  w.insert(w.end(), b.begin(), b.end());
  Polynomial out;
  auto reduced = reduce(std::move(w));
  if (reduced) out.emplace(*reduced, 1.0);
  return out;
}

Polynomial Alphabet::multiply(const Polynomial& a, const Polynomial& b) const {
  Polynomial out;
  for (const auto& [wa, ca] : a)
    for (const auto& [wb, cb] : b) {
      Polynomial t = multiply(wa, wb);
      for (const auto& [w, c] : t) poly_add(out, w, c * ca * cb);
    }
  return out;
}

Polynomial Alphabet::povm_element(int party, int outcome,
                                  const std::vector<InflationTuple>& copies,
                                  int setting) const {
  require(party >= 0 && party < static_cast<int>(net_.parties.size()),
          "party index out of range");
  const PartySpec& p = net_.parties[static_cast<std::size_t>(party)];
  require(outcome >= 1 && outcome <= p.outcomes, "outcome out of range");
  require(setting >= 1 && setting <= p.settings(), "setting out of range");

  if (outcome == p.outcomes) {
    // Completion element X_M = I - sum_{a<M} X_a, never a generator.
    Polynomial out;
    poly_add(out, Word{}, 1.0);
    for (int a = 1; a < p.outcomes; ++a) {
      Polynomial xa = povm_element(party, a, copies, setting);
      for (const auto& [w, c] : xa) poly_add(out, w, -c);
    }
    return out;
  }

  if (params_.legacy_projective) {
    int arity = 0;
    for (const auto& sl : p.slots) arity += static_cast<int>(sl.sources.size());
    InflationTuple t;
    t.arity = static_cast<std::uint8_t>(arity);
    int off = 0;
    require(copies.size() == p.slots.size(), "one inflation tuple per slot");
    for (std::size_t si = 0; si < p.slots.size(); ++si) {
      require(copies[si].arity == p.slots[si].sources.size(),
              "inflation tuple arity mismatch");
      for (int k = 0; k < copies[si].arity; ++k) t.v[off++] = copies[si].v[k];
    }
    Letter l;
    l.party = static_cast<std::uint8_t>(party);
    l.slot = 0;
    l.copies = t;
    l.outcome = static_cast<std::uint8_t>(outcome);
    l.setting = static_cast<std::uint16_t>(setting);
    Polynomial out;
    out.emplace(Word{id_of(l)}, 1.0);
    return out;
  }

  require(copies.size() == p.slots.size(), "one inflation tuple per slot");
  for (std::size_t si = 0; si < p.slots.size(); ++si) {
    require(copies[si].arity == p.slots[si].sources.size(),
            "inflation tuple arity mismatch");
    for (int k = 0; k < copies[si].arity; ++k)
      require(copies[si].v[k] >= 1 && copies[si].v[k] <= params_.n,
              "inflation index out of range");
  }
  Polynomial out;
  for (int al = 1; al <= params_.r; ++al) {
    Word w;
    for (std::size_t si = 0; si < p.slots.size(); ++si) {
      Letter l;
      l.party = static_cast<std::uint8_t>(party);
      l.slot = static_cast<std::uint8_t>(si);
      l.copies = copies[si];
      l.outcome = static_cast<std::uint8_t>(outcome);
      l.alpha = static_cast<std::uint8_t>(al);
      l.setting = static_cast<std::uint16_t>(setting);
      w.push_back(id_of(l));
    }
    poly_add(out, canonicalize(w), 1.0);
  }
  return out;
}

RelationSet Alphabet::build_relations() const {
  require(params_.norm_bound > 0, "norm bound C must be positive");
  RelationSet rel;
  rel.norm_bound = params_.norm_bound;

  const int n = params_.n;
  for (std::size_t pi = 0; pi < net_.parties.size(); ++pi) {
    const PartySpec& p = net_.parties[pi];
    int arity = 0;
    for (const auto& sl : p.slots) arity += static_cast<int>(sl.sources.size());
    // Tuples per slot, enumerated jointly.
    std::vector<InflationTuple> joint = enumerate_tuples(arity, n);
    for (const auto& jt : joint) {
      std::vector<InflationTuple> per_slot;
      int off = 0;
      for (const auto& sl : p.slots) {
        InflationTuple t;
        t.arity = static_cast<std::uint8_t>(sl.sources.size());
        for (int k = 0; k < t.arity; ++k) t.v[k] = jt.v[off + k];
        off += t.arity;
        per_slot.push_back(t);
      }
      for (int x = 1; x <= p.settings(); ++x) {
        for (int a = 1; a <= p.outcomes; ++a) {
          if (params_.legacy_projective) continue;
          Polynomial q = povm_element(static_cast<int>(pi), a, per_slot, x);
          if (!params_.hermitian_generators) {
            Polynomial qs = involution(q);
            Polynomial sym;
            for (const auto& [w, c] : q) poly_add(sym, w, 0.5 * c);
            for (const auto& [w, c] : qs) poly_add(sym, w, 0.5 * c);
            q = sym;
          }
          rel.positivity.push_back(q);
        }
      }
      if (params_.legacy_projective) {
        rel.completeness_relations += p.settings();
        rel.idempotency_relations += p.settings() * p.outcomes;
      }
    }
  }

  if (!params_.legacy_projective) {
    const double c2 = params_.norm_bound * params_.norm_bound;
    for (int id = 0; id < letter_count(); ++id) {
      if (letters_[id].starred) continue;
      Polynomial q;
      poly_add(q, Word{}, c2);
      Word gg{star_map_[static_cast<std::uint16_t>(id)],
              static_cast<std::uint16_t>(id)};
      poly_add(q, canonicalize(gg), -1.0);
      rel.norm_polys.push_back(q);
    }
  }
  return rel;
}

RelationSet build_relations(const Alphabet& alphabet) {
  return alphabet.build_relations();
}

}  // namespace qinf
