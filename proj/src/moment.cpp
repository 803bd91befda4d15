#include "qinf/moment.hpp"

#include <algorithm>
#include <cmath>

namespace qinf {

int MonomialBasis::size_at_degree(int d) const {
  require(d >= 0 && d + 1 < static_cast<int>(degree_offsets.size()),
          "degree out of range");
  return degree_offsets[d + 1];
}

MonomialBasis enumerate_basis(const Alphabet& alph, int k) {
  require(k >= 0, "NPO level k must be >= 0");
  MonomialBasis basis;
  basis.degree = k;
  std::set<Word> seen;
  std::vector<Word> frontier{Word{}};
  seen.insert(Word{});
  basis.words.push_back(Word{});
  basis.degree_offsets = {0, 1};
  for (int d = 1; d <= k; ++d) {
    std::vector<Word> next;
    std::set<Word> level;
    for (const auto& w : frontier)
      for (int id = 0; id < alph.letter_count(); ++id) {
        Polynomial prod = alph.multiply(w, Word{static_cast<std::uint16_t>(id)});
        for (const auto& [cand, coeff] : prod) {
          if (static_cast<int>(cand.size()) != d) continue;  // collapsed earlier
          if (seen.count(cand) || level.count(cand)) continue;
          level.insert(cand);
        }
      }
    for (const auto& w : level) {
      basis.words.push_back(w);
      next.push_back(w);
    }
    seen.insert(level.begin(), level.end());
    frontier = std::move(next);
    basis.degree_offsets.push_back(static_cast<int>(basis.words.size()));
  }
  return basis;
}

// ------------------------------------------------------------- assembly

MomentAssembly::MomentAssembly(const Alphabet& alphabet, const InflationGroup& group,
                               bool real_moments)
    : alph_(&alphabet), group_(&group), real_moments_(real_moments) {
  // Slot 0 is rho(identity); assemble() pins it to 1.
  MomentVariable one;
  one.key = Word{};
  one.self_adjoint = true;
  one.re_slot = slot_count_++;
  vars_.push_back(one);
  index_[Word{}] = {0, false};
  words_seen_.insert(Word{});
  orbit_keys_.insert(Word{});
}

Word MomentAssembly::orbit_of(const Word& canonical) {
  auto it = orbit_cache_.find(canonical);
  if (it != orbit_cache_.end()) return it->second;
  Word key = group_->orbit_canonical(canonical);
  orbit_cache_.emplace(canonical, key);
  return key;
}

std::pair<int, bool> MomentAssembly::refer(const Word& canonical) {
  words_seen_.insert(canonical);
  Word key = orbit_of(canonical);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;

  orbit_keys_.insert(key);
  Word adj = orbit_of(alph_->canonicalize(alph_->star_word(key)));
  orbit_keys_.insert(adj);

  MomentVariable var;
  var.self_adjoint = (adj == key);
  var.key = std::min(key, adj);
  var.re_slot = slot_count_++;
  if (!var.self_adjoint && !real_moments_) var.im_slot = slot_count_++;
  int vi = static_cast<int>(vars_.size());
  vars_.push_back(var);
  index_[var.key] = {vi, false};
  if (adj != key) index_[key == var.key ? adj : key] = {vi, true};
  return index_.at(key);
}

EntryExpr MomentAssembly::resolve(const Polynomial& p) {
  std::map<int, cx> acc;
  cx constant = 0.0;
  for (const auto& [w, c] : p) {
    if (w.empty()) {
      // rho(identity) is an explicit pinned variable.
      acc[0] += c;
      continue;
    }
    auto [vi, conj] = refer(w);
    const MomentVariable& var = vars_[vi];
    acc[var.re_slot] += c;
    if (var.im_slot >= 0) acc[var.im_slot] += (conj ? -1.0 : 1.0) * c * cx(0, 1);
  }
  EntryExpr out;
  out.constant = constant;
  for (const auto& [slot, c] : acc)
    if (std::abs(c.real()) > 0 || std::abs(c.imag()) > 0) out.terms.push_back({slot, c});
  return out;
}

// ------------------------------------------------------------- matrices

namespace {

std::size_t upper_index(int dim, int i, int j) {
  return static_cast<std::size_t>(i) * dim - static_cast<std::size_t>(i) * (i - 1) / 2 +
         (j - i);
}

}  // namespace

const EntryExpr& MomentMatrixSpec::at(int i, int j) const {
  require(i <= j, "upper-triangle access expects i <= j");
  return upper[upper_index(dim, i, j)];
}

const EntryExpr& LocalizingSpec::at(int i, int j) const {
  require(i <= j, "upper-triangle access expects i <= j");
  return upper[upper_index(dim, i, j)];
}

MomentMatrixSpec moment_matrix(const MonomialBasis& basis, MomentAssembly& asmb) {
  require(!basis.words.empty(), "basis is empty");
  MomentMatrixSpec spec;
  spec.dim = static_cast<int>(basis.words.size());
  const Alphabet& alph = asmb.alphabet();
  spec.upper.reserve(upper_index(spec.dim, spec.dim - 1, spec.dim - 1) + 1);
  for (int i = 0; i < spec.dim; ++i) {
    Word bi_star = alph.star_word(basis.words[i]);
    for (int j = i; j < spec.dim; ++j) {
      Polynomial prod = alph.multiply(bi_star, basis.words[j]);
      spec.upper.push_back(asmb.resolve(prod));
    }
  }
  return spec;
}

LocalizingSpec localizing_matrix(const Polynomial& q, const MonomialBasis& basis,
                                 int k, MomentAssembly& asmb) {
  LocalizingSpec spec;
  spec.q = q;
  int deg = 0;
  for (const auto& [w, c] : q) deg = std::max(deg, static_cast<int>(w.size()));
  int l = (deg + 1) / 2;
  if (k < l) {
    spec.deferred = true;
    spec.note = "constraint of degree " + std::to_string(deg) +
                " is not representable at level k=" + std::to_string(k) +
                " (needs k >= " + std::to_string(l) + ")";
    return spec;
  }
  const Alphabet& alph = asmb.alphabet();
  spec.dim = basis.size_at_degree(k - l);
  for (int i = 0; i < spec.dim; ++i) {
    Word bi_star = alph.star_word(basis.words[i]);
    Polynomial left;
    left.emplace(bi_star, 1.0);  // star_word output is a valid representative
    for (int j = i; j < spec.dim; ++j) {
      Polynomial right;
      right.emplace(basis.words[j], 1.0);
      Polynomial prod = alph.multiply(alph.multiply(left, q), right);
      spec.upper.push_back(asmb.resolve(prod));
    }
  }
  return spec;
}

// ----------------------------------------------------- state polynomials

int StatePolynomial::degree() const {
  int g = 0;
  for (const auto& t : terms) g = std::max(g, static_cast<int>(t.factors.size()));
  return g;
}

Polynomial polarize(const StatePolynomial& objective, const InflationGroup& group) {
  const int g = objective.degree();
  require(group.n() >= g,
          "polarization of a degree-" + std::to_string(g) +
              " objective needs inflation level n >= " + std::to_string(g));
  const Alphabet& alph = group.alphabet();
  Polynomial out;
  for (const auto& term : objective.terms) {
    Polynomial acc;
    poly_add(acc, Word{}, term.coeff);
    for (std::size_t j = 0; j < term.factors.size(); ++j)
      acc = alph.multiply(acc,
                          group.diagonal_embed(term.factors[j], static_cast<int>(j) + 1));
    for (const auto& [w, c] : acc) poly_add(out, w, c);
  }
  return out;
}

// ------------------------------------------------- probability constraints

namespace {

std::vector<int> decode_assignment(std::size_t idx, const std::vector<int>& cards) {
  std::vector<int> v(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    v[i] = static_cast<int>(idx % cards[i]);
    idx /= cards[i];
  }
  return v;
}

}  // namespace

ProbabilityBundle probability_constraints(MomentAssembly& asmb,
                                          const ConditionalTarget& target,
                                          const TransformReport& report,
                                          ConstraintMode mode,
                                          bool legacy_marginals) {
  const Alphabet& alph = asmb.alphabet();
  const NetworkScenario& net = alph.net();
  const int n = alph.params().n;
  ProbabilityBundle bundle;
  for (const auto& w : target.warnings) bundle.warnings.push_back(w);

  // Row normalization of the conditional target.
  std::size_t n_set = 1, n_out = 1;
  for (int c : target.setting_cards) n_set *= c;
  for (int c : target.output_cards) n_out *= c;
  for (std::size_t si = 0; si < n_set; ++si) {
    if (!target.defined[si]) continue;
    double s = 0;
    for (std::size_t oi = 0; oi < n_out; ++oi) s += target.table[si * n_out + oi];
    require(std::abs(s - 1.0) <= 1e-9, "target distribution row not normalized");
  }

  // Value of an original variable under the current (setting, output) cell.
  auto original_value = [&](const std::string& id, const std::vector<int>& setv,
                            const std::vector<int>& outv) -> int {
    for (std::size_t k = 0; k < target.settings.size(); ++k)
      if (target.settings[k] == id) return setv[k];
    for (std::size_t k = 0; k < target.outputs.size(); ++k)
      if (target.outputs[k] == id) return outv[k];
    throw Error("variable " + id + " not present in the conditional target");
  };
  auto resolve_setting_var = [&](const std::string& id) -> std::string {
    for (const auto& ps : report.post_selection)
      if (ps.copy == id) return ps.original;
    return id;
  };

  // Diagonal-copy POVM product for one cell, copies (i, i, ..., i).
  auto cell_polynomial = [&](const std::vector<int>& setv, const std::vector<int>& outv,
                             int copy) -> Polynomial {
    Polynomial prod;
    poly_add(prod, Word{}, 1.0);
    for (std::size_t pi = 0; pi < net.parties.size(); ++pi) {
      const PartySpec& p = net.parties[pi];
      int outcome = 1 + original_value(p.id, setv, outv);
      int setting = 1, radix = 1;
      for (std::size_t k = p.setting_parents.size(); k-- > 0;) {
        std::string orig = resolve_setting_var(p.setting_parents[k]);
        setting += original_value(orig, setv, outv) * radix;
        radix *= p.setting_cards[k];
      }
      std::vector<InflationTuple> copies;
      for (const auto& sl : p.slots) {
        InflationTuple t;
        t.arity = static_cast<std::uint8_t>(sl.sources.size());
        for (int c = 0; c < t.arity; ++c) t.v[c] = static_cast<std::uint8_t>(copy);
        copies.push_back(t);
      }
      prod = alph.multiply(prod,
                           alph.povm_element(static_cast<int>(pi), outcome, copies,
                                             setting));
    }
    return prod;
  };

  struct Cell {
    std::vector<int> setv, outv;
    double p;
  };
  std::vector<Cell> cells;
  for (std::size_t si = 0; si < n_set; ++si) {
    if (!target.defined[si]) continue;
    auto setv = decode_assignment(si, target.setting_cards);
    for (std::size_t oi = 0; oi < n_out; ++oi)
      cells.push_back({setv, decode_assignment(oi, target.output_cards),
                       target.table[si * n_out + oi]});
  }

  switch (mode) {
    case ConstraintMode::LinearConstraints: {
      for (const auto& cell : cells)
        bundle.equalities.push_back(
            {asmb.resolve(cell_polynomial(cell.setv, cell.outv, 1)), cell.p});
      break;
    }
    case ConstraintMode::QuadraticEpigraph: {
      bundle.epigraph = true;
      for (const auto& cell : cells) {
        EntryExpr e = asmb.resolve(cell_polynomial(cell.setv, cell.outv, 1));
        e.constant -= cell.p;
        bundle.deviations.push_back(e);
      }
      break;
    }
    case ConstraintMode::PolarizedObjective: {
      StatePolynomial obj;
      for (const auto& cell : cells) {
        Polynomial q = cell_polynomial(cell.setv, cell.outv, 1);
        obj.terms.push_back({1.0, {q, q}});
        obj.terms.push_back({-2.0 * cell.p, {q}});
        obj.terms.push_back({cell.p * cell.p, {}});
      }
      bundle.objective = asmb.resolve(polarize(obj, asmb.group()));
      break;
    }
  }

  if (legacy_marginals) {
    // g-fold diagonal products over independent copies pin products of cell
    // probabilities.
    for (int g = 2; g <= n; ++g) {
      std::vector<std::size_t> pick(g, 0);
      while (true) {
        Polynomial prod;
        poly_add(prod, Word{}, 1.0);
        double rhs = 1.0;
        for (int i = 0; i < g; ++i) {
          const Cell& cell = cells[pick[i]];
          prod = alph.multiply(prod, cell_polynomial(cell.setv, cell.outv, i + 1));
          rhs *= cell.p;
        }
        bundle.equalities.push_back({asmb.resolve(prod), rhs});
        std::size_t k = 0;
        while (k < pick.size() && ++pick[k] == cells.size()) pick[k++] = 0;
        if (k == pick.size()) break;
      }
    }
  }
  return bundle;
}

}  // namespace qinf
