#include <doctest.h>

#include <algorithm>
#include <set>

#include "qinf/oracle.hpp"
#include "qinf/pipeline.hpp"

using namespace qinf;

namespace {

Letter mk(int party, int slot, std::initializer_list<int> copies, int outcome,
          int alpha = 1, int setting = 1, bool starred = false) {
  Letter l;
  l.party = static_cast<std::uint8_t>(party);
  l.slot = static_cast<std::uint8_t>(slot);
  l.copies = InflationTuple::of(copies);
  l.outcome = static_cast<std::uint8_t>(outcome);
  l.alpha = static_cast<std::uint8_t>(alpha);
  l.setting = static_cast<std::uint16_t>(setting);
  l.starred = starred;
  return l;
}

// Independent oracle: smallest word reachable by adjacent commuting swaps.
Word exhaustive_min(const Alphabet& a, const Word& w) {
  std::set<Word> seen{w};
  std::vector<Word> work{w};
  Word best = w;
  while (!work.empty()) {
    Word cur = work.back();
    work.pop_back();
    if (cur < best) best = cur;
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      if (!a.commutes(cur[i], cur[i + 1])) continue;
      Word next = cur;
      std::swap(next[i], next[i + 1]);
      if (seen.insert(next).second) work.push_back(next);
    }
  }
  return best;
}

Word random_word(const Alphabet& a, Rng& rng, int len) {
  Word w;
  for (int i = 0; i < len; ++i)
    w.push_back(static_cast<std::uint16_t>(rng.next_u64() % a.letter_count()));
  return w;
}

AlgebraParams params(int n, int r, bool hermitian = true, bool legacy = false) {
  AlgebraParams p;
  p.n = n;
  p.r = r;
  p.hermitian_generators = hermitian;
  p.legacy_projective = legacy;
  return p;
}

// Fig 7 style network: B and the minus slot of C form an endogenous group
// with a double inflation index.
NetworkScenario two_source_group_network() {
  NetworkScenario net;
  net.sources = {"L", "M", "R"};
  EndogenousGroup g;
  g.members = {"B", "C"};
  g.sources = {"L", "M"};
  net.groups = {g};
  PartySpec a, b, c, d;
  a.id = "A";
  a.outcomes = 2;
  a.slots = {{{"L"}, -1}};
  b.id = "B";
  b.outcomes = 2;
  b.slots = {{{"L", "M"}, 0}};
  c.id = "C";
  c.outcomes = 2;
  c.slots = {{{"L", "M"}, 0}, {{"R"}, -1}};
  d.id = "D";
  d.outcomes = 2;
  d.slots = {{{"M"}, -1}, {{"R"}, -1}};
  net.parties = {a, b, c, d};
  return net;
}

}  // namespace

TEST_CASE("generator counts follow 6(M-1)rn+1 on the triangle") {
  CHECK(Alphabet(triangle_network(2), params(1, 1)).size_with_identity() == 7);
  CHECK(Alphabet(triangle_network(4), params(2, 4)).size_with_identity() == 145);
  for (int m : {2, 4})
    for (int r : {1, 4})
      for (int n : {1, 2})
        CHECK(Alphabet(triangle_network(m), params(n, r)).size_with_identity() ==
              6 * (m - 1) * r * n + 1);
  CHECK_THROWS_AS(Alphabet(triangle_network(2), params(1, 0)), Error);
  CHECK_THROWS_AS(Alphabet(triangle_network(2), params(0, 1)), Error);
}

TEST_CASE("commutation matches the locality constraints") {
  Alphabet a(triangle_network(3), params(2, 2));
  // different party symbols commute
  CHECK(a.commutes(mk(0, 0, {1}, 1), mk(1, 0, {1}, 1)));
  // same symbol, side and copy: not commuting even for other outcomes
  CHECK(!a.commutes(mk(0, 0, {1}, 1), mk(0, 0, {1}, 2)));
  CHECK(!a.commutes(mk(0, 0, {1}, 1, 1), mk(0, 0, {1}, 1, 2)));
  // different inflation copy of the same local algebra commutes
  CHECK(a.commutes(mk(0, 0, {1}, 1), mk(0, 0, {2}, 1)));
  // minus vs plus side of one party commutes
  CHECK(a.commutes(mk(0, 0, {1}, 1), mk(0, 1, {1}, 1)));

  SUBCASE("commutes is symmetric and star-insensitive") {
    Alphabet ns(triangle_network(2), params(2, 2, /*hermitian=*/false));
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
      auto i = static_cast<std::uint16_t>(rng.next_u64() % ns.letter_count());
      auto j = static_cast<std::uint16_t>(rng.next_u64() % ns.letter_count());
      CHECK(ns.commutes(i, j) == ns.commutes(j, i));
      CHECK(ns.commutes(i, j) == ns.commutes(ns.star_id(i), j));
      CHECK(ns.commutes(i, j) == ns.commutes(i, ns.star_id(j)));
    }
  }
}

TEST_CASE("endogenous groups commute per the index-overlap cases") {
  Alphabet a(two_source_group_network(), params(2, 1));
  Letter b11 = mk(1, 0, {1, 1}, 1);
  Letter b22 = mk(1, 0, {2, 2}, 1);
  Letter b12 = mk(1, 0, {1, 2}, 1);
  Letter c11 = mk(2, 0, {1, 1}, 1);
  Letter c22 = mk(2, 0, {2, 2}, 1);
  Letter c12 = mk(2, 0, {1, 2}, 1);
  Letter c21 = mk(2, 0, {2, 1}, 1);
  // same copies: spatially separated members commute
  CHECK(a.commutes(b11, c11));
  // all indices differ: independent copies commute
  CHECK(a.commutes(b11, c22));
  CHECK(a.commutes(b12, c21));
  // exactly one overlapping index: not commuting
  CHECK(!a.commutes(b11, c12));
  CHECK(!a.commutes(b12, c11));
  CHECK(!a.commutes(b22, c12));
  // same member: only fully disjoint copies commute
  CHECK(a.commutes(b11, b22));
  CHECK(!a.commutes(b11, b12));
  // the plus slot of C is not in the group: always commutes with B
  CHECK(a.commutes(b11, mk(2, 1, {1}, 1)));
  CHECK(a.commutes(b11, mk(2, 1, {2}, 1)));
  // D shares sources but no group: commutes with everything but itself
  CHECK(a.commutes(b11, mk(3, 0, {1}, 1)));
}

TEST_CASE("canonicalize is the least representative (exhaustive oracle)") {
  Alphabet tri(triangle_network(2), params(2, 2));
  Alphabet endo(two_source_group_network(), params(3, 1));
  Rng rng(17);
  for (const Alphabet* a : {&tri, &endo}) {
    // spec examples first
    CHECK(a->canonicalize({}) == Word{});
    for (int trial = 0; trial < 300; ++trial) {
      Word w = random_word(*a, rng, 1 + static_cast<int>(rng.next_u64() % 5));
      Word canon = a->canonicalize(w);
      CHECK(canon == exhaustive_min(*a, w));
      CHECK(a->canonicalize(canon) == canon);  // idempotent
    }
  }
}

TEST_CASE("canonicalize spec examples") {
  Alphabet a(triangle_network(3), params(1, 1));
  std::uint16_t e = a.id_of(mk(0, 0, {1}, 1));
  std::uint16_t f = a.id_of(mk(1, 0, {1}, 1));
  CHECK(a.canonicalize({f, e}) == Word{e, f});
  // non-commuting pair stays in order
  std::uint16_t e2 = a.id_of(mk(0, 0, {1}, 2));
  CHECK(a.canonicalize({e, e2}) == Word{e, e2});
  CHECK(a.canonicalize({e2, e}) == Word{e2, e});
}

TEST_CASE("canonicalize is confluent under random commuting swaps") {
  Alphabet a(triangle_network(2), params(2, 2));
  Rng rng(23);
  int performed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Word w = random_word(a, rng, 2 + static_cast<int>(rng.next_u64() % 11));
    Word canon = a.canonicalize(w);
    // random walk of allowed adjacent swaps
    Word v = w;
    for (int step = 0; step < 12; ++step) {
      std::size_t i = rng.next_u64() % (v.size() - 1);
      if (a.commutes(v[i], v[i + 1])) {
        std::swap(v[i], v[i + 1]);
        ++performed;
      }
    }
    CHECK(a.canonicalize(v) == canon);
  }
  CHECK(performed > 1000);  // the walk actually moved
}

TEST_CASE("involution reverses, stars and conjugates") {
  Alphabet a(triangle_network(2), params(1, 1, /*hermitian=*/false));
  std::uint16_t g = a.id_of(mk(0, 0, {1}, 1));
  std::uint16_t h = a.id_of(mk(1, 0, {1}, 1));
  std::uint16_t gs = a.star_id(g);
  std::uint16_t hs = a.star_id(h);

  Polynomial p;
  poly_add(p, {g, h}, 1.0);
  Polynomial q = a.involution(p);
  REQUIRE(q.size() == 1);
  CHECK(q.begin()->first == a.canonicalize({hs, gs}));

  Polynomial one;
  poly_add(one, {}, 1.0);
  CHECK(poly_equal(a.involution(one), one));

  Polynomial scaled;
  poly_add(scaled, {g}, cx(2, 1));
  Polynomial si = a.involution(scaled);
  REQUIRE(si.count({gs}));
  CHECK(si.at({gs}) == cx(2, -1));

  SUBCASE("involution is an involution up to canonical form") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
      Word w = a.canonicalize(random_word(a, rng, 1 + rng.next_u64() % 6));
      Polynomial pw;
      poly_add(pw, w, cx(rng.gaussian(), rng.gaussian()));
      CHECK(poly_equal(a.involution(a.involution(pw)), pw));
    }
  }
}

TEST_CASE("povm elements sum to the identity exactly") {
  for (int m : {2, 3, 4}) {
    Alphabet a(triangle_network(m), params(2, 2));
    std::vector<InflationTuple> copies{InflationTuple::of({1}),
                                       InflationTuple::of({2})};
    Polynomial total;
    for (int outcome = 1; outcome <= m; ++outcome) {
      Polynomial e = a.povm_element(0, outcome, copies);
      for (const auto& [w, c] : e) poly_add(total, w, c);
    }
    Polynomial one;
    poly_add(one, {}, 1.0);
    CHECK(poly_equal(total, one));
  }
}

TEST_CASE("povm element is the r-term Schmidt sum") {
  Alphabet a(triangle_network(2), params(1, 2));
  Polynomial e = a.povm_element(0, 1, {InflationTuple::of({1}), InflationTuple::of({1})});
  REQUIRE(e.size() == 2);  // alpha = 1, 2
  for (const auto& [w, c] : e) {
    CHECK(w.size() == 2);
    CHECK(c == cx(1.0));
    CHECK(a.letter(w[0]).slot == 0);
    CHECK(a.letter(w[1]).slot == 1);
    CHECK(a.letter(w[0]).alpha == a.letter(w[1]).alpha);
  }
  CHECK_THROWS_AS(a.povm_element(0, 3, {InflationTuple::of({1}),
                                        InflationTuple::of({1})}),
                  Error);
}

TEST_CASE("povm elements are formally self-adjoint") {
  for (bool hermitian : {true, false}) {
    Alphabet a(triangle_network(3), params(2, 2, hermitian));
    RelationSet rel = a.build_relations();
    for (const auto& q : rel.positivity) CHECK(poly_equal(a.involution(q), q));
    for (const auto& q : rel.norm_polys) CHECK(poly_equal(a.involution(q), q));
  }
}

TEST_CASE("relation counts for the rank-constrained profile") {
  for (int m : {2, 3}) {
    Alphabet a(triangle_network(m), params(1, 1));
    RelationSet rel = a.build_relations();
    CHECK(rel.norm_polys.size() == 6 * (m - 1));
    CHECK(rel.positivity.size() == 3 * m);
  }
  AlgebraParams bad = params(1, 1);
  bad.norm_bound = 0.0;
  CHECK_THROWS_AS(Alphabet(triangle_network(2), bad).build_relations(), Error);
}

TEST_CASE("legacy projective profile: relations and rewriting") {
  Alphabet a(triangle_network(2), params(1, 1, true, /*legacy=*/true));
  CHECK(a.letter_count() == 3);  // one non-completion outcome per party
  RelationSet rel = a.build_relations();
  CHECK(rel.completeness_relations == 3);
  CHECK(rel.idempotency_relations == 6);
  CHECK(rel.positivity.empty());
  CHECK(rel.norm_polys.empty());

  std::uint16_t ea = a.id_of(mk(0, 0, {1, 1}, 1));
  // E_a E_a = E_a
  Polynomial sq = a.multiply(Word{ea}, Word{ea});
  REQUIRE(sq.size() == 1);
  CHECK(sq.begin()->first == Word{ea});

  // orthogonality against the completion element: E (I - E) = 0
  Polynomial completion =
      a.povm_element(0, 2, {InflationTuple::of({1}), InflationTuple::of({1})});
  Polynomial prod;
  poly_add(prod, Word{ea}, 1.0);
  CHECK(a.multiply(prod, completion).empty());

  SUBCASE("legacy copies commute only when both indices differ") {
    Alphabet b(triangle_network(2), params(2, 1, true, true));
    CHECK(b.commutes(mk(0, 0, {1, 1}, 1), mk(0, 0, {2, 2}, 1)));
    CHECK(!b.commutes(mk(0, 0, {1, 1}, 1), mk(0, 0, {1, 2}, 1)));
    CHECK(!b.commutes(mk(0, 0, {1, 1}, 1), mk(0, 0, {2, 1}, 1)));
    CHECK(b.commutes(mk(0, 0, {1, 1}, 1), mk(1, 0, {1, 1}, 1)));
  }
}
