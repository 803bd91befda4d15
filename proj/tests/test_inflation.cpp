#include <doctest.h>

#include <algorithm>
#include <set>

#include "qinf/oracle.hpp"
#include "qinf/pipeline.hpp"

using namespace qinf;

namespace {

AlgebraParams params(int n, int r) {
  AlgebraParams p;
  p.n = n;
  p.r = r;
  return p;
}

// Single word of the r=1 POVM product X^{ij} for the triangle.
Word povm_word(const Alphabet& a, int party, int i, int j) {
  Polynomial p = a.povm_element(party, 1,
                                {InflationTuple::of({i}), InflationTuple::of({j})});
  REQUIRE(p.size() == 1);
  return p.begin()->first;
}

Word concat(const Alphabet& a, std::initializer_list<Word> ws) {
  Word out;
  for (const auto& w : ws) out.insert(out.end(), w.begin(), w.end());
  return a.canonicalize(out);
}

PermutationTuple random_tuple(Rng& rng, int sources, int n) {
  PermutationTuple g = PermutationTuple::identity(sources, n);
  for (auto& perm : g.perms)
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
  return g;
}

Word random_word(const Alphabet& a, Rng& rng, int len) {
  Word w;
  for (int i = 0; i < len; ++i)
    w.push_back(static_cast<std::uint16_t>(rng.next_u64() % a.letter_count()));
  return a.canonicalize(w);
}

}  // namespace

TEST_CASE("act: identity, single swaps, composition") {
  Alphabet a(triangle_network(2), params(2, 1));
  InflationGroup grp(a);
  Rng rng(29);

  SUBCASE("identity acts as canonicalize") {
    for (int t = 0; t < 50; ++t) {
      Word w = random_word(a, rng, rng.next_u64() % 6);
      CHECK(grp.act(PermutationTuple::identity(3, 2), w) == a.canonicalize(w));
    }
  }

  SUBCASE("swapping the AB source moves only the AB copy index of E") {
    // E^{11}: slot 0 is fed by rhoCA, slot 1 by rhoAB.
    Word e11 = povm_word(a, 0, 1, 1);
    PermutationTuple g = PermutationTuple::identity(3, 2);
    int ab = a.net().source_index("rhoAB");
    std::swap(g.perms[ab][0], g.perms[ab][1]);
    CHECK(grp.act(g, e11) == povm_word(a, 0, 1, 2));
  }

  SUBCASE("composition: act(g o h, w) == act(g, act(h, w))") {
    Alphabet a3(triangle_network(2), params(3, 1));
    InflationGroup grp3(a3);
    for (int t = 0; t < 100; ++t) {
      PermutationTuple g = random_tuple(rng, 3, 3), h = random_tuple(rng, 3, 3);
      Word w = random_word(a3, rng, 1 + rng.next_u64() % 6);
      CHECK(grp3.act(g.compose(h), w) == grp3.act(g, grp3.act(h, w)));
    }
  }

  SUBCASE("act preserves length and the letter multiset up to reindexing") {
    for (int t = 0; t < 100; ++t) {
      Word w = random_word(a, rng, 1 + rng.next_u64() % 7);
      Word img = grp.act(random_tuple(rng, 3, 2), w);
      CHECK(img.size() == w.size());
      auto strip = [&](const Word& v) {
        std::multiset<std::tuple<int, int, int, int>> ms;
        for (auto id : v) {
          const Letter& l = a.letter(id);
          ms.insert({l.party, l.slot, l.outcome, l.alpha});
        }
        return ms;
      };
      CHECK(strip(w) == strip(img));
    }
  }
}

TEST_CASE("orbit_canonical identifies the displayed symmetry chain") {
  Alphabet a(triangle_network(2), params(2, 1));
  InflationGroup grp(a);
  // rho(E^11 F^12 F^21 G^21) = rho(E^22 F^21 F^12 G^12) under full swaps.
  Word w1 = concat(a, {povm_word(a, 0, 1, 1), povm_word(a, 1, 1, 2),
                       povm_word(a, 1, 2, 1), povm_word(a, 2, 2, 1)});
  Word w2 = concat(a, {povm_word(a, 0, 2, 2), povm_word(a, 1, 2, 1),
                       povm_word(a, 1, 1, 2), povm_word(a, 2, 1, 2)});
  CHECK(w1 != w2);
  CHECK(grp.orbit_canonical(w1) == grp.orbit_canonical(w2));
  // and the intermediate steps of the chain
  Word w_mid = concat(a, {povm_word(a, 0, 1, 2), povm_word(a, 1, 2, 2),
                          povm_word(a, 1, 1, 1), povm_word(a, 2, 2, 1)});
  CHECK(grp.orbit_canonical(w_mid) == grp.orbit_canonical(w1));

  CHECK(grp.orbit_canonical(Word{}) == Word{});
}

TEST_CASE("orbit_canonical is invariant under the group action") {
  for (int n : {2, 3}) {
    Alphabet a(triangle_network(2), params(n, 1));
    InflationGroup grp(a);
    Rng rng(31 + n);
    for (int t = 0; t < 100; ++t) {
      Word w = random_word(a, rng, 1 + rng.next_u64() % 6);
      Word key = grp.orbit_canonical(w);
      for (int s = 0; s < 10; ++s)
        CHECK(grp.orbit_canonical(grp.act(random_tuple(rng, 3, n), w)) == key);
    }
  }
}

TEST_CASE("n=1 orbits are trivial") {
  Alphabet a(triangle_network(2), params(1, 2));
  InflationGroup grp(a);
  Rng rng(37);
  for (int t = 0; t < 50; ++t) {
    Word w = random_word(a, rng, rng.next_u64() % 5);
    CHECK(grp.orbit_canonical(w) == a.canonicalize(w));
  }
}

TEST_CASE("orbits partition words and sizes divide the group order") {
  Alphabet a(triangle_network(2), params(2, 1));
  InflationGroup grp(a);
  Rng rng(41);
  for (int t = 0; t < 40; ++t) {
    Word w = random_word(a, rng, 1 + rng.next_u64() % 5);
    std::vector<Word> orb = grp.orbit(w);
    // same key <=> member of the orbit
    std::set<Word> members(orb.begin(), orb.end());
    for (const auto& v : orb) CHECK(grp.orbit_canonical(v) == grp.orbit_canonical(w));
    Word other = random_word(a, rng, 1 + rng.next_u64() % 5);
    if (!members.count(a.canonicalize(other)))
      CHECK(grp.orbit_canonical(other) != grp.orbit_canonical(w));
    CHECK(48 % orb.size() == 0);  // |S_2|^3 * extra? group order is 8
    CHECK(8 % orb.size() == 0);
  }
}

TEST_CASE("closure branch reproduces invariance for larger groups") {
  // (4!)^3 > 1e4 forces the transposition-closure path.
  Alphabet a(triangle_network(2), params(4, 1));
  InflationGroup grp(a);
  Rng rng(43);
  for (int t = 0; t < 10; ++t) {
    Word w = random_word(a, rng, 1 + rng.next_u64() % 5);
    Word key = grp.orbit_canonical(w);
    for (int s = 0; s < 5; ++s)
      CHECK(grp.orbit_canonical(grp.act(random_tuple(rng, 3, 4), w)) == key);
    std::vector<Word> orb = grp.orbit(w);
    double order = 24.0 * 24.0 * 24.0;
    CHECK(std::fmod(order, static_cast<double>(orb.size())) == 0.0);
  }
}

TEST_CASE("diagonal_embed moves copy 1 to copy j") {
  Alphabet a(triangle_network(2), params(2, 1));
  InflationGroup grp(a);
  Polynomial p;
  poly_add(p, concat(a, {povm_word(a, 0, 1, 1), povm_word(a, 1, 1, 1),
                         povm_word(a, 2, 1, 1)}),
           1.0);
  Polynomial q = grp.diagonal_embed(p, 2);
  REQUIRE(q.size() == 1);
  CHECK(q.begin()->first == concat(a, {povm_word(a, 0, 2, 2), povm_word(a, 1, 2, 2),
                                       povm_word(a, 2, 2, 2)}));
  CHECK(poly_equal(grp.diagonal_embed(p, 1), p));

  Polynomial c;
  poly_add(c, {}, cx(0.5, 0));
  CHECK(poly_equal(grp.diagonal_embed(c, 2), c));

  CHECK_THROWS_AS(grp.diagonal_embed(p, 3), Error);
  CHECK_THROWS_AS(grp.diagonal_embed(q, 1), Error);  // touches copy 2
}
