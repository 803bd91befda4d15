#include "qinf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include <json.hpp>

namespace qinf {

using json = nlohmann::ordered_json;

std::uint64_t Rng::next_u64() {
  // splitmix64
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  double u1 = 0.0;
  while (u1 <= 1e-300) u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

cx Rng::cgaussian() {
  double re = gaussian();
  double im = gaussian();
  return {re, im};
}

// ----------------------------------------------------------------- helpers

namespace {

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double op_norm(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

double min_eig_herm(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es((m + m.adjoint()) / 2.0);
  return es.eigenvalues().minCoeff();
}

// Matrix acting on the sub-factors `pos` (indices into `dims`, in the op's
// own factor order), embedded into the full product space.
Mat embed(const Mat& op, const std::vector<int>& pos, const std::vector<int>& dims) {
  std::size_t total = 1;
  for (int d : dims) total *= d;
  require(total <= 4096, "oracle evaluation space too large");
  std::size_t sub = 1;
  for (int p : pos) sub *= dims[p];
  require(static_cast<std::size_t>(op.rows()) == sub && op.rows() == op.cols(),
          "embedded operator dimension mismatch");

  const int F = static_cast<int>(dims.size());
  std::vector<int> digits(F);
  Mat out = Mat::Zero(total, total);
  for (std::size_t row = 0; row < total; ++row) {
    std::size_t rem = row;
    for (int f = F - 1; f >= 0; --f) {
      digits[f] = static_cast<int>(rem % dims[f]);
      rem /= dims[f];
    }
    std::size_t op_row = 0;
    for (int p : pos) op_row = op_row * dims[p] + digits[p];
    // Columns differ from `row` only on the embedded factors.
    for (std::size_t op_col = 0; op_col < sub; ++op_col) {
      std::size_t oc = op_col;
      std::vector<int> cd = digits;
      for (std::size_t k = pos.size(); k-- > 0;) {
        cd[pos[k]] = static_cast<int>(oc % dims[pos[k]]);
        oc /= dims[pos[k]];
      }
      std::size_t col = 0;
      for (int f = 0; f < F; ++f) col = col * dims[f] + cd[f];
      out(row, col) = op(op_row, op_col);
    }
  }
  return out;
}

struct LetterFactors {
  // one (source, copy, endpoint-position-in-source) per tuple component
  std::vector<std::array<int, 3>> factors;
};

LetterFactors letter_factors(const FiniteModel& m, const Alphabet& alph,
                             std::uint16_t id) {
  const Letter& l = alph.letter(id);
  const PartySpec& p = m.net.parties[l.party];
  LetterFactors lf;
  require(!alph.params().legacy_projective,
          "oracle evaluation uses Schmidt-factor alphabets");
  const SlotSpec& slot = p.slots[l.slot];
  for (std::size_t k = 0; k < slot.sources.size(); ++k) {
    int si = m.net.source_index(slot.sources[k]);
    const ModelSource& src = m.sources[si];
    int epos = -1;
    for (std::size_t e = 0; e < src.endpoints.size(); ++e)
      if (src.endpoints[e] == std::array<int, 3>{static_cast<int>(l.party),
                                                 static_cast<int>(l.slot),
                                                 static_cast<int>(k)})
        epos = static_cast<int>(e);
    require(epos >= 0, "model source " + src.id + " does not feed the letter's slot");
    lf.factors.push_back({si, l.copies.v[k], epos});
  }
  return lf;
}

}  // namespace

int FiniteModel::endpoint_dim(int source, int party, int slot, int pos) const {
  const ModelSource& s = sources[source];
  for (std::size_t e = 0; e < s.endpoints.size(); ++e)
    if (s.endpoints[e] == std::array<int, 3>{party, slot, pos})
      return s.dims[e];
  throw Error("no such endpoint");
}

cx eval_word(const FiniteModel& m, const Alphabet& alph, const Word& w) {
  if (w.empty()) return 1.0;

  // Union the (source, copy) units touched by the word into components.
  using Unit = std::pair<int, int>;
  std::map<Unit, int> unit_id;
  std::vector<Unit> units;
  std::vector<LetterFactors> lfs;
  for (auto id : w) {
    LetterFactors lf = letter_factors(m, alph, id);
    for (const auto& f : lf.factors) {
      Unit u{f[0], f[1]};
      if (!unit_id.count(u)) {
        unit_id[u] = static_cast<int>(units.size());
        units.push_back(u);
      }
    }
    lfs.push_back(std::move(lf));
  }
  std::vector<int> comp(units.size());
  for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (const auto& lf : lfs)
    for (std::size_t k = 1; k < lf.factors.size(); ++k) {
      int a = find(unit_id[{lf.factors[0][0], lf.factors[0][1]}]);
      int b = find(unit_id[{lf.factors[k][0], lf.factors[k][1]}]);
      comp[a] = b;
    }

  std::map<int, std::vector<int>> members;  // component root -> unit indices
  for (std::size_t i = 0; i < units.size(); ++i)
    members[find(static_cast<int>(i))].push_back(static_cast<int>(i));

  cx total = 1.0;
  for (const auto& [root, unit_list] : members) {
    // Factor layout: per unit, the source's endpoints in order.
    std::vector<int> dims;
    std::map<std::pair<int, int>, int> factor_base;  // (unit idx, epos) -> factor
    Mat state(1, 1);
    state(0, 0) = 1.0;
    for (int ui : unit_list) {
      const ModelSource& src = m.sources[units[ui].first];
      factor_base[{ui, 0}] = static_cast<int>(dims.size());
      for (std::size_t e = 0; e < src.dims.size(); ++e) dims.push_back(src.dims[e]);
      state = kron(state, src.state);
    }
    std::size_t D = 1;
    for (int d : dims) D *= d;
    require(D <= 512, "oracle component dimension exceeds the evaluation cap");

    Mat prod = Mat::Identity(D, D);
    for (std::size_t li = 0; li < w.size(); ++li) {
      const auto& lf = lfs[li];
      int u0 = find(unit_id[{lf.factors[0][0], lf.factors[0][1]}]);
      if (u0 != root) continue;
      std::vector<int> pos;
      for (const auto& f : lf.factors) {
        int ui = unit_id[{f[0], f[1]}];
        pos.push_back(factor_base[{ui, 0}] + f[2]);
      }
      const Letter& l = alph.letter(w[li]);
      OpKey key{l.party, l.slot, l.outcome, l.alpha, l.setting};
      auto it = m.ops.find(key);
      require(it != m.ops.end(), "model has no matrix for a word letter");
      Mat op = it->second;
      if (l.starred) op = op.adjoint().eval();
      prod = prod * embed(op, pos, dims);
    }
    total *= (state * prod).trace();
  }
  return total;
}

cx eval_poly(const FiniteModel& m, const Alphabet& alph, const Polynomial& p) {
  cx acc = 0.0;
  for (const auto& [w, c] : p) acc += c * eval_word(m, alph, w);
  return acc;
}

std::vector<cx> eval_moments(const FiniteModel& m, const Alphabet& alph,
                             const std::vector<Word>& words) {
  std::vector<cx> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(eval_word(m, alph, w));
  return out;
}

std::vector<cx> product_extension(const FiniteModel& m, const Alphabet& alph,
                                  const std::vector<Word>& words) {
  return eval_moments(m, alph, words);
}

// ------------------------------------------------------------ distributions

namespace {

int max_alpha(const FiniteModel& m) {
  int r = 1;
  for (const auto& [k, v] : m.ops) r = std::max(r, k.alpha);
  return r;
}

std::vector<InflationTuple> unit_copies(const PartySpec& p) {
  std::vector<InflationTuple> out;
  for (const auto& sl : p.slots) {
    InflationTuple t;
    t.arity = static_cast<std::uint8_t>(sl.sources.size());
    for (int k = 0; k < t.arity; ++k) t.v[k] = 1;
    out.push_back(t);
  }
  return out;
}

}  // namespace

DistributionTable model_distribution(const FiniteModel& m) {
  AlgebraParams ap;
  ap.n = 1;
  ap.r = max_alpha(m);
  Alphabet alph(m.net, ap);

  // Unique setting variables in first-appearance order.
  std::vector<std::string> setting_vars;
  std::vector<int> setting_cards;
  for (const auto& p : m.net.parties)
    for (std::size_t k = 0; k < p.setting_parents.size(); ++k)
      if (!std::count(setting_vars.begin(), setting_vars.end(),
                      p.setting_parents[k])) {
        setting_vars.push_back(p.setting_parents[k]);
        setting_cards.push_back(p.setting_cards[k]);
      }

  DistributionTable d;
  for (std::size_t i = 0; i < setting_vars.size(); ++i) {
    d.variables.push_back(setting_vars[i]);
    d.cardinalities.push_back(setting_cards[i]);
  }
  for (const auto& p : m.net.parties) {
    d.variables.push_back(p.id);
    d.cardinalities.push_back(p.outcomes);
  }
  std::size_t total = 1;
  for (int c : d.cardinalities) total *= c;
  d.table.assign(total, 0.0);

  double setting_weight = 1.0;
  for (int c : setting_cards) setting_weight *= c;
  setting_weight = 1.0 / setting_weight;

  std::vector<int> a(d.cardinalities.size(), 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t i = d.cardinalities.size(); i-- > 0;) {
      a[i] = static_cast<int>(rem % d.cardinalities[i]);
      rem /= d.cardinalities[i];
    }
    Polynomial prod;
    poly_add(prod, Word{}, 1.0);
    for (std::size_t pi = 0; pi < m.net.parties.size(); ++pi) {
      const PartySpec& p = m.net.parties[pi];
      int setting = 1, radix = 1;
      for (std::size_t k = p.setting_parents.size(); k-- > 0;) {
        for (std::size_t sv = 0; sv < setting_vars.size(); ++sv)
          if (setting_vars[sv] == p.setting_parents[k])
            setting += a[sv] * radix;
        radix *= p.setting_cards[k];
      }
      int outcome = a[setting_vars.size() + pi] + 1;
      prod = alph.multiply(
          prod, alph.povm_element(static_cast<int>(pi), outcome, unit_copies(p),
                                  setting));
    }
    d.table[idx] = std::real(eval_poly(m, alph, prod)) * setting_weight;
  }
  return d;
}

void validate_model(const FiniteModel& m, double tol) {
  m.net.validate();
  require(m.sources.size() == m.net.sources.size(),
          "model sources do not match the scenario");
  std::size_t total_dim = 1;
  for (const auto& s : m.sources) {
    std::size_t d = 1;
    for (int x : s.dims) d *= x;
    require(static_cast<std::size_t>(s.state.rows()) == d &&
                static_cast<std::size_t>(s.state.cols()) == d,
            "state dimension mismatch for source " + s.id);
    require(std::abs(s.state.trace() - cx(1.0)) <= tol,
            "state of source " + s.id + " is not normalized");
    require(min_eig_herm(s.state) >= -tol,
            "state of source " + s.id + " is not PSD");
    total_dim *= d;
  }
  require(total_dim <= 256, "model dimension exceeds the oracle cap of 256");

  AlgebraParams ap;
  ap.n = 1;
  ap.r = max_alpha(m);
  Alphabet alph(m.net, ap);

  for (const auto& [key, op] : m.ops)
    require(op_norm(op) <= m.norm_bound + 1e-12,
            "generator matrix exceeds the recorded norm bound");

  // POVM positivity and completion on the full single-copy space.
  std::vector<int> dims;
  std::map<std::pair<int, int>, int> base;  // (source, epos)->factor index
  Mat state(1, 1);
  state(0, 0) = 1.0;
  for (std::size_t si = 0; si < m.sources.size(); ++si) {
    base[{static_cast<int>(si), 0}] = static_cast<int>(dims.size());
    for (int dx : m.sources[si].dims) dims.push_back(dx);
    state = kron(state, m.sources[si].state);
  }
  auto word_matrix = [&](const Word& w) {
    std::size_t D = 1;
    for (int d : dims) D *= d;
    Mat prod = Mat::Identity(D, D);
    for (auto id : w) {
      LetterFactors lf = letter_factors(m, alph, id);
      std::vector<int> pos;
      for (const auto& f : lf.factors) pos.push_back(base.at({f[0], 0}) + f[2]);
      const Letter& l = alph.letter(id);
      prod = prod * embed(m.ops.at({l.party, l.slot, l.outcome, l.alpha, l.setting}),
                          pos, dims);
    }
    return prod;
  };
  auto poly_matrix = [&](const Polynomial& p) {
    std::size_t D = 1;
    for (int d : dims) D *= d;
    Mat acc = Mat::Zero(D, D);
    for (const auto& [w, c] : p) acc += c * word_matrix(w);
    return acc;
  };
  for (std::size_t pi = 0; pi < m.net.parties.size(); ++pi) {
    const PartySpec& p = m.net.parties[pi];
    for (int x = 1; x <= p.settings(); ++x) {
      std::size_t D = 1;
      for (int d : dims) D *= d;
      Mat sum = Mat::Zero(D, D);
      for (int a = 1; a <= p.outcomes; ++a) {
        Mat e = poly_matrix(
            alph.povm_element(static_cast<int>(pi), a, unit_copies(p), x));
        require(min_eig_herm(e) >= -tol, "POVM element not PSD in model");
        sum += e;
      }
      require((sum - Mat::Identity(D, D)).norm() <= tol,
              "POVM does not sum to identity in model");
    }
  }
}

// -------------------------------------------------------------- sampling

std::pair<FiniteModel, DistributionTable> sample_model(const NetworkScenario& net,
                                                       const std::vector<int>& dims,
                                                       int r, std::uint64_t seed) {
  net.validate();
  require(r >= 1, "Schmidt rank r must be >= 1");
  require(dims.size() == net.sources.size(),
          "one local dimension per source expected");
  for (const auto& p : net.parties)
    for (const auto& sl : p.slots)
      require(sl.sources.size() == 1,
              "sample_model supports plain network scenarios only");

  Rng rng(seed);
  FiniteModel m;
  m.net = net;
  m.seed = seed;

  for (std::size_t si = 0; si < net.sources.size(); ++si) {
    ModelSource src;
    src.id = net.sources[si];
    for (std::size_t pi = 0; pi < net.parties.size(); ++pi) {
      const PartySpec& p = net.parties[pi];
      for (std::size_t sl = 0; sl < p.slots.size(); ++sl)
        if (p.slots[sl].sources[0] == src.id) {
          src.endpoints.push_back({static_cast<int>(pi), static_cast<int>(sl), 0});
          src.dims.push_back(dims[si]);
        }
    }
    require(!src.endpoints.empty(), "source " + src.id + " feeds no party");
    std::size_t D = 1;
    for (int d : src.dims) D *= d;
    Mat g(D, D);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.cgaussian();
    Mat rho = g * g.adjoint();
    src.state = rho / rho.trace();
    m.sources.push_back(std::move(src));
  }

  double recorded_c = 0.0;
  for (std::size_t pi = 0; pi < net.parties.size(); ++pi) {
    const PartySpec& p = net.parties[pi];
    const int S = static_cast<int>(p.slots.size());
    for (int x = 1; x <= p.settings(); ++x) {
      // Draw PSD factors, then scale so the partial sums stay below identity.
      std::map<OpKey, Mat> draft;
      std::size_t D = 1;
      std::vector<int> sdim(S);
      for (int k = 0; k < S; ++k) {
        int si = net.source_index(p.slots[k].sources[0]);
        sdim[k] = dims[si];
        D *= dims[si];
      }
      Mat sum = Mat::Zero(D, D);
      for (int a = 1; a < p.outcomes; ++a)
        for (int al = 1; al <= r; ++al) {
          Mat term(1, 1);
          term(0, 0) = 1.0;
          for (int k = 0; k < S; ++k) {
            Mat b(sdim[k], sdim[k]);
            for (Eigen::Index i = 0; i < b.rows(); ++i)
              for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = rng.cgaussian();
            Mat f = b * b.adjoint();
            f /= f.trace().real();  // keep factors comparable before scaling
            draft[{static_cast<int>(pi), k, a, al, x}] = f;
            term = kron(term, f);
          }
          sum += term;
        }
      double lam = op_norm(sum);
      double t = std::pow(0.9 / lam, 1.0 / S);
      for (auto& [key, f] : draft) {
        f *= t;
        recorded_c = std::max(recorded_c, op_norm(f));
        m.ops[key] = f;
      }
    }
  }
  m.norm_bound = recorded_c;
  validate_model(m, 1e-9);
  return {m, model_distribution(m)};
}

// ------------------------------------------------------------- magic basis

namespace {

Mat pauli(int k) {
  Mat m(2, 2);
  switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;                    // X
    case 2: m << 1, 0, 0, -1; break;                   // Z
    default: m << 0, cx(0, -1), cx(0, 1), 0; break;    // Y
  }
  return m;
}

// Signs of (I, XX, ZZ, YY) in the Pauli expansion of the four projectors.
constexpr int kMagicSigns[4][4] = {
    {1, 1, 1, -1}, {1, 1, -1, 1}, {1, -1, 1, 1}, {1, -1, -1, -1}};

}  // namespace

FiniteModel magic_basis_model(int n_copies) {
  require(n_copies >= 1, "n_copies must be >= 1");
  NetworkScenario net;
  net.sources = {"Lm", "Lp"};
  PartySpec p;
  p.id = "A";
  p.outcomes = 4;
  p.slots = {{{"Lm"}, -1}, {{"Lp"}, -1}};
  net.parties = {p};

  FiniteModel m;
  m.net = net;
  m.seed = 0;
  m.norm_bound = 0.5;
  for (const auto& sid : net.sources) {
    ModelSource src;
    src.id = sid;
    src.endpoints = {{0, sid == "Lm" ? 0 : 1, 0}};
    src.dims = {2};
    src.state = Mat::Identity(2, 2) / 2.0;
    m.sources.push_back(src);
  }
  for (int a = 1; a <= 3; ++a)
    for (int al = 1; al <= 4; ++al) {
      double sign = kMagicSigns[a - 1][al - 1];
      m.ops[{0, 0, a, al, 1}] = sign * pauli(al - 1) / 2.0;
      m.ops[{0, 1, a, al, 1}] = pauli(al - 1) / 2.0;
    }
  (void)n_copies;  // copies enter through the evaluating alphabet
  return m;
}

namespace {

Mat pauli_at(int n_copies, int factor, int k) {
  Mat out(1, 1);
  out(0, 0) = 1.0;
  for (int f = 0; f < 2 * n_copies; ++f)
    out = kron(out, f == factor ? pauli(k) : Mat::Identity(2, 2));
  return out;
}

}  // namespace

Mat magic_povm_matrix(int n_copies, int i, int j, int a) {
  require(i >= 1 && i <= n_copies && j >= 1 && j <= n_copies, "copy out of range");
  require(a >= 1 && a <= 4, "outcome out of range");
  const int fm = i - 1, fp = n_copies + j - 1;
  const std::size_t D = std::size_t(1) << (2 * n_copies);
  Mat e = Mat::Identity(D, D);
  Mat acc = kMagicSigns[a - 1][0] * e;
  for (int k = 1; k <= 3; ++k)
    acc += kMagicSigns[a - 1][k] * (pauli_at(n_copies, fm, k) * pauli_at(n_copies, fp, k));
  return acc / 4.0;
}

Mat magic_xbar(int n_copies) {
  const std::size_t D = std::size_t(1) << (2 * n_copies);
  Mat acc = Mat::Identity(D, D);
  for (int f = 0; f < 2 * n_copies; ++f) acc = acc * pauli_at(n_copies, f, 1);
  return acc;
}

Mat magic_zbar(int n_copies) {
  const std::size_t D = std::size_t(1) << (2 * n_copies);
  Mat acc = Mat::Identity(D, D);
  for (int f = 0; f < 2 * n_copies; ++f) acc = acc * pauli_at(n_copies, f, 2);
  return acc;
}

// --------------------------------------------------- operator Schmidt / SVD

SchmidtDecomposition operator_schmidt(const Mat& E, int dim_a, int dim_b) {
  require(E.rows() == dim_a * dim_b && E.cols() == dim_a * dim_b,
          "operator dimension does not match the bipartition");
  Mat r(dim_a * dim_a, dim_b * dim_b);
  for (int a = 0; a < dim_a; ++a)
    for (int a2 = 0; a2 < dim_a; ++a2)
      for (int b = 0; b < dim_b; ++b)
        for (int b2 = 0; b2 < dim_b; ++b2)
          r(a * dim_a + a2, b * dim_b + b2) = E(a * dim_b + b, a2 * dim_b + b2);
  Eigen::JacobiSVD<Mat> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtDecomposition out;
  const auto& sv = svd.singularValues();
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    out.values.push_back(sv(k));
    Mat l(dim_a, dim_a), rt(dim_b, dim_b);
    for (int a = 0; a < dim_a; ++a)
      for (int a2 = 0; a2 < dim_a; ++a2) l(a, a2) = svd.matrixU()(a * dim_a + a2, k);
    for (int b = 0; b < dim_b; ++b)
      for (int b2 = 0; b2 < dim_b; ++b2)
        rt(b, b2) = std::conj(svd.matrixV()(b * dim_b + b2, k));
    out.left.push_back(l);
    out.right.push_back(rt);
  }
  return out;
}

std::vector<Mat> schmidt_truncate(const std::vector<Mat>& povm, int dim_a,
                                  int dim_b, int r, double delta) {
  require(r >= 1, "rank r must be >= 1");
  require(delta >= 0, "delta must be nonnegative");
  const int M = static_cast<int>(povm.size());
  require(M >= 2, "POVM needs at least two elements");
  const std::size_t D = static_cast<std::size_t>(dim_a) * dim_b;
  for (const auto& e : povm)
    require(static_cast<std::size_t>(e.rows()) == D &&
                static_cast<std::size_t>(e.cols()) == D,
            "POVM element dimension mismatch");

  std::vector<Mat> out;
  Mat partial = Mat::Zero(D, D);
  for (int a = 0; a < M - 1; ++a) {
    SchmidtDecomposition dec = operator_schmidt(povm[a], dim_a, dim_b);
    Mat er = Mat::Zero(D, D);
    for (int k = 0; k < std::min<int>(r, static_cast<int>(dec.values.size())); ++k)
      er += dec.values[k] * kron(dec.left[k], dec.right[k]);
    er = ((er + er.adjoint()) / 2.0).eval();  // keep the cut Hermitian
    double err = op_norm(er - povm[a]);
    require(err <= delta + 1e-12,
            "operator-Schmidt truncation error " + std::to_string(err) +
                " exceeds delta; increase delta or the rank");
    Mat scaled = (delta * Mat::Identity(D, D) + er) / (1.0 + 2.0 * M * delta);
    out.push_back(scaled);
    partial += scaled;
  }
  out.push_back(Mat::Identity(D, D) - partial);
  return out;
}

// ----------------------------------------------------------------- JSON

namespace {

json mat_to_json(const Mat& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index jx = 0; jx < m.cols(); ++jx)
      data.push_back({m(i, jx).real(), m(i, jx).imag()});
  j["data"] = data;
  return j;
}

Mat mat_from_json(const json& j) {
  Mat m(j["rows"].get<int>(), j["cols"].get<int>());
  const auto& data = j["data"];
  require(static_cast<Eigen::Index>(data.size()) == m.rows() * m.cols(),
          "matrix data length mismatch");
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index jx = 0; jx < m.cols(); ++jx) {
      m(i, jx) = cx(data[idx][0].get<double>(), data[idx][1].get<double>());
      ++idx;
    }
  return m;
}

json network_to_json_obj(const NetworkScenario& net) {
  json j;
  j["sources"] = net.sources;
  j["parties"] = json::array();
  for (const auto& p : net.parties) {
    json pj;
    pj["id"] = p.id;
    pj["outcomes"] = p.outcomes;
    pj["settingParents"] = p.setting_parents;
    pj["settingCards"] = p.setting_cards;
    pj["slots"] = json::array();
    for (const auto& sl : p.slots) {
      json sj;
      sj["sources"] = sl.sources;
      sj["group"] = sl.group;
      pj["slots"].push_back(sj);
    }
    j["parties"].push_back(pj);
  }
  j["groups"] = json::array();
  for (const auto& g : net.groups) {
    json gj;
    gj["members"] = g.members;
    gj["settings"] = g.settings;
    gj["sources"] = g.sources;
    j["groups"].push_back(gj);
  }
  return j;
}

NetworkScenario network_from_json_obj(const json& j) {
  NetworkScenario net;
  for (const auto& s : j["sources"]) net.sources.push_back(s.get<std::string>());
  for (const auto& pj : j["parties"]) {
    PartySpec p;
    p.id = pj["id"].get<std::string>();
    p.outcomes = pj["outcomes"].get<int>();
    for (const auto& s : pj["settingParents"]) p.setting_parents.push_back(s);
    for (const auto& s : pj["settingCards"]) p.setting_cards.push_back(s);
    for (const auto& sj : pj["slots"]) {
      SlotSpec sl;
      for (const auto& s : sj["sources"]) sl.sources.push_back(s);
      sl.group = sj["group"].get<int>();
      p.slots.push_back(sl);
    }
    net.parties.push_back(p);
  }
  for (const auto& gj : j["groups"]) {
    EndogenousGroup g;
    for (const auto& s : gj["members"]) g.members.push_back(s);
    for (const auto& s : gj["settings"]) g.settings.push_back(s);
    for (const auto& s : gj["sources"]) g.sources.push_back(s);
    net.groups.push_back(g);
  }
  net.validate();
  return net;
}

}  // namespace

std::string network_to_json(const NetworkScenario& net) {
  return network_to_json_obj(net).dump(2) + "\n";
}

NetworkScenario network_from_json(const std::string& text) {
  return network_from_json_obj(json::parse(text));
}

std::string model_to_json(const FiniteModel& m) {
  json j;
  j["scenario"] = network_to_json_obj(m.net);
  j["seed"] = m.seed;
  j["normBound"] = m.norm_bound;
  j["sources"] = json::array();
  for (const auto& s : m.sources) {
    json sj;
    sj["id"] = s.id;
    sj["endpoints"] = json::array();
    for (const auto& e : s.endpoints) sj["endpoints"].push_back({e[0], e[1], e[2]});
    sj["dims"] = s.dims;
    sj["state"] = mat_to_json(s.state);
    j["sources"].push_back(sj);
  }
  j["ops"] = json::array();
  for (const auto& [k, op] : m.ops) {
    json oj;
    oj["party"] = k.party;
    oj["slot"] = k.slot;
    oj["outcome"] = k.outcome;
    oj["alpha"] = k.alpha;
    oj["setting"] = k.setting;
    oj["matrix"] = mat_to_json(op);
    j["ops"].push_back(oj);
  }
  return j.dump(2) + "\n";
}

FiniteModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("model syntax error: ") + e.what());
  }
  FiniteModel m;
  m.net = network_from_json_obj(j["scenario"]);
  m.seed = j.value("seed", 0ull);
  m.norm_bound = j.value("normBound", 1.0);
  for (const auto& sj : j["sources"]) {
    ModelSource s;
    s.id = sj["id"].get<std::string>();
    for (const auto& e : sj["endpoints"])
      s.endpoints.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>()});
    for (const auto& d : sj["dims"]) s.dims.push_back(d.get<int>());
    s.state = mat_from_json(sj["state"]);
    m.sources.push_back(s);
  }
  for (const auto& oj : j["ops"]) {
    OpKey k{oj["party"].get<int>(), oj["slot"].get<int>(), oj["outcome"].get<int>(),
            oj["alpha"].get<int>(), oj["setting"].get<int>()};
    m.ops[k] = mat_from_json(oj["matrix"]);
  }
  return m;
}

}  // namespace qinf
