#include "qinf/sdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qinf {

void SdpProblem::validate() const {
  require(num_vars >= 0, "negative variable count");
  require(static_cast<int>(objective.size()) == num_vars, "objective length mismatch");
  for (const auto& b : blocks) {
    require(b.dim >= 1, "block dimension must be >= 1");
    for (const auto& e : b.entries) {
      require(e.var >= -1 && e.var < num_vars, "entry variable out of range");
      require(e.row >= 0 && e.col >= 0 && e.row <= e.col && e.col < b.dim,
              "entry position out of range");
    }
  }
  for (const auto& row : equalities)
    for (const auto& [v, c] : row.coeffs)
      require(v >= 0 && v < num_vars, "equality variable out of range");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::Timeout: return "timeout";
  }
  return "?";
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::Rejected: return "rejected";
    case Decision::NotRejected: return "notRejected";
    case Decision::Inconclusive: return "inconclusive";
  }
  return "?";
}

// ------------------------------------------------------------------ assemble

namespace {

bool expr_is_real(const EntryExpr& e) {
  if (std::abs(e.constant.imag()) > 0) return false;
  for (const auto& [slot, c] : e.terms)
    if (std::abs(c.imag()) > 0) return false;
  return true;
}

bool spec_is_real(const std::vector<EntryExpr>& upper) {
  for (const auto& e : upper)
    if (!expr_is_real(e)) return false;
  return true;
}

}  // namespace

CompiledProblem assemble(const MomentAssembly& asmb, const MomentMatrixSpec& gamma,
                         const std::vector<LocalizingSpec>& localizing,
                         const ProbabilityBundle& bundle) {
  CompiledProblem cp;

  // Variable layout: every slot becomes one SDP variable (slot 0 included,
  // pinned by the rho(1) = 1 equality), plus the epigraph variable.
  const int slots = asmb.slot_count();
  cp.slot_to_var.resize(slots);
  for (int s = 0; s < slots; ++s) cp.slot_to_var[s] = s;
  int num_vars = slots;
  if (bundle.epigraph) cp.epigraph_var = num_vars++;
  cp.sdp.num_vars = num_vars;
  cp.sdp.objective.assign(num_vars, 0.0);

  bool complex_problem = false;
  if (!spec_is_real(gamma.upper)) complex_problem = true;
  for (const auto& l : localizing)
    if (!l.deferred && !spec_is_real(l.upper)) complex_problem = true;
  cp.realified = complex_problem;

  auto add_hermitian_block = [&](const std::string& name, int dim,
                                 const std::vector<EntryExpr>& upper) {
    SdpBlock block;
    block.name = name;
    const bool real = !complex_problem || spec_is_real(upper);
    block.dim = real ? dim : 2 * dim;
    auto push = [&](int var, int r, int c, double v) {
      if (v == 0.0) return;
      if (r > c) std::swap(r, c);
      block.entries.push_back({var, r, c, v});
    };
    std::size_t idx = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j, ++idx) {
        const EntryExpr& e = upper[idx];
        if (i == j)
          require(std::abs(e.constant.imag()) <= 1e-12,
                  "diagonal moment entry must be real");
        // constant part
        push(-1, i, j, e.constant.real());
        if (!real) {
          push(-1, i + dim, j + dim, e.constant.real());
          if (i != j) {
            push(-1, i, j + dim, -e.constant.imag());
            push(-1, j, i + dim, e.constant.imag());
          }
        }
        for (const auto& [slot, c] : e.terms) {
          int var = cp.slot_to_var[slot];
          push(var, i, j, c.real());
          if (!real) {
            push(var, i + dim, j + dim, c.real());
            if (i != j) {
              push(var, i, j + dim, -c.imag());
              push(var, j, i + dim, c.imag());
            } else {
              require(std::abs(c.imag()) <= 1e-12,
                      "diagonal moment entry must be real");
            }
          }
        }
      }
    cp.block_names.push_back(name);
    cp.block_dims.push_back(block.dim);
    cp.sdp.blocks.push_back(std::move(block));
  };

  add_hermitian_block("moment", gamma.dim, gamma.upper);
  int li = 0;
  for (const auto& l : localizing) {
    ++li;
    if (l.deferred) continue;
    add_hermitian_block("localizing_" + std::to_string(li), l.dim, l.upper);
  }

  if (bundle.epigraph) {
    // [[I, m - p], [(m - p)^T, t]] encodes sum (m - p)^2 <= t.
    const int nd = static_cast<int>(bundle.deviations.size());
    SdpBlock block;
    block.name = "epigraph";
    block.dim = nd + 1;
    for (int k = 0; k < nd; ++k) {
      block.entries.push_back({-1, k, k, 1.0});
      const EntryExpr& e = bundle.deviations[k];
      require(expr_is_real(e), "epigraph deviation must be real");
      if (e.constant.real() != 0.0)
        block.entries.push_back({-1, k, nd, e.constant.real()});
      for (const auto& [slot, c] : e.terms)
        block.entries.push_back({cp.slot_to_var[slot], k, nd, c.real()});
    }
    block.entries.push_back({cp.epigraph_var, nd, nd, 1.0});
    cp.block_names.push_back(block.name);
    cp.block_dims.push_back(block.dim);
    cp.sdp.blocks.push_back(std::move(block));
    cp.sdp.objective[cp.epigraph_var] = 1.0;
  } else if (!bundle.objective.terms.empty() ||
             std::abs(bundle.objective.constant) > 0) {
    require(expr_is_real(bundle.objective), "objective must be real");
    cp.sdp.objective_offset = bundle.objective.constant.real();
    for (const auto& [slot, c] : bundle.objective.terms)
      cp.sdp.objective[cp.slot_to_var[slot]] += c.real();
  }

  // rho(identity) = 1.
  cp.sdp.equalities.push_back({{{cp.slot_to_var[asmb.identity_slot()], 1.0}}, 1.0});
  for (const auto& [expr, rhs] : bundle.equalities) {
    LinearRow row_re{{}, rhs - expr.constant.real()};
    LinearRow row_im{{}, -expr.constant.imag()};
    for (const auto& [slot, c] : expr.terms) {
      if (c.real() != 0.0) row_re.coeffs.push_back({cp.slot_to_var[slot], c.real()});
      if (c.imag() != 0.0) row_im.coeffs.push_back({cp.slot_to_var[slot], c.imag()});
    }
    cp.sdp.equalities.push_back(row_re);
    if (!row_im.coeffs.empty() || std::abs(row_im.rhs) > 0)
      cp.sdp.equalities.push_back(row_im);
  }

  cp.sdp.validate();
  return cp;
}

FeasibilityCheck check_assignment(const CompiledProblem& cp,
                                  const std::vector<double>& slot_values,
                                  double epigraph_value) {
  std::vector<double> y(cp.sdp.num_vars, 0.0);
  for (std::size_t s = 0; s < cp.slot_to_var.size(); ++s)
    y[cp.slot_to_var[s]] = slot_values[s];
  if (cp.epigraph_var >= 0) y[cp.epigraph_var] = epigraph_value;

  FeasibilityCheck out;
  out.min_block_eigenvalue = 1e300;
  for (const auto& row : cp.sdp.equalities) {
    double v = -row.rhs;
    for (const auto& [var, c] : row.coeffs) v += c * y[var];
    out.max_equality_violation = std::max(out.max_equality_violation, std::abs(v));
  }
  for (const auto& b : cp.sdp.blocks) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(b.dim, b.dim);
    for (const auto& e : b.entries) {
      double v = (e.var < 0 ? 1.0 : y[e.var]) * e.value;
      m(e.row, e.col) += v;
      if (e.row != e.col) m(e.col, e.row) += v;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    out.min_block_eigenvalue =
        std::min(out.min_block_eigenvalue, es.eigenvalues().minCoeff());
  }
  out.objective_value = cp.sdp.objective_offset;
  for (int v = 0; v < cp.sdp.num_vars; ++v)
    out.objective_value += cp.sdp.objective[v] * y[v];
  return out;
}

// ----------------------------------------------------------------- SDPA I/O

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string export_sdpa(const SdpProblem& p) {
  p.validate();
  std::ostringstream out;
  const int eq = static_cast<int>(p.equalities.size());
  const int nblocks = static_cast<int>(p.blocks.size()) + (eq > 0 ? 1 : 0);
  out << p.num_vars << "\n" << nblocks << "\n";
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    out << (b ? " " : "") << p.blocks[b].dim;
  if (eq > 0) out << (p.blocks.empty() ? "" : " ") << -2 * eq;
  out << "\n";
  for (int v = 0; v < p.num_vars; ++v) out << (v ? " " : "") << fmt(p.objective[v]);
  out << "\n";

  // Entries: "var block i j value", var 0 is the constant matrix F0 with
  // S(y) = sum y_i F_i - F0, so F0 = -C.
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    for (const auto& e : p.blocks[b].entries) {
      int var = e.var + 1;
      double val = e.var < 0 ? -e.value : e.value;
      if (val == 0.0) continue;
      out << var << " " << b + 1 << " " << e.row + 1 << " " << e.col + 1 << " "
          << fmt(val) << "\n";
    }
  // Equality k as the +/- pair (2k-1, 2k) of the trailing diagonal block.
  const int eq_block = static_cast<int>(p.blocks.size()) + 1;
  for (int k = 0; k < eq; ++k) {
    const LinearRow& row = p.equalities[k];
    for (const auto& [v, c] : row.coeffs) {
      out << v + 1 << " " << eq_block << " " << 2 * k + 1 << " " << 2 * k + 1 << " "
          << fmt(c) << "\n";
      out << v + 1 << " " << eq_block << " " << 2 * k + 2 << " " << 2 * k + 2 << " "
          << fmt(-c) << "\n";
    }
    if (row.rhs != 0.0) {
      out << 0 << " " << eq_block << " " << 2 * k + 1 << " " << 2 * k + 1 << " "
          << fmt(row.rhs) << "\n";
      out << 0 << " " << eq_block << " " << 2 * k + 2 << " " << 2 * k + 2 << " "
          << fmt(-row.rhs) << "\n";
    }
  }
  return out.str();
}

SdpProblem import_sdpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_data_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      std::size_t pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      if (line[pos] == '*' || line[pos] == '"') continue;
      return line.substr(pos);
    }
    throw Error("SDPA document truncated");
  };
  SdpProblem p;
  p.num_vars = std::stoi(next_data_line());
  int nblocks = std::stoi(next_data_line());
  std::vector<int> sizes;
  {
    std::istringstream ls(next_data_line());
    for (int b = 0; b < nblocks; ++b) {
      std::string tok;
      require(static_cast<bool>(ls >> tok), "missing block size");
      // Some writers use {..} or comma separators; strip them.
      std::string clean;
      for (char c : tok)
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) clean += c;
      sizes.push_back(std::stoi(clean));
    }
  }
  {
    std::istringstream ls(next_data_line());
    p.objective.assign(p.num_vars, 0.0);
    for (int v = 0; v < p.num_vars; ++v)
      require(static_cast<bool>(ls >> p.objective[v]), "missing objective entry");
  }

  bool has_eq_block = !sizes.empty() && sizes.back() < 0 && (-sizes.back()) % 2 == 0;
  int psd_blocks = nblocks - (has_eq_block ? 1 : 0);
  for (int b = 0; b < psd_blocks; ++b) {
    require(sizes[b] > 0, "unexpected diagonal block");
    SdpBlock block;
    block.dim = sizes[b];
    block.name = "block_" + std::to_string(b + 1);
    p.blocks.push_back(block);
  }
  if (has_eq_block) p.equalities.assign(-sizes.back() / 2, LinearRow{});

  int var, blk, i, j;
  double val;
  while (in >> var >> blk >> i >> j >> val) {
    require(blk >= 1 && blk <= nblocks, "entry block out of range");
    if (has_eq_block && blk == nblocks) {
      require(i == j, "equality block entry must be diagonal");
      int k = (i - 1) / 2;
      bool positive = ((i - 1) % 2) == 0;
      if (!positive) continue;  // the mirrored row carries no new data
      if (var == 0)
        p.equalities[k].rhs = val;
      else
        p.equalities[k].coeffs.push_back({var - 1, val});
    } else {
      double v = var == 0 ? -val : val;
      int r = i - 1, c = j - 1;
      if (r > c) std::swap(r, c);
      p.blocks[blk - 1].entries.push_back({var - 1, r, c, v});
    }
  }
  p.validate();
  return p;
}

Decision certify(const SolveResult& result, double epsilon, double tol) {
  switch (result.status) {
    case SolveStatus::Infeasible:
      return Decision::Rejected;
    case SolveStatus::Optimal:
      return result.value > epsilon + 10 * tol ? Decision::Rejected
                                               : Decision::NotRejected;
    case SolveStatus::Unbounded:
      // Objective can be driven below any epsilon.
      return Decision::NotRejected;
    case SolveStatus::Inaccurate:
    case SolveStatus::Timeout:
      return Decision::Inconclusive;
  }
  return Decision::Inconclusive;
}

}  // namespace qinf
