#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "qinf/kernels.hpp"
#include "qinf/sdp.hpp"

// Primal-dual interior-point method with Nesterov-Todd scaling for the
// block-diagonal LMI form
//     min c.y   s.t.  X_b = C_b + sum_i y_i A_{b,i} >= 0,   E y = d.
// Infeasible start, Mehrotra-style adaptive centering, Schur complement
// assembled from the sparse coefficient sites through the SIMD kernels.

namespace qinf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BlockData {
  int dim = 0;
  std::vector<std::int32_t> row, col;  // variable entries, sorted by var
  std::vector<int> var;
  std::vector<double> coef;         // plain symmetric value
  std::vector<double> coef_scaled;  // *sqrt2 off-diag, /sqrt2 diag (H kernel)
  std::vector<BlockEntry> constant;
  MatrixXd cmat;
};

MatrixXd block_matrix(const BlockData& b, const VectorXd& y) {
  MatrixXd m = b.cmat;
  for (std::size_t e = 0; e < b.var.size(); ++e) {
    double v = y[b.var[e]] * b.coef[e];
    m(b.row[e], b.col[e]) += v;
    if (b.row[e] != b.col[e]) m(b.col[e], b.row[e]) += v;
  }
  return m;
}

// out[i] += tr(A_i M) over this block's entries
void accumulate_adjoint(const BlockData& b, const MatrixXd& m, VectorXd& out) {
  for (std::size_t e = 0; e < b.var.size(); ++e) {
    double t = m(b.row[e], b.col[e]) * b.coef[e];
    out[b.var[e]] += b.row[e] == b.col[e] ? t : 2.0 * t;
  }
}

double trace_const(const BlockData& b, const MatrixXd& m) {
  double acc = 0;
  for (const auto& e : b.constant) {
    double t = m(e.row, e.col) * e.value;
    acc += e.row == e.col ? t : 2.0 * t;
  }
  return acc;
}

// Largest alpha with M + alpha dM >= 0 (via LL^T of M).
double max_step(const MatrixXd& m, const MatrixXd& dm) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd l = llt.matrixL();
  MatrixXd b = l.triangularView<Eigen::Lower>().solve(dm);
  b = l.triangularView<Eigen::Lower>().solve(b.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es((b + b.transpose()) / 2.0,
                                             Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-16) return 1e30;
  return -1.0 / lmin;
}

struct Presolve {
  std::vector<LinearRow> rows;  // independent subset
  bool infeasible = false;
};

Presolve reduce_equalities(const SdpProblem& p) {
  Presolve out;
  const int m = p.num_vars;
  std::vector<VectorXd> basis;  // eliminated pivot rows
  std::vector<int> pivots;
  for (const auto& row : p.equalities) {
    VectorXd v = VectorXd::Zero(m + 1);
    for (const auto& [var, c] : row.coeffs) v[var] += c;
    v[m] = row.rhs;
    double scale = std::max(1.0, v.head(m).cwiseAbs().maxCoeff());
    for (std::size_t k = 0; k < basis.size(); ++k) {
      double f = v[pivots[k]] / basis[k][pivots[k]];
      if (f != 0.0) v -= f * basis[k];
    }
    int piv = -1;
    double best = 1e-12 * scale;
    for (int i = 0; i < m; ++i)
      if (std::abs(v[i]) > best) {
        best = std::abs(v[i]);
        piv = i;
      }
    if (piv < 0) {
      if (std::abs(v[m]) > 1e-9) out.infeasible = true;
      continue;  // dependent row
    }
    basis.push_back(v);
    pivots.push_back(piv);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace

SolveResult solve(const SdpProblem& p, const SolverOptions& opts) {
  p.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
        .count();
  };

  SolveResult res;
  const int m = p.num_vars;
  if (m > opts.max_variables) {
    res.status = SolveStatus::Timeout;
    res.note = "problem exceeds the configured variable limit (" +
               std::to_string(m) + " > " + std::to_string(opts.max_variables) + ")";
    return res;
  }

  Presolve pre = reduce_equalities(p);
  if (pre.infeasible) {
    res.status = SolveStatus::Infeasible;
    res.note = "inconsistent linear equalities";
    return res;
  }
  const int q = static_cast<int>(pre.rows.size());

  // Flatten blocks.
  std::vector<BlockData> blocks;
  double cmax = 1.0;
  int total_dim = 0;
  for (const auto& sb : p.blocks) {
    BlockData b;
    b.dim = sb.dim;
    total_dim += sb.dim;
    b.cmat = MatrixXd::Zero(sb.dim, sb.dim);
    std::vector<BlockEntry> var_entries;
    for (const auto& e : sb.entries) {
      if (e.var < 0) {
        b.cmat(e.row, e.col) += e.value;
        if (e.row != e.col) b.cmat(e.col, e.row) += e.value;
        b.constant.push_back(e);
        cmax = std::max(cmax, std::abs(e.value));
      } else {
        var_entries.push_back(e);
      }
    }
    std::stable_sort(var_entries.begin(), var_entries.end(),
                     [](const BlockEntry& a, const BlockEntry& bb) {
                       return a.var < bb.var;
                     });
    const double sqrt2 = std::sqrt(2.0);
    for (const auto& e : var_entries) {
      b.row.push_back(e.row);
      b.col.push_back(e.col);
      b.var.push_back(e.var);
      b.coef.push_back(e.value);
      b.coef_scaled.push_back(e.row == e.col ? e.value / sqrt2 : e.value * sqrt2);
    }
    blocks.push_back(std::move(b));
  }

  VectorXd c = VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) c[i] = p.objective[i];
  MatrixXd emat = MatrixXd::Zero(q, m);
  VectorXd d = VectorXd::Zero(q);
  for (int k = 0; k < q; ++k) {
    for (const auto& [var, cf] : pre.rows[k].coeffs) emat(k, var) += cf;
    d[k] = pre.rows[k].rhs;
  }

  // Iterates.
  VectorXd y = VectorXd::Zero(m), w = VectorXd::Zero(q);
  std::vector<MatrixXd> X, Z;
  const double init_scale = 1.0 + cmax;
  for (const auto& b : blocks) {
    X.push_back(MatrixXd::Identity(b.dim, b.dim) * init_scale);
    Z.push_back(MatrixXd::Identity(b.dim, b.dim) * init_scale);
  }

  const double cnorm = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double dnorm = std::max(1.0, q ? d.cwiseAbs().maxCoeff() : 0.0);

  MatrixXd h(m, m);
  std::vector<double> scratch;
  std::vector<MatrixXd> V(blocks.size()), W(blocks.size());
  double best_value = 0;
  int stall = 0;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (elapsed() > opts.time_limit_seconds) {
      res.status = SolveStatus::Timeout;
      break;
    }

    // Residuals.
    std::vector<MatrixXd> rp(blocks.size());
    double pinf = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      rp[b] = block_matrix(blocks[b], y) - X[b];
      pinf = std::max(pinf, rp[b].cwiseAbs().maxCoeff() / (1.0 + cmax));
    }
    VectorXd re = d - emat * y;
    double einf = q ? re.cwiseAbs().maxCoeff() / dnorm : 0.0;
    VectorXd rd = c;
    for (std::size_t b = 0; b < blocks.size(); ++b)
      accumulate_adjoint(blocks[b], -Z[b], rd);
    if (q) rd -= emat.transpose() * w;
    double dinf = rd.cwiseAbs().maxCoeff() / cnorm;

    double gap = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b)
      gap += (X[b].array() * Z[b].array()).sum();
    double mu = gap / total_dim;

    double pobj = c.dot(y) + p.objective_offset;
    double dobj = p.objective_offset + (q ? d.dot(w) : 0.0);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      dobj -= trace_const(blocks[b], Z[b]);
    double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    res.value = pobj;
    res.y.assign(y.data(), y.data() + m);
    res.primal_residual = pinf;
    res.equality_residual = einf;
    res.dual_residual = dinf;
    res.gap = relgap;
    res.iterations = iter;
    best_value = pobj;

    if (pinf <= opts.tol && einf <= opts.tol && dinf <= opts.tol &&
        relgap <= opts.tol) {
      res.status = SolveStatus::Optimal;
      res.seconds = elapsed();
      return res;
    }

    // Primal infeasibility certificate: A*(Z) + E^T w = 0, tr(CZ) - d.w < 0
    // proves no y satisfies the constraints (Farkas pair for our min form).
    {
      double znorm = 0;
      for (std::size_t b = 0; b < blocks.size(); ++b) znorm += Z[b].norm();
      znorm += w.norm();
      if (znorm > 1e6) {
        VectorXd hom = c - rd;  // = A*(Z) + E^T w
        double viol = -dobj + p.objective_offset;  // tr(CZ) - d.w
        if (hom.cwiseAbs().maxCoeff() / znorm < 1e-10 && viol / znorm < -1e-10) {
          res.status = SolveStatus::Infeasible;
          res.seconds = elapsed();
          return res;
        }
      }
      if (pobj < -1e14 && pinf <= 1e-6 && einf <= 1e-6) {
        res.status = SolveStatus::Unbounded;
        res.seconds = elapsed();
        return res;
      }
    }

    // NT scaling: V X V = Z, W = V^{-1}.
    bool scaling_ok = true;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      Eigen::LLT<MatrixXd> lz(Z[b]);
      if (lz.info() != Eigen::Success) {
        scaling_ok = false;
        break;
      }
      MatrixXd lzm = lz.matrixL();
      MatrixXd mid = lzm.transpose() * X[b] * lzm;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es((mid + mid.transpose()) / 2.0);
      if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0) {
        scaling_ok = false;
        break;
      }
      VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
      VectorXd sqrt_ev = es.eigenvalues().cwiseSqrt();
      MatrixXd mid_isqrt =
          es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
      MatrixXd mid_sqrt =
          es.eigenvectors() * sqrt_ev.asDiagonal() * es.eigenvectors().transpose();
      V[b] = lzm * mid_isqrt * lzm.transpose();
      MatrixXd linv = lzm.inverse();
      W[b] = linv.transpose() * mid_sqrt * linv;
      V[b] = ((V[b] + V[b].transpose()) / 2.0).eval();
      W[b] = ((W[b] + W[b].transpose()) / 2.0).eval();
    }
    if (!scaling_ok) {
      res.status = SolveStatus::Inaccurate;
      res.note = "NT scaling failed (iterate left the cone)";
      break;
    }

    // Schur complement H_ij = sum_b tr(A_i V A_j V).
    h.setZero();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const BlockData& bd = blocks[b];
      const std::size_t ne = bd.var.size();
      if (!ne) continue;
      const MatrixXd& v = V[b];
      const double* vdata = v.data();
      const int dim = bd.dim;
      scratch.resize(ne);
      for (std::size_t e1 = 0; e1 < ne; ++e1) {
        const double* vp = vdata + static_cast<std::size_t>(bd.row[e1]) * dim;
        const double* vq = vdata + static_cast<std::size_t>(bd.col[e1]) * dim;
        const std::size_t count = ne - e1;
        kernels::pair_site_products(vp, vq, bd.row.data() + e1, bd.col.data() + e1,
                                    bd.coef_scaled.data() + e1, scratch.data(),
                                    static_cast<int>(count));
        const double k1 = bd.coef_scaled[e1];
        const int v1 = bd.var[e1];
        double* hrow = h.data() + static_cast<std::size_t>(v1) * m;
        for (std::size_t e2 = e1; e2 < ne; ++e2) {
          double add = k1 * scratch[e2 - e1];
          if (bd.var[e2] == v1 && e2 != e1) add *= 2.0;
          hrow[bd.var[e2]] += add;
        }
      }
    }
    // Mirror to the lower triangle (entries were accumulated with var1 <= var2).
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j) h(i, j) = h(j, i);

    Eigen::LLT<MatrixXd> hfac;
    double jitter = 0;
    for (int attempt = 0; attempt < 5; ++attempt) {
      MatrixXd hj = h;
      if (jitter > 0) hj.diagonal().array() += jitter;
      hfac.compute(hj);
      if (hfac.info() == Eigen::Success) break;
      jitter = jitter == 0 ? 1e-12 * (1.0 + h.diagonal().maxCoeff()) : jitter * 100;
    }
    if (hfac.info() != Eigen::Success) {
      res.status = SolveStatus::Inaccurate;
      res.note = "Schur complement factorization failed";
      break;
    }

    MatrixXd u1;
    Eigen::LDLT<MatrixXd> sfac;
    if (q) {
      u1 = hfac.solve(emat.transpose());
      sfac.compute(emat * u1);
    }

    auto solve_direction = [&](const std::vector<MatrixXd>& rmat, VectorXd& dy,
                               VectorXd& dw, std::vector<MatrixXd>& dX,
                               std::vector<MatrixXd>& dZ) {
      VectorXd g = -rd;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        MatrixXd gb = V[b] * (rmat[b] - rp[b]) * V[b];
        accumulate_adjoint(blocks[b], gb, g);
      }
      VectorXd u0 = hfac.solve(g);
      if (q) {
        dw = sfac.solve(re - emat * u0);
        dy = u0 + u1 * dw;
      } else {
        dw.resize(0);
        dy = u0;
      }
      dX.resize(blocks.size());
      dZ.resize(blocks.size());
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        MatrixXd ady = MatrixXd::Zero(blocks[b].dim, blocks[b].dim);
        for (std::size_t e = 0; e < blocks[b].var.size(); ++e) {
          double v = dy[blocks[b].var[e]] * blocks[b].coef[e];
          ady(blocks[b].row[e], blocks[b].col[e]) += v;
          if (blocks[b].row[e] != blocks[b].col[e])
            ady(blocks[b].col[e], blocks[b].row[e]) += v;
        }
        MatrixXd inner = rmat[b] - rp[b] - ady;
        dZ[b] = V[b] * inner * V[b];
        dZ[b] = ((dZ[b] + dZ[b].transpose()) / 2.0).eval();
        dX[b] = rmat[b] - W[b] * dZ[b] * W[b];
        dX[b] = ((dX[b] + dX[b].transpose()) / 2.0).eval();
      }
    };

    // Predictor (sigma = 0).
    std::vector<MatrixXd> rmat(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) rmat[b] = -X[b];
    VectorXd dy, dw;
    std::vector<MatrixXd> dX, dZ;
    solve_direction(rmat, dy, dw, dX, dZ);

    double ap = 1e30, ad = 1e30;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      ap = std::min(ap, max_step(X[b], dX[b]));
      ad = std::min(ad, max_step(Z[b], dZ[b]));
    }
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b)
      gap_aff += ((X[b] + ap * dX[b]).array() * (Z[b] + ad * dZ[b]).array()).sum();
    double sigma = std::pow(std::max(0.0, gap_aff / gap), 3.0);
    sigma = std::clamp(sigma, 1e-6, 0.99);

    // Corrector with the Mehrotra second-order term.
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      MatrixXd zinv = Z[b].llt().solve(MatrixXd::Identity(blocks[b].dim, blocks[b].dim));
      MatrixXd corr = dX[b] * zinv * dZ[b];
      rmat[b] = sigma * mu * zinv - X[b] - (corr + corr.transpose()) / 2.0;
      rmat[b] = ((rmat[b] + rmat[b].transpose()) / 2.0).eval();
    }
    VectorXd dy2, dw2;
    std::vector<MatrixXd> dX2, dZ2;
    solve_direction(rmat, dy2, dw2, dX2, dZ2);
    double ap2 = 1e30, ad2 = 1e30;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      ap2 = std::min(ap2, max_step(X[b], dX2[b]));
      ad2 = std::min(ad2, max_step(Z[b], dZ2[b]));
    }
    if (std::min(ap2, ad2) < 0.05 * std::min(ap, ad)) {
      // Second-order term hurt; retake a plain centering step.
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        MatrixXd zinv =
            Z[b].llt().solve(MatrixXd::Identity(blocks[b].dim, blocks[b].dim));
        rmat[b] = 0.8 * mu * zinv - X[b];
      }
      solve_direction(rmat, dy2, dw2, dX2, dZ2);
      ap2 = ad2 = 1e30;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        ap2 = std::min(ap2, max_step(X[b], dX2[b]));
        ad2 = std::min(ad2, max_step(Z[b], dZ2[b]));
      }
    }
    dy = dy2;
    dw = dw2;
    dX = dX2;
    dZ = dZ2;
    ap = ap2;
    ad = ad2;

    const double tau = relgap < 1e-4 ? 0.98 : 0.9;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);
    if (std::min(ap, ad) < 1e-8) {
      if (++stall >= 2) {
        res.status = SolveStatus::Inaccurate;
        res.note = "step size collapsed";
        break;
      }
    } else {
      stall = 0;
    }

    y += ap * dy;
    for (std::size_t b = 0; b < blocks.size(); ++b) X[b] += ap * dX[b];
    if (q) w += ad * dw;
    for (std::size_t b = 0; b < blocks.size(); ++b) Z[b] += ad * dZ[b];
  }

  if (res.status != SolveStatus::Timeout && res.status != SolveStatus::Infeasible &&
      res.status != SolveStatus::Unbounded && res.note.empty()) {
    res.status = SolveStatus::Inaccurate;
    res.note = "iteration limit reached";
  }
  res.value = best_value;
  res.seconds = elapsed();
  return res;
}

}  // namespace qinf
