#include "npls/parafac.hpp"

#include <algorithm>
#include <cmath>

#include "npls/errors.hpp"

namespace npls {

namespace {

Eigen::VectorXd uniform_unit(std::size_t n) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  return w / w.norm();
}

// Largest-magnitude element nonnegative; flips are compensated in the next
// factor so the reconstruction and rho are untouched.  Zero factors are
// left alone.
void fix_signs(std::vector<Eigen::VectorXd>& ws) {
  for (std::size_t m = 0; m + 1 < ws.size(); ++m) {
    Eigen::Index imax = 0;
    const double mx = ws[m].cwiseAbs().maxCoeff(&imax);
    if (mx == 0.0) continue;
    if (ws[m](imax) < 0.0) {
      ws[m] = -ws[m];
      ws[m + 1] = -ws[m + 1];
    }
  }
}

Eigen::VectorXd rank1_vec(const std::vector<Eigen::VectorXd>& ws, double rho) {
  Eigen::VectorXd acc = ws[0];
  for (std::size_t k = 1; k < ws.size(); ++k) acc = kronecker(acc, ws[k]);
  return rho * acc;
}

double rank1_residual(const Tensor& v, const std::vector<Eigen::VectorXd>& ws,
                      double rho) {
  return (v.vec() - rank1_vec(ws, rho)).norm();
}

std::vector<Eigen::VectorXd> init_rank1(const Tensor& v, const AlsConfig& cfg,
                                        const ProjectorSet* warm) {
  const auto& dims = v.dims();
  std::vector<Eigen::VectorXd> ws;
  switch (cfg.init) {
    case InitScheme::deterministic_uniform:
      for (std::size_t d : dims) ws.push_back(uniform_unit(d));
      return ws;
    case InitScheme::unfold_svd_like:
      for (std::size_t m = 0; m < dims.size(); ++m) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(mode_unfold(v, m),
                                              Eigen::ComputeThinU);
        Eigen::VectorXd w = svd.matrixU().col(0);
        Eigen::Index imax = 0;
        if (w.cwiseAbs().maxCoeff(&imax) > 0 && w(imax) < 0) w = -w;
        ws.push_back(w);
      }
      return ws;
    case InitScheme::previous_factors: {
      if (warm == nullptr || warm->ws.size() != dims.size())
        throw InvalidInput("previous_factors init needs a matching warm start");
      for (std::size_t m = 0; m < dims.size(); ++m) {
        if (static_cast<std::size_t>(warm->ws[m].size()) != dims[m])
          throw InvalidInput("warm start factor length mismatch");
        const double n = warm->ws[m].norm();
        if (n == 0.0) throw InvalidInput("warm start factor is zero");
        ws.push_back(warm->ws[m] / n);
      }
      return ws;
    }
  }
  throw InvalidInput("unknown init scheme");
}

void check_cfg(const AlsConfig& cfg) {
  if (cfg.max_iterations == 0) throw InvalidInput("max_iterations must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw InvalidInput("tolerance must be positive");
}

}  // namespace

ProtectionSet ProtectionSet::all_penalizable(
    const std::vector<std::size_t>& dims) {
  ProtectionSet ps;
  for (std::size_t d : dims) ps.penalizable.emplace_back(d, true);
  return ps;
}

ProtectionSet ProtectionSet::all_protected(
    const std::vector<std::size_t>& dims) {
  ProtectionSet ps;
  for (std::size_t d : dims) ps.penalizable.emplace_back(d, false);
  return ps;
}

bool ProtectionSet::matches(const std::vector<std::size_t>& dims) const {
  if (penalizable.size() != dims.size()) return false;
  for (std::size_t m = 0; m < dims.size(); ++m)
    if (penalizable[m].size() != dims[m]) return false;
  return true;
}

ProtectionSet update_protection_set(const ProtectionSet& prev,
                                    const ProjectorSet& projectors) {
  if (prev.penalizable.size() != projectors.ws.size())
    throw InvalidInput("protection set order mismatch");
  ProtectionSet next = prev;
  for (std::size_t m = 0; m < projectors.ws.size(); ++m) {
    const auto& w = projectors.ws[m];
    if (static_cast<std::size_t>(w.size()) != prev.penalizable[m].size())
      throw InvalidInput("protection set dim mismatch");
    if (w.norm() == 0.0) continue;
    for (Eigen::Index j = 0; j < w.size(); ++j)
      if (w(j) != 0.0) next.penalizable[m][static_cast<std::size_t>(j)] = false;
  }
  return next;
}

Rank1Result als_rank1(const Tensor& v, const AlsConfig& cfg,
                      const ProjectorSet* warm) {
  check_cfg(cfg);
  const auto& dims = v.dims();
  const std::size_t m_count = dims.size();

  std::vector<Eigen::MatrixXd> unfoldings;
  unfoldings.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m)
    unfoldings.push_back(mode_unfold(v, m));

  Rank1Result out;
  out.projectors.ws = init_rank1(v, cfg, warm);
  double rho = 0.0;

  std::vector<Eigen::VectorXd> last_valid = out.projectors.ws;
  double last_valid_rho = 0.0;

  for (std::size_t sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    const std::vector<Eigen::VectorXd> prev = out.projectors.ws;
    for (std::size_t m = 0; m < m_count; ++m) {
      const Eigen::VectorXd k = kron_excluding(out.projectors.ws, m);
      const double k2 = k.squaredNorm();
      if (k2 == 0.0) {
        out.projectors.ws = last_valid;
        out.projectors.rho = last_valid_rho;
        out.status = AlsStatus::degenerate;
        out.sweeps = sweep;
        return out;
      }
      Eigen::VectorXd w_rho = unfoldings[m] * k / k2;
      rho = w_rho.norm();
      if (rho == 0.0) {
        out.projectors.ws = last_valid;
        out.projectors.rho = last_valid_rho;
        out.status = AlsStatus::degenerate;
        out.sweeps = sweep;
        return out;
      }
      out.projectors.ws[m] = w_rho / rho;
    }
    last_valid = out.projectors.ws;
    last_valid_rho = rho;
    out.sweeps = sweep;

    const double res = rank1_residual(v, out.projectors.ws, rho);
    if (!out.residual_history.empty()) {
      // Each mode step is an exact LS minimizer, so the residual cannot
      // grow beyond rounding.
      const double prev_res = out.residual_history.back();
      if (res > prev_res + 1e-6 * (1.0 + prev_res))
        throw NumericalFailure("rank-1 ALS residual increased");
    }
    out.residual_history.push_back(res);

    double delta = 0.0;
    for (std::size_t m = 0; m < m_count; ++m)
      delta = std::max(delta, (out.projectors.ws[m] - prev[m]).norm());
    if (delta < cfg.tolerance) {
      out.status = AlsStatus::converged;
      out.projectors.rho = rho;
      fix_signs(out.projectors.ws);
      return out;
    }
  }
  out.status = AlsStatus::max_sweeps;
  out.projectors.rho = rho;
  fix_signs(out.projectors.ws);
  return out;
}

Rank1Result penalized_als_rank1(const Tensor& v,
                                const std::vector<PenaltySpec>& penalties,
                                const ProtectionSet& protection,
                                const AlsConfig& cfg,
                                const ProjectorSet* warm) {
  check_cfg(cfg);
  const auto& dims = v.dims();
  const std::size_t m_count = dims.size();
  if (penalties.size() != m_count)
    throw InvalidInput("one PenaltySpec per mode required");
  for (const auto& p : penalties)
    if (!(p.lambda >= 0.0 && p.lambda <= 1.0))
      throw InvalidInput("lambda must lie in [0, 1]");
  if (!protection.matches(dims))
    throw InvalidInput("protection set does not match tensor dims");

  bool any_penal = false;
  for (const auto& p : penalties) any_penal = any_penal || p.lambda > 0.0;
  if (!any_penal) return als_rank1(v, cfg, warm);

  // The unpenalized solution seeds the thresholded sweeps.
  Rank1Result out = als_rank1(v, cfg, warm);
  if (out.status == AlsStatus::degenerate) return out;

  std::vector<Eigen::MatrixXd> unfoldings;
  unfoldings.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m)
    unfoldings.push_back(mode_unfold(v, m));

  auto objective = [&](const std::vector<Eigen::VectorXd>& ws, double rho) {
    double obj = rank1_residual(v, ws, rho);
    obj *= obj;
    for (std::size_t m = 0; m < m_count; ++m) {
      if (penalties[m].lambda == 0.0) continue;
      double g = 0.0;
      for (Eigen::Index j = 0; j < ws[m].size(); ++j)
        if (protection.penalizable[m][static_cast<std::size_t>(j)])
          g += penalty_term(penalties[m].p, ws[m](j));
      obj += penalties[m].lambda * g;
    }
    return obj;
  };

  double rho = out.projectors.rho;
  for (std::size_t sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    const std::vector<Eigen::VectorXd> prev = out.projectors.ws;
    for (std::size_t m = 0; m < m_count; ++m) {
      const Eigen::VectorXd k = kron_excluding(out.projectors.ws, m);
      const double k2 = k.squaredNorm();
      if (k2 == 0.0) {
        out.status = AlsStatus::degenerate;
        out.sweeps += 1;
        return out;
      }
      const double kappa = std::sqrt(k2);
      const Eigen::VectorXd w_ls = unfoldings[m] * k / k2;
      Eigen::VectorXd w_t(w_ls.size());
      for (Eigen::Index j = 0; j < w_ls.size(); ++j) {
        const bool prot =
            !protection.penalizable[m][static_cast<std::size_t>(j)];
        w_t(j) = apply_threshold(penalties[m], w_ls(j), kappa, prot);
      }
      const double rho_t = w_t.norm();
      if (rho_t == 0.0) {
        out.projectors.ws[m].setZero(w_t.size());
        out.projectors.rho = 0.0;
        out.status = AlsStatus::annihilated;
        out.sweeps += 1;
        return out;
      }
      out.projectors.ws[m] = w_t / rho_t;
      rho = rho_t;
    }
    out.sweeps += 1;
    out.residual_history.push_back(rank1_residual(v, out.projectors.ws, rho));
    out.objective_history.push_back(objective(out.projectors.ws, rho));

    double delta = 0.0;
    for (std::size_t m = 0; m < m_count; ++m)
      delta = std::max(delta, (out.projectors.ws[m] - prev[m]).norm());
    if (delta < cfg.tolerance) {
      out.status = AlsStatus::converged;
      out.projectors.rho = rho;
      fix_signs(out.projectors.ws);
      return out;
    }
  }
  out.status = AlsStatus::max_sweeps;
  out.projectors.rho = rho;
  fix_signs(out.projectors.ws);
  return out;
}

namespace {

Eigen::MatrixXd kr_excluding(const std::vector<Eigen::MatrixXd>& factors,
                             std::size_t mode) {
  Eigen::MatrixXd acc;
  bool first = true;
  for (std::size_t k = factors.size(); k-- > 0;) {
    if (k == mode) continue;
    if (first) {
      acc = factors[k];
      first = false;
    } else {
      acc = khatri_rao(acc, factors[k]);
    }
  }
  if (first) {
    acc = Eigen::MatrixXd::Ones(1, factors[0].cols());
  }
  return acc;
}

Eigen::MatrixXd pinv_floored(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  const Eigen::VectorXd& vals = es.eigenvalues();
  const double vmax = vals.cwiseAbs().maxCoeff();
  const double floor = 1e-12 * vmax;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
  if (vmax > 0.0)
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      if (vals(i) > floor) inv(i) = 1.0 / vals(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

RankRResult als_rank_r(const Tensor& v, std::size_t rank,
                       const AlsConfig& cfg) {
  check_cfg(cfg);
  if (rank == 0) throw InvalidInput("rank must be >= 1");
  const auto& dims = v.dims();
  const std::size_t m_count = dims.size();
  const Eigen::Index r = static_cast<Eigen::Index>(rank);

  RankRResult out;
  out.factors.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const Eigen::Index im = static_cast<Eigen::Index>(dims[m]);
    Eigen::MatrixXd f(im, r);
    switch (cfg.init) {
      case InitScheme::deterministic_uniform:
        f.colwise() = uniform_unit(dims[m]);
        break;
      case InitScheme::unfold_svd_like: {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(mode_unfold(v, m),
                                              Eigen::ComputeThinU);
        const Eigen::Index avail = std::min(r, svd.matrixU().cols());
        for (Eigen::Index c = 0; c < r; ++c) {
          if (c < avail) {
            f.col(c) = svd.matrixU().col(c);
          } else {
            f.col(c).setZero();
            f(c % im, c) = 1.0;
          }
          Eigen::Index imax = 0;
          if (f.col(c).cwiseAbs().maxCoeff(&imax) > 0 && f(imax, c) < 0)
            f.col(c) = -f.col(c);
        }
        break;
      }
      case InitScheme::previous_factors:
        throw InvalidInput("previous_factors init is not supported for rank-R");
    }
    out.factors.push_back(std::move(f));
  }
  out.rhos = Eigen::VectorXd::Ones(r);

  std::vector<Eigen::MatrixXd> unfoldings;
  unfoldings.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m)
    unfoldings.push_back(mode_unfold(v, m));

  std::vector<Eigen::MatrixXd> last_valid = out.factors;
  Eigen::VectorXd last_rhos = out.rhos;

  for (std::size_t sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    const std::vector<Eigen::MatrixXd> prev = out.factors;
    bool collapsed = false;
    for (std::size_t m = 0; m < m_count && !collapsed; ++m) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Ones(r, r);
      for (std::size_t k = 0; k < m_count; ++k)
        if (k != m)
          gram = gram.cwiseProduct(out.factors[k].transpose() *
                                   out.factors[k]);
      const Eigen::MatrixXd kr = kr_excluding(out.factors, m);
      Eigen::MatrixXd w = unfoldings[m] * kr * pinv_floored(gram);
      for (Eigen::Index c = 0; c < r; ++c) {
        const double n = w.col(c).norm();
        if (n == 0.0) {
          collapsed = true;
          break;
        }
        out.rhos(c) = n;
        w.col(c) /= n;
      }
      if (!collapsed) out.factors[m] = std::move(w);
    }
    if (collapsed) {
      out.factors = last_valid;
      out.rhos = last_rhos;
      out.status = AlsStatus::degenerate;
      out.sweeps = sweep;
      return out;
    }
    last_valid = out.factors;
    last_rhos = out.rhos;
    out.sweeps = sweep;

    const Tensor rec = reconstruct_rank_r(out.factors, out.rhos);
    out.residual_history.push_back((v.vec() - rec.vec()).norm());

    double delta = 0.0;
    for (std::size_t m = 0; m < m_count; ++m)
      delta = std::max(delta, (out.factors[m] - prev[m]).norm());
    if (delta < cfg.tolerance) {
      out.status = AlsStatus::converged;
      break;
    }
    if (sweep == cfg.max_iterations) out.status = AlsStatus::max_sweeps;
  }

  // Per-component paired sign fix, as in the rank-1 case.
  for (Eigen::Index c = 0; c < r; ++c) {
    for (std::size_t m = 0; m + 1 < m_count; ++m) {
      Eigen::Index imax = 0;
      if (out.factors[m].col(c).cwiseAbs().maxCoeff(&imax) == 0.0) continue;
      if (out.factors[m](imax, c) < 0.0) {
        out.factors[m].col(c) = -out.factors[m].col(c);
        out.factors[m + 1].col(c) = -out.factors[m + 1].col(c);
      }
    }
  }
  return out;
}

Tensor reconstruct(const ProjectorSet& projectors) {
  if (projectors.ws.empty()) throw InvalidInput("empty projector set");
  std::vector<std::size_t> dims;
  for (const auto& w : projectors.ws)
    dims.push_back(static_cast<std::size_t>(w.size()));
  const Eigen::VectorXd rec = rank1_vec(projectors.ws, projectors.rho);
  return Tensor(dims,
                std::vector<double>(rec.data(), rec.data() + rec.size()));
}

Tensor reconstruct_rank_r(const std::vector<Eigen::MatrixXd>& factors,
                          const Eigen::VectorXd& rhos) {
  if (factors.empty()) throw InvalidInput("empty factor list");
  std::vector<std::size_t> dims;
  for (const auto& f : factors) {
    if (f.cols() != rhos.size())
      throw InvalidInput("factor column count does not match rhos");
    dims.push_back(static_cast<std::size_t>(f.rows()));
  }
  Tensor t(dims);
  auto acc = t.vec();
  std::vector<Eigen::VectorXd> ws(factors.size());
  for (Eigen::Index c = 0; c < rhos.size(); ++c) {
    Eigen::VectorXd chain = factors[0].col(c);
    for (std::size_t m = 1; m < factors.size(); ++m)
      chain = kronecker(chain, factors[m].col(c));
    acc += rhos(c) * chain;
  }
  return t;
}

}  // namespace npls
