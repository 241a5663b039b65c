#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "npls/tensor.hpp"
#include "npls/thresholding.hpp"

namespace npls {

// Rank-1 decomposition v ~ rho * ws[0] o ... o ws[M-1].  Factors are unit
// norm and rho >= 0 carries the scale; after a penalized run an annihilated
// factor is all-zero instead.
struct ProjectorSet {
  std::vector<Eigen::VectorXd> ws;
  double rho = 0.0;
};

enum class AlsStatus {
  converged,
  max_sweeps,    // stopped at the iteration cap
  degenerate,    // collapse mid-iteration; last valid factors returned
  annihilated,   // a penalized mode thresholded to all zeros
};

enum class InitScheme {
  deterministic_uniform,  // all-ones normalized; the reproducible default
  unfold_svd_like,        // leading left singular vectors per mode
  previous_factors,       // warm start from a caller-supplied ProjectorSet
};

struct AlsConfig {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // max factor change per sweep
  InitScheme init = InitScheme::deterministic_uniform;
};

struct Rank1Result {
  ProjectorSet projectors;
  AlsStatus status = AlsStatus::converged;
  std::size_t sweeps = 0;
  // Frobenius residual after each sweep; non-increasing for the
  // unpenalized iteration.
  std::vector<double> residual_history;
  // Penalized runs also record residual^2 + sum_m lambda_m ||w^m||_{p,L_m}
  // per thresholded sweep.
  std::vector<double> objective_history;
};

struct RankRResult {
  std::vector<Eigen::MatrixXd> factors;  // I_m x R each
  Eigen::VectorXd rhos;                  // R component weights, >= 0
  AlsStatus status = AlsStatus::converged;
  std::size_t sweeps = 0;
  std::vector<double> residual_history;
};

// Which elements may be thresholded.  penalizable[m][j] == false protects
// element j of mode m (it passes through every threshold unchanged).
struct ProtectionSet {
  std::vector<std::vector<bool>> penalizable;

  static ProtectionSet all_penalizable(const std::vector<std::size_t>& dims);
  static ProtectionSet all_protected(const std::vector<std::size_t>& dims);
  bool matches(const std::vector<std::size_t>& dims) const;
};

// Protection-set evolution between latent iterations: an element found
// nonzero stops being penalizable.  Annihilated (all-zero) factors leave
// their mode's set unchanged.
ProtectionSet update_protection_set(const ProtectionSet& prev,
                                    const ProjectorSet& projectors);

// Alternating least squares for the best rank-1 approximation.  Sweeps run
// over modes in ascending order; each mode update is the exact LS solution
// against the Kronecker vector of the other factors, then normalized into
// rho.  Sign convention: modes 0..M-2 end with their largest-magnitude
// element nonnegative, each needed flip compensated in the next factor, so
// the last mode carries any residual sign and rho stays nonnegative.
Rank1Result als_rank1(const Tensor& v, const AlsConfig& cfg = {},
                      const ProjectorSet* warm = nullptr);

// Penalized variant.  penalties[m] applies to mode m's elements that the
// protection set leaves penalizable.  With every lambda zero this routes
// through als_rank1 unchanged.  Otherwise the unpenalized solution is
// computed first and the thresholded sweeps start from it; each sweep
// computes per-element LS coefficients, thresholds them, then normalizes.
// A mode thresholded to all zeros stops the run with status annihilated.
Rank1Result penalized_als_rank1(const Tensor& v,
                                const std::vector<PenaltySpec>& penalties,
                                const ProtectionSet& protection,
                                const AlsConfig& cfg = {},
                                const ProjectorSet* warm = nullptr);

// Rank-R ALS via the Khatri-Rao normal equations; the R x R Gram Hadamard
// product is pseudo-inverted with an eigenvalue floor of 1e-12 times the
// largest eigenvalue.  deterministic_uniform init is only useful for R = 1
// (all columns coincide); use unfold_svd_like for R > 1.
RankRResult als_rank_r(const Tensor& v, std::size_t rank,
                       const AlsConfig& cfg = {});

Tensor reconstruct(const ProjectorSet& projectors);
Tensor reconstruct_rank_r(const std::vector<Eigen::MatrixXd>& factors,
                          const Eigen::VectorXd& rhos);

}  // namespace npls
