#pragma once

#include <Eigen/Dense>

namespace npls {

// Slice-wise penalty order.  The value() is the exponent p of the group
// penalty; lambda in [0, 1] scales it (0 disables penalization).
enum class Penalty { l0, l05, l1 };

double penalty_exponent(Penalty p);  // 0.0, 0.5, 1.0

struct PenaltySpec {
  Penalty p = Penalty::l1;
  double lambda = 0.0;  // validated to [0, 1] where consumed
};

// Element penalty g_p(w): L0 counts nonzeros, L0.5 is sqrt|w|, L1 is |w|.
double penalty_term(Penalty p, double w);

// Unpenalized least-squares coefficient of one unfolding row against the
// Kronecker vector k: v_row . k / ||k||^2.  Throws InvalidInput at ||k|| = 0.
double ls_coefficient(const Eigen::Ref<const Eigen::VectorXd>& v_row,
                      const Eigen::Ref<const Eigen::VectorXd>& k);

// Closed-form minimizers of kappa^2 (w - w_ls)^2 + lambda g_p(w), the
// element-wise cost of one penalized ALS coordinate step.  kappa = ||k|| > 0.
// All the zero-zone comparisons are on |w_ls| and ties resolve to 0; a
// protected element passes w_ls through unchanged.

// Hard threshold: 0 iff |w_ls| <= sqrt(lambda)/kappa, else w_ls.
double threshold_l0(double w_ls, double lambda, double kappa,
                    bool is_protected = false);

// Soft threshold: 0 iff |w_ls| <= lambda/kappa^2, else the shrunk value
// sign(w_ls) (|w_ls| - lambda/kappa^2).
double threshold_l1(double w_ls, double lambda, double kappa,
                    bool is_protected = false);

// Half threshold: 0 iff |w_ls| <= (3/4)(lambda/kappa^2)^(2/3).  Otherwise
// the nonzero stationary point is sign(w_ls) x* |w_ls| with x* the largest
// root of x(1-x)^2 = C, C = lambda^2 / (16 kappa^4 |w_ls|^3); the returned
// value is whichever of {0, stationary point} has the smaller cost.
double threshold_l05(double w_ls, double lambda, double kappa,
                     bool is_protected = false);

double apply_threshold(const PenaltySpec& spec, double w_ls, double kappa,
                       bool is_protected = false);

// Largest root of x(1-x)^2 = C on [1/3, 1].  The cubic's branch there falls
// monotonically from 4/27 to 0, so bisection is exact; C must lie in
// [0, 4/27].  C = 0 returns exactly 1, C = 4/27 exactly 1/3.
double cubic_largest_root(double c);

}  // namespace npls
