#include "npls/thresholding.hpp"

#include <cmath>

#include "npls/errors.hpp"

namespace npls {

namespace {

void check_params(double lambda, double kappa) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw InvalidInput("lambda must lie in [0, 1]");
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw InvalidInput("kappa must be positive and finite");
}

constexpr double kCubicMax = 4.0 / 27.0;

}  // namespace

double penalty_exponent(Penalty p) {
  switch (p) {
    case Penalty::l0: return 0.0;
    case Penalty::l05: return 0.5;
    case Penalty::l1: return 1.0;
  }
  throw InvalidInput("unknown penalty");
}

double penalty_term(Penalty p, double w) {
  switch (p) {
    case Penalty::l0: return w != 0.0 ? 1.0 : 0.0;
    case Penalty::l05: return std::sqrt(std::abs(w));
    case Penalty::l1: return std::abs(w);
  }
  throw InvalidInput("unknown penalty");
}

double ls_coefficient(const Eigen::Ref<const Eigen::VectorXd>& v_row,
                      const Eigen::Ref<const Eigen::VectorXd>& k) {
  if (v_row.size() != k.size())
    throw InvalidInput("ls_coefficient operand lengths differ");
  const double k2 = k.squaredNorm();
  if (k2 == 0.0) throw InvalidInput("ls_coefficient needs nonzero k");
  return v_row.dot(k) / k2;
}

double threshold_l0(double w_ls, double lambda, double kappa,
                    bool is_protected) {
  check_params(lambda, kappa);
  if (is_protected) return w_ls;
  return std::abs(w_ls) <= std::sqrt(lambda) / kappa ? 0.0 : w_ls;
}

double threshold_l1(double w_ls, double lambda, double kappa,
                    bool is_protected) {
  check_params(lambda, kappa);
  if (is_protected) return w_ls;
  const double shift = lambda / (kappa * kappa);
  const double a = std::abs(w_ls);
  if (a <= shift) return 0.0;
  return (w_ls > 0 ? 1.0 : -1.0) * (a - shift);
}

double threshold_l05(double w_ls, double lambda, double kappa,
                     bool is_protected) {
  check_params(lambda, kappa);
  if (is_protected) return w_ls;
  const double kappa2 = kappa * kappa;
  const double a = std::abs(w_ls);
  const double zero_zone = 0.75 * std::pow(lambda / kappa2, 2.0 / 3.0);
  if (a <= zero_zone) return 0.0;
  double c = lambda * lambda / (16.0 * kappa2 * kappa2 * a * a * a);
  // |w_ls| above the zero zone puts C below 4/27 in exact arithmetic; the
  // clamp only absorbs rounding at the boundary.
  if (c > kCubicMax) return 0.0;
  const double x = cubic_largest_root(c);
  const double w = x * a;
  const double keep_cost = kappa2 * (a - w) * (a - w) + lambda * std::sqrt(w);
  const double drop_cost = kappa2 * a * a;
  if (keep_cost >= drop_cost) return 0.0;
  return w_ls > 0 ? w : -w;
}

double apply_threshold(const PenaltySpec& spec, double w_ls, double kappa,
                       bool is_protected) {
  switch (spec.p) {
    case Penalty::l0: return threshold_l0(w_ls, spec.lambda, kappa, is_protected);
    case Penalty::l05: return threshold_l05(w_ls, spec.lambda, kappa, is_protected);
    case Penalty::l1: return threshold_l1(w_ls, spec.lambda, kappa, is_protected);
  }
  throw InvalidInput("unknown penalty");
}

double cubic_largest_root(double c) {
  if (!(c >= 0.0) || c > kCubicMax * (1.0 + 1e-12))
    throw InvalidInput("cubic_largest_root needs C in [0, 4/27]");
  if (c == 0.0) return 1.0;
  if (c >= kCubicMax) return 1.0 / 3.0;
  double lo = 1.0 / 3.0, hi = 1.0;  // g(lo) >= C >= g(hi), g decreasing
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = mid * (1.0 - mid) * (1.0 - mid);
    if (g >= c)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace npls
