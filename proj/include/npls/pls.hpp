#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "npls/parafac.hpp"
#include "npls/tensor.hpp"
#include "npls/thresholding.hpp"

namespace npls {

// Exponentially weighted second-order statistics of a (tensor X, vector Y)
// stream.  P = prod(x_dims).  xx is the weighted centered Gram of the
// flattened inputs, xy the centered cross-covariance folded into an
// order-(M+1) tensor with the output mode appended last.
struct CovarianceState {
  std::vector<std::size_t> x_dims;
  std::size_t q = 0;
  double mu = 1.0;        // forgetting factor in [0, 1]
  double weight_sum = 0.0;
  Eigen::VectorXd mean_x;  // length P
  Eigen::VectorXd mean_y;  // length Q
  Eigen::MatrixXd xx;      // P x P
  Tensor xy;               // dims (I_1..I_M, Q)

  std::size_t input_size() const;
};

CovarianceState make_state(const std::vector<std::size_t>& x_dims,
                           std::size_t q, double mu);

// Folds one batch into the state.  With decayed prior weight W = mu *
// weight_sum and batch size N:
//   weight_sum' = W + N
//   mean'       = (W * mean + sum(batch)) / weight_sum'
//   xx'         = mu * xx + W * (mean_x - mean_x')(mean_x - mean_x')^T
//                 + Xc^T Xc
// with Xc the batch centered by the updated mean, and likewise for xy.  The
// middle term carries the old samples' centering to the new mean; with it the
// incremental mu = 1 updates match the one-shot batch statistics exactly.
void update_covariances(CovarianceState& state,
                        const std::vector<Tensor>& batch_x,
                        const std::vector<Eigen::VectorXd>& batch_y);

// One latent component of a calibrated model.  beta and bias are the
// cumulative regression map of components 1..f, so prediction at depth f
// needs only this entry.
struct PlsComponent {
  std::vector<Eigen::VectorXd> ws;  // M input factors + output factor
  double rho = 0.0;
  double v = 0.0;           // latent variance r^T xx r
  Eigen::VectorXd p_load;   // input loading, length P
  Eigen::VectorXd c;        // output loading, length Q
  double scale = 0.0;       // ||xy|| before this component's normalization
  Tensor beta;              // dims (I_1..I_M, Q)
  Eigen::VectorXd bias;     // length Q
};

struct PlsModel {
  std::vector<std::size_t> x_dims;
  std::size_t q = 0;
  double mu = 1.0;
  Penalty penalty = Penalty::l1;
  double lambda = 0.0;
  std::size_t f_max = 0;
  std::vector<PlsComponent> components;  // F entries, F <= f_max
  // Selected latent depth.  Calibration defaults it to F; recursive
  // validation refines it.  0 means intercept-only (total collapse).
  std::size_t f_star = 0;
  Eigen::VectorXd mean_y;

  std::size_t latent_count() const { return components.size(); }
};

// Runs the full latent loop on the accumulated statistics.  Per f: the
// deflated xy is normalized to unit Frobenius norm (scale recorded), the
// penalized rank-1 decomposition of it gives the projectors (the output
// mode is always fully protected), the protection set evolves on the input
// modes, and
//   r_f = vec(w^1 o ... o w^M)          v_f = r_f^T xx r_f
//   p_f = xx r_f / v_f                  c_f = xy^T r_f / v_f
//   xy <- xy - v_f fold(p_f o c_f)      Beta_f = Beta_{f-1} + r_f c_f^T
//   bias_f = mean_y - Beta_f^T mean_x.
// A vanished xy, vanished latent variance, or annihilated input mode
// truncates the loop at f-1.
PlsModel calibrate(const CovarianceState& state, std::size_t f_max,
                   const std::vector<PenaltySpec>& input_penalties,
                   const AlsConfig& als_cfg = {});

// Prediction at latent depth f (default model.f_star): y = Beta_f^T vec(x)
// + bias_f.  f = 0 or an empty model returns the stored mean output.
Eigen::VectorXd predict(const PlsModel& model, const Tensor& x,
                        std::optional<std::size_t> f = std::nullopt);

std::vector<Eigen::VectorXd> predict_batch(
    const PlsModel& model, const std::vector<Tensor>& batch_x,
    std::optional<std::size_t> f = std::nullopt);

// Exponentially weighted latent-depth selection.  Feed each incoming batch
// BEFORE it is used for training: E_f <- mu E_f + ||Y - Y_f||^2, then
// f* = argmin E_f with ties toward smaller f.
class RecursiveValidator {
public:
  RecursiveValidator(std::size_t f_max, double mu);

  std::size_t step(const PlsModel& model, const std::vector<Tensor>& batch_x,
                   const std::vector<Eigen::VectorXd>& batch_y);

  std::size_t current_f_star() const;
  const Eigen::VectorXd& errors() const { return errors_; }

private:
  double mu_;
  Eigen::VectorXd errors_;
};

// Indices of `mode` (0-based input mode) that are zero in every component
// 1..f*.  An empty or intercept-only model reports all indices.
std::vector<std::size_t> sparsity_pattern(const PlsModel& model,
                                          std::size_t mode);

// Fraction of exactly-zero entries: pattern size over mode dimension.
double model_sparse_idx(const PlsModel& model, std::size_t mode);

// --- model container ------------------------------------------------------
//
// Binary layout (little-endian): magic "NPLSM1", u32 version, u32 M,
// M x u32 dims, u32 Q, u8 penalty, f64 lambda, f64 mu, u32 f_max, u32 F,
// u32 f_star, then mean_y as an NTNS1 block and per component rho/v/scale
// as f64 followed by NTNS1 blocks: the M+1 factors, p_load, c, beta, bias.

void save_model(const std::string& path, const PlsModel& model);
PlsModel load_model(const std::string& path);

// Human-readable report: dims, penalty, stored/selected depth, per-mode
// zero counts at f*, per-component scales.
std::string summarize(const PlsModel& model);

}  // namespace npls
