#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "npls/pls.hpp"
#include "npls/tensor.hpp"

namespace npls {

struct StreamBatch {
  std::vector<Tensor> x;
  std::vector<Eigen::VectorXd> y;
  std::size_t index = 0;
};

// Planted-sparsity synthetic regression stream.  Y = <B, X> + eps with X
// iid standard normal and B zero on the planted slices.
//
// latent_rank = 0 draws B dense (then zeroes the planted slices);
// latent_rank = r builds B as sum_k 0.6^(k-1) u_k^1 o ... o u_k^M o c_k,
// where modes carrying planted zeros get a single active slice per term
// (cycling through the active list) and the other factors are random unit
// vectors.  B's output columns are scaled to unit norm, so each output's
// signal variance is 1 and noise_level is the absolute noise std
// (noise_level = sqrt(0.1) gives 10:1 power SNR).
struct GeneratorConfig {
  std::vector<std::size_t> dims;
  std::size_t q = 1;
  std::size_t batch_size = 50;
  std::size_t batch_count = 10;
  // 0-based mode -> 0-based slice indices forced inactive
  std::map<std::size_t, std::vector<std::size_t>> zero_slices;
  double noise_level = 0.0;
  double drift_rate = 0.0;  // batch u uses (1 + drift_rate * u) * B
  std::size_t latent_rank = 0;
  std::uint64_t seed = 0;
};

struct SyntheticStream {
  GeneratorConfig config;
  Tensor b_true;  // dims (I_1..I_M, Q)
  std::vector<StreamBatch> batches;
};

SyntheticStream synth_generate(const GeneratorConfig& config);

// On-disk layout: <dir>/manifest.txt (key=value lines), <dir>/b_true.ntns,
// and <dir>/batch_NNNN.ntns each holding two NTNS1 blocks: X with dims
// (N, I_1..I_M) and Y with dims (N, Q).
void write_stream(const std::string& dir, const SyntheticStream& stream);
SyntheticStream read_stream(const std::string& dir);

// --- metrics --------------------------------------------------------------

struct CosineSummary {
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::size_t count = 0;    // samples that contributed
  std::size_t skipped = 0;  // zero-norm target or prediction
  bool defined = false;     // false when every sample was skipped
};

// Mean cosine between matched target/prediction pairs plus quartiles of the
// per-sample cosines.  A pair with a zero-norm side is skipped and counted.
CosineSummary dot_product_metric(const std::vector<Eigen::VectorXd>& targets,
                                 const std::vector<Eigen::VectorXd>& preds);

// Quantile by linear interpolation between order statistics at (n-1)*q.
double percentile(std::vector<double> values, double q);

// Fraction of exactly-zero entries.
double sparse_idx(const Eigen::VectorXd& w);

// --- replay ---------------------------------------------------------------

struct GridPoint {
  Penalty p = Penalty::l1;
  double lambda = 0.0;
};

struct ReplayConfig {
  std::vector<GridPoint> grid;
  std::vector<std::size_t> penalized_modes = {0};  // 0-based input modes
  std::size_t f_max = 5;
  double mu = 1.0;
  std::size_t train_prefix = 0;     // batches consumed for training
  std::size_t session_batches = 0;  // 0 = whole evaluation tail
  bool continue_adaptation = false;
  std::size_t max_threads = 0;  // 0 = hardware; SPARSE_NPLS_THREADS caps
  AlsConfig als;
};

struct MetricsRecord {
  GridPoint point;
  std::size_t session = 0;
  std::size_t batch_begin = 0;  // evaluation batch range, end exclusive
  std::size_t batch_end = 0;
  CosineSummary dotp;
  std::vector<double> sparse_idx_modes;  // one per input mode, at f_star
  std::size_t f_star = 0;
  std::size_t components = 0;
};

struct ReplayResult {
  std::vector<MetricsRecord> records;      // grid-major, session-minor order
  std::vector<PlsModel> final_models;      // one per grid point
};

// Pseudo-online replay: per grid point, batches [0, train_prefix) are fed
// through validate-then-train (the incoming batch first updates the
// latent-depth errors against the previous model, then the covariances and
// a fresh calibration); the remaining batches are scored with the frozen
// model at its validated f_star.  Grid points are independent and may run
// on parallel threads; records come back in deterministic grid order.
ReplayResult replay(const std::vector<StreamBatch>& batches,
                    const std::vector<std::size_t>& dims, std::size_t q,
                    const ReplayConfig& config);

// JSON-lines metrics file: one header object, then one object per record
// with the exact field names dotp_median, dotp_q1, dotp_q3,
// sparse_idx_mode_<m> (1-based m), lambda, p, f_star.
void write_metrics_jsonl(const std::string& path,
                         const std::string& stream_path,
                         const ReplayConfig& config,
                         const std::vector<std::size_t>& dims, std::size_t q,
                         const std::vector<MetricsRecord>& records);

// Thread cap from the environment (SPARSE_NPLS_THREADS), applied on top of
// config.max_threads and hardware concurrency.
std::size_t resolve_thread_count(std::size_t requested, std::size_t jobs);

}  // namespace npls
