#include "npls/stream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "npls/errors.hpp"

namespace npls {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// mt19937_64 is fully specified, and the raw 64-bit draws are mapped to
// doubles by hand, so a (config, seed) pair reproduces the same stream on
// every build.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = two_pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

void check_generator_config(const GeneratorConfig& c) {
  if (c.dims.empty()) throw InvalidInput("generator needs at least one mode");
  for (std::size_t d : c.dims)
    if (d == 0) throw InvalidInput("generator dims must be nonzero");
  if (c.q == 0) throw InvalidInput("generator needs at least one output");
  if (c.batch_size == 0) throw InvalidInput("batch_size must be >= 1");
  if (c.batch_count == 0) throw InvalidInput("batch_count must be >= 1");
  if (!(c.noise_level >= 0.0)) throw InvalidInput("noise_level must be >= 0");
  if (!(c.drift_rate >= 0.0)) throw InvalidInput("drift_rate must be >= 0");
  for (const auto& [mode, slices] : c.zero_slices) {
    if (mode >= c.dims.size())
      throw InvalidInput("zero-slice mode out of range");
    for (std::size_t s : slices)
      if (s >= c.dims[mode])
        throw InvalidInput("zero-slice index out of range");
    if (slices.size() >= c.dims[mode])
      throw InvalidInput("a mode cannot have every slice planted zero");
  }
}

std::vector<std::size_t> active_slices(const GeneratorConfig& c,
                                       std::size_t mode) {
  std::vector<bool> zero(c.dims[mode], false);
  auto it = c.zero_slices.find(mode);
  if (it != c.zero_slices.end())
    for (std::size_t s : it->second) zero[s] = true;
  std::vector<std::size_t> act;
  for (std::size_t j = 0; j < c.dims[mode]; ++j)
    if (!zero[j]) act.push_back(j);
  return act;
}

}  // namespace

SyntheticStream synth_generate(const GeneratorConfig& config) {
  check_generator_config(config);
  Rng rng(config.seed);

  const std::size_t m_count = config.dims.size();
  std::size_t p = 1;
  for (std::size_t d : config.dims) p *= d;
  const std::size_t q = config.q;
  const Eigen::Index pi = static_cast<Eigen::Index>(p);
  const Eigen::Index qi = static_cast<Eigen::Index>(q);

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(pi, qi);
  if (config.latent_rank == 0) {
    for (Eigen::Index i = 0; i < pi; ++i)
      for (Eigen::Index j = 0; j < qi; ++j) b(i, j) = rng.gaussian();
  } else {
    for (std::size_t k = 0; k < config.latent_rank; ++k) {
      Eigen::VectorXd chain;
      for (std::size_t m = 0; m < m_count; ++m) {
        Eigen::VectorXd u =
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.dims[m]));
        if (config.zero_slices.count(m)) {
          // One active slice per latent term keeps the planted support
          // cleanly separated across components.
          const auto act = active_slices(config, m);
          u(static_cast<Eigen::Index>(act[k % act.size()])) = 1.0;
        } else {
          for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = rng.gaussian();
          const double n = u.norm();
          if (n > 0) u /= n;
        }
        chain = m == 0 ? u : kronecker(chain, u);
      }
      Eigen::VectorXd c(qi);
      for (Eigen::Index j = 0; j < qi; ++j) c(j) = rng.gaussian();
      const double n = c.norm();
      if (n > 0) c /= n;
      b += std::pow(0.6, static_cast<double>(k)) * chain * c.transpose();
    }
  }

  // Planted slices are zero regardless of construction path.
  {
    std::vector<std::size_t> stride(m_count, 1);
    for (std::size_t m = m_count; m-- > 1;)
      stride[m - 1] = stride[m] * config.dims[m];
    for (std::size_t flat = 0; flat < p; ++flat) {
      bool kill = false;
      for (const auto& [mode, slices] : config.zero_slices) {
        const std::size_t jm = (flat / stride[mode]) % config.dims[mode];
        if (std::find(slices.begin(), slices.end(), jm) != slices.end()) {
          kill = true;
          break;
        }
      }
      if (kill) b.row(static_cast<Eigen::Index>(flat)).setZero();
    }
  }

  // Unit-norm output columns: each output's signal variance is exactly 1
  // under iid standard-normal inputs.
  for (Eigen::Index j = 0; j < qi; ++j) {
    const double n = b.col(j).norm();
    if (n > 1e-12) b.col(j) /= n;
  }

  SyntheticStream stream;
  stream.config = config;
  {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
        row_major = b;
    std::vector<std::size_t> bdims = config.dims;
    bdims.push_back(q);
    stream.b_true = Tensor(
        bdims, std::vector<double>(row_major.data(),
                                   row_major.data() + row_major.size()));
  }

  stream.batches.reserve(config.batch_count);
  for (std::size_t u = 0; u < config.batch_count; ++u) {
    const double gain = 1.0 + config.drift_rate * static_cast<double>(u);
    StreamBatch batch;
    batch.index = u;
    batch.x.reserve(config.batch_size);
    batch.y.reserve(config.batch_size);
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      std::vector<double> xdata(p);
      for (double& v : xdata) v = rng.gaussian();
      Tensor x(config.dims, std::move(xdata));
      Eigen::VectorXd y = gain * (b.transpose() * x.vec());
      for (Eigen::Index j = 0; j < qi; ++j)
        y(j) += config.noise_level * rng.gaussian();
      batch.x.push_back(std::move(x));
      batch.y.push_back(std::move(y));
    }
    stream.batches.push_back(std::move(batch));
  }
  return stream;
}

// --- stream files ---------------------------------------------------------

namespace {

std::string batch_filename(std::size_t u) {
  std::ostringstream os;
  os << "batch_";
  os.width(4);
  os.fill('0');
  os << u << ".ntns";
  return os.str();
}

std::string join_slices_one_based(const std::vector<std::size_t>& slices) {
  std::ostringstream os;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (i) os << ',';
    os << (slices[i] + 1);
  }
  return os.str();
}

// Accepts "3-8", "1,4,7", or a mix; values are 1-based in the file.
std::vector<std::size_t> parse_slices_one_based(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw IoError("empty slice entry");
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        const long v = std::stol(item);
        if (v < 1) throw IoError("slice indices are 1-based");
        out.push_back(static_cast<std::size_t>(v - 1));
      } else {
        const long a = std::stol(item.substr(0, dash));
        const long bnd = std::stol(item.substr(dash + 1));
        if (a < 1 || bnd < a) throw IoError("bad slice range: " + item);
        for (long v = a; v <= bnd; ++v)
          out.push_back(static_cast<std::size_t>(v - 1));
      }
    } catch (const std::invalid_argument&) {
      throw IoError("bad slice entry: " + item);
    } catch (const std::out_of_range&) {
      throw IoError("bad slice entry: " + item);
    }
  }
  return out;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("manifest line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv,
                           const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw IoError("manifest missing key: " + key);
  return it->second;
}

}  // namespace

void write_stream(const std::string& dir, const SyntheticStream& stream) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);

  const GeneratorConfig& c = stream.config;
  {
    std::ofstream out(fs::path(dir) / "manifest.txt");
    if (!out) throw IoError("cannot write manifest");
    out.precision(17);
    out << "format=1\n";
    out << "dims=";
    for (std::size_t m = 0; m < c.dims.size(); ++m)
      out << (m ? "," : "") << c.dims[m];
    out << "\nq=" << c.q << "\nbatch_size=" << c.batch_size
        << "\nbatch_count=" << c.batch_count << "\nseed=" << c.seed
        << "\nnoise_level=" << c.noise_level
        << "\ndrift_rate=" << c.drift_rate
        << "\nlatent_rank=" << c.latent_rank << "\n";
    for (const auto& [mode, slices] : c.zero_slices)
      out << "zero_slices_mode_" << (mode + 1) << "="
          << join_slices_one_based(slices) << "\n";
    if (!out) throw IoError("manifest write failed");
  }

  write_tensor((fs::path(dir) / "b_true.ntns").string(), stream.b_true);

  std::size_t pr = 1;
  for (std::size_t d : c.dims) pr *= d;
  for (const auto& batch : stream.batches) {
    const std::size_t n = batch.x.size();
    std::vector<std::size_t> xdims = {n};
    xdims.insert(xdims.end(), c.dims.begin(), c.dims.end());
    std::vector<double> xdata;
    xdata.reserve(n * pr);
    for (const auto& x : batch.x)
      xdata.insert(xdata.end(), x.data().begin(), x.data().end());
    std::vector<double> ydata;
    ydata.reserve(n * c.q);
    for (const auto& y : batch.y)
      ydata.insert(ydata.end(), y.data(), y.data() + y.size());

    std::ofstream out(fs::path(dir) / batch_filename(batch.index),
                      std::ios::binary);
    if (!out) throw IoError("cannot write batch file");
    write_tensor_stream(out, Tensor(xdims, std::move(xdata)));
    write_tensor_stream(out, Tensor({n, c.q}, std::move(ydata)));
  }
}

SyntheticStream read_stream(const std::string& dir) {
  const auto kv = read_kv_file((fs::path(dir) / "manifest.txt").string());
  GeneratorConfig c;
  try {
    {
      std::stringstream ss(require(kv, "dims"));
      std::string item;
      while (std::getline(ss, item, ','))
        c.dims.push_back(static_cast<std::size_t>(std::stoul(item)));
    }
    c.q = std::stoul(require(kv, "q"));
    c.batch_size = std::stoul(require(kv, "batch_size"));
    c.batch_count = std::stoul(require(kv, "batch_count"));
    c.seed = std::stoull(require(kv, "seed"));
    c.noise_level = std::stod(require(kv, "noise_level"));
    c.drift_rate = std::stod(require(kv, "drift_rate"));
    c.latent_rank = std::stoul(require(kv, "latent_rank"));
  } catch (const std::invalid_argument&) {
    throw IoError("malformed manifest value");
  } catch (const std::out_of_range&) {
    throw IoError("malformed manifest value");
  }
  for (const auto& [key, value] : kv) {
    const std::string prefix = "zero_slices_mode_";
    if (key.rfind(prefix, 0) == 0) {
      std::size_t mode_one_based = 0;
      try {
        mode_one_based = std::stoul(key.substr(prefix.size()));
      } catch (const std::exception&) {
        throw IoError("bad manifest key: " + key);
      }
      if (mode_one_based == 0 || mode_one_based > c.dims.size())
        throw IoError("zero-slice mode out of range in manifest");
      c.zero_slices[mode_one_based - 1] = parse_slices_one_based(value);
    }
  }
  try {
    check_generator_config(c);
  } catch (const InvalidInput& e) {
    throw IoError(std::string("inconsistent manifest: ") + e.what());
  }

  SyntheticStream stream;
  stream.config = c;
  stream.b_true = read_tensor((fs::path(dir) / "b_true.ntns").string());
  std::vector<std::size_t> want_bdims = c.dims;
  want_bdims.push_back(c.q);
  if (stream.b_true.dims() != want_bdims)
    throw IoError("b_true dims do not match manifest");

  std::size_t pr = 1;
  for (std::size_t d : c.dims) pr *= d;

  for (std::size_t u = 0; u < c.batch_count; ++u) {
    const std::string path = (fs::path(dir) / batch_filename(u)).string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing batch file: " + path);
    Tensor xt = read_tensor_stream(in);
    Tensor yt = read_tensor_stream(in);

    std::vector<std::size_t> want_xdims = {c.batch_size};
    want_xdims.insert(want_xdims.end(), c.dims.begin(), c.dims.end());
    if (xt.dims() != want_xdims)
      throw IoError("batch X dims do not match manifest: " + path);
    if (yt.dims() != std::vector<std::size_t>{c.batch_size, c.q})
      throw IoError("batch Y dims do not match manifest: " + path);

    StreamBatch batch;
    batch.index = u;
    for (std::size_t i = 0; i < c.batch_size; ++i) {
      std::vector<double> xd(xt.data().begin() + static_cast<long>(i * pr),
                             xt.data().begin() + static_cast<long>((i + 1) * pr));
      batch.x.emplace_back(c.dims, std::move(xd));
      Eigen::VectorXd y(static_cast<Eigen::Index>(c.q));
      for (std::size_t j = 0; j < c.q; ++j)
        y(static_cast<Eigen::Index>(j)) = yt.data()[i * c.q + j];
      batch.y.push_back(std::move(y));
    }
    stream.batches.push_back(std::move(batch));
  }
  return stream;
}

// --- metrics --------------------------------------------------------------

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

CosineSummary dot_product_metric(const std::vector<Eigen::VectorXd>& targets,
                                 const std::vector<Eigen::VectorXd>& preds) {
  if (targets.size() != preds.size())
    throw InvalidInput("target/prediction counts differ");
  CosineSummary s;
  std::vector<double> cosines;
  cosines.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].size() != preds[i].size())
      throw InvalidInput("target/prediction lengths differ");
    const double ny = targets[i].norm();
    const double np = preds[i].norm();
    if (ny == 0.0 || np == 0.0) {
      ++s.skipped;
      continue;
    }
    cosines.push_back(targets[i].dot(preds[i]) / (ny * np));
  }
  s.count = cosines.size();
  if (cosines.empty()) {
    s.defined = false;
    s.mean = s.median = s.q1 = s.q3 =
        std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.defined = true;
  double sum = 0.0;
  for (double c : cosines) sum += c;
  s.mean = sum / static_cast<double>(cosines.size());
  s.median = percentile(cosines, 0.5);
  s.q1 = percentile(cosines, 0.25);
  s.q3 = percentile(cosines, 0.75);
  return s;
}

double sparse_idx(const Eigen::VectorXd& w) {
  if (w.size() == 0) throw InvalidInput("sparse_idx of an empty vector");
  std::size_t zeros = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w(j) == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(w.size());
}

// --- replay ---------------------------------------------------------------

std::size_t resolve_thread_count(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested;
  if (t == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    t = hw == 0 ? 1 : hw;
  }
  if (const char* env = std::getenv("SPARSE_NPLS_THREADS")) {
    try {
      const unsigned long cap = std::stoul(env);
      if (cap >= 1 && cap < t) t = cap;
    } catch (const std::exception&) {
      throw InvalidInput("SPARSE_NPLS_THREADS must be a positive integer");
    }
  }
  if (jobs > 0 && t > jobs) t = jobs;
  return t == 0 ? 1 : t;
}

namespace {

struct GridOutcome {
  std::vector<MetricsRecord> records;
  PlsModel model;
};

GridOutcome run_grid_point(const std::vector<StreamBatch>& batches,
                           const std::vector<std::size_t>& dims, std::size_t q,
                           const ReplayConfig& config, const GridPoint& point) {
  std::vector<PenaltySpec> penalties(dims.size(),
                                     PenaltySpec{point.p, 0.0});
  for (std::size_t m : config.penalized_modes)
    penalties[m] = PenaltySpec{point.p, point.lambda};

  CovarianceState state = make_state(dims, q, config.mu);
  RecursiveValidator validator(config.f_max, config.mu);
  PlsModel model;
  bool have_model = false;
  bool have_validation = false;

  auto train_on = [&](const StreamBatch& batch) {
    if (have_model) {
      const std::size_t f = validator.step(model, batch.x, batch.y);
      have_validation = true;
      (void)f;
    }
    update_covariances(state, batch.x, batch.y);
    model = calibrate(state, config.f_max, penalties, config.als);
    if (have_validation)
      model.f_star =
          std::min(validator.current_f_star(), model.latent_count());
    have_model = true;
  };

  for (std::size_t u = 0; u < config.train_prefix; ++u)
    train_on(batches[u]);

  GridOutcome out;
  const std::size_t total = batches.size();
  const std::size_t tail = total - config.train_prefix;
  const std::size_t session_len =
      config.session_batches == 0 ? std::max<std::size_t>(tail, 1)
                                  : config.session_batches;

  std::vector<Eigen::VectorXd> sess_y, sess_pred;
  std::size_t session = 0;
  std::size_t sess_begin = config.train_prefix;
  std::size_t sess_count = 0;

  auto flush_session = [&](std::size_t end_batch) {
    MetricsRecord rec;
    rec.point = point;
    rec.session = session++;
    rec.batch_begin = sess_begin;
    rec.batch_end = end_batch;
    rec.dotp = dot_product_metric(sess_y, sess_pred);
    for (std::size_t m = 0; m < dims.size(); ++m)
      rec.sparse_idx_modes.push_back(model_sparse_idx(model, m));
    rec.f_star = model.f_star;
    rec.components = model.latent_count();
    out.records.push_back(std::move(rec));
    sess_y.clear();
    sess_pred.clear();
    sess_begin = end_batch;
    sess_count = 0;
  };

  for (std::size_t u = config.train_prefix; u < total; ++u) {
    const StreamBatch& batch = batches[u];
    auto preds = predict_batch(model, batch.x);
    sess_y.insert(sess_y.end(), batch.y.begin(), batch.y.end());
    sess_pred.insert(sess_pred.end(), preds.begin(), preds.end());
    ++sess_count;
    if (config.continue_adaptation) train_on(batch);
    if (sess_count == session_len || u + 1 == total) flush_session(u + 1);
  }

  out.model = std::move(model);
  return out;
}

}  // namespace

ReplayResult replay(const std::vector<StreamBatch>& batches,
                    const std::vector<std::size_t>& dims, std::size_t q,
                    const ReplayConfig& config) {
  if (batches.empty()) throw InvalidInput("empty stream");
  if (config.grid.empty()) throw InvalidInput("empty penalty grid");
  if (config.train_prefix == 0 || config.train_prefix > batches.size())
    throw InvalidInput("train_prefix must lie in [1, batch count]");
  if (config.f_max == 0) throw InvalidInput("f_max must be >= 1");
  if (!(config.mu >= 0.0 && config.mu <= 1.0))
    throw InvalidInput("mu must lie in [0, 1]");
  for (std::size_t m : config.penalized_modes)
    if (m >= dims.size()) throw InvalidInput("penalized mode out of range");
  for (const auto& g : config.grid)
    if (!(g.lambda >= 0.0 && g.lambda <= 1.0))
      throw InvalidInput("lambda must lie in [0, 1]");
  for (const auto& batch : batches) {
    if (batch.x.size() != batch.y.size() || batch.x.empty())
      throw InvalidInput("malformed stream batch");
  }

  const std::size_t jobs = config.grid.size();
  const std::size_t threads = resolve_thread_count(config.max_threads, jobs);

  std::vector<GridOutcome> outcomes(jobs);
  std::vector<std::exception_ptr> errors(threads);

  auto worker = [&](std::size_t t) {
    try {
      for (std::size_t gi = t; gi < jobs; gi += threads)
        outcomes[gi] =
            run_grid_point(batches, dims, q, config, config.grid[gi]);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ReplayResult result;
  for (auto& o : outcomes) {
    for (auto& rec : o.records) result.records.push_back(std::move(rec));
    result.final_models.push_back(std::move(o.model));
  }
  return result;
}

void write_metrics_jsonl(const std::string& path,
                         const std::string& stream_path,
                         const ReplayConfig& config,
                         const std::vector<std::size_t>& dims, std::size_t q,
                         const std::vector<MetricsRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);

  json header;
  header["record"] = "header";
  header["stream"] = stream_path;
  header["dims"] = dims;
  header["q"] = q;
  header["mu"] = config.mu;
  header["f_max"] = config.f_max;
  header["train_prefix"] = config.train_prefix;
  header["session_batches"] = config.session_batches;
  header["continue_adaptation"] = config.continue_adaptation;
  {
    std::vector<std::size_t> modes;
    for (std::size_t m : config.penalized_modes) modes.push_back(m + 1);
    header["penalized_modes"] = modes;
  }
  json grid = json::array();
  for (const auto& g : config.grid)
    grid.push_back({{"p", penalty_exponent(g.p)}, {"lambda", g.lambda}});
  header["grid"] = grid;
  out << header.dump() << "\n";

  for (const auto& rec : records) {
    json j;
    j["record"] = "metrics";
    j["p"] = penalty_exponent(rec.point.p);
    j["lambda"] = rec.point.lambda;
    j["f_star"] = rec.f_star;
    j["components"] = rec.components;
    j["session"] = rec.session;
    j["batch_begin"] = rec.batch_begin;
    j["batch_end"] = rec.batch_end;
    j["dotp_mean"] = rec.dotp.mean;
    j["dotp_median"] = rec.dotp.median;
    j["dotp_q1"] = rec.dotp.q1;
    j["dotp_q3"] = rec.dotp.q3;
    j["dotp_count"] = rec.dotp.count;
    j["dotp_skipped"] = rec.dotp.skipped;
    for (std::size_t m = 0; m < rec.sparse_idx_modes.size(); ++m)
      j["sparse_idx_mode_" + std::to_string(m + 1)] = rec.sparse_idx_modes[m];
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("metrics write failed");
}

}  // namespace npls
