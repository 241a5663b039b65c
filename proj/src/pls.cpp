#include "npls/pls.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "npls/errors.hpp"

namespace npls {

namespace {

using MatRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// xy laid out canonically with the output mode last is exactly a row-major
// P x Q matrix: row index = canonical flatten of the input multi-index.
Eigen::Map<MatRowMajor> xy_matrix(Tensor& xy, std::size_t p, std::size_t q) {
  return {xy.data().data(), static_cast<Eigen::Index>(p),
          static_cast<Eigen::Index>(q)};
}

Eigen::Map<const MatRowMajor> xy_matrix(const Tensor& xy, std::size_t p,
                                        std::size_t q) {
  return {xy.data().data(), static_cast<Eigen::Index>(p),
          static_cast<Eigen::Index>(q)};
}

void check_batch(const CovarianceState& state,
                 const std::vector<Tensor>& batch_x,
                 const std::vector<Eigen::VectorXd>& batch_y) {
  if (batch_x.empty()) throw InvalidInput("empty batch");
  if (batch_x.size() != batch_y.size())
    throw InvalidInput("batch X/Y sample counts differ");
  for (const auto& x : batch_x)
    if (x.dims() != state.x_dims)
      throw InvalidInput("sample dims do not match state");
  for (const auto& y : batch_y) {
    if (static_cast<std::size_t>(y.size()) != state.q)
      throw InvalidInput("output length does not match state");
    if (!y.allFinite()) throw InvalidInput("outputs must be finite");
  }
}

}  // namespace

std::size_t CovarianceState::input_size() const {
  std::size_t p = 1;
  for (std::size_t d : x_dims) p *= d;
  return p;
}

CovarianceState make_state(const std::vector<std::size_t>& x_dims,
                           std::size_t q, double mu) {
  if (x_dims.empty()) throw InvalidInput("at least one input mode required");
  for (std::size_t d : x_dims)
    if (d == 0) throw InvalidInput("input dims must be nonzero");
  if (q == 0) throw InvalidInput("output dimension must be nonzero");
  if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidInput("mu must lie in [0, 1]");

  CovarianceState s;
  s.x_dims = x_dims;
  s.q = q;
  s.mu = mu;
  const std::size_t p = s.input_size();
  s.mean_x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  s.mean_y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  s.xx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                               static_cast<Eigen::Index>(p));
  std::vector<std::size_t> xy_dims = x_dims;
  xy_dims.push_back(q);
  s.xy = Tensor(xy_dims);
  return s;
}

void update_covariances(CovarianceState& state,
                        const std::vector<Tensor>& batch_x,
                        const std::vector<Eigen::VectorXd>& batch_y) {
  check_batch(state, batch_x, batch_y);
  const std::size_t p = state.input_size();
  const Eigen::Index pi = static_cast<Eigen::Index>(p);
  const Eigen::Index qi = static_cast<Eigen::Index>(state.q);
  const Eigen::Index n = static_cast<Eigen::Index>(batch_x.size());

  Eigen::MatrixXd xb(n, pi), yb(n, qi);
  for (Eigen::Index i = 0; i < n; ++i) {
    xb.row(i) = batch_x[static_cast<std::size_t>(i)].vec().transpose();
    yb.row(i) = batch_y[static_cast<std::size_t>(i)].transpose();
  }

  const double w_old = state.mu * state.weight_sum;
  const double w_new = w_old + static_cast<double>(n);
  const Eigen::VectorXd mean_x_new =
      (w_old * state.mean_x + xb.colwise().sum().transpose()) / w_new;
  const Eigen::VectorXd mean_y_new =
      (w_old * state.mean_y + yb.colwise().sum().transpose()) / w_new;

  const Eigen::VectorXd dx = state.mean_x - mean_x_new;
  const Eigen::VectorXd dy = state.mean_y - mean_y_new;

  xb.rowwise() -= mean_x_new.transpose();
  yb.rowwise() -= mean_y_new.transpose();

  state.xx = state.mu * state.xx + w_old * (dx * dx.transpose()) +
             xb.transpose() * xb;
  auto xy = xy_matrix(state.xy, p, state.q);
  xy = state.mu * xy + w_old * (dx * dy.transpose()) + xb.transpose() * yb;

  state.weight_sum = w_new;
  state.mean_x = mean_x_new;
  state.mean_y = mean_y_new;
}

PlsModel calibrate(const CovarianceState& state, std::size_t f_max,
                   const std::vector<PenaltySpec>& input_penalties,
                   const AlsConfig& als_cfg) {
  const std::size_t m_count = state.x_dims.size();
  if (f_max == 0) throw InvalidInput("f_max must be >= 1");
  if (input_penalties.size() != m_count)
    throw InvalidInput("one PenaltySpec per input mode required");
  if (state.weight_sum <= 0.0)
    throw InvalidInput("cannot calibrate an empty state");
  for (const auto& spec : input_penalties)
    if (!(spec.lambda >= 0.0 && spec.lambda <= 1.0))
      throw InvalidInput("lambda must lie in [0, 1]");

  const std::size_t p = state.input_size();
  std::vector<std::size_t> xy_dims = state.x_dims;
  xy_dims.push_back(state.q);

  PlsModel model;
  model.x_dims = state.x_dims;
  model.q = state.q;
  model.mu = state.mu;
  model.f_max = f_max;
  model.mean_y = state.mean_y;
  model.penalty = input_penalties[0].p;
  model.lambda = 0.0;
  for (const auto& spec : input_penalties) {
    if (spec.lambda > model.lambda) {
      model.lambda = spec.lambda;
      model.penalty = spec.p;
    }
  }

  std::vector<PenaltySpec> penalties = input_penalties;
  penalties.push_back(PenaltySpec{Penalty::l1, 0.0});  // output mode

  ProtectionSet protection = ProtectionSet::all_penalizable(xy_dims);
  protection.penalizable.back().assign(state.q, false);  // output protected

  Tensor xy_work = state.xy;
  auto xy = xy_matrix(xy_work, p, state.q);

  Eigen::MatrixXd beta_acc = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(state.q));

  const double v_floor = 1e-12 * (1.0 + state.xx.trace());
  double first_scale = 0.0;

  for (std::size_t f = 1; f <= f_max; ++f) {
    const double scale = frobenius_norm(xy_work);
    if (f == 1)
      first_scale = scale;
    if (scale == 0.0 || (f > 1 && scale <= 1e-12 * first_scale)) break;

    Tensor t = xy_work;
    t.vec() /= scale;

    const Rank1Result fit =
        penalized_als_rank1(t, penalties, protection, als_cfg);
    if (fit.status == AlsStatus::annihilated ||
        fit.status == AlsStatus::degenerate)
      break;

    protection = update_protection_set(protection, fit.projectors);

    // r = vec(w^1 o ... o w^M): chained Kronecker, mode 0 slowest.
    Eigen::VectorXd r = fit.projectors.ws[0];
    for (std::size_t m = 1; m < m_count; ++m)
      r = kronecker(r, fit.projectors.ws[m]);

    const double v = r.dot(state.xx * r);
    if (!(v > v_floor)) break;

    const Eigen::VectorXd p_load = state.xx * r / v;
    const Eigen::VectorXd c = xy.transpose() * r / v;
    xy -= v * (p_load * c.transpose());

    beta_acc += r * c.transpose();

    PlsComponent comp;
    comp.ws = fit.projectors.ws;
    comp.rho = fit.projectors.rho;
    comp.v = v;
    comp.p_load = p_load;
    comp.c = c;
    comp.scale = scale;
    {
      MatRowMajor beta_row = beta_acc;
      std::vector<double> data(beta_row.data(), beta_row.data() + beta_row.size());
      comp.beta = Tensor(xy_dims, std::move(data));
    }
    comp.bias = state.mean_y - beta_acc.transpose() * state.mean_x;
    model.components.push_back(std::move(comp));
  }

  model.f_star = model.components.size();
  return model;
}

Eigen::VectorXd predict(const PlsModel& model, const Tensor& x,
                        std::optional<std::size_t> f) {
  if (x.dims() != model.x_dims)
    throw InvalidInput("sample dims do not match model");
  std::size_t depth = f.value_or(model.f_star);
  if (depth > model.latent_count())
    throw InvalidInput("latent depth exceeds stored components");
  if (depth == 0) return model.mean_y;

  const PlsComponent& comp = model.components[depth - 1];
  const std::size_t p = x.size();
  auto beta = xy_matrix(comp.beta, p, model.q);
  return beta.transpose() * x.vec() + comp.bias;
}

std::vector<Eigen::VectorXd> predict_batch(const PlsModel& model,
                                           const std::vector<Tensor>& batch_x,
                                           std::optional<std::size_t> f) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(batch_x.size());
  for (const auto& x : batch_x) out.push_back(predict(model, x, f));
  return out;
}

RecursiveValidator::RecursiveValidator(std::size_t f_max, double mu)
    : mu_(mu) {
  if (f_max == 0) throw InvalidInput("f_max must be >= 1");
  if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidInput("mu must lie in [0, 1]");
  errors_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f_max));
}

std::size_t RecursiveValidator::step(
    const PlsModel& model, const std::vector<Tensor>& batch_x,
    const std::vector<Eigen::VectorXd>& batch_y) {
  if (batch_x.empty() || batch_x.size() != batch_y.size())
    throw InvalidInput("bad validation batch");
  const std::size_t f_max = static_cast<std::size_t>(errors_.size());
  for (std::size_t f = 1; f <= f_max; ++f) {
    // Depths beyond the stored components fall back to the deepest one.
    const std::size_t depth = std::min(f, model.latent_count());
    double err = 0.0;
    for (std::size_t i = 0; i < batch_x.size(); ++i)
      err += (batch_y[i] - predict(model, batch_x[i], depth)).squaredNorm();
    errors_(static_cast<Eigen::Index>(f - 1)) =
        mu_ * errors_(static_cast<Eigen::Index>(f - 1)) + err;
  }
  return current_f_star();
}

std::size_t RecursiveValidator::current_f_star() const {
  std::size_t best = 1;
  for (Eigen::Index i = 1; i < errors_.size(); ++i)
    if (errors_(i) < errors_(static_cast<Eigen::Index>(best - 1)))
      best = static_cast<std::size_t>(i) + 1;
  return best;
}

std::vector<std::size_t> sparsity_pattern(const PlsModel& model,
                                          std::size_t mode) {
  if (mode >= model.x_dims.size()) throw InvalidInput("mode out of range");
  const std::size_t dim = model.x_dims[mode];
  const std::size_t depth = std::min(model.f_star, model.latent_count());
  std::vector<std::size_t> pattern;
  for (std::size_t j = 0; j < dim; ++j) {
    bool all_zero = true;
    for (std::size_t f = 0; f < depth && all_zero; ++f)
      all_zero = model.components[f].ws[mode](static_cast<Eigen::Index>(j)) == 0.0;
    if (all_zero) pattern.push_back(j);
  }
  return pattern;
}

double model_sparse_idx(const PlsModel& model, std::size_t mode) {
  return static_cast<double>(sparsity_pattern(model, mode).size()) /
         static_cast<double>(model.x_dims[mode]);
}

// --- model container ------------------------------------------------------

namespace {

constexpr char kModelMagic[6] = {'N', 'P', 'L', 'S', 'M', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated model file");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw IoError("truncated model file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

Tensor vector_tensor(const Eigen::VectorXd& v) {
  return Tensor({static_cast<std::size_t>(v.size())},
                std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd tensor_vector(const Tensor& t) {
  if (t.order() != 1) throw IoError("expected an order-1 tensor block");
  return Eigen::Map<const Eigen::VectorXd>(
      t.data().data(), static_cast<Eigen::Index>(t.size()));
}

std::uint8_t penalty_code(Penalty p) {
  switch (p) {
    case Penalty::l0: return 0;
    case Penalty::l05: return 1;
    case Penalty::l1: return 2;
  }
  throw InvalidInput("unknown penalty");
}

Penalty penalty_from_code(std::uint8_t c) {
  switch (c) {
    case 0: return Penalty::l0;
    case 1: return Penalty::l05;
    case 2: return Penalty::l1;
  }
  throw IoError("bad penalty code in model file");
}

}  // namespace

void save_model(const std::string& path, const PlsModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kModelMagic, 6);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(model.x_dims.size()));
  for (std::size_t d : model.x_dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(model.q));
  out.put(static_cast<char>(penalty_code(model.penalty)));
  put_f64(out, model.lambda);
  put_f64(out, model.mu);
  put_u32(out, static_cast<std::uint32_t>(model.f_max));
  put_u32(out, static_cast<std::uint32_t>(model.latent_count()));
  put_u32(out, static_cast<std::uint32_t>(model.f_star));
  write_tensor_stream(out, vector_tensor(model.mean_y));
  for (const auto& comp : model.components) {
    put_f64(out, comp.rho);
    put_f64(out, comp.v);
    put_f64(out, comp.scale);
    for (const auto& w : comp.ws) write_tensor_stream(out, vector_tensor(w));
    write_tensor_stream(out, vector_tensor(comp.p_load));
    write_tensor_stream(out, vector_tensor(comp.c));
    write_tensor_stream(out, comp.beta);
    write_tensor_stream(out, vector_tensor(comp.bias));
  }
  if (!out) throw IoError("model write failed");
}

PlsModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kModelMagic, 6) != 0)
    throw IoError("bad model magic (expected NPLSM1)");
  if (get_u32(in) != 1) throw IoError("unsupported model version");

  PlsModel model;
  const std::uint32_t m_count = get_u32(in);
  if (m_count == 0 || m_count > 64) throw IoError("unreasonable mode count");
  model.x_dims.resize(m_count);
  for (auto& d : model.x_dims) {
    d = get_u32(in);
    if (d == 0) throw IoError("zero input dim in model file");
  }
  model.q = get_u32(in);
  if (model.q == 0) throw IoError("zero output dim in model file");
  int pc = in.get();
  if (pc < 0) throw IoError("truncated model file");
  model.penalty = penalty_from_code(static_cast<std::uint8_t>(pc));
  model.lambda = get_f64(in);
  model.mu = get_f64(in);
  model.f_max = get_u32(in);
  const std::uint32_t f_count = get_u32(in);
  model.f_star = get_u32(in);
  model.mean_y = tensor_vector(read_tensor_stream(in));
  if (static_cast<std::size_t>(model.mean_y.size()) != model.q)
    throw IoError("mean_y length mismatch");

  std::vector<std::size_t> xy_dims = model.x_dims;
  xy_dims.push_back(model.q);
  std::size_t p = 1;
  for (std::size_t d : model.x_dims) p *= d;

  for (std::uint32_t f = 0; f < f_count; ++f) {
    PlsComponent comp;
    comp.rho = get_f64(in);
    comp.v = get_f64(in);
    comp.scale = get_f64(in);
    comp.ws.reserve(m_count + 1);
    for (std::uint32_t m = 0; m <= m_count; ++m) {
      Eigen::VectorXd w = tensor_vector(read_tensor_stream(in));
      const std::size_t want = m < m_count ? model.x_dims[m] : model.q;
      if (static_cast<std::size_t>(w.size()) != want)
        throw IoError("factor length mismatch in model file");
      comp.ws.push_back(std::move(w));
    }
    comp.p_load = tensor_vector(read_tensor_stream(in));
    if (static_cast<std::size_t>(comp.p_load.size()) != p)
      throw IoError("input loading length mismatch");
    comp.c = tensor_vector(read_tensor_stream(in));
    if (static_cast<std::size_t>(comp.c.size()) != model.q)
      throw IoError("output loading length mismatch");
    comp.beta = read_tensor_stream(in);
    if (comp.beta.dims() != xy_dims) throw IoError("beta dims mismatch");
    comp.bias = tensor_vector(read_tensor_stream(in));
    if (static_cast<std::size_t>(comp.bias.size()) != model.q)
      throw IoError("bias length mismatch");
    model.components.push_back(std::move(comp));
  }
  if (model.f_star > model.latent_count())
    throw IoError("f_star exceeds stored components");
  return model;
}

std::string summarize(const PlsModel& model) {
  std::ostringstream os;
  os << "input dims:";
  for (std::size_t d : model.x_dims) os << ' ' << d;
  os << "\noutputs: " << model.q << "\n";
  os << "penalty: ";
  switch (model.penalty) {
    case Penalty::l0: os << "l0"; break;
    case Penalty::l05: os << "l05"; break;
    case Penalty::l1: os << "l1"; break;
  }
  os << "  lambda: " << model.lambda << "  mu: " << model.mu << "\n";
  os << "latent: " << model.latent_count() << " stored (f_max " << model.f_max
     << "), f_star " << model.f_star << "\n";
  for (std::size_t m = 0; m < model.x_dims.size(); ++m) {
    const auto pattern = sparsity_pattern(model, m);
    os << "mode " << (m + 1) << ": " << pattern.size() << "/"
       << model.x_dims[m] << " slices zero at f_star (sparse_idx "
       << model_sparse_idx(model, m) << ")\n";
  }
  for (std::size_t f = 0; f < model.latent_count(); ++f) {
    const auto& comp = model.components[f];
    os << "  f=" << (f + 1) << " scale " << comp.scale << " v " << comp.v
       << " |c| " << comp.c.norm() << "\n";
  }
  return os.str();
}

}  // namespace npls
