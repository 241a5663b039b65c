#include "npls/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "npls/errors.hpp"

namespace npls {

namespace {

std::size_t checked_size(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw InvalidInput("tensor order must be >= 1");
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw InvalidInput("tensor dims must be nonzero");
    if (d > std::numeric_limits<std::size_t>::max() / n)
      throw InvalidInput("tensor size overflow");
    n *= d;
  }
  return n;
}

void check_finite(const std::vector<double>& data) {
  for (double v : data)
    if (!std::isfinite(v)) throw InvalidInput("tensor entries must be finite");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_size(dims_) != data_.size())
    throw InvalidInput("tensor data length does not match dims");
  check_finite(data_);
}

std::size_t Tensor::dim(std::size_t mode) const {
  if (mode >= dims_.size()) throw InvalidInput("mode out of range");
  return dims_[mode];
}

std::size_t Tensor::linear_index(const std::vector<std::size_t>& index) const {
  if (index.size() != dims_.size())
    throw InvalidInput("index order does not match tensor order");
  std::size_t lin = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (index[k] >= dims_[k]) throw InvalidInput("index out of range");
    lin = lin * dims_[k] + index[k];
  }
  return lin;
}

double Tensor::at(const std::vector<std::size_t>& index) const {
  return data_[linear_index(index)];
}

double& Tensor::at(const std::vector<std::size_t>& index) {
  return data_[linear_index(index)];
}

Eigen::Map<const Eigen::VectorXd> Tensor::vec() const {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::Map<Eigen::VectorXd> Tensor::vec() {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::MatrixXd mode_unfold(const Tensor& t, std::size_t mode) {
  const auto& dims = t.dims();
  const std::size_t m = dims.size();
  if (mode >= m) throw InvalidInput("mode out of range");

  std::size_t cols = 1;
  for (std::size_t k = 0; k < m; ++k)
    if (k != mode) cols *= dims[k];

  // Column stride of mode k: product of the dims of lower modes, mode
  // `mode` excluded.  Lowest remaining mode varies fastest.
  std::vector<std::size_t> col_stride(m, 0);
  std::size_t s = 1;
  for (std::size_t k = 0; k < m; ++k) {
    if (k == mode) continue;
    col_stride[k] = s;
    s *= dims[k];
  }

  Eigen::MatrixXd out(static_cast<Eigen::Index>(dims[mode]),
                      static_cast<Eigen::Index>(cols));
  std::vector<std::size_t> idx(m, 0);
  const auto& data = t.data();
  for (std::size_t lin = 0; lin < data.size(); ++lin) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < m; ++k)
      if (k != mode) col += idx[k] * col_stride[k];
    out(static_cast<Eigen::Index>(idx[mode]),
        static_cast<Eigen::Index>(col)) = data[lin];
    // advance canonical multi-index (last mode fastest)
    for (std::size_t k = m; k-- > 0;) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

Tensor mode_fold(const Eigen::MatrixXd& mat, std::size_t mode,
                 const std::vector<std::size_t>& dims) {
  const std::size_t m = dims.size();
  checked_size(dims);
  if (mode >= m) throw InvalidInput("mode out of range");

  std::size_t cols = 1;
  for (std::size_t k = 0; k < m; ++k)
    if (k != mode) cols *= dims[k];
  if (mat.rows() != static_cast<Eigen::Index>(dims[mode]) ||
      mat.cols() != static_cast<Eigen::Index>(cols))
    throw InvalidInput("unfolded matrix shape does not match dims");

  std::vector<std::size_t> col_stride(m, 0);
  std::size_t s = 1;
  for (std::size_t k = 0; k < m; ++k) {
    if (k == mode) continue;
    col_stride[k] = s;
    s *= dims[k];
  }

  Tensor t(dims);
  auto& data = t.data();
  std::vector<std::size_t> idx(m, 0);
  for (std::size_t lin = 0; lin < data.size(); ++lin) {
    std::size_t col = 0;
    for (std::size_t k = 0; k < m; ++k)
      if (k != mode) col += idx[k] * col_stride[k];
    data[lin] = mat(static_cast<Eigen::Index>(idx[mode]),
                    static_cast<Eigen::Index>(col));
    for (std::size_t k = m; k-- > 0;) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
  return t;
}

Eigen::VectorXd kronecker(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(u.size() * v.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    out.segment(i * v.size(), v.size()) = u(i) * v;
  return out;
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols())
    throw InvalidInput("khatri_rao operands must have equal column counts");
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r)
    out.col(r) = kronecker(a.col(r), b.col(r));
  return out;
}

Tensor outer_rank1(double rho, const std::vector<Eigen::VectorXd>& ws) {
  if (ws.empty()) throw InvalidInput("outer_rank1 needs at least one factor");
  if (!std::isfinite(rho)) throw InvalidInput("rho must be finite");
  std::vector<std::size_t> dims;
  dims.reserve(ws.size());
  for (const auto& w : ws) {
    if (w.size() == 0) throw InvalidInput("empty factor");
    if (std::abs(w.norm() - 1.0) > 1e-8)
      throw InvalidInput("outer_rank1 factors must be unit norm");
    dims.push_back(static_cast<std::size_t>(w.size()));
  }
  // Canonical layout makes vec(outer) = ws[0] kron ws[1] kron ... kron
  // ws[M-1] (mode 0 slowest), so build by chained Kronecker.
  Eigen::VectorXd acc = ws[0];
  for (std::size_t k = 1; k < ws.size(); ++k) acc = kronecker(acc, ws[k]);
  acc *= rho;
  return Tensor(dims, std::vector<double>(acc.data(), acc.data() + acc.size()));
}

double frobenius_norm(const Tensor& t) { return t.vec().norm(); }

Eigen::VectorXd kron_excluding(const std::vector<Eigen::VectorXd>& ws,
                               std::size_t mode) {
  if (mode >= ws.size()) throw InvalidInput("mode out of range");
  Eigen::VectorXd acc(1);
  acc(0) = 1.0;
  for (std::size_t k = ws.size(); k-- > 0;) {
    if (k == mode) continue;
    acc = kronecker(acc, ws[k]);
  }
  return acc;
}

// --- file I/O -------------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'N', 'T', 'N', 'S', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated tensor header");
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
  if (!in) throw IoError("truncated tensor payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_tensor_stream(std::ostream& out, const Tensor& t) {
  out.write(kMagic, 5);
  put_u32(out, static_cast<std::uint32_t>(t.order()));
  for (std::size_t d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) put_f64(out, v);
  if (!out) throw IoError("tensor write failed");
}

Tensor read_tensor_stream(std::istream& in) {
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kMagic, 5) != 0)
    throw IoError("bad tensor magic (expected NTNS1)");
  const std::uint32_t order = get_u32(in);
  if (order == 0 || order > 64) throw IoError("unreasonable tensor order");
  std::vector<std::size_t> dims(order);
  std::size_t n = 1;
  for (auto& d : dims) {
    d = get_u32(in);
    if (d == 0) throw IoError("zero tensor dim");
    if (d > (std::size_t(1) << 40) / n) throw IoError("unreasonable tensor size");
    n *= d;
  }
  std::vector<double> data(n);
  for (auto& v : data) v = get_f64(in);
  try {
    return Tensor(std::move(dims), std::move(data));
  } catch (const InvalidInput& e) {
    throw IoError(std::string("invalid tensor payload: ") + e.what());
  }
}

void write_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_tensor_stream(out, t);
}

Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  return read_tensor_stream(in);
}

void write_csv(const std::string& path, const Tensor& t) {
  if (t.order() != 2) throw InvalidInput("CSV export is for order-2 tensors");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(17);
  const std::size_t rows = t.dims()[0], cols = t.dims()[1];
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out << ',';
      out << t.data()[i * cols + j];
    }
    out << '\n';
  }
  if (!out) throw IoError("CSV write failed");
}

Tensor read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<double> data;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        data.push_back(std::stod(cell, &pos));
      } catch (const std::exception&) {
        throw IoError("bad CSV value: " + cell);
      }
      ++c;
    }
    if (rows == 0)
      cols = c;
    else if (c != cols)
      throw IoError("ragged CSV rows");
    ++rows;
  }
  if (rows == 0) throw IoError("empty CSV");
  try {
    return Tensor({rows, cols}, std::move(data));
  } catch (const InvalidInput& e) {
    throw IoError(std::string("invalid CSV payload: ") + e.what());
  }
}

}  // namespace npls
