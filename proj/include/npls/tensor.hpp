#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace npls {

// Dense real tensor of order M >= 1.
//
// Canonical layout: the last index varies fastest, i.e. the linear offset of
// (j_0, ..., j_{M-1}) is sum_k j_k * stride_k with stride_{M-1} = 1 and
// stride_k = stride_{k+1} * dim_{k+1}.  An order-2 tensor is therefore a
// row-major matrix.  All entries must be finite.
class Tensor {
public:
  Tensor() = default;
  // Zero-filled tensor.  Every dim must be nonzero.
  explicit Tensor(std::vector<std::size_t> dims);
  // Takes ownership of data laid out canonically; rejects NaN/Inf entries.
  Tensor(std::vector<std::size_t> dims, std::vector<double> data);

  std::size_t order() const { return dims_.size(); }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t dim(std::size_t mode) const;
  std::size_t size() const { return data_.size(); }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double at(const std::vector<std::size_t>& index) const;
  double& at(const std::vector<std::size_t>& index);

  std::size_t linear_index(const std::vector<std::size_t>& index) const;

  // Whole tensor viewed as a flat vector in canonical order.
  Eigen::Map<const Eigen::VectorXd> vec() const;
  Eigen::Map<Eigen::VectorXd> vec();

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

// Mode-m unfolding (0-based mode), shape I_m x prod_{k != m} I_k.  Column
// ordering follows the Kronecker convention used throughout: among the
// remaining modes the lowest mode index varies fastest, so for a rank-1
// tensor rho * w^0 o ... o w^{M-1}
//   mode_unfold(t, m) = rho * w^m * (w^{M-1} kron ... kron w^{m+1} kron
//                                    w^{m-1} kron ... kron w^0)^T.
Eigen::MatrixXd mode_unfold(const Tensor& t, std::size_t mode);

// Inverse of mode_unfold for the given dims; bijective with it.
Tensor mode_fold(const Eigen::MatrixXd& mat, std::size_t mode,
                 const std::vector<std::size_t>& dims);

// kron(u, v): u's index slow, v's fast; length u.size()*v.size().
Eigen::VectorXd kronecker(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Column-wise Kronecker product of two matrices with equal column counts.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// rho * ws[0] o ws[1] o ... o ws[M-1].  Factors must be unit norm within
// 1e-8 (scale belongs in rho); throws InvalidInput otherwise.
Tensor outer_rank1(double rho, const std::vector<Eigen::VectorXd>& ws);

double frobenius_norm(const Tensor& t);

// The Kronecker chain omitting `mode`: ws[M-1] kron ... kron ws[mode+1] kron
// ws[mode-1] kron ... kron ws[0].  This is the k_m vector the ALS updates
// contract against.
Eigen::VectorXd kron_excluding(const std::vector<Eigen::VectorXd>& ws,
                               std::size_t mode);

// --- file I/O -------------------------------------------------------------
//
// Binary tensor format (little-endian):
//   bytes 0..4   magic "NTNS1"
//   u32          order M
//   M x u32      dims
//   prod(dims) x f64  values in canonical layout
// Streaming variants let several tensors share one file back to back.

void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

void write_tensor_stream(std::ostream& out, const Tensor& t);
Tensor read_tensor_stream(std::istream& in);

// CSV convenience for order-2 tensors, one row per line.
void write_csv(const std::string& path, const Tensor& t);
Tensor read_csv(const std::string& path);

}  // namespace npls
