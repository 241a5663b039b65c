#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "npls/errors.hpp"
#include "npls/tensor.hpp"
#include "test_support.hpp"

using namespace npls;
using test_support::TestRng;

namespace {
std::filesystem::path tmp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("linear index is last-index-fastest") {
  Tensor t({2, 3, 4});
  std::size_t flat = 0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k)
        CHECK(t.linear_index({i, j, k}) == flat++);
  CHECK(t.size() == 24);
  CHECK(t.order() == 3);
}

TEST_CASE("at writes through to the flat buffer") {
  Tensor t({2, 2});
  t.at({0, 1}) = 5.0;
  CHECK(t.data()[1] == 5.0);
  CHECK(t.vec()(1) == 5.0);
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{}), InvalidInput);
  CHECK_THROWS_AS(Tensor({3, 0, 2}), InvalidInput);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), InvalidInput);
}

TEST_CASE("mode_unfold matches the index-map oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TestRng rng(seed);
    std::vector<std::size_t> dims = seed == 1   ? std::vector<std::size_t>{3, 4}
                                    : seed == 2 ? std::vector<std::size_t>{2, 3, 4}
                                                : std::vector<std::size_t>{2, 3, 2, 4};
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    std::vector<double> data(total);
    for (double& x : data) x = rng.gaussian();
    Tensor t(dims, data);
    for (std::size_t m = 0; m < dims.size(); ++m) {
      const Eigen::MatrixXd got = mode_unfold(t, m);
      const Eigen::MatrixXd want = test_support::unfold_oracle(t, m);
      CHECK((got - want).norm() == 0.0);
    }
  }
}

TEST_CASE("mode_fold inverts mode_unfold") {
  TestRng rng(4);
  std::vector<std::size_t> dims = {3, 2, 4};
  std::vector<double> data(24);
  for (double& x : data) x = rng.gaussian();
  Tensor t(dims, data);
  for (std::size_t m = 0; m < 3; ++m) {
    const Tensor back = mode_fold(mode_unfold(t, m), m, dims);
    CHECK(back.dims() == dims);
    for (std::size_t i = 0; i < t.size(); ++i)
      CHECK(back.data()[i] == t.data()[i]);
  }
}

TEST_CASE("kronecker ordering: left factor is the slow index") {
  Eigen::Vector2d u(1, 2);
  Eigen::Vector3d v(3, 4, 5);
  const Eigen::VectorXd k = kronecker(u, v);
  REQUIRE(k.size() == 6);
  CHECK(k(0) == 3);
  CHECK(k(2) == 5);
  CHECK(k(3) == 6);
  CHECK(k(5) == 10);
}

TEST_CASE("khatri_rao is the column-wise kronecker") {
  Eigen::MatrixXd a(2, 2), b(3, 2);
  a << 1, 2, 3, 4;
  b << 1, 0, 0, 1, 2, 2;
  const Eigen::MatrixXd kr = khatri_rao(a, b);
  REQUIRE(kr.rows() == 6);
  REQUIRE(kr.cols() == 2);
  CHECK(kr(0, 0) == 1);
  CHECK(kr(2, 0) == 2);
  CHECK(kr(3, 0) == 3);
  CHECK(kr(1, 1) == 2);
  CHECK(kr(4, 1) == 4);
}

TEST_CASE("outer_rank1 lays the chain out canonically") {
  Eigen::Vector2d w1(1, 2);
  Eigen::Vector3d w2_raw(1, 0, -1);
  const Eigen::VectorXd w2 = w2_raw.normalized();
  const Eigen::VectorXd w1n = w1.normalized();
  const Tensor t = outer_rank1(3.0, {w1n, w2});
  CHECK(t.dims() == std::vector<std::size_t>{2, 3});
  const Eigen::VectorXd want = 3.0 * kronecker(w1n, w2);
  CHECK((t.vec() - want).norm() < 1e-14);
}

TEST_CASE("outer_rank1 rejects non-unit factors") {
  Eigen::Vector2d big(3, 4);
  CHECK_THROWS_AS(outer_rank1(1.0, {Eigen::VectorXd(big)}), InvalidInput);
}

TEST_CASE("kron_excluding chains high modes first") {
  std::vector<Eigen::VectorXd> ws = {Eigen::Vector2d(1, 2),
                                     Eigen::Vector2d(3, 4),
                                     Eigen::Vector2d(5, 6)};
  // excluding mode 1: w3 kron w1 per the unfold column convention
  const Eigen::VectorXd k = kron_excluding(ws, 1);
  const Eigen::VectorXd want = kronecker(ws[2], ws[0]);
  CHECK((k - want).norm() == 0.0);
}

TEST_CASE("unfold row times kron_excluding reproduces contraction") {
  TestRng rng(9);
  std::vector<std::size_t> dims = {3, 4, 2};
  std::vector<double> data(24);
  for (double& x : data) x = rng.gaussian();
  Tensor t(dims, data);
  std::vector<Eigen::VectorXd> ws;
  for (auto d : dims) ws.push_back(rng.unit_vector(static_cast<Eigen::Index>(d)));
  for (std::size_t m = 0; m < 3; ++m) {
    const Eigen::MatrixXd unf = mode_unfold(t, m);
    const Eigen::VectorXd k = kron_excluding(ws, m);
    const Eigen::VectorXd got = unf * k;
    // direct contraction over all indices
    Eigen::VectorXd want = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(dims[m]));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t l = 0; l < 2; ++l) {
          const double v = t.at({i, j, l});
          const std::size_t idx[3] = {i, j, l};
          double prod = v;
          for (std::size_t mm = 0; mm < 3; ++mm)
            if (mm != m)
              prod *= ws[mm](static_cast<Eigen::Index>(idx[mm]));
          want(static_cast<Eigen::Index>(idx[m])) += prod;
        }
    CHECK((got - want).norm() < 1e-12 * (1.0 + want.norm()));
  }
}

TEST_CASE("tensor file round trip is byte-stable") {
  TestRng rng(5);
  std::vector<double> data(30);
  for (double& x : data) x = rng.gaussian();
  Tensor t({5, 6}, data);
  const auto path = tmp_file("npls_tensor_rt.ntns");
  write_tensor(path.string(), t);
  const Tensor back = read_tensor(path.string());
  CHECK(back.dims() == t.dims());
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(back.data()[i] == t.data()[i]);

  // writing the reread tensor reproduces the same bytes
  const auto path2 = tmp_file("npls_tensor_rt2.ntns");
  write_tensor(path2.string(), back);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(sa.size() == 5 + 4 + 2 * 4 + 30 * 8);
}

TEST_CASE("truncated tensor files are rejected") {
  TestRng rng(6);
  std::vector<double> data(12);
  for (double& x : data) x = rng.gaussian();
  const auto path = tmp_file("npls_tensor_trunc.ntns");
  write_tensor(path.string(), Tensor({3, 4}, data));
  const auto sz = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, sz - 5);
  CHECK_THROWS_AS(read_tensor(path.string()), IoError);

  std::ofstream bad(path, std::ios::binary);
  bad << "NOPE1";
  bad.close();
  CHECK_THROWS_AS(read_tensor(path.string()), IoError);
}

TEST_CASE("csv round trip for order-2 only") {
  Tensor t({2, 3}, {1.5, -2.0, 3.25, 0.0, 1e-17, 7.0});
  const auto path = tmp_file("npls_tensor.csv");
  write_csv(path.string(), t);
  const Tensor back = read_csv(path.string());
  CHECK(back.dims() == t.dims());
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(back.data()[i] == t.data()[i]);

  CHECK_THROWS_AS(write_csv(path.string(), Tensor({2, 2, 2})), InvalidInput);

  std::ofstream ragged(path);
  ragged << "1,2,3\n4,5\n";
  ragged.close();
  CHECK_THROWS_AS(read_csv(path.string()), IoError);
}

TEST_CASE("frobenius_norm matches the flat norm") {
  TestRng rng(7);
  std::vector<double> data(24);
  for (double& x : data) x = rng.gaussian();
  Tensor t({2, 3, 4}, data);
  CHECK(frobenius_norm(t) == doctest::Approx(t.vec().norm()).epsilon(1e-15));
}
