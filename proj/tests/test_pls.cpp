#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "npls/errors.hpp"
#include "npls/pls.hpp"
#include "test_support.hpp"

using namespace npls;
using test_support::TestRng;

namespace {

Tensor tensor_from(const Eigen::VectorXd& flat,
                   const std::vector<std::size_t>& dims) {
  std::vector<double> data(flat.data(), flat.data() + flat.size());
  return Tensor(dims, std::move(data));
}

struct Batch {
  std::vector<Tensor> x;
  std::vector<Eigen::VectorXd> y;
  Eigen::MatrixXd x_raw;  // N x P
  Eigen::MatrixXd y_raw;  // N x Q
};

Batch random_batch(TestRng& rng, const std::vector<std::size_t>& dims,
                   std::size_t q, std::size_t n) {
  std::size_t p = 1;
  for (std::size_t d : dims) p *= d;
  Batch b;
  b.x_raw.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  b.y_raw.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd xf = rng.gaussian_vector(p);
    const Eigen::VectorXd yf = rng.gaussian_vector(q);
    b.x_raw.row(static_cast<Eigen::Index>(i)) = xf.transpose();
    b.y_raw.row(static_cast<Eigen::Index>(i)) = yf.transpose();
    b.x.push_back(tensor_from(xf, dims));
    b.y.push_back(yf);
  }
  return b;
}

// one-component model over x_dims {2}, q 1: depth-1 beta (1,0), depth-2 (1,1)
PlsModel two_depth_model() {
  PlsModel m;
  m.x_dims = {2};
  m.q = 1;
  m.f_max = 2;
  m.f_star = 2;
  m.mean_y = Eigen::VectorXd::Zero(1);
  for (int f = 0; f < 2; ++f) {
    PlsComponent c;
    c.ws = {Eigen::Vector2d(1.0, 0.0), Eigen::VectorXd::Ones(1)};
    c.rho = 1.0;
    c.v = 1.0;
    c.p_load = Eigen::Vector2d(1.0, 0.0);
    c.c = Eigen::VectorXd::Ones(1);
    c.scale = 1.0;
    c.beta = f == 0 ? Tensor({2, 1}, {1.0, 0.0}) : Tensor({2, 1}, {1.0, 1.0});
    c.bias = Eigen::VectorXd::Zero(1);
    m.components.push_back(std::move(c));
  }
  return m;
}

}  // namespace

TEST_CASE("make_state validates its inputs") {
  CHECK_THROWS_AS(make_state({}, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(make_state({3, 0}, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(make_state({3}, 0, 1.0), InvalidInput);
  CHECK_THROWS_AS(make_state({3}, 1, 1.5), InvalidInput);
  CHECK_THROWS_AS(make_state({3}, 1, -0.1), InvalidInput);
  const CovarianceState s = make_state({3, 2}, 2, 0.9);
  CHECK(s.input_size() == 6);
  CHECK(s.xy.dims() == std::vector<std::size_t>{3, 2, 2});
  CHECK(s.weight_sum == 0.0);
}

TEST_CASE("incremental mu=1 updates equal the one-shot statistics") {
  TestRng rng(50);
  const std::vector<std::size_t> dims{3, 2};
  const std::size_t q = 2;
  const Batch b1 = random_batch(rng, dims, q, 4);
  const Batch b2 = random_batch(rng, dims, q, 5);
  const Batch b3 = random_batch(rng, dims, q, 3);

  CovarianceState inc = make_state(dims, q, 1.0);
  update_covariances(inc, b1.x, b1.y);
  update_covariances(inc, b2.x, b2.y);
  update_covariances(inc, b3.x, b3.y);

  CovarianceState once = make_state(dims, q, 1.0);
  std::vector<Tensor> all_x;
  std::vector<Eigen::VectorXd> all_y;
  for (const Batch* b : {&b1, &b2, &b3}) {
    all_x.insert(all_x.end(), b->x.begin(), b->x.end());
    all_y.insert(all_y.end(), b->y.begin(), b->y.end());
  }
  update_covariances(once, all_x, all_y);

  CHECK(inc.weight_sum == doctest::Approx(12.0).epsilon(1e-15));
  CHECK((inc.mean_x - once.mean_x).norm() < 1e-12);
  CHECK((inc.mean_y - once.mean_y).norm() < 1e-12);
  CHECK((inc.xx - once.xx).norm() < 1e-11 * (1.0 + once.xx.norm()));
  CHECK((inc.xy.vec() - once.xy.vec()).norm() <
        1e-11 * (1.0 + once.xy.vec().norm()));
}

TEST_CASE("mu<1 updates equal the explicitly weighted statistics") {
  TestRng rng(51);
  const std::vector<std::size_t> dims{2, 3};
  const std::size_t q = 2;
  const double mu = 0.7;
  const std::vector<std::size_t> sizes{4, 3, 5};
  std::vector<Batch> batches;
  for (std::size_t n : sizes) batches.push_back(random_batch(rng, dims, q, n));

  CovarianceState st = make_state(dims, q, mu);
  for (const Batch& b : batches) update_covariances(st, b.x, b.y);

  // per-sample weight mu^(K-1-i) for a sample of batch i
  const std::size_t pk = st.input_size();
  double wsum = 0.0;
  Eigen::VectorXd sx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pk));
  Eigen::VectorXd sy = Eigen::VectorXd::Zero(2);
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const double w = std::pow(mu, double(batches.size() - 1 - i));
    wsum += w * double(sizes[i]);
    sx += w * batches[i].x_raw.colwise().sum().transpose();
    sy += w * batches[i].y_raw.colwise().sum().transpose();
  }
  const Eigen::VectorXd mx = sx / wsum;
  const Eigen::VectorXd my = sy / wsum;
  Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pk),
                                             static_cast<Eigen::Index>(pk));
  Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pk), 2);
  for (std::size_t i = 0; i < batches.size(); ++i) {
    const double w = std::pow(mu, double(batches.size() - 1 - i));
    Eigen::MatrixXd xc = batches[i].x_raw;
    Eigen::MatrixXd yc = batches[i].y_raw;
    xc.rowwise() -= mx.transpose();
    yc.rowwise() -= my.transpose();
    xx += w * xc.transpose() * xc;
    xy += w * xc.transpose() * yc;
  }

  CHECK(st.weight_sum == doctest::Approx(wsum).epsilon(1e-13));
  CHECK((st.mean_x - mx).norm() < 1e-11);
  CHECK((st.mean_y - my).norm() < 1e-11);
  CHECK((st.xx - xx).norm() < 1e-10 * (1.0 + xx.norm()));
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      stxy(st.xy.data().data(), static_cast<Eigen::Index>(pk), 2);
  CHECK((stxy - xy).norm() < 1e-10 * (1.0 + xy.norm()));
}

TEST_CASE("update_covariances validates batches") {
  TestRng rng(52);
  CovarianceState st = make_state({2, 2}, 1, 1.0);
  const Batch good = random_batch(rng, {2, 2}, 1, 3);
  CHECK_THROWS_AS(update_covariances(st, {}, {}), InvalidInput);
  CHECK_THROWS_AS(
      update_covariances(st, good.x, {good.y[0], good.y[1]}), InvalidInput);
  const Batch wrong = random_batch(rng, {2, 3}, 1, 3);
  CHECK_THROWS_AS(update_covariances(st, wrong.x, wrong.y), InvalidInput);
  std::vector<Eigen::VectorXd> long_y{Eigen::VectorXd::Zero(2),
                                      Eigen::VectorXd::Zero(2),
                                      Eigen::VectorXd::Zero(2)};
  CHECK_THROWS_AS(update_covariances(st, good.x, long_y), InvalidInput);
  std::vector<Eigen::VectorXd> nan_y = good.y;
  nan_y[1](0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(update_covariances(st, good.x, nan_y), InvalidInput);
}

TEST_CASE("calibrate validates its inputs") {
  CovarianceState st = make_state({3}, 1, 1.0);
  const std::vector<PenaltySpec> one{{Penalty::l1, 0.0}};
  CHECK_THROWS_AS(calibrate(st, 0, one), InvalidInput);
  CHECK_THROWS_AS(calibrate(st, 2, {}), InvalidInput);
  CHECK_THROWS_AS(calibrate(st, 2, one), InvalidInput);  // empty state
  TestRng rng(53);
  const Batch b = random_batch(rng, {3}, 1, 5);
  update_covariances(st, b.x, b.y);
  CHECK_THROWS_AS(calibrate(st, 2, {{Penalty::l1, 1.5}}), InvalidInput);
  CHECK_NOTHROW(calibrate(st, 2, one));
}

TEST_CASE("unpenalized calibration agrees with a batch reference") {
  TestRng rng(54);
  const std::vector<std::size_t> dims{3, 4};
  const std::size_t q = 2, n = 80, f_max = 3;
  const Batch b = random_batch(rng, dims, q, n);

  CovarianceState st = make_state(dims, q, 1.0);
  update_covariances(st, b.x, b.y);
  const std::vector<PenaltySpec> pen{{Penalty::l1, 0.0}, {Penalty::l1, 0.0}};
  const PlsModel model = calibrate(st, f_max, pen, {2000, 1e-12});
  REQUIRE(model.latent_count() == f_max);
  CHECK(model.f_star == f_max);

  const auto oracle =
      test_support::batch_pls_oracle(b.x_raw, b.y_raw, dims, f_max);
  REQUIRE(oracle.beta_per_f.size() == f_max);
  for (int probe = 0; probe < 10; ++probe) {
    const Eigen::VectorXd xf = rng.gaussian_vector(12);
    const Tensor x = tensor_from(xf, dims);
    for (std::size_t f = 0; f <= f_max; ++f) {
      const Eigen::VectorXd got = predict(model, x, f);
      const Eigen::VectorXd want = test_support::oracle_predict(oracle, xf, f);
      CHECK((got - want).norm() < 1e-6 * (1.0 + want.norm()));
    }
  }
}

TEST_CASE("predict depth semantics") {
  TestRng rng(55);
  const std::vector<std::size_t> dims{3, 2};
  const Batch b = random_batch(rng, dims, 2, 40);
  CovarianceState st = make_state(dims, 2, 1.0);
  update_covariances(st, b.x, b.y);
  const PlsModel model =
      calibrate(st, 2, {{Penalty::l1, 0.0}, {Penalty::l1, 0.0}}, {500, 1e-10});
  REQUIRE(model.latent_count() == 2);

  const Tensor x = b.x[0];
  CHECK((predict(model, x, std::size_t{0}) - model.mean_y).norm() == 0.0);
  CHECK((predict(model, x) - predict(model, x, model.f_star)).norm() == 0.0);
  CHECK_THROWS_AS(predict(model, x, std::size_t{3}), InvalidInput);
  const Batch wrong = random_batch(rng, {2, 3}, 2, 1);
  CHECK_THROWS_AS(predict(model, wrong.x[0]), InvalidInput);

  const auto preds = predict_batch(model, b.x, std::size_t{1});
  REQUIRE(preds.size() == b.x.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    CHECK((preds[i] - predict(model, b.x[i], std::size_t{1})).norm() == 0.0);
}

TEST_CASE("recursive validation tracks the better depth") {
  const PlsModel m = two_depth_model();
  RecursiveValidator val(2, 0.5);
  CHECK(val.errors().size() == 2);

  // y = x0: depth 1 exact, depth 2 off by x1
  std::vector<Tensor> bx{Tensor({2}, {1.0, 1.0})};
  std::vector<Eigen::VectorXd> by{Eigen::VectorXd::Ones(1)};
  CHECK(val.step(m, bx, by) == 1);
  CHECK(val.errors()(0) == doctest::Approx(0.0));
  CHECK(val.errors()(1) == doctest::Approx(1.0));

  // y = x0 + x1 with a big sample: the regime flips
  std::vector<Tensor> bx2{Tensor({2}, {1.0, 2.0})};
  std::vector<Eigen::VectorXd> by2{Eigen::VectorXd::Constant(1, 3.0)};
  CHECK(val.step(m, bx2, by2) == 2);
  CHECK(val.errors()(0) == doctest::Approx(4.0));   // 0.5*0 + (3-1)^2
  CHECK(val.errors()(1) == doctest::Approx(0.5));   // 0.5*1 + 0

  // exact ties resolve to the smaller depth
  RecursiveValidator tie(2, 1.0);
  std::vector<Tensor> bx3{Tensor({2}, {1.0, 0.0})};
  std::vector<Eigen::VectorXd> by3{Eigen::VectorXd::Zero(1)};
  CHECK(tie.step(m, bx3, by3) == 1);
  CHECK(tie.errors()(0) == tie.errors()(1));

  // depths past the stored components reuse the deepest prediction
  RecursiveValidator deep(4, 1.0);
  deep.step(m, bx2, by2);
  CHECK(deep.errors()(2) == deep.errors()(1));
  CHECK(deep.errors()(3) == deep.errors()(1));
  CHECK(deep.current_f_star() == 2);

  CHECK_THROWS_AS(RecursiveValidator(0, 1.0), InvalidInput);
  CHECK_THROWS_AS(RecursiveValidator(2, 1.5), InvalidInput);
  RecursiveValidator v2(2, 1.0);
  CHECK_THROWS_AS(v2.step(m, {}, {}), InvalidInput);
}

TEST_CASE("sparsity pattern intersects the selected components") {
  PlsModel m;
  m.x_dims = {4};
  m.q = 1;
  m.mean_y = Eigen::VectorXd::Zero(1);
  PlsComponent c1;
  c1.ws = {Eigen::Vector4d(1.0, 0.0, 0.0, 0.0), Eigen::VectorXd::Ones(1)};
  c1.beta = Tensor({4, 1});
  c1.bias = Eigen::VectorXd::Zero(1);
  PlsComponent c2 = c1;
  c2.ws[0] = Eigen::Vector4d(0.0, 0.0, 1.0, 0.0);
  m.components = {c1, c2};

  m.f_star = 1;
  CHECK(sparsity_pattern(m, 0) == std::vector<std::size_t>{1, 2, 3});
  CHECK(model_sparse_idx(m, 0) == doctest::Approx(0.75));
  m.f_star = 2;
  CHECK(sparsity_pattern(m, 0) == std::vector<std::size_t>{1, 3});
  CHECK(model_sparse_idx(m, 0) == doctest::Approx(0.5));
  m.f_star = 0;  // intercept-only: everything counts as zero
  CHECK(sparsity_pattern(m, 0) == std::vector<std::size_t>{0, 1, 2, 3});

  PlsModel empty;
  empty.x_dims = {3};
  empty.q = 1;
  empty.mean_y = Eigen::VectorXd::Zero(1);
  CHECK(sparsity_pattern(empty, 0) == std::vector<std::size_t>{0, 1, 2});
  CHECK(model_sparse_idx(empty, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(sparsity_pattern(empty, 1), InvalidInput);
}

TEST_CASE("model save/load round trip") {
  TestRng rng(56);
  const std::vector<std::size_t> dims{4, 3};
  const Batch b = random_batch(rng, dims, 2, 60);
  CovarianceState st = make_state(dims, 2, 0.95);
  update_covariances(st, b.x, b.y);
  const PlsModel model = calibrate(
      st, 2, {{Penalty::l05, 0.3}, {Penalty::l05, 0.0}}, {500, 1e-10});
  REQUIRE(model.latent_count() >= 1);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "npls_model_rt";
  fs::create_directories(dir);
  const std::string path = (dir / "m.nplsm").string();
  save_model(path, model);
  const PlsModel back = load_model(path);

  CHECK(back.x_dims == model.x_dims);
  CHECK(back.q == model.q);
  CHECK(back.mu == model.mu);
  CHECK(back.penalty == model.penalty);
  CHECK(back.lambda == model.lambda);
  CHECK(back.f_max == model.f_max);
  CHECK(back.f_star == model.f_star);
  CHECK(back.latent_count() == model.latent_count());
  CHECK((back.mean_y - model.mean_y).norm() == 0.0);
  for (int probe = 0; probe < 5; ++probe) {
    const Eigen::VectorXd xf = rng.gaussian_vector(12);
    const Tensor x = tensor_from(xf, dims);
    for (std::size_t f = 0; f <= model.latent_count(); ++f)
      CHECK((predict(model, x, f) - predict(back, x, f)).norm() == 0.0);
  }
  const std::string text = summarize(back);
  CHECK(text.find("penalty: l05") != std::string::npos);
  CHECK(text.find("sparse_idx") != std::string::npos);

  CHECK_THROWS_AS(load_model((dir / "missing.nplsm").string()), IoError);
  {
    std::ofstream bad(dir / "bad.nplsm", std::ios::binary);
    bad << "NOTAMODEL";
  }
  CHECK_THROWS_AS(load_model((dir / "bad.nplsm").string()), IoError);
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> head(32);
    in.read(head.data(), 32);
    std::ofstream out(dir / "trunc.nplsm", std::ios::binary);
    out.write(head.data(), 32);
  }
  CHECK_THROWS_AS(load_model((dir / "trunc.nplsm").string()), IoError);
  fs::remove_all(dir);
}
