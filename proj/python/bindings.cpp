// Python module over the npls core.  Tensors cross the boundary as
// C-contiguous float64 numpy arrays (the canonical layout is row-major, so
// the buffer is shared verbatim on the way out and copied on the way in).

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "npls/errors.hpp"
#include "npls/parafac.hpp"
#include "npls/pls.hpp"
#include "npls/stream.hpp"
#include "npls/tensor.hpp"
#include "npls/thresholding.hpp"

namespace py = pybind11;

namespace {

npls::Tensor tensor_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>&
        arr) {
  if (arr.ndim() < 1)
    throw npls::InvalidInput("tensor order must be >= 1");
  std::vector<std::size_t> dims(static_cast<std::size_t>(arr.ndim()));
  for (py::ssize_t i = 0; i < arr.ndim(); ++i)
    dims[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arr.shape(i));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return npls::Tensor(std::move(dims), std::move(data));
}

py::array_t<double> tensor_to_array(const npls::Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
  py::array_t<double> arr(shape);
  std::copy(t.data().begin(), t.data().end(), arr.mutable_data());
  return arr;
}

std::string tensor_repr(const npls::Tensor& t) {
  std::ostringstream out;
  out << "Tensor(dims=(";
  for (std::size_t m = 0; m < t.order(); ++m)
    out << (m ? ", " : "") << t.dim(m);
  if (t.order() == 1) out << ",";
  out << "))";
  return out.str();
}

}  // namespace

PYBIND11_MODULE(sparse_npls, m) {
  m.doc() =
      "streaming penalized N-way PLS: tensors, slice-wise thresholding, "
      "rank-1 ALS, recursive calibration, synthetic streams and replay";

  py::register_exception<npls::InvalidInput>(m, "InvalidInput",
                                             PyExc_ValueError);
  py::register_exception<npls::IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<npls::NumericalFailure>(m, "NumericalFailure",
                                                 PyExc_ArithmeticError);

  // --- tensors --------------------------------------------------------------

  py::class_<npls::Tensor>(m, "Tensor")
      .def(py::init(&tensor_from_array), py::arg("array"),
           "Build from a numpy array; the last axis varies fastest.")
      .def("numpy", &tensor_to_array, "Copy out as a numpy array.")
      .def_property_readonly("dims",
                             [](const npls::Tensor& t) {
                               return py::tuple(py::cast(t.dims()));
                             })
      .def_property_readonly("order", &npls::Tensor::order)
      .def_property_readonly("size", &npls::Tensor::size)
      .def("__repr__", &tensor_repr);

  m.def("mode_unfold", &npls::mode_unfold, py::arg("t"), py::arg("mode"),
        "Mode-m unfolding, shape I_m x prod of the rest; among remaining "
        "modes the lowest index varies fastest.");
  m.def("outer_rank1", &npls::outer_rank1, py::arg("rho"), py::arg("ws"),
        "rho * ws[0] o ... o ws[M-1]; factors must be unit norm.");
  m.def("frobenius_norm", &npls::frobenius_norm, py::arg("t"));
  m.def("kronecker", &npls::kronecker, py::arg("u"), py::arg("v"),
        "kron(u, v) with u slow, v fast.");
  m.def("khatri_rao", &npls::khatri_rao, py::arg("a"), py::arg("b"));
  m.def("write_tensor", &npls::write_tensor, py::arg("path"), py::arg("t"));
  m.def("read_tensor", &npls::read_tensor, py::arg("path"));

  // --- thresholding ---------------------------------------------------------

  py::enum_<npls::Penalty>(m, "Penalty")
      .value("l0", npls::Penalty::l0)
      .value("l05", npls::Penalty::l05)
      .value("l1", npls::Penalty::l1);

  py::class_<npls::PenaltySpec>(m, "PenaltySpec")
      .def(py::init([](npls::Penalty p, double lambda) {
             npls::PenaltySpec s;
             s.p = p;
             s.lambda = lambda;
             return s;
           }),
           py::arg("p"), py::arg("lambda_"))
      .def_readwrite("p", &npls::PenaltySpec::p)
      .def_readwrite("lambda_", &npls::PenaltySpec::lambda);

  m.def("penalty_exponent", &npls::penalty_exponent, py::arg("p"));
  m.def("penalty_term", &npls::penalty_term, py::arg("p"), py::arg("w"));
  m.def("threshold_l0", &npls::threshold_l0, py::arg("w_ls"),
        py::arg("lambda_"), py::arg("kappa"), py::arg("is_protected") = false);
  m.def("threshold_l1", &npls::threshold_l1, py::arg("w_ls"),
        py::arg("lambda_"), py::arg("kappa"), py::arg("is_protected") = false);
  m.def("threshold_l05", &npls::threshold_l05, py::arg("w_ls"),
        py::arg("lambda_"), py::arg("kappa"), py::arg("is_protected") = false);
  m.def("apply_threshold", &npls::apply_threshold, py::arg("spec"),
        py::arg("w_ls"), py::arg("kappa"), py::arg("is_protected") = false);
  m.def("cubic_largest_root", &npls::cubic_largest_root, py::arg("c"),
        "Largest root of x(1-x)^2 = C on [1/3, 1]; C in [0, 4/27].");

  // --- rank-1 ALS -----------------------------------------------------------

  py::enum_<npls::AlsStatus>(m, "AlsStatus")
      .value("converged", npls::AlsStatus::converged)
      .value("max_sweeps", npls::AlsStatus::max_sweeps)
      .value("degenerate", npls::AlsStatus::degenerate)
      .value("annihilated", npls::AlsStatus::annihilated);

  py::enum_<npls::InitScheme>(m, "InitScheme")
      .value("deterministic_uniform", npls::InitScheme::deterministic_uniform)
      .value("unfold_svd_like", npls::InitScheme::unfold_svd_like)
      .value("previous_factors", npls::InitScheme::previous_factors);

  py::class_<npls::AlsConfig>(m, "AlsConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &npls::AlsConfig::max_iterations)
      .def_readwrite("tolerance", &npls::AlsConfig::tolerance)
      .def_readwrite("init", &npls::AlsConfig::init);

  py::class_<npls::ProjectorSet>(m, "ProjectorSet")
      .def(py::init<>())
      .def_readwrite("ws", &npls::ProjectorSet::ws)
      .def_readwrite("rho", &npls::ProjectorSet::rho);

  py::class_<npls::ProtectionSet>(m, "ProtectionSet")
      .def_static("all_penalizable", &npls::ProtectionSet::all_penalizable,
                  py::arg("dims"))
      .def_static("all_protected", &npls::ProtectionSet::all_protected,
                  py::arg("dims"))
      .def_readwrite("penalizable", &npls::ProtectionSet::penalizable)
      .def("matches", &npls::ProtectionSet::matches, py::arg("dims"));

  py::class_<npls::Rank1Result>(m, "Rank1Result")
      .def_readonly("projectors", &npls::Rank1Result::projectors)
      .def_readonly("status", &npls::Rank1Result::status)
      .def_readonly("sweeps", &npls::Rank1Result::sweeps)
      .def_readonly("residual_history", &npls::Rank1Result::residual_history)
      .def_readonly("objective_history",
                    &npls::Rank1Result::objective_history);

  py::class_<npls::RankRResult>(m, "RankRResult")
      .def_readonly("factors", &npls::RankRResult::factors)
      .def_readonly("rhos", &npls::RankRResult::rhos)
      .def_readonly("status", &npls::RankRResult::status)
      .def_readonly("sweeps", &npls::RankRResult::sweeps)
      .def_readonly("residual_history", &npls::RankRResult::residual_history);

  m.def("als_rank1", &npls::als_rank1, py::arg("v"),
        py::arg("cfg") = npls::AlsConfig{}, py::arg("warm") = nullptr,
        py::call_guard<py::gil_scoped_release>());
  m.def("penalized_als_rank1", &npls::penalized_als_rank1, py::arg("v"),
        py::arg("penalties"), py::arg("protection"),
        py::arg("cfg") = npls::AlsConfig{}, py::arg("warm") = nullptr,
        py::call_guard<py::gil_scoped_release>());
  m.def("als_rank_r", &npls::als_rank_r, py::arg("v"), py::arg("rank"),
        py::arg("cfg") = npls::AlsConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("update_protection_set", &npls::update_protection_set,
        py::arg("prev"), py::arg("projectors"));
  m.def("reconstruct", &npls::reconstruct, py::arg("projectors"));
  m.def("reconstruct_rank_r", &npls::reconstruct_rank_r, py::arg("factors"),
        py::arg("rhos"));

  // --- recursive PLS --------------------------------------------------------

  py::class_<npls::CovarianceState>(m, "CovarianceState")
      .def_readonly("x_dims", &npls::CovarianceState::x_dims)
      .def_readonly("q", &npls::CovarianceState::q)
      .def_readonly("mu", &npls::CovarianceState::mu)
      .def_readonly("weight_sum", &npls::CovarianceState::weight_sum)
      .def_readonly("mean_x", &npls::CovarianceState::mean_x)
      .def_readonly("mean_y", &npls::CovarianceState::mean_y)
      .def_readonly("xx", &npls::CovarianceState::xx)
      .def_readonly("xy", &npls::CovarianceState::xy)
      .def("input_size", &npls::CovarianceState::input_size);

  m.def("make_state", &npls::make_state, py::arg("x_dims"), py::arg("q"),
        py::arg("mu"));
  m.def("update_covariances", &npls::update_covariances, py::arg("state"),
        py::arg("batch_x"), py::arg("batch_y"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<npls::PlsComponent>(m, "PlsComponent")
      .def_readonly("ws", &npls::PlsComponent::ws)
      .def_readonly("rho", &npls::PlsComponent::rho)
      .def_readonly("v", &npls::PlsComponent::v)
      .def_readonly("p_load", &npls::PlsComponent::p_load)
      .def_readonly("c", &npls::PlsComponent::c)
      .def_readonly("scale", &npls::PlsComponent::scale)
      .def_readonly("beta", &npls::PlsComponent::beta)
      .def_readonly("bias", &npls::PlsComponent::bias);

  py::class_<npls::PlsModel>(m, "PlsModel")
      .def_readonly("x_dims", &npls::PlsModel::x_dims)
      .def_readonly("q", &npls::PlsModel::q)
      .def_readonly("mu", &npls::PlsModel::mu)
      .def_readonly("penalty", &npls::PlsModel::penalty)
      .def_readonly("lambda_", &npls::PlsModel::lambda)
      .def_readonly("f_max", &npls::PlsModel::f_max)
      .def_readonly("components", &npls::PlsModel::components)
      .def_readwrite("f_star", &npls::PlsModel::f_star)
      .def_readonly("mean_y", &npls::PlsModel::mean_y)
      .def("latent_count", &npls::PlsModel::latent_count);

  m.def("calibrate", &npls::calibrate, py::arg("state"), py::arg("f_max"),
        py::arg("input_penalties"), py::arg("als_cfg") = npls::AlsConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("predict", &npls::predict, py::arg("model"), py::arg("x"),
        py::arg("f") = std::nullopt);
  m.def("predict_batch", &npls::predict_batch, py::arg("model"),
        py::arg("batch_x"), py::arg("f") = std::nullopt,
        py::call_guard<py::gil_scoped_release>());

  py::class_<npls::RecursiveValidator>(m, "RecursiveValidator")
      .def(py::init<std::size_t, double>(), py::arg("f_max"), py::arg("mu"))
      .def("step", &npls::RecursiveValidator::step, py::arg("model"),
           py::arg("batch_x"), py::arg("batch_y"))
      .def("current_f_star", &npls::RecursiveValidator::current_f_star)
      .def("errors", &npls::RecursiveValidator::errors);

  m.def("sparsity_pattern", &npls::sparsity_pattern, py::arg("model"),
        py::arg("mode"));
  m.def("model_sparse_idx", &npls::model_sparse_idx, py::arg("model"),
        py::arg("mode"));
  m.def("save_model", &npls::save_model, py::arg("path"), py::arg("model"));
  m.def("load_model", &npls::load_model, py::arg("path"));
  m.def("summarize", &npls::summarize, py::arg("model"));

  // --- streams, metrics, replay ---------------------------------------------

  py::class_<npls::GeneratorConfig>(m, "GeneratorConfig")
      .def(py::init<>())
      .def_readwrite("dims", &npls::GeneratorConfig::dims)
      .def_readwrite("q", &npls::GeneratorConfig::q)
      .def_readwrite("batch_size", &npls::GeneratorConfig::batch_size)
      .def_readwrite("batch_count", &npls::GeneratorConfig::batch_count)
      .def_readwrite("zero_slices", &npls::GeneratorConfig::zero_slices)
      .def_readwrite("noise_level", &npls::GeneratorConfig::noise_level)
      .def_readwrite("drift_rate", &npls::GeneratorConfig::drift_rate)
      .def_readwrite("latent_rank", &npls::GeneratorConfig::latent_rank)
      .def_readwrite("seed", &npls::GeneratorConfig::seed);

  py::class_<npls::StreamBatch>(m, "StreamBatch")
      .def(py::init<>())
      .def_readwrite("x", &npls::StreamBatch::x)
      .def_readwrite("y", &npls::StreamBatch::y)
      .def_readwrite("index", &npls::StreamBatch::index);

  py::class_<npls::SyntheticStream>(m, "SyntheticStream")
      .def_readonly("config", &npls::SyntheticStream::config)
      .def_readonly("b_true", &npls::SyntheticStream::b_true)
      .def_readonly("batches", &npls::SyntheticStream::batches);

  m.def("synth_generate", &npls::synth_generate, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("write_stream", &npls::write_stream, py::arg("dir"),
        py::arg("stream"));
  m.def("read_stream", &npls::read_stream, py::arg("dir"));

  py::class_<npls::CosineSummary>(m, "CosineSummary")
      .def_readonly("mean", &npls::CosineSummary::mean)
      .def_readonly("median", &npls::CosineSummary::median)
      .def_readonly("q1", &npls::CosineSummary::q1)
      .def_readonly("q3", &npls::CosineSummary::q3)
      .def_readonly("count", &npls::CosineSummary::count)
      .def_readonly("skipped", &npls::CosineSummary::skipped)
      .def_readonly("defined", &npls::CosineSummary::defined);

  m.def("dot_product_metric", &npls::dot_product_metric, py::arg("targets"),
        py::arg("preds"));
  m.def("percentile", &npls::percentile, py::arg("values"), py::arg("q"));
  m.def("sparse_idx", &npls::sparse_idx, py::arg("w"));

  py::class_<npls::GridPoint>(m, "GridPoint")
      .def(py::init([](npls::Penalty p, double lambda) {
             return npls::GridPoint{p, lambda};
           }),
           py::arg("p"), py::arg("lambda_"))
      .def_readwrite("p", &npls::GridPoint::p)
      .def_readwrite("lambda_", &npls::GridPoint::lambda);

  py::class_<npls::ReplayConfig>(m, "ReplayConfig")
      .def(py::init<>())
      .def_readwrite("grid", &npls::ReplayConfig::grid)
      .def_readwrite("penalized_modes", &npls::ReplayConfig::penalized_modes)
      .def_readwrite("f_max", &npls::ReplayConfig::f_max)
      .def_readwrite("mu", &npls::ReplayConfig::mu)
      .def_readwrite("train_prefix", &npls::ReplayConfig::train_prefix)
      .def_readwrite("session_batches", &npls::ReplayConfig::session_batches)
      .def_readwrite("continue_adaptation",
                     &npls::ReplayConfig::continue_adaptation)
      .def_readwrite("max_threads", &npls::ReplayConfig::max_threads)
      .def_readwrite("als", &npls::ReplayConfig::als);

  py::class_<npls::MetricsRecord>(m, "MetricsRecord")
      .def_readonly("point", &npls::MetricsRecord::point)
      .def_readonly("session", &npls::MetricsRecord::session)
      .def_readonly("batch_begin", &npls::MetricsRecord::batch_begin)
      .def_readonly("batch_end", &npls::MetricsRecord::batch_end)
      .def_readonly("dotp", &npls::MetricsRecord::dotp)
      .def_readonly("sparse_idx_modes", &npls::MetricsRecord::sparse_idx_modes)
      .def_readonly("f_star", &npls::MetricsRecord::f_star)
      .def_readonly("components", &npls::MetricsRecord::components);

  py::class_<npls::ReplayResult>(m, "ReplayResult")
      .def_readonly("records", &npls::ReplayResult::records)
      .def_readonly("final_models", &npls::ReplayResult::final_models);

  m.def("replay", &npls::replay, py::arg("batches"), py::arg("dims"),
        py::arg("q"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("write_metrics_jsonl", &npls::write_metrics_jsonl, py::arg("path"),
        py::arg("stream_path"), py::arg("config"), py::arg("dims"),
        py::arg("q"), py::arg("records"));
}
