// sparse-npls: generate synthetic streams, replay them through the
// recursive solver over a penalty grid, and inspect saved models.
//
// Exit codes: 0 success, 2 invalid configuration, 3 I/O or format error,
// 4 numerical failure.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "npls/errors.hpp"
#include "npls/pls.hpp"
#include "npls/stream.hpp"

namespace {

using npls::GeneratorConfig;
using npls::GridPoint;
using npls::InvalidInput;
using npls::Penalty;
using npls::ReplayConfig;

// "mode1:3-8" or "mode2:1,4,7" (1-based on both sides).
void parse_zero_slices(const std::string& text, GeneratorConfig& config) {
  const std::string prefix = "mode";
  const auto colon = text.find(':');
  if (text.rfind(prefix, 0) != 0 || colon == std::string::npos ||
      colon <= prefix.size())
    throw InvalidInput("zero-slices entry must look like mode1:3-8, got: " +
                       text);
  std::size_t mode = 0;
  try {
    mode = std::stoul(text.substr(prefix.size(), colon - prefix.size()));
  } catch (const std::exception&) {
    throw InvalidInput("bad mode number in zero-slices entry: " + text);
  }
  if (mode == 0 || mode > config.dims.size())
    throw InvalidInput("zero-slices mode out of range: " + text);

  std::vector<std::size_t> slices;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        const long v = std::stol(item);
        if (v < 1) throw InvalidInput("slice indices are 1-based: " + text);
        slices.push_back(static_cast<std::size_t>(v - 1));
      } else {
        const long a = std::stol(item.substr(0, dash));
        const long b = std::stol(item.substr(dash + 1));
        if (a < 1 || b < a) throw InvalidInput("bad slice range: " + text);
        for (long v = a; v <= b; ++v)
          slices.push_back(static_cast<std::size_t>(v - 1));
      }
    } catch (const InvalidInput&) {
      throw;
    } catch (const std::exception&) {
      throw InvalidInput("bad slice entry in zero-slices: " + text);
    }
  }
  if (slices.empty())
    throw InvalidInput("empty slice list in zero-slices: " + text);
  config.zero_slices[mode - 1] = slices;
}

Penalty parse_penalty(const std::string& name) {
  if (name == "l0") return Penalty::l0;
  if (name == "l05") return Penalty::l05;
  if (name == "l1") return Penalty::l1;
  throw InvalidInput("penalty must be one of l0, l05, l1");
}

// --- config files ---------------------------------------------------------
//
// Flat key=value text, keys named after the long flags without the dashes.
// Values repeat by repeating the key.  Precedence: command-line flags beat
// config values beat defaults, so a key is applied only when its flag was
// not given.

using ConfigMap = std::map<std::string, std::vector<std::string>>;

ConfigMap read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw npls::IoError("cannot read config file: " + path);
  ConfigMap kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InvalidInput("config line " + std::to_string(lineno) +
                         ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto kend = key.find_last_not_of(" \t");
    key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
    const auto vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    kv[key].push_back(value);
  }
  return kv;
}

double to_real(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidInput("config value for " + field + " is not a number: " + v);
  }
}

std::size_t to_count(const std::string& field, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long u = std::stoull(v, &pos);
    if (pos != v.size() || v.find('-') != std::string::npos)
      throw std::invalid_argument(v);
    return static_cast<std::size_t>(u);
  } catch (const std::exception&) {
    throw InvalidInput("config value for " + field +
                       " is not a nonnegative integer: " + v);
  }
}

bool to_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput("config value for " + field + " is not a boolean: " + v);
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::vector<std::size_t> to_count_list(const std::string& field,
                                       const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& part : split(v, ',')) out.push_back(to_count(field, part));
  if (out.empty()) throw InvalidInput("config value for " + field + " is empty");
  return out;
}

std::vector<double> to_real_list(const std::string& field,
                                 const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) out.push_back(to_real(field, part));
  if (out.empty()) throw InvalidInput("config value for " + field + " is empty");
  return out;
}

// one value per key; repeated keys are a config error
const std::string& single(const std::string& key,
                          const std::vector<std::string>& values) {
  if (values.size() != 1)
    throw InvalidInput("config key given more than once: " + key);
  return values.front();
}

std::string penalty_name(Penalty p) {
  switch (p) {
    case Penalty::l0: return "l0";
    case Penalty::l05: return "l05";
    default: return "l1";
  }
}

int cmd_generate(const std::vector<std::size_t>& dims, std::size_t outputs,
                 std::size_t batches, std::size_t batch_size,
                 const std::vector<std::string>& zero_slices,
                 std::uint64_t seed, double noise, double drift,
                 std::size_t latent_rank, const std::string& out_dir) {
  if (dims.empty()) throw InvalidInput("--dims is required");
  if (out_dir.empty()) throw InvalidInput("--out is required");
  GeneratorConfig config;
  config.dims = dims;
  config.q = outputs;
  config.batch_count = batches;
  config.batch_size = batch_size;
  config.seed = seed;
  config.noise_level = noise;
  config.drift_rate = drift;
  config.latent_rank = latent_rank;
  for (const auto& entry : zero_slices) parse_zero_slices(entry, config);

  npls::SyntheticStream stream = npls::synth_generate(config);
  npls::write_stream(out_dir, stream);

  std::size_t planted = 0, total_slices = 0;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    total_slices += dims[m];
    auto it = config.zero_slices.find(m);
    if (it != config.zero_slices.end()) planted += it->second.size();
  }
  std::cout << "generated " << batches << " batches of " << batch_size
            << " samples, dims (";
  for (std::size_t m = 0; m < dims.size(); ++m)
    std::cout << (m ? "," : "") << dims[m];
  std::cout << ") -> " << outputs << " outputs, planted zero slices "
            << planted << "/" << total_slices << ", seed " << seed << " -> "
            << out_dir << "\n";
  return 0;
}

int cmd_replay(const std::string& stream_dir, const std::string& penalty,
               const std::vector<double>& lambdas,
               const std::vector<std::size_t>& penalized_modes,
               std::size_t f_max, double mu, std::size_t train_prefix,
               std::size_t session_batches, bool continue_adaptation,
               std::size_t threads, double als_tol, std::size_t als_max_iter,
               const std::string& metrics_out, const std::string& models_out) {
  if (stream_dir.empty()) throw InvalidInput("--stream is required");
  if (metrics_out.empty()) throw InvalidInput("--metrics-out is required");
  if (train_prefix == 0)
    throw InvalidInput("--train-prefix is required and must be >= 1");
  npls::SyntheticStream stream = npls::read_stream(stream_dir);

  ReplayConfig config;
  const Penalty p = parse_penalty(penalty);
  if (lambdas.empty()) throw InvalidInput("at least one lambda is required");
  for (double lambda : lambdas) config.grid.push_back(GridPoint{p, lambda});
  config.penalized_modes.clear();
  for (std::size_t m : penalized_modes) {
    if (m == 0 || m > stream.config.dims.size())
      throw InvalidInput("penalized mode out of range (modes are 1-based)");
    config.penalized_modes.push_back(m - 1);
  }
  config.f_max = f_max;
  config.mu = mu;
  config.train_prefix = train_prefix;
  config.session_batches = session_batches;
  config.continue_adaptation = continue_adaptation;
  config.max_threads = threads;
  config.als.tolerance = als_tol;
  config.als.max_iterations = als_max_iter;

  npls::ReplayResult result = npls::replay(
      stream.batches, stream.config.dims, stream.config.q, config);

  npls::write_metrics_jsonl(metrics_out, stream_dir, config,
                            stream.config.dims, stream.config.q,
                            result.records);

  if (!models_out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(models_out, ec);
    if (ec) throw npls::IoError("cannot create directory: " + models_out);
    for (std::size_t gi = 0; gi < config.grid.size(); ++gi) {
      char name[64];
      std::snprintf(name, sizeof(name), "model_%s_lambda%.4f.nplsm",
                    penalty_name(config.grid[gi].p).c_str(),
                    config.grid[gi].lambda);
      npls::save_model(
          (std::filesystem::path(models_out) / name).string(),
          result.final_models[gi]);
    }
  }

  std::cout << "p       lambda   f*  dotp_median  sparse_idx\n";
  for (std::size_t gi = 0; gi < config.grid.size(); ++gi) {
    // Last record of this grid point carries the final-session numbers.
    const npls::MetricsRecord* last = nullptr;
    for (const auto& rec : result.records)
      if (rec.point.lambda == config.grid[gi].lambda &&
          rec.point.p == config.grid[gi].p)
        last = &rec;
    std::ostringstream row;
    row.precision(4);
    row << std::left;
    row.width(8);
    row << penalty_name(config.grid[gi].p);
    row.width(9);
    row << config.grid[gi].lambda;
    if (last) {
      row.width(4);
      row << last->f_star;
      row.width(13);
      if (last->dotp.defined)
        row << last->dotp.median;
      else
        row << "undefined";
      for (std::size_t m : config.penalized_modes) {
        if (m) row << " ";
        row << last->sparse_idx_modes[m];
      }
    } else {
      row << "(no evaluation records)";
    }
    std::cout << row.str() << "\n";
  }
  std::cout << result.records.size() << " records -> " << metrics_out << "\n";
  return 0;
}

int cmd_inspect(const std::string& model_path) {
  npls::PlsModel model = npls::load_model(model_path);
  std::cout << npls::summarize(model);
  for (std::size_t m = 0; m < model.x_dims.size(); ++m) {
    const auto zeros = npls::sparsity_pattern(model, m);
    std::cout << "sparse_idx_mode_" << (m + 1) << " = "
              << npls::model_sparse_idx(model, m);
    std::cout << "  zeroed slices:";
    if (zeros.empty()) {
      std::cout << " none";
    } else {
      for (std::size_t j : zeros) std::cout << " " << (j + 1);
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming penalized N-way PLS"};
  app.require_subcommand(1);

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a synthetic stream");
  std::string gen_config;
  gen->add_option("--config", gen_config, "flat key=value config file");
  std::vector<std::size_t> dims;
  std::size_t outputs = 1, batches = 10, batch_size = 50, latent_rank = 0;
  std::vector<std::string> zero_slices;
  std::uint64_t seed = 0;
  double noise = 0.0, drift = 0.0;
  std::string out_dir;
  gen->add_option("--dims", dims, "input mode sizes, e.g. 8,10,5")
      ->delimiter(',');
  gen->add_option("--outputs", outputs, "output dimension Q");
  gen->add_option("--batches", batches, "batch count");
  gen->add_option("--batch-size", batch_size, "samples per batch");
  gen->add_option("--zero-slices", zero_slices,
                  "planted zero slices, e.g. mode1:3-8 (repeatable)");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--noise", noise, "noise standard deviation");
  gen->add_option("--drift", drift, "per-batch gain drift rate");
  gen->add_option("--latent-rank", latent_rank,
                  "0 = dense coefficients, r = rank-r planted structure");
  gen->add_option("--out", out_dir, "output directory");

  // replay -----------------------------------------------------------------
  auto* rep = app.add_subcommand("replay", "pseudo-online replay of a stream");
  std::string rep_config;
  rep->add_option("--config", rep_config, "flat key=value config file");
  std::string stream_dir, penalty = "l1", metrics_out, models_out;
  std::vector<double> lambdas = {0.0};
  std::vector<std::size_t> penalized_modes = {1};
  std::size_t f_max = 5, train_prefix = 0, session_batches = 0, threads = 0;
  std::size_t als_max_iter = 100;
  double mu = 1.0, als_tol = 1e-6;
  bool continue_adaptation = false;
  rep->add_option("--stream", stream_dir, "stream directory");
  rep->add_option("--penalty", penalty, "penalty family: l0, l05, l1")
      ->check(CLI::IsMember({"l0", "l05", "l1"}));
  rep->add_option("--lambdas", lambdas, "lambda grid, e.g. 0,0.1,0.2")
      ->delimiter(',');
  rep->add_option("--penalized-modes", penalized_modes,
                  "1-based input modes to penalize (default 1)")
      ->delimiter(',');
  rep->add_option("--f-max", f_max, "latent space depth cap");
  rep->add_option("--mu", mu, "forgetting factor in [0,1]");
  rep->add_option("--train-prefix", train_prefix,
                  "batches consumed for training");
  rep->add_option("--session-batches", session_batches,
                  "evaluation session length (0 = whole tail)");
  rep->add_flag("--continue-adaptation", continue_adaptation,
                "keep recalibrating during evaluation");
  rep->add_option("--threads", threads, "grid worker cap (0 = hardware)");
  rep->add_option("--als-tol", als_tol, "ALS convergence tolerance");
  rep->add_option("--als-max-iter", als_max_iter, "ALS sweep cap");
  rep->add_option("--metrics-out", metrics_out, "JSON-lines metrics path");
  rep->add_option("--models-out", models_out,
                  "directory for final per-grid-point models");

  // inspect ----------------------------------------------------------------
  auto* ins = app.add_subcommand("inspect", "report on a saved model");
  std::string model_path;
  ins->add_option("--model", model_path, "model file")->required();

  // Config keys mirror the long flags; a key is skipped when its flag was
  // given on the command line.
  auto apply_generate_config = [&](const ConfigMap& kv) {
    static const char* keys[] = {"dims",  "outputs", "batches",
                                 "batch-size", "zero-slices", "seed",
                                 "noise", "drift",   "latent-rank", "out"};
    for (const auto& [key, values] : kv) {
      if (std::find(std::begin(keys), std::end(keys), key) == std::end(keys))
        throw InvalidInput("unknown generate config key: " + key);
      if (gen->count("--" + key) > 0) continue;
      if (key == "dims")
        dims = to_count_list(key, single(key, values));
      else if (key == "outputs")
        outputs = to_count(key, single(key, values));
      else if (key == "batches")
        batches = to_count(key, single(key, values));
      else if (key == "batch-size")
        batch_size = to_count(key, single(key, values));
      else if (key == "zero-slices")
        zero_slices = values;
      else if (key == "seed")
        seed = to_count(key, single(key, values));
      else if (key == "noise")
        noise = to_real(key, single(key, values));
      else if (key == "drift")
        drift = to_real(key, single(key, values));
      else if (key == "latent-rank")
        latent_rank = to_count(key, single(key, values));
      else if (key == "out")
        out_dir = single(key, values);
    }
  };

  auto apply_replay_config = [&](const ConfigMap& kv) {
    static const char* keys[] = {"stream",        "penalty",
                                 "lambdas",       "penalized-modes",
                                 "f-max",         "mu",
                                 "train-prefix",  "session-batches",
                                 "continue-adaptation", "threads",
                                 "als-tol",       "als-max-iter",
                                 "metrics-out",   "models-out"};
    for (const auto& [key, values] : kv) {
      if (std::find(std::begin(keys), std::end(keys), key) == std::end(keys))
        throw InvalidInput("unknown replay config key: " + key);
      if (rep->count("--" + key) > 0) continue;
      if (key == "stream")
        stream_dir = single(key, values);
      else if (key == "penalty")
        penalty = single(key, values);
      else if (key == "lambdas")
        lambdas = to_real_list(key, single(key, values));
      else if (key == "penalized-modes")
        penalized_modes = to_count_list(key, single(key, values));
      else if (key == "f-max")
        f_max = to_count(key, single(key, values));
      else if (key == "mu")
        mu = to_real(key, single(key, values));
      else if (key == "train-prefix")
        train_prefix = to_count(key, single(key, values));
      else if (key == "session-batches")
        session_batches = to_count(key, single(key, values));
      else if (key == "continue-adaptation")
        continue_adaptation = to_bool(key, single(key, values));
      else if (key == "threads")
        threads = to_count(key, single(key, values));
      else if (key == "als-tol")
        als_tol = to_real(key, single(key, values));
      else if (key == "als-max-iter")
        als_max_iter = to_count(key, single(key, values));
      else if (key == "metrics-out")
        metrics_out = single(key, values);
      else if (key == "models-out")
        models_out = single(key, values);
    }
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      if (!gen_config.empty())
        apply_generate_config(read_flat_config(gen_config));
      return cmd_generate(dims, outputs, batches, batch_size, zero_slices,
                          seed, noise, drift, latent_rank, out_dir);
    }
    if (rep->parsed()) {
      if (!rep_config.empty()) apply_replay_config(read_flat_config(rep_config));
      return cmd_replay(stream_dir, penalty, lambdas, penalized_modes, f_max,
                        mu, train_prefix, session_batches,
                        continue_adaptation, threads, als_tol, als_max_iter,
                        metrics_out, models_out);
    }
    if (ins->parsed()) return cmd_inspect(model_path);
  } catch (const npls::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const npls::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const npls::NumericalFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
