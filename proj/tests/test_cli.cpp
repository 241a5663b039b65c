#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("SPARSE_NPLS_CLI");
  REQUIRE_MESSAGE(p != nullptr, "SPARSE_NPLS_CLI must point at the binary");
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

int run_env(const std::string& env, const std::string& args) {
  const std::string cmd =
      env + " " + cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("help exits cleanly") {
  CHECK(run("--help") == 0);
  CHECK(run("generate --help") == 0);
  CHECK(run("replay --help") == 0);
  CHECK(run("inspect --help") == 0);
}

TEST_CASE("bad invocations exit with the config code") {
  CHECK(run("") == 2);                       // a subcommand is required
  CHECK(run("frobnicate") == 2);             // unknown subcommand
  CHECK(run("generate") == 2);               // missing required flags
  CHECK(run("generate --dims 4,3 --out /tmp/x --no-such-flag") == 2);
  CHECK(run("replay --stream nowhere --train-prefix 1") == 2);  // no metrics-out
}

TEST_CASE("invalid generator parameters are a config error") {
  const fs::path dir = fresh_dir("npls_cli_badgen");
  CHECK(run("generate --dims 0,3 --out " + (dir / "s").string()) == 2);
  CHECK(run("generate --dims 4,3 --zero-slices mode9:1 --out " +
            (dir / "s").string()) == 2);
  CHECK(run("generate --dims 4,3 --zero-slices nonsense --out " +
            (dir / "s").string()) == 2);
  CHECK(run("generate --dims 4,3 --noise -1 --out " + (dir / "s").string()) ==
        2);
  fs::remove_all(dir);
}

TEST_CASE("missing or broken inputs are an io error") {
  const fs::path dir = fresh_dir("npls_cli_io");
  CHECK(run("replay --stream " + (dir / "missing").string() +
            " --train-prefix 1 --metrics-out " + (dir / "m.jsonl").string()) ==
        3);

  const fs::path bad_model = dir / "bad.nplsm";
  {
    std::ofstream out(bad_model, std::ios::binary);
    out << "NPLS";  // truncated before the header completes
  }
  CHECK(run("inspect --model " + bad_model.string()) == 3);
  CHECK(run("inspect --model " + (dir / "none.nplsm").string()) == 3);
  fs::remove_all(dir);
}

TEST_CASE("generate is deterministic across runs") {
  const fs::path dir = fresh_dir("npls_cli_det");
  const std::string flags =
      " --dims 4,3 --outputs 2 --batches 2 --batch-size 6 --seed 9 "
      "--noise 0.1 --latent-rank 1 --zero-slices mode1:2-3 --out ";
  CHECK(run("generate" + flags + (dir / "a").string()) == 0);
  CHECK(run("generate" + flags + (dir / "b").string()) == 0);
  for (const char* name :
       {"manifest.txt", "b_true.ntns", "batch_0000.ntns", "batch_0001.ntns"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  fs::remove_all(dir);
}

TEST_CASE("generate, replay, inspect round trip") {
  const fs::path dir = fresh_dir("npls_cli_rt");
  const std::string stream = (dir / "stream").string();
  CHECK(run("generate --dims 5,4 --outputs 2 --batches 6 --batch-size 10 "
            "--seed 3 --noise 0.2 --latent-rank 2 --zero-slices mode1:4-5 "
            "--out " +
            stream) == 0);

  const std::string metrics = (dir / "metrics.jsonl").string();
  const std::string models = (dir / "models").string();
  CHECK(run("replay --stream " + stream +
            " --penalty l1 --lambdas 0,0.3 --penalized-modes 1 "
            "--f-max 3 --train-prefix 4 --threads 2 --metrics-out " +
            metrics + " --models-out " + models) == 0);

  REQUIRE(fs::exists(metrics));
  std::ifstream in(metrics);
  std::string line;
  REQUIRE(std::getline(in, line));
  const auto header = nlohmann::json::parse(line);
  CHECK(header.at("record") == "header");
  CHECK(header.at("grid").size() == 2);
  std::size_t records = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("record") == "metrics");
    CHECK(j.contains("dotp_median"));
    CHECK(j.contains("sparse_idx_mode_1"));
    ++records;
  }
  CHECK(records == 2);

  REQUIRE(fs::exists(fs::path(models) / "model_l1_lambda0.0000.nplsm"));
  REQUIRE(fs::exists(fs::path(models) / "model_l1_lambda0.3000.nplsm"));
  CHECK(run("inspect --model " +
            (fs::path(models) / "model_l1_lambda0.3000.nplsm").string()) == 0);
  fs::remove_all(dir);
}

TEST_CASE("replay config validation exits with the config code") {
  const fs::path dir = fresh_dir("npls_cli_cfg");
  const std::string stream = (dir / "stream").string();
  REQUIRE(run("generate --dims 3,3 --batches 3 --batch-size 5 --out " +
              stream) == 0);
  const std::string metrics = (dir / "m.jsonl").string();
  CHECK(run("replay --stream " + stream +
            " --train-prefix 0 --metrics-out " + metrics) == 2);
  CHECK(run("replay --stream " + stream +
            " --train-prefix 9 --metrics-out " + metrics) == 2);
  CHECK(run("replay --stream " + stream +
            " --penalty l7 --train-prefix 1 --metrics-out " + metrics) == 2);
  CHECK(run("replay --stream " + stream +
            " --lambdas 2.0 --train-prefix 1 --metrics-out " + metrics) == 2);
  CHECK(run_env("SPARSE_NPLS_THREADS=zebra",
                "replay --stream " + stream +
                    " --train-prefix 1 --metrics-out " + metrics) == 2);
  fs::remove_all(dir);
}

TEST_CASE("flags read from a config file") {
  const fs::path dir = fresh_dir("npls_cli_conf");
  const fs::path conf = dir / "gen.conf";
  {
    std::ofstream out(conf);
    out << "dims=4,3\nbatches=2\nbatch-size=5\nseed=12\n";
  }
  CHECK(run("generate --config " + conf.string() + " --out " +
            (dir / "s").string()) == 0);
  CHECK(fs::exists(dir / "s" / "batch_0001.ntns"));
  fs::remove_all(dir);
}
