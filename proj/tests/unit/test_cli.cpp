#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
  fs::path dir;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::current_path() / "cli-scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Result invoke(std::vector<std::string> args, const fs::path& root) {
  args.insert(args.begin(), "mott");
  args.push_back("--out");
  args.push_back(root.string());
  std::ostringstream out, err;
  Result r;
  r.code = mott::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  if (r.code == 0) r.dir = json::parse(r.out)["run_dir"].get<std::string>();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  return line;
}

const std::vector<std::string> kP4{"--gaps", "1", "2.5", "1.3", "1.7", "--energies", "0.3", "-0.2", "0.5", "0", "--beta", "1"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

} // namespace

TEST_CASE("artifact headers") {
  const fs::path root = scratch("headers");
  struct Case {
    std::vector<std::string> args;
    std::string file, header;
  };
  const std::vector<Case> cases{
      {{"gen-env", "--env", "iid", "--radius", "8"}, "env.csv", "k,Z_k,E_k,x_k"},
      {{"kernel-dump", "--lambda", "0.2"}, "derivatives.csv", "offset,probability,displacement,d_first,d_second"},
      {{"simulate", "--lambda", "0.2", "--steps", "100"}, "trajectory.csv", "replica,n,displacement,time"},
      {{"simulate", "--rho", "3", "--target", "5", "--lambda", "0.3"}, "hitting.csv", "replica,steps,landing,overshoot,reached"},
      {{"conductance", "--lambda", "0.3", "--rho", "2", "--a", "0", "--b", "6:inf", "--dromedario"}, "dromedario.csv", "k,lhs,reduced,rhs,ratio"},
      {with({"oracle", "--check", "stationary", "--lambda", "0.3"}, kP4), "stationary.csv", "state,q,pi,phi"},
      {{"einstein", "--hs", "1e-2", "1e-3"}, "einstein.csv", "h,fd,richardson,d_discrete,gap,fd_continuous,d_continuous,gap_continuous"},
      {with({"rn-scan", "--grid", "0.1", "0.2"}, kP4), "rn.csv", "lambda,lp_norm,max_density,min_density,meta_ratio"},
      {with({"clt", "--observable", "phi", "--steps", "500", "--replicas", "4"}, kP4), "clt.csv", "quantity,estimate,stderr,n,replicas,seed"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.args[0]);
    const Result r = invoke(c.args, root);
    REQUIRE(r.code == 0);
    CHECK(first_line(r.dir / c.file) == c.header);
    CHECK(fs::exists(r.dir / "config.json"));
    const json m = json::parse(slurp(r.dir / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["artifacts"].contains(c.file));
  }
}

TEST_CASE("exit codes") {
  const fs::path root = scratch("exits");
  CHECK(invoke({"oracle", "--check", "nonsense"}, root).code == mott::cli::kSchema);
  CHECK(invoke({"simulate", "--lambda", "1.5"}, root).code == mott::cli::kSchema);
  CHECK(invoke({"oracle", "--env", "period1-lattice", "--gaps", "1", "2"}, root).code == mott::cli::kSchema);
  CHECK(invoke({"nope"}, root).code == mott::cli::kSchema);

  const Result num = invoke({"conductance", "--rho", "1", "--a", "0", "--b", "10:inf", "--window", "3:5"}, root);
  CHECK(num.code == mott::cli::kNumerical);
  CHECK(json::parse(num.err)["error"] == "numerical");

  const Result budget = invoke({"simulate", "--rho", "2", "--target", "1000", "--budget", "10", "--lambda", "0.3"}, root);
  CHECK(budget.code == mott::cli::kBudget);
  int found = 0;
  for (const auto& e : fs::directory_iterator(root)) {
    if (!fs::exists(e.path() / "manifest.json")) continue;
    const json m = json::parse(slurp(e.path() / "manifest.json"));
    if (m["status"] != "budget_exhausted") continue;
    ++found;
    CHECK(json::parse(slurp(e.path() / "diagnostic.json"))["status"] == mott::cli::kBudget);
    CHECK(fs::exists(e.path() / "hitting.csv"));
  }
  CHECK(found == 1);
}

TEST_CASE("unbiased walk with no steps stays put") {
  const Result r = invoke({"simulate", "--lambda", "0", "--steps", "0"}, scratch("zero"));
  REQUIRE(r.code == 0);
  CHECK(slurp(r.dir / "summary.csv") == "replica,n,displacement,time\n0,0,0,0\n");
}

TEST_CASE("oracle Einstein check on the lattice") {
  const Result r = invoke({"oracle", "--env", "period1-lattice", "--check", "einstein", "--h", "1e-3"}, scratch("einstein"));
  REQUIRE(r.code == 0);
  const json res = json::parse(r.out)["result"];
  CHECK(res["gap"].get<double>() <= 1e-5);
}

TEST_CASE("same config, same bytes") {
  const fs::path root = scratch("repro");
  const std::vector<std::string> args{"simulate", "--env", "iid", "--lambda", "0.3", "--steps", "2000",
                                      "--replicas", "3", "--seed", "17", "--stride", "7"};
  const Result a = invoke(args, root), b = invoke(args, root);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.dir != b.dir);
  CHECK(b.dir.filename().string() == a.dir.filename().string() + "-2");
  const json ma = json::parse(slurp(a.dir / "manifest.json")), mb = json::parse(slurp(b.dir / "manifest.json"));
  CHECK(ma["config_hash"] == mb["config_hash"]);
  CHECK(ma["artifacts"] == mb["artifacts"]);
  CHECK(slurp(a.dir / "trajectory.csv") == slurp(b.dir / "trajectory.csv"));

  const Result c = invoke({"simulate", "--env", "iid", "--lambda", "0.3", "--steps", "2000", "--replicas", "3", "--seed", "18",
                         "--stride", "7"},
                        root);
  REQUIRE(c.code == 0);
  CHECK(slurp(c.dir / "trajectory.csv") != slurp(a.dir / "trajectory.csv"));
}

TEST_CASE("config files") {
  const fs::path root = scratch("config");
  const fs::path cfg = root / "p4.json";
  std::ofstream(cfg) << R"({"subcommand": "oracle", "gaps": [1, 2.5, 1.3, 1.7], "energies": [0.3, -0.2, 0.5, 0],
                          "beta": 1, "check": "diffusion"})";
  const Result a = invoke({"oracle", "--config", cfg.string()}, root);
  const Result b = invoke(with({"oracle", "--check", "diffusion"}, kP4), root);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(json::parse(a.out)["result"] == json::parse(b.out)["result"]);
  CHECK(json::parse(slurp(a.dir / "manifest.json"))["config_hash"] == json::parse(slurp(b.dir / "manifest.json"))["config_hash"]);

  // Command-line values override the file.
  const Result c = invoke({"oracle", "--config", cfg.string(), "--beta", "0"}, root);
  REQUIRE(c.code == 0);
  CHECK(json::parse(c.out)["result"] != json::parse(a.out)["result"]);

  std::ofstream(root / "wrong.json") << R"({"subcommand": "simulate"})";
  CHECK(invoke({"oracle", "--config", (root / "wrong.json").string()}, root).code == mott::cli::kSchema);
  std::ofstream(root / "bad.json") << "{not json";
  CHECK(invoke({"oracle", "--config", (root / "bad.json").string()}, root).code == mott::cli::kSchema);
}
