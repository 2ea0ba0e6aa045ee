#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mixflow/cli.hpp"
#include "mixflow/config.hpp"
#include "mixflow/io.hpp"
#include "support/oracles.hpp"

namespace mixflow {
namespace {

namespace fs = std::filesystem;
const std::string kData = MIXFLOW_TEST_DATA;
const std::string kNet = kData + "/nguyen_net.tntp";
const std::string kTrips = kData + "/nguyen_trips.tntp";

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation mixflow(std::vector<std::string> args) {
  args.insert(args.begin(), "mixflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

class Cli : public ::testing::Test {
 protected:
  fs::path dir;
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / (std::string("mixflow_cli_") + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    unsetenv("MIXFLOW_CONFIG");
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string out(const std::string& name) const { return (dir / name).string(); }
};

TEST(Config, ParsesCommentsAndWhitespace) {
  std::istringstream in("# experiment\n  theta = 0.2  # dispersion\n\nmode=baseline\n");
  const ConfigMap m = parse_config(in);
  EXPECT_EQ(m.at("theta"), "0.2");
  EXPECT_EQ(m.at("mode"), "baseline");
  std::istringstream bad("theta 0.2\n");
  EXPECT_THROW(parse_config(bad), ParseError);
}

TEST(Config, AppliesEveryKnownKey) {
  RunConfig c;
  apply_config(c, {{"theta", "0.2"}, {"nesting", "0.7"}, {"mode", "baseline"}, {"k", "7"},
                   {"gap", "1e-6"}, {"penetration", "0.3"}, {"threads", "2"}, {"seed", "99"}});
  EXPECT_EQ(c.params.theta, 0.2);
  EXPECT_EQ(c.params.nesting, 0.7);
  EXPECT_EQ(c.solver.mode, SolverMode::Baseline);
  EXPECT_EQ(c.pga.k, 7u);
  EXPECT_EQ(c.solver.gap_tol, 1e-6);
  EXPECT_EQ(c.params.penetration, 0.3);
  EXPECT_EQ(c.pga.threads, 2u);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_THROW(apply_config(c, {{"thetta", "1"}}), ValidationError);
  EXPECT_THROW(apply_config(c, {{"theta", "abc"}}), ValidationError);
  EXPECT_THROW(apply_config(c, {{"mode", "fast"}}), ValidationError);
}

TEST(Io, PathFlowsRoundTrip) {
  const Network net = load_network(kNet, kTrips, ClassParams{});
  const AssignmentProblem prob(net, testing::full_path_set(net));
  const SolveResult r = solve(prob, ClassParams{}, SolverConfig{});
  std::stringstream io;
  write_path_flows_csv(io, prob, r.flows);
  const PathFlowTable t = read_path_flows_csv(io, net);
  EXPECT_EQ(t.paths, prob.paths());
  const FlowState back = flows_from_table(AssignmentProblem(net, t.paths), t);
  for (VehicleClass c : kVehicleClasses)
    EXPECT_LE((back.paths(c) - r.flows.paths(c)).cwiseAbs().maxCoeff(), 1e-5 * r.flows.paths(c).maxCoeff());
}

TEST(Io, RejectsBadFlowFiles) {
  const Network net = load_network(kNet, kTrips, ClassParams{});
  std::istringstream empty("");
  EXPECT_THROW(read_path_flows_csv(empty, net), ParseError);
  std::istringstream header("od,cls,path_key,flow\n");
  EXPECT_THROW(read_path_flows_csv(header, net), ParseError);
  std::istringstream foreign("od,class,path_key,flow\n0,rv,1-2,5\n");
  EXPECT_THROW(read_path_flows_csv(foreign, net), ParseError);
}

TEST_F(Cli, SolveWritesOutputsAndConverges) {
  const Invocation r = mixflow({"solve", "--net", kNet, "--trips", kTrips, "-o", dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  for (const char* f : {"link_flows.csv", "path_flows.csv", "trace.csv", "summary.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto s = summary(dir);
  EXPECT_EQ(s["schema_version"], 1);
  EXPECT_EQ(s["command"], "solve");
  EXPECT_TRUE(s["converged"].get<bool>());
  EXPECT_LE(s["gap"].get<double>(), 1e-4);
  for (const char* key : {"iterations", "total_cost", "wall_seconds"}) EXPECT_TRUE(s.contains(key)) << key;
  EXPECT_EQ(slurp(dir / "link_flows.csv").substr(0, 17), "link_id,x_rv,x_av");
}

TEST_F(Cli, BaselineTakesMoreIterations) {
  ASSERT_EQ(mixflow({"solve", "--net", kNet, "--trips", kTrips, "-o", out("m")}).code, 0);
  ASSERT_EQ(mixflow({"solve", "--net", kNet, "--trips", kTrips, "-o", out("b"), "--mode", "baseline"}).code, 0);
  EXPECT_GT(summary(out("b"))["iterations"].get<int>(), summary(out("m"))["iterations"].get<int>());
}

TEST_F(Cli, OutputsAreByteIdenticalAcrossRuns) {
  for (const char* d : {"a", "b"})
    ASSERT_EQ(mixflow({"pga", "--net", kNet, "--trips", kTrips, "--k", "3", "--penetration", "0.8", "-o", out(d)}).code, 0);
  for (const char* f : {"link_flows.csv", "path_flows.csv", "outer_trace.csv", "paths.txt"}) {
    if (std::string(f) == "outer_trace.csv") continue;  // carries timings
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST_F(Cli, MissingTripsFileIsAnInputErrorWithoutOutputs) {
  const Invocation r = mixflow({"solve", "--net", kNet, "--trips", out("absent.tntp"), "-o", out("res")});
  EXPECT_EQ(r.code, cli::kInputError);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(dir / "res"));
}

TEST_F(Cli, UnknownOptionOrKeyIsAnInputError) {
  EXPECT_EQ(mixflow({"solve", "--bogus"}).code, cli::kInputError);
  EXPECT_EQ(mixflow({"solve", "--net", kNet, "--trips", kTrips, "--set", "nope=1"}).code, cli::kInputError);
  EXPECT_EQ(mixflow({}).code, cli::kInputError);
}

TEST_F(Cli, ExhaustedIterationsExitTwo) {
  const Invocation r = mixflow({"solve", "--net", kNet, "--trips", kTrips, "--max-iters", "5", "-o", out("r")});
  EXPECT_EQ(r.code, cli::kNotConverged);
  EXPECT_FALSE(summary(out("r"))["converged"].get<bool>());
}

TEST_F(Cli, ConfigFileEnvironmentAndFlagsLayer) {
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "net = " << kNet << "\ntrips = " << kTrips << "\nmode = baseline\nmax_iters = 7\n";
  }
  setenv("MIXFLOW_CONFIG", (dir / "run.cfg").c_str(), 1);
  const Invocation env = mixflow({"solve", "-o", out("env")});
  EXPECT_EQ(env.code, cli::kNotConverged);
  EXPECT_EQ(summary(out("env"))["iterations"], 7);
  EXPECT_EQ(summary(out("env"))["mode"], "baseline");
  const Invocation flag = mixflow({"solve", "-o", out("flag"), "--mode", "modified", "--set", "max_iters=100000"});
  EXPECT_EQ(flag.code, cli::kOk) << flag.err;
  EXPECT_EQ(summary(out("flag"))["mode"], "modified");
  unsetenv("MIXFLOW_CONFIG");
  const Invocation explicit_cfg = mixflow({"solve", "--config", (dir / "run.cfg").string(), "-o", out("x")});
  EXPECT_EQ(explicit_cfg.code, cli::kNotConverged);
}

TEST_F(Cli, SynthesizedDemandIsSeeded) {
  for (const char* d : {"a", "b"})
    ASSERT_EQ(mixflow({"solve", "--net", kNet, "--synth-pairs", "6", "--seed", "5", "-o", out(d)}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "path_flows.csv"), slurp(dir / "b" / "path_flows.csv"));
}

TEST_F(Cli, PgaRecordsOuterIterations) {
  const Invocation r = mixflow({"pga", "--net", kNet, "--trips", kTrips, "--k", "2", "--penetration", "0.8", "-o", dir.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto s = summary(dir);
  ASSERT_GE(s["outer"].size(), 2u);
  EXPECT_TRUE(s["outer"][0]["E"].is_null());
  EXPECT_GT(s["outer"][0]["new_paths"].get<int>(), 0);
  EXPECT_TRUE(fs::exists(dir / "outer_trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "paths.txt"));
  // The dump feeds straight back into solve.
  const Invocation again = mixflow({"solve", "--net", kNet, "--trips", kTrips, "--paths", out("paths.txt"), "--penetration", "0.8", "-o", out("re")});
  EXPECT_EQ(again.code, cli::kOk) << again.err;
  EXPECT_EQ(summary(out("re"))["path_count"], s["path_count"]);
}

TEST_F(Cli, PgaHugeToleranceStopsAtSecondOuterIteration) {
  const Invocation r = mixflow({"pga", "--net", kNet, "--trips", kTrips, "--k", "2", "--penetration", "0.8", "--outer-tol", "10", "-o", dir.string()});
  ASSERT_EQ(r.code, cli::kOk);
  EXPECT_EQ(summary(dir)["outer"].size(), 2u);
}

TEST_F(Cli, PgaWithAllPathsMatchesDirectSolveCost) {
  ASSERT_EQ(mixflow({"pga", "--net", kNet, "--trips", kTrips, "--k", "12", "--final-gap", "1e-8", "--gap", "1e-8",
                     "--max-iters", "300000", "-o", out("p")}).code, 0);
  ASSERT_EQ(mixflow({"solve", "--net", kNet, "--trips", kTrips, "--k", "12", "--gap", "1e-8", "--max-iters", "300000",
                     "-o", out("s")}).code, 0);
  const double a = summary(out("p"))["total_cost"], b = summary(out("s"))["total_cost"];
  EXPECT_NEAR(a, b, 1e-4 * b);
}

TEST_F(Cli, CheckAcceptsSolverOutput) {
  ASSERT_EQ(mixflow({"solve", "--net", kNet, "--trips", kTrips, "-o", dir.string()}).code, 0);
  const Invocation r = mixflow({"check", "--net", kNet, "--trips", kTrips, "--flows", out("path_flows.csv")});
  EXPECT_EQ(r.code, cli::kOk) << r.out << r.err;
  EXPECT_NE(r.out.find("ncp_residual"), std::string::npos);
}

TEST_F(Cli, CheckRejectsPerturbedFlows) {
  ASSERT_EQ(mixflow({"solve", "--net", kNet, "--trips", kTrips, "-o", dir.string()}).code, 0);
  // Move 10% of the first path's flow onto the second path of the same group.
  std::istringstream in(slurp(dir / "path_flows.csv"));
  std::string header, first, second, rest;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  std::ostringstream tail;
  tail << in.rdbuf();
  auto split_flow = [](const std::string& row) {
    const auto comma = row.rfind(',');
    return std::pair{row.substr(0, comma + 1), std::stod(row.substr(comma + 1))};
  };
  auto [p1, f1] = split_flow(first);
  auto [p2, f2] = split_flow(second);
  {
    std::ofstream outf(dir / "perturbed.csv");
    outf.precision(17);
    outf << header << '\n' << p1 << 1.1 * f1 << '\n' << p2 << f2 - 0.1 * f1 << '\n' << tail.str();
  }
  const Invocation r = mixflow({"check", "--net", kNet, "--trips", kTrips, "--flows", out("perturbed.csv")});
  EXPECT_EQ(r.code, cli::kCheckFailed) << r.out;
}

TEST_F(Cli, CheckRejectsEmptyFile) {
  std::ofstream(dir / "empty.csv").close();
  const Invocation r = mixflow({"check", "--net", kNet, "--trips", kTrips, "--flows", out("empty.csv")});
  EXPECT_EQ(r.code, cli::kInputError);
}

TEST_F(Cli, KspListsPathsInCostOrder) {
  const std::string net = kData + "/tiny_net.tntp";
  const Invocation r = mixflow({"ksp", "--net", net, "--origin", "1", "--dest", "4", "--k", "5"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream in(r.out);
  int rank = 0;
  double cost = 0, prev = -1;
  std::string seq;
  std::vector<std::string> seqs;
  while (in >> rank >> cost >> seq) {
    EXPECT_GE(cost, prev);
    prev = cost;
    seqs.push_back(seq);
  }
  EXPECT_EQ(seqs.size(), 3u);
  const Invocation one = mixflow({"ksp", "--net", net, "--origin", "1", "--dest", "4", "--k", "1", "--class", "av"});
  ASSERT_EQ(one.code, cli::kOk);
  EXPECT_EQ(one.out.substr(0, 2), "1 ");
  const Invocation none = mixflow({"ksp", "--net", net, "--origin", "4", "--dest", "1"});
  EXPECT_EQ(none.code, cli::kInputError);
  EXPECT_NE(none.err.find("no path"), std::string::npos);
}

}  // namespace
}  // namespace mixflow
