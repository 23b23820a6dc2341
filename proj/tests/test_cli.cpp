#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hyperclean/cli.hpp"
#include "support/emission_fixture.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = HYPERCLEAN_DATA_DIR;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HYPERCLEAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hyperclean_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_emission_fixture() {
    fs::create_directories(dir_ / "trips");
    std::ofstream trips(dir_ / "trips" / "grid.csv");
    trips << "t_s,speed_kmh,accel_ms2,nox_mg\n";
    std::size_t t = 0;
    for (const auto& s : fixtures::synthetic_trips(true))
      trips << t++ << ',' << s.speed_kmh << ',' << s.accel_ms2 << ',' << s.nox_mg << '\n';
    std::ofstream cycle(dir_ / "cycle.txt");
    for (double v : fixtures::synthetic_cycle()) cycle << hyperclean::format_extended(v) << '\n';
  }

  std::string quoted(const fs::path& p) const { return "'" + p.string() + "'"; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsage) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("fairness --help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("nonsense"), 2);
  EXPECT_EQ(run_cli("falsify --traces x"), 2);
  EXPECT_EQ(run_cli("falsify --contract c --traces t --max-iter notanumber"), 2);
}

TEST_F(CliTest, BadContractIsDataError) {
  std::ofstream(dir_ / "bad.json") << "{\"kind\": \"robust\", \"d_in\": 3}";
  EXPECT_EQ(run_cli("falsify --contract " + quoted(dir_ / "bad.json") + " --traces " +
                    quoted(kData / "pair") + " --out-dir " + quoted(dir_)),
            3);
  EXPECT_EQ(run_cli("oracle --contract " + quoted(dir_ / "missing.json") + " --traces " +
                    quoted(kData / "pair")),
            3);
}

TEST_F(CliTest, OracleExitCodes) {
  EXPECT_EQ(run_cli("--quiet oracle --contract " + quoted(kData / "pair" / "robust.json") +
                    " --traces " + quoted(kData / "pair")),
            1);
  EXPECT_EQ(run_cli("--quiet oracle --contract " + quoted(kData / "mixed" / "robust.json") +
                    " --traces " + quoted(kData / "mixed")),
            0);
}

TEST_F(CliTest, FalsifyWritesReportAndManifest) {
  const std::string args = "--seed 5 --out-dir " + quoted(dir_) + " falsify --contract " +
                           quoted(kData / "pair" / "robust.json") + " --traces " +
                           quoted(kData / "pair") + " --restarts 3";
  EXPECT_EQ(run_cli(args), 1);
  const std::string report = slurp(dir_ / "falsify.csv");
  EXPECT_EQ(report.rfind("iteration,robustness,accepted\n", 0), 0u);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "falsify.csv.manifest.json"));
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["config"]["restarts"], 3);
  EXPECT_EQ(manifest["outputs"].size(), 1u);
}

TEST_F(CliTest, EmissionsPlantedBandIsFalsified) {
  write_emission_fixture();
  const std::string args = "--seed 7 --out-dir " + quoted(dir_) + " emissions falsify --trips " +
                           quoted(dir_ / "trips") + " --cycle " + quoted(dir_ / "cycle.txt") +
                           " --kappa-in 15 --kappa-out 88";
  EXPECT_EQ(run_cli(args), 1);
  EXPECT_TRUE(fs::exists(dir_ / "emissions.csv"));
  EXPECT_EQ(slurp(dir_ / "plot.csv").rfind("t_s,std_speed,candidate_speed\n", 0), 0u);
  EXPECT_EQ(run_cli("emissions predict --trips " + quoted(dir_ / "trips") + " --cycle " +
                    quoted(dir_ / "cycle.txt")),
            0);
  std::ofstream(dir_ / "broken.txt") << "10\nfast\n";
  EXPECT_EQ(run_cli("emissions predict --trips " + quoted(dir_ / "trips") + " --cycle " +
                    quoted(dir_ / "broken.txt")),
            3);
}

TEST_F(CliTest, FairnessMonitorFlagsJohn) {
  std::ofstream(dir_ / "in.csv") << "id,ed,ex,pe,in,sk\njohn,0.5,0.5,0.5,0.5,0.2\n";
  const std::string base = "--seed 1 --out-dir " + quoted(dir_) + " fairness monitor --contract " +
                           quoted(kData / "fairness" / "reference.json") + " --inputs " +
                           quoted(dir_ / "in.csv");
  EXPECT_EQ(run_cli(base + " --system \"P'\""), 1);
  const std::string report = slurp(dir_ / "fairness.csv");
  EXPECT_EQ(report.rfind("case_id,score,normalized,counterpart_json\njohn,-", 0), 0u);
  EXPECT_EQ(run_cli(base + " --system P --out fair.csv"), 0);
  std::ofstream(dir_ / "short.csv") << "a,b\n0.5,0.5\n";
  EXPECT_EQ(run_cli("fairness monitor --system P --contract " +
                    quoted(kData / "fairness" / "reference.json") + " --inputs " +
                    quoted(dir_ / "short.csv") + " --out-dir " + quoted(dir_)),
            3);
}

TEST_F(CliTest, ReplayReproducesReportsByteForByte) {
  write_emission_fixture();
  std::ofstream(dir_ / "in.csv") << "id,ed,ex,pe,in,sk\njohn,0.5,0.5,0.5,0.5,0.2\nx,0.1,0.9,0.4,0.3,0.15\n";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"falsify.csv", "falsify --contract " + quoted(kData / "pair" / "robust.json") +
                          " --traces " + quoted(kData / "pair")},
      {"fairness.csv", "fairness monitor --system \"P'\" --contract " +
                           quoted(kData / "fairness" / "reference.json") + " --inputs " +
                           quoted(dir_ / "in.csv") + " --max-iter 2000"},
      {"emissions.csv", "emissions falsify --trips " + quoted(dir_ / "trips") + " --cycle " +
                            quoted(dir_ / "cycle.txt") + " --max-iter 300"}};
  for (const auto& [report, args] : runs) {
    run_cli("--quiet --seed 11 --out-dir " + quoted(dir_) + " " + args);
    const std::string first = slurp(dir_ / report);
    ASSERT_FALSE(first.empty()) << report;
    fs::remove(dir_ / report);
    run_cli("replay " + quoted(dir_ / (report + ".manifest.json")));
    EXPECT_EQ(slurp(dir_ / report), first) << report;
  }
}

TEST(CliInProcess, DispatchesWithoutSpawning) {
  std::ostringstream out, err;
  EXPECT_EQ(hyperclean::cli::run({"hyperclean", "--version"}, out, err), 0);
  EXPECT_NE(out.str().find(HYPERCLEAN_VERSION), std::string::npos);
  EXPECT_EQ(hyperclean::cli::run({"hyperclean", "serve"}, out, err), 2);
}
