#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(LAGFLOW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path tmp(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lagflow_cli_" + name);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST(CliExitCodes, SuccessWritesArtifacts) {
  const fs::path d = tmp("ok");
  EXPECT_EQ(cli("run --preset pme-convergence --no-plots --out-dir " + d.string()), 0);
  EXPECT_TRUE(fs::exists(d / "steps.csv"));
  EXPECT_TRUE(fs::exists(d / "summary.json"));
  EXPECT_FALSE(fs::exists(d / "energy.svg"));
}

TEST(CliExitCodes, ConfigErrorsReturnTwo) {
  const fs::path d = tmp("bad");
  fs::create_directories(d);
  std::ofstream(d / "bad.cfg") << "preset = pme-waiting-time\ntheta = 0.3\n";
  EXPECT_EQ(cli("run " + (d / "bad.cfg").string()), 2);
  EXPECT_EQ(cli("run " + (d / "missing.cfg").string()), 2);
  EXPECT_EQ(cli("run --preset pme-convergence --strategy 3"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
}

TEST(CliExitCodes, SolverAbortReturnsThree) {
  const fs::path d = tmp("abort");
  fs::create_directories(d);
  // Blow-up run with tau exhaustion treated as a failure.
  std::ofstream(d / "abort.cfg") << "preset = ks-blowup-1d\nmx = 200\nabort_is_result = false\n";
  EXPECT_EQ(cli("run --no-plots --out-dir " + (d / "out").string() + " " + (d / "abort.cfg").string()), 3);
}

TEST(CliExitCodes, CheckSubsetPasses) { EXPECT_EQ(cli("check --criterion 11"), 0); }
