#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "wlf/binary_io.hpp"
#include "wlf/bundle.hpp"
#include "wlf/pvc.hpp"

namespace wlf {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + WLF_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run("synth --out " + q(frames()) + " --seed 3 --count 3 --votes 4 --masks 3"), 0);
  }
  fs::path frames() const { return dir_ / "frames"; }
  fs::path bundle() const { return frames() / "synth_3"; }
  fs::path out(const std::string& name) const { return dir_ / name; }

  test::ScratchDir dir_{"cli"};
};

TEST_F(Cli, SynthWritesBundles) {
  for (const char* id : {"synth_3", "synth_4", "synth_5"}) {
    EXPECT_TRUE(fs::exists(frames() / id / kManifestFile));
    EXPECT_TRUE(fs::exists(frames() / id / "scene.json"));
    EXPECT_TRUE(fs::exists(frames() / id / "votes" / "votes_4.f32"));
  }
  EXPECT_NO_THROW(read_bundle(bundle()));
  EXPECT_EQ(run("synth --out " + q(out("dense")) + " --preset dense --seed 1"), 0);
  EXPECT_EQ(read_bundle(out("dense") / "synth_1").frame.num_beams, 64);
  EXPECT_EQ(run("synth --out " + q(out("x")) + " --preset nope"), 3);
}

TEST_F(Cli, PipelineWritesLabelsAndReports) {
  EXPECT_EQ(run("pipeline --frames " + q(frames()) + " --out " + q(out("p")) + " --stages spg,pvc,rsc --threads 2"), 0);
  for (const char* f : {"report.json", "report.txt", "run.json"}) EXPECT_TRUE(fs::exists(out("p") / f)) << f;
  EXPECT_TRUE(fs::exists(out("p") / "synth_4" / "sem.i32"));
  const auto report = json::parse(slurp(out("p") / "report.json"));
  EXPECT_EQ(report["stages"], "ccl,spg,pvc,rsc");
}

TEST_F(Cli, PipelineIsByteIdenticalAcrossRuns) {
  const std::string cfg_path = (dir_ / "cfg.json").string();
  std::ofstream(cfg_path) << json{{"frames", frames().string() + "/synth_*"}, {"stages", "spg,pvc,rsc"}, {"seed", 11}}.dump();
  ASSERT_EQ(run("pipeline --config " + q(cfg_path) + " --out " + q(out("a"))), 0);
  ASSERT_EQ(run("pipeline --config " + q(cfg_path) + " --out " + q(out("b"))), 0);
  EXPECT_EQ(slurp(out("a") / "report.json"), slurp(out("b") / "report.json"));
  for (const char* id : {"synth_3", "synth_4", "synth_5"}) {
    EXPECT_EQ(slurp(out("a") / id / "sem.i32"), slurp(out("b") / id / "sem.i32"));
    EXPECT_EQ(slurp(out("a") / id / "inst.i32"), slurp(out("b") / id / "inst.i32"));
    EXPECT_EQ(slurp(out("a") / id / "report.json"), slurp(out("b") / id / "report.json"));
  }
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("pipeline --frames " + q(dir_ / "missing") + " --out " + q(out("m"))), 2);
  EXPECT_EQ(run("pipeline --config " + q(dir_ / "missing.json") + " --out " + q(out("m"))), 2);
  const auto bad = dir_ / "bad.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(run("pipeline --config " + q(bad) + " --frames " + q(frames())), 3);
  const auto unknown = dir_ / "unknown.json";
  std::ofstream(unknown) << R"({"radius": 1})";
  EXPECT_EQ(run("pipeline --config " + q(unknown) + " --frames " + q(frames())), 3);
  EXPECT_EQ(run("pipeline --frames " + q(frames()) + " --out " + q(out("s")) + " --stages spg,oops"), 3);
  EXPECT_EQ(run("pipeline --frames " + q(frames()) + " --threads 0"), 3);
  EXPECT_EQ(run("nosuchcommand"), 3);
}

TEST_F(Cli, InconsistentLabelsAreAnInvariantViolation) {
  const auto b = read_bundle(bundle());
  ASSERT_FALSE(b.boxes.empty());
  // Instance of box 1 with a class other than the box's.
  PseudoLabels labels(b.frame.size());
  labels.semantic[0] = b.boxes[0].class_id % 3 + 1;
  labels.instance[0] = b.boxes[0].box_id;
  const auto labels_root = dir_ / "labels";
  write_labels(labels_root / b.frame.frame_id, labels);
  // Undecided votes leave the labels untouched.
  const auto votes = bundle() / "votes";
  fs::remove_all(votes);
  const std::vector<float> half(b.frame.size(), 0.5f);
  for (int e = 1; e <= 4; ++e) save_vote_epoch(votes, e, half);
  EXPECT_EQ(run("pvc --frames " + q(bundle()) + " --labels " + q(labels_root) + " --out " + q(out("v"))), 4);
}

TEST_F(Cli, StageSubcommandsChain) {
  const auto root = out("chain");
  ASSERT_EQ(run("spg --frames " + q(bundle()) + " --out " + q(root) + " --dump"), 0);
  for (const char* f : {"sem.i32", "inst.i32", "range.f32", "segments.u32", "trinary.i8"}) {
    EXPECT_TRUE(fs::exists(root / "synth_3" / f)) << f;
  }
  ASSERT_EQ(run("pvc --frames " + q(bundle()) + " --labels " + q(root) + " --out " + q(out("pvc"))), 0);
  ASSERT_EQ(run("rsc --frames " + q(bundle()) + " --labels " + q(out("pvc")) + " --out " + q(out("rsc"))), 0);
  ASSERT_EQ(run("eval --frames " + q(bundle()) + " --labels " + q(out("rsc")) + " --out " + q(out("eval"))), 0);
  const auto report = json::parse(slurp(out("eval") / "report.json"));
  EXPECT_GE(report["miou"].get<double>(), 0.0);
  EXPECT_LE(report["miou"].get<double>(), 1.0);
  // The chained stages agree with the pipeline run on the same bundle.
  ASSERT_EQ(run("pipeline --frames " + q(bundle()) + " --out " + q(out("full")) + " --stages spg,pvc,rsc"), 0);
  EXPECT_EQ(slurp(out("rsc") / "synth_3" / "sem.i32"), slurp(out("full") / "synth_3" / "sem.i32"));
}

TEST_F(Cli, MissingStageInputs) {
  EXPECT_EQ(run("rsc --frames " + q(bundle()) + " --labels " + q(dir_ / "nolabels")), 2);
  fs::remove_all(bundle() / "votes");
  EXPECT_EQ(run("spg --frames " + q(bundle())), 0);
  EXPECT_EQ(run("pvc --frames " + q(bundle())), 2);
  EXPECT_EQ(run("ipg --frames " + q(frames() / "synth_4") + " --out " + q(out("i"))), 0);
  fs::remove_all(frames() / "synth_4" / "masks");
  EXPECT_EQ(run("ipg --frames " + q(frames() / "synth_4")), 2);
}

TEST_F(Cli, IpgWritesFusedMasks) {
  ASSERT_EQ(run("ipg --frames " + q(bundle()) + " --out " + q(out("ipg"))), 0);
  const auto summary = json::parse(slurp(out("ipg") / "synth_3" / "ipg.json"));
  ASSERT_FALSE(summary.empty());
  for (const auto& entry : summary) {
    double total = 0.0;
    for (double w : entry["weights"]) total += w;
    EXPECT_NEAR(total, 1.0, 1e-9);
    const auto id = std::to_string(entry["box_id"].get<int>());
    const auto n = entry["height"].get<std::ptrdiff_t>() * entry["width"].get<std::ptrdiff_t>();
    EXPECT_EQ(io::read_array<float>(out("ipg") / "synth_3" / ("fused_" + id + ".f32"), n).size(),
              static_cast<std::size_t>(n));
    EXPECT_EQ(io::read_array<std::int8_t>(out("ipg") / "synth_3" / ("pseudo_" + id + ".i8"), n).size(),
              static_cast<std::size_t>(n));
  }
}

TEST_F(Cli, LogLevelFromEnvironment) {
  const std::string cmd = std::string("WLF_LOG=debug ") + WLF_CLI_PATH + " spg --frames " + q(bundle()) +
                          " --out " + q(out("log")) + " 2>" + q(dir_ / "log.txt") + " >/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir_ / "log.txt").find("spg:"), std::string::npos);
}

}  // namespace
}  // namespace wlf
