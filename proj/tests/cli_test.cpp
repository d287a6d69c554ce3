/* Copyright 2026 The hipkit Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hipkit/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>
#include <json.hpp>

#include "hipkit/errors.hpp"
#include "hipkit/heatmap_io.hpp"
#include "hipkit/report_io.hpp"

namespace hipkit::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = HIPKIT_SOURCE_DIR;
const fs::path kFixtures = kSource / "tests" / "fixtures";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("hipkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(std::vector<std::string> args) {
    out.str("");
    err.str("");
    return run_cli(args, out, err);
  }

  fs::path write_config(const nlohmann::json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
  }

  static nlohmann::json minimal_config() {
    return {{"scenes", 1},        {"grid_size_x", 60},  {"grid_size_y", 60},
            {"origin_x", -18.0},  {"origin_y", -18.0},  {"num_objects_min", 5},
            {"num_objects_max", 8}, {"clutter_peaks", 30}, {"baseline_k", 60}};
  }

  fs::path dir;
  std::ostringstream out, err;
};

TEST_F(CliTest, SimulateSmoke) {
  const fs::path cfg = write_config(minimal_config());
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir / "o").string()}), kExitOk)
      << err.str();
  for (const char* f : {"report.csv", "report.json", "recall_curve.svg", "version.json",
                        "scenes/scene_0000.json", "candidates/scene_0000.hip.jsonl",
                        "candidates/scene_0000.baseline.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
  }
  const auto report = load(dir / "o" / "report.json");
  EXPECT_EQ(report.at("summary").at("num_scenes"), 1);
  EXPECT_EQ(report.at("hip").at("thresholds").size(), 4u);
  EXPECT_EQ(report.at("config").at("k_per_stage"), nlohmann::json::array({20, 20, 20}));
  const std::string csv = slurp(dir / "o" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "scope,class,threshold,recall,num_gt,num_matched");
  EXPECT_NE(slurp(dir / "o" / "recall_curve.svg").find("<svg"), std::string::npos);
  std::ifstream lines(dir / "o" / "candidates" / "scene_0000.hip.jsonl");
  EXPECT_EQ(read_candidates_jsonl(lines).size(), 60u);
  const auto scene = scene_from_json(load(dir / "o" / "scenes" / "scene_0000.json"));
  EXPECT_GE(scene.gts.size(), 5u);
}

TEST_F(CliTest, SimulateIsByteDeterministicAcrossRunsAndJobs) {
  auto c = minimal_config();
  c["scenes"] = 6;
  const fs::path cfg = write_config(c);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()}), kExitOk);
  ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir / "b").string(), "--jobs", "3"}),
            kExitOk);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file() || e.path().filename() == "version.json") continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 10u);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  const fs::path cfg = write_config(minimal_config());
  const auto ec = load_experiment_config(cfg, {{"clutter_peaks", "7"}, {"mask_type", "box"}});
  EXPECT_EQ(ec.model.clutter_peaks, 7);
  EXPECT_EQ(ec.hip.mask_type, MaskType::Box);
  EXPECT_EQ(ec.scene.spec.size_x, 60);
  EXPECT_EQ(ec.baseline.k_per_stage, std::vector<int>{60});
  const auto sizes = load_experiment_config(std::nullopt, {{"class_sizes", "4:2:0.1,1:1:0,0.5:0.5:0"}});
  EXPECT_DOUBLE_EQ(sizes.scene.size_table[0].width, 2.0);
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
  auto bad = minimal_config();
  bad["no_such_key"] = 1;
  EXPECT_EQ(run({"simulate", "--config", write_config(bad).string(), "--out", dir.string()}),
            kExitConfig);
  EXPECT_NE(err.str().find("no_such_key"), std::string::npos);

  auto unfair = minimal_config();
  unfair["k_per_stage"] = {10, 10, 10};
  EXPECT_EQ(run({"simulate", "--config", write_config(unfair).string(), "--out", dir.string()}),
            kExitConfig);
  EXPECT_EQ(run({"simulate", "--out", dir.string(), "--num-stages", "x"}), kExitConfig);
  EXPECT_EQ(run({"frobnicate"}), kExitConfig);
  EXPECT_EQ(run({"simulate"}), kExitConfig);
  EXPECT_EQ(run({"simulate", "--config", (dir / "missing.json").string(), "--out", dir.string()}),
            kExitConfig);
}

TEST_F(CliTest, ProbeOneStageGivesExactlyK) {
  ASSERT_EQ(run({"probe", "--heatmap", (kFixtures / "probe" / "stage_0.json").string(), "--k", "5",
                 "--out", dir.string()}),
            kExitOk)
      << err.str();
  std::ifstream in(dir / "candidates.jsonl");
  EXPECT_EQ(read_candidates_jsonl(in).size(), 5u);
  EXPECT_TRUE(fs::exists(dir / "masks" / "stage_0_positive.json"));
  EXPECT_TRUE(fs::exists(dir / "masks" / "stage_0_accumulated.bin"));
}

TEST_F(CliTest, ProbeIdenticalStagesPointMaskIsDisjoint) {
  const std::string s0 = (kFixtures / "probe" / "stage_0.json").string();
  ASSERT_EQ(run({"probe", "--heatmap", s0, "--heatmap", s0, "--k", "40", "--mask-type", "point",
                 "--out", dir.string()}),
            kExitOk);
  std::ifstream in(dir / "candidates.jsonl");
  std::set<std::tuple<int, int, int>> cells;
  const auto cands = read_candidates_jsonl(in);
  ASSERT_EQ(cands.size(), 80u);
  for (const auto& c : cands) EXPECT_TRUE(cells.insert({c.class_id, c.y, c.x}).second);
}

TEST_F(CliTest, ProbeMatchesLibraryRunOnFixture) {
  for (const char* mode : {"point", "pooling", "box"}) {
    std::vector<std::string> args{"probe"};
    std::vector<Heatmap> maps;
    for (int k = 0; k < 3; ++k) {
      const fs::path p = kFixtures / "probe" / ("stage_" + std::to_string(k) + ".json");
      args.insert(args.end(), {"--heatmap", p.string()});
      maps.push_back(read_heatmap(p));
    }
    const fs::path o = dir / mode;
    args.insert(args.end(), {"--k", "6,5,4", "--mask-type", mode, "--small-classes", "1",
                             "--box-size", "2.0,1.0", "--out", o.string()});
    ASSERT_EQ(run(args), kExitOk) << err.str();

    HipConfig cfg{3, {6, 5, 4}, parse_mask_type(mode), {1}, 3};
    StageSource src;
    src.heatmap = [&](int k, std::span<const Candidate>) { return maps[k]; };
    src.boxes = [](int, std::span<const Candidate> cands) {
      std::vector<BevBox> b;
      for (const auto& c : cands) b.push_back(make_box(c.world_center.x(), c.world_center.y(), 2.0, 1.0, 0.0, c.class_id));
      return b;
    };
    const auto lib = run_hip(src, cfg, maps[0].spec());
    std::ostringstream expected;
    write_candidates_jsonl(expected, lib.candidates);
    EXPECT_EQ(slurp(o / "candidates.jsonl"), expected.str()) << mode;

    const Heatmap acc = read_heatmap(o / "masks" / "stage_2_accumulated.json");
    for (std::size_t i = 0; i < acc.size(); ++i) {
      ASSERT_EQ(acc[i], lib.final_mask[i] ? 1.0f : 0.0f);
    }
  }
}

TEST_F(CliTest, ProbeDataErrorsExitWithThree) {
  fs::copy(kFixtures / "probe" / "stage_0.json", dir / "cut.json");
  fs::copy(kFixtures / "probe" / "stage_0.bin", dir / "cut.bin");
  fs::resize_file(dir / "cut.bin", 100);
  EXPECT_EQ(run({"probe", "--heatmap", (dir / "cut.json").string(), "--out", dir.string()}),
            kExitData);
  EXPECT_NE(err.str().find("stage 0"), std::string::npos);

  write_heatmap(dir / "other.json", Heatmap(BevGridSpec{4, 4, 2, 0.5, 0, 0}));
  EXPECT_EQ(run({"probe", "--heatmap", (kFixtures / "probe" / "stage_0.json").string(), "--heatmap",
                 (dir / "other.json").string(), "--out", dir.string()}),
            kExitData);
  EXPECT_EQ(run({"probe", "--heatmap", (kFixtures / "probe" / "stage_0.json").string(),
                 "--mask-type", "box", "--box-size", "0,1", "--out", dir.string()}),
            kExitConfig);
}

TEST_F(CliTest, AuditExactPredictions) {
  ASSERT_EQ(run({"audit", "--dump", (kFixtures / "audit_exact.json").string(), "--out", dir.string()}),
            kExitOk)
      << err.str();
  const auto r = load(dir / "recall.json").at("pooled");
  for (const auto& v : r.at("recall")) EXPECT_EQ(v.get<double>(), 1.0);
  const auto fn = load(dir / "fn_inventory.json");
  EXPECT_EQ(fn.at("num_unmatched"), 0);
  EXPECT_TRUE(fn.at("scenes").empty());
  EXPECT_TRUE(fs::exists(dir / "classwise.svg"));
  EXPECT_TRUE(fs::exists(dir / "recall.csv"));
}

TEST_F(CliTest, AuditEmptyPredictions) {
  ASSERT_EQ(run({"audit", "--dump", (kFixtures / "audit_empty_predictions.json").string(), "--out",
                 dir.string()}),
            kExitOk);
  const auto r = load(dir / "recall.json").at("pooled");
  for (const auto& v : r.at("recall")) EXPECT_EQ(v.get<double>(), 0.0);
  const auto fn = load(dir / "fn_inventory.json");
  EXPECT_EQ(fn.at("num_unmatched"), 5);
  ASSERT_EQ(fn.at("scenes").size(), 2u);
  EXPECT_EQ(fn.at("scenes")[0].at("scene_id"), "a");
  EXPECT_EQ(fn.at("scenes")[0].at("unmatched").size(), 3u);
  EXPECT_EQ(fn.at("scenes")[1].at("unmatched")[1].at("class"), "pedestrian");
}

TEST_F(CliTest, AuditFourObjectFixture) {
  ASSERT_EQ(run({"audit", "--dump", (kFixtures / "audit_four_gt.json").string(), "--out",
                 dir.string(), "--jobs", "2"}),
            kExitOk);
  const auto r = load(dir / "recall.json").at("pooled");
  EXPECT_EQ(r.at("recall").get<std::vector<double>>(), (std::vector<double>{0.25, 0.25, 0.5, 0.75}));
  EXPECT_DOUBLE_EQ(r.at("mAR").get<double>(), 0.4375);
  const std::string csv = slurp(dir / "recall.csv");
  EXPECT_NE(csv.find("pooled,all,2,0.5,4,2"), std::string::npos) << csv;

  ASSERT_EQ(run({"audit", "--dump", (kFixtures / "audit_four_gt.json").string(), "--reference",
                 (kFixtures / "audit_exact.json").string(), "--out", (dir / "ref").string()}),
            kExitOk);
  EXPECT_NE(slurp(dir / "ref" / "classwise.svg").find("<rect"), std::string::npos);
}

TEST_F(CliTest, AuditMalformedDumpNamesSceneAndRecord) {
  auto dump = load(kFixtures / "audit_exact.json");
  dump["scenes"][1]["predictions"][1].erase("score");
  std::ofstream(dir / "bad.json") << dump.dump();
  EXPECT_EQ(run({"audit", "--dump", (dir / "bad.json").string(), "--out", dir.string()}), kExitData);
  EXPECT_NE(err.str().find("scene 'b' predictions[1]"), std::string::npos) << err.str();

  dump = load(kFixtures / "audit_exact.json");
  dump["scenes"][1]["scene_id"] = "a";
  std::ofstream(dir / "dup.json") << dump.dump();
  EXPECT_EQ(run({"audit", "--dump", (dir / "dup.json").string(), "--out", dir.string()}), kExitData);
}

TEST_F(CliTest, DumpRoundTrip) {
  const auto dump = read_detection_dump(kFixtures / "audit_four_gt.json");
  std::ofstream(dir / "copy.json") << dump_to_json(dump).dump(2);
  const auto back = read_detection_dump(dir / "copy.json");
  ASSERT_EQ(back.scenes.size(), 1u);
  EXPECT_EQ(dump_to_json(back), dump_to_json(dump));
}

TEST_F(CliTest, ReportRedrawsFromJson) {
  ASSERT_EQ(run({"audit", "--dump", (kFixtures / "audit_four_gt.json").string(), "--out",
                 (dir / "audit").string()}),
            kExitOk);
  ASSERT_EQ(run({"report", "--input", (dir / "audit" / "recall.json").string(), "--out",
                 (dir / "rep").string()}),
            kExitOk)
      << err.str();
  EXPECT_TRUE(fs::exists(dir / "rep" / "recall_curve.svg"));
  const std::string csv = slurp(dir / "rep" / "recall.csv");
  EXPECT_NE(csv.find("recall,all,4,0.75,4,3"), std::string::npos) << csv;
  EXPECT_NE(csv.find("recall,car,4,0.75,4,3"), std::string::npos) << csv;
  EXPECT_EQ(run({"report", "--input", (dir / "nope.json").string(), "--out", dir.string()}),
            kExitData);
}

TEST_F(CliTest, BinaryEndToEnd) {
  const std::string cmd = std::string("\"") + HIPKIT_CLI_PATH + "\" audit --dump \"" +
                          (kFixtures / "audit_four_gt.json").string() + "\" --out \"" +
                          (dir / "e2e").string() + "\" > \"" + (dir / "stdout.txt").string() + "\"";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(dir / "stdout.txt").find("mAR 0.4375"), std::string::npos);
  const std::string bad = std::string("\"") + HIPKIT_CLI_PATH + "\" simulate --out \"" +
                          dir.string() + "\" --scenes 0 2> /dev/null";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), kExitConfig);
}

}  // namespace
}  // namespace hipkit::cli
