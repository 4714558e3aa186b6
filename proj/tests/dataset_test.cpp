#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "rondo/dataset.hpp"
#include "rondo/pipeline.hpp"
#include "rondo/raster.hpp"

using namespace rondo;

namespace {

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("rondo_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

std::vector<SceneFrame> some_frames() {
  auto map = std::make_shared<const RoadMap>(synthesize_roundabout(RoundaboutParams{}));
  const EpisodeConfig ep = sample_scenario(ScenarioKind::StopBehind, map, 21);
  return capture_sequence(ep, 5).frames;
}

}  // namespace

TEST_CASE("frames carry 0.4 s of history and 3 s of future") {
  const std::vector<SceneFrame> frames = some_frames();
  REQUIRE(frames.size() > 10);
  for (const SceneFrame& f : frames) {
    CHECK(f.sequence_id == 5);
    CHECK(f.sdv.present[2]);
    // the first waypoint label is the SDV 0.2 s later in its own frame
    const WaypointPlan w = waypoint_label(f);
    const Vec2 p = f.sdv_pose().to_local(f.sdv_future[0].position());
    CHECK(w.points[0].x == doctest::Approx(p.x));
    CHECK(w.points[0].y == doctest::Approx(p.y));
  }
  // consecutive ticks 0.1 s apart
  CHECK(frames[1].time - frames[0].time == doctest::Approx(0.1));
}

TEST_CASE("binary dataset round trip and error offsets") {
  const std::vector<SceneFrame> frames = some_frames();
  const std::string bytes = encode_frames(frames);
  CHECK(bytes.rfind("RONDODS1", 0) == 0);
  CHECK(decode_frames(bytes) == frames);
  try {
    decode_frames(bytes.substr(0, bytes.size() - 7));
    FAIL("truncated data accepted");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("at byte") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_frames("RONDODS9" + bytes.substr(8)), DatasetError);
}

TEST_CASE("split keeps sequences whole and hits the frame targets") {
  DatasetManifest m;
  std::vector<std::vector<std::int32_t>> ticks;
  for (int i = 0; i < 20; ++i) {
    SequenceInfo s;
    s.id = static_cast<std::uint64_t>(i);
    s.kind = "stop-behind";
    s.frame_count = 50;
    m.sequences.push_back(s);
    std::vector<std::int32_t> t;
    for (int k = 4; k < 54; ++k) t.push_back(k);
    ticks.push_back(t);
  }
  const DatasetManifest out = split_and_subsample(m, ticks, 0.8, 300, 100, 17);
  CHECK(out.selected_total("train") == 300);
  CHECK(out.selected_total("dev") == 100);
  int train_seqs = 0;
  for (const SequenceInfo& s : out.sequences) {
    train_seqs += s.split == "train";
    if (s.split == "dev") CHECK(s.selected.size() <= 50);
    CHECK(std::set<std::int32_t>(s.selected.begin(), s.selected.end()).size() == s.selected.size());
  }
  CHECK(train_seqs == 16);
  CHECK(out == split_and_subsample(m, ticks, 0.8, 300, 100, 17));
  CHECK_FALSE(out == split_and_subsample(m, ticks, 0.8, 300, 100, 18));
}

TEST_CASE("manifest round trip and line-precise errors") {
  DatasetManifest m;
  m.generator_seed = 4;
  m.config_hash = "0011223344556677";
  m.train_target = 10;
  m.dev_target = 2;
  m.sequences.push_back({0, "yield", 99, 40, "train", {4, 9, 12}});
  m.sequences.push_back({1, "stop-behind", 98, 30, "dev", {5}});
  const std::string dir = temp_dir("manifest");
  const std::string path = dir + "/manifest.txt";
  write_manifest(m, path);
  CHECK(read_manifest(path) == m);

  std::ofstream(path) << "format RONDODS1 1\ngenerator_seed 4\nbogus 3\n";
  try {
    read_manifest(path);
    FAIL("bad manifest accepted");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("sequence allocation follows the mix weights") {
  const std::vector<ScenarioWeight> mix{{ScenarioKind::Yield, 1.0}, {ScenarioKind::StopBehind, 1.0},
                                        {ScenarioKind::RandomTraffic, 3.0}};
  const auto kinds = allocate_sequences(mix, 50);
  REQUIRE(kinds.size() == 50);
  CHECK(std::count(kinds.begin(), kinds.end(), ScenarioKind::Yield) == 10);
  CHECK(std::count(kinds.begin(), kinds.end(), ScenarioKind::RandomTraffic) == 30);
  CHECK(allocate_sequences(mix, 7).size() == 7);
}

TEST_CASE("generated datasets are reproducible") {
  RunConfig cfg;
  cfg.seed = 5;
  cfg.sequences = 8;
  cfg.train_frames = 60;
  cfg.dev_frames = 20;
  const std::string a = temp_dir("gen_a"), b = temp_dir("gen_b");
  generate_dataset(cfg, a);
  generate_dataset(cfg, b);
  for (const char* f : {"manifest.txt", "train.rds", "dev.rds", "config.txt", "roundabout.map"}) {
    std::ifstream ia(a + "/" + f, std::ios::binary), ib(b + "/" + f, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(ia)), {}), sb((std::istreambuf_iterator<char>(ib)), {});
    CAPTURE(f);
    CHECK(!sa.empty());
    CHECK(sa == sb);
  }
  const LoadedDataset d = load_dataset(a);
  CHECK(d.train.size() == 60);
  CHECK(d.dev.size() == 20);
  CHECK(d.maps.count("roundabout") == 1);
}
