#include <sstream>

#include "doctest.h"
#include "rondo/config.hpp"

using namespace rondo;

TEST_CASE("values override the preset") {
  RunConfig c = preset_config(Preset::desk);
  apply_config_text(c, "# comment\n\ntraining.epochs = 7\naugment.p_flip=0.002\nscenarios.mix = yield:2, stop-behind:1\n");
  CHECK(c.training.epochs == 7);
  CHECK(c.augment.p_flip == 0.002);
  REQUIRE(c.mix.size() == 2);
  CHECK(c.mix[0] == ScenarioWeight{ScenarioKind::Yield, 2.0});
}

TEST_CASE("unknown keys and bad values name the line") {
  RunConfig c;
  try {
    apply_config_text(c, "training.epochs = 3\n\ntraining.epoch = 4\n", "run.cfg");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.cfg:3") != std::string::npos);
    CHECK(std::string(e.what()).find("training.epoch") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_text(c, "training.epochs = many\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "just words\n"), ConfigError);
  CHECK_THROWS_AS(apply_config_text(c, "scenarios.mix = flying:1\n"), ConfigError);
}

TEST_CASE("dump and reapply give the same config and hash") {
  RunConfig a = preset_config(Preset::paper);
  a.seed = 99;
  RunConfig b = preset_config(Preset::desk);
  apply_config_text(b, dump_config(a));
  CHECK(dump_config(b) == dump_config(a));
  CHECK(config_hash(b) == config_hash(a));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(preset_config(Preset::desk)));
}

TEST_CASE("template lists every key and parses back") {
  const std::string tpl = config_template();
  std::istringstream dump(dump_config(RunConfig{}));
  std::string line;
  while (std::getline(dump, line)) {
    const std::string key = line.substr(0, line.find(" ="));
    CHECK(tpl.find(key + " =") != std::string::npos);
  }
  CHECK(tpl.find("# default, not from paper") != std::string::npos);
  RunConfig c;
  CHECK_NOTHROW(apply_config_text(c, tpl));
}

TEST_CASE("presets") {
  const RunConfig paper = preset_config(Preset::paper);
  CHECK(paper.network.input_size == 256);
  CHECK(paper.training.batch == 256);
  CHECK(paper.training.epochs == 50);
  CHECK(paper.augment.p_flip == 0.01);
  CHECK(parse_preset("desk") == Preset::desk);
  CHECK_THROWS_AS(parse_preset("laptop"), ConfigError);
}

TEST_CASE("mix text round trip") {
  const auto mix = parse_mix("yield:1,random-traffic:3");
  CHECK(parse_mix(format_mix(mix)) == mix);
  CHECK_THROWS_AS(parse_mix("yield:-1"), ConfigError);
  CHECK_THROWS_AS(parse_mix(""), ConfigError);
}
