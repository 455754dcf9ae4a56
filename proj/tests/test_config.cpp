#include <doctest.h>

#include "focus/config.hpp"

using namespace focus;

TEST_CASE("defaults") {
  const RunConfig c = make_run_config(std::nullopt, {});
  CHECK(c.relevance.first_layer == 14);
  CHECK(c.relevance.last_layer == 32);
  CHECK(c.proposal.k == 15);
  CHECK(c.proposal.s_min == 3);
  CHECK(c.proposal.s_max == 5);
  CHECK(c.proposal.s_dist == 2.0);
  CHECK(c.ranking.n_steps == 1);
  CHECK_FALSE(c.ranking.overrun);
  CHECK(c.ranking.t_type2 == 0.6);
  CHECK(c.plan.t_obj_dist == 1200.0);
  CHECK(c.provenance.at("proposal.k") == "default");
}

TEST_CASE("flags beat the file, the file beats defaults") {
  const std::string file = R"(
# comment line
[relevance]
first_layer = 10   # trailing comment
last_layer = 20
[ranking]
n_steps = 2
[paths]
output_dir = "out dir/x"
)";
  const RunConfig c = make_run_config(file, {{"relevance.first_layer", "12"}});
  CHECK(c.relevance.first_layer == 12);
  CHECK(c.relevance.last_layer == 20);
  CHECK(c.ranking.n_steps == 2);
  CHECK(c.output_dir == "out dir/x");
  CHECK(c.provenance.at("relevance.first_layer") == "flag");
  CHECK(c.provenance.at("relevance.last_layer") == "file");
  CHECK(c.provenance.at("relevance.sigma") == "default");
}

TEST_CASE("k follows n_steps unless set explicitly") {
  CHECK(make_run_config(std::nullopt, {{"ranking.n_steps", "3"}}).proposal.k == 15);
  CHECK(make_run_config(std::nullopt, {{"ranking.n_steps", "4"}}).proposal.k == 30);
  CHECK(make_run_config(std::nullopt, {{"ranking.n_steps", "8"}}).proposal.k == 30);
  CHECK(make_run_config(std::string("proposal.k = 7\n"), {{"ranking.n_steps", "8"}}).proposal.k == 7);
  CHECK(make_run_config(std::nullopt, {{"proposal.k", "9"}, {"ranking.n_steps", "8"}}).proposal.k == 9);
}

TEST_CASE("unknown keys and bad values are rejected with the key named") {
  CHECK_THROWS_WITH_AS(make_run_config(std::nullopt, {{"proposal.kk", "3"}}), doctest::Contains("proposal.kk"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(make_run_config(std::nullopt, {{"ranking.n_steps", "many"}}),
                       doctest::Contains("ranking.n_steps"), ConfigError);
  CHECK_THROWS_AS(make_run_config(std::string("[proposal]\nbogus = 1\n"), {}), ConfigError);
  CHECK_THROWS_AS(make_run_config(std::string("no equals sign\n"), {}), ConfigError);
  CHECK_THROWS_AS(make_run_config(std::nullopt, {{"ablation.map", "sometimes"}}), ConfigError);
}

TEST_CASE("validation catches inconsistent values") {
  CHECK_THROWS_AS(make_run_config(std::nullopt, {{"relevance.first_layer", "20"}, {"relevance.last_layer", "10"}}),
                  ConfigError);
  CHECK_THROWS_AS(make_run_config(std::nullopt, {{"proposal.s_min", "5"}, {"proposal.s_max", "3"}}), ConfigError);
  CHECK_THROWS_AS(make_run_config(std::nullopt, {{"ranking.n_steps", "0"}}), ConfigError);
}

TEST_CASE("booleans and enums parse") {
  const RunConfig c = make_run_config(std::nullopt, {{"ranking.overrun", "true"},
                                                     {"ablation.ranking", "false"},
                                                     {"ablation.map", "random"},
                                                     {"relevance.feature_kind", "key_no_rope"},
                                                     {"relevance.residual", "spatial_identity"}});
  CHECK(c.ranking.overrun);
  CHECK_FALSE(c.ablation.ranking);
  CHECK(c.ablation.map == MapMode::random);
  CHECK(c.relevance.feature_kind == io::FeatureKind::key_no_rope);
  CHECK(c.relevance.residual == RolloutResidual::spatial_identity);
}

TEST_CASE("to_text reparses to the same values") {
  const RunConfig a = make_run_config(std::nullopt, {{"ranking.n_steps", "8"}, {"plan.t_obj_dist", "900.5"}});
  const RunConfig b = make_run_config(a.to_text(), {});
  for (const auto& key : RunConfig::keys()) CHECK(a.get(key) == b.get(key));
}

TEST_CASE("parse_config_text handles sections and quotes") {
  const auto kv = parse_config_text("a.b = 1\n[s]\nx = \"has # hash\"\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"a.b", "1"});
  CHECK(kv[1] == std::pair<std::string, std::string>{"s.x", "has # hash"});
}
