#include "doctest.h"

#include <sstream>

#include "json.hpp"
#include "mcgraph/config.hpp"
#include "mcgraph/error.hpp"

using namespace mcgraph;

TEST_SUITE("config") {

TEST_CASE("variant names") {
  CHECK(parse_variant("full") == Variant::kFull);
  CHECK(parse_variant("no_global_attention") == Variant::kNoGlobalAttention);
  CHECK(parse_variant("D-MGAC*-") == Variant::kNoGlobalAttentionNoCl);
  CHECK(variant_tag(Variant::kNoGlobalAttention) == "D-MGAC*");
  CHECK_THROWS_AS(parse_variant("partial"), ConfigError);
}

TEST_CASE("variant removals") {
  ExperimentConfig c;
  CHECK(c.effective_encoder().global_attention);
  CHECK(c.effective_train().contrastive);
  c.variant = Variant::kNoGlobalAttention;
  CHECK_FALSE(c.effective_encoder().global_attention);
  CHECK(c.effective_train().loss.alpha == 0.5);
  c.variant = Variant::kNoGlobalAttentionNoCl;
  CHECK_FALSE(c.effective_encoder().global_attention);
  CHECK(c.effective_train().loss.alpha == 0.0);
  CHECK(c.effective_train().loss.beta == 0.0);
  CHECK(c.effective_train().loss.lambda == 0.1);
  CHECK_FALSE(c.effective_train().contrastive);
}

TEST_CASE("defaults") {
  const ExperimentConfig c;
  CHECK(c.runs == 30);
  CHECK(c.train.loss.tau == 0.5);
  CHECK(c.train.loss.negatives == 5);
  CHECK(c.train.loss.theta_pos == 0.5);
  CHECK(c.train.loss.theta_neg == 0.3);
  CHECK(c.train.anchor_refresh == 10);
  CHECK(c.train.learning_rate == 0.005);
  CHECK(c.train.epochs == 200);
  CHECK(c.train.grad_clip == 5.0);
  CHECK(c.train.loss.alpha == 0.5);
  CHECK(c.train.loss.beta == 0.5);
  CHECK(c.train.loss.lambda == 0.1);
  CHECK(c.test_fraction == 0.2);
}

TEST_CASE("serialize and parse round-trip") {
  ExperimentConfig c;
  c.data = "ratings.csv";
  c.seed = 12345678901ULL;
  c.variant = Variant::kNoGlobalAttention;
  c.train.loss.lambda = 0.1 + 0.2;
  c.synthetic.density = 1.0 / 7.0;
  c.encoder.global_attention = false;
  std::istringstream in(serialize_config(c));
  const ExperimentConfig back = parse_config(in);
  CHECK(back == c);
  CHECK(back.train.loss.lambda == c.train.loss.lambda);
  CHECK(back.synthetic.density == c.synthetic.density);
  CHECK(serialize_config(back) == serialize_config(c));
}

TEST_CASE("every key can be read and written") {
  ExperimentConfig c;
  for (const auto& key : config_keys()) {
    const std::string v = get_config_value(c, key);
    CHECK_NOTHROW(set_config_value(c, key, v));
    CHECK(get_config_value(c, key) == v);
  }
  CHECK(config_keys().size() == 47);
}

TEST_CASE("parse errors") {
  std::istringstream unknown("seed = 3\nbogus = 1\n");
  try {
    parse_config(unknown);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  std::istringstream bad_value("epochs = many\n");
  CHECK_THROWS_AS(parse_config(bad_value), ConfigError);
  std::istringstream no_eq("epochs 3\n");
  CHECK_THROWS_AS(parse_config(no_eq), ConfigError);
  std::istringstream bad_bool("contrastive = maybe\n");
  CHECK_THROWS_AS(parse_config(bad_bool), ConfigError);
  CHECK_THROWS_AS(load_config("/no/such/config.cfg"), ConfigError);
}

TEST_CASE("comments blanks and base values") {
  ExperimentConfig base;
  base.runs = 3;
  std::istringstream in("# header\n\n  epochs = 7   # trailing\nalpha=0.25\n");
  const auto c = parse_config(in, base);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.loss.alpha == 0.25);
  CHECK(c.runs == 3);
}

TEST_CASE("validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.ts_percent = 50;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.runs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.train.loss.tau = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("json form is typed") {
  const auto j = nlohmann::json::parse(config_to_json(ExperimentConfig{}));
  CHECK(j["seed"].is_number_unsigned());
  CHECK(j["tau"].get<double>() == 0.5);
  CHECK(j["global_attention"].get<bool>());
  CHECK(j["variant"].get<std::string>() == "full");
  CHECK(j.size() == config_keys().size());
}

}  // TEST_SUITE
