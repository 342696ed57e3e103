#include "mcgraph/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <system_error>

#include "json.hpp"

#include "mcgraph/error.hpp"

namespace mcgraph {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoGlobalAttention: return "no_global_attention";
    case Variant::kNoGlobalAttentionNoCl: return "no_global_attention_no_cl";
  }
  return "full";
}

std::string_view variant_tag(Variant v) {
  switch (v) {
    case Variant::kFull: return "D-MGAC";
    case Variant::kNoGlobalAttention: return "D-MGAC*";
    case Variant::kNoGlobalAttentionNoCl: return "D-MGAC*-";
  }
  return "D-MGAC";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kFull, Variant::kNoGlobalAttention, Variant::kNoGlobalAttentionNoCl})
    if (name == variant_name(v) || name == variant_tag(v)) return v;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

EncoderConfig ExperimentConfig::effective_encoder() const {
  EncoderConfig e = encoder;
  if (variant != Variant::kFull) e.global_attention = false;
  return e;
}

TrainConfig ExperimentConfig::effective_train() const {
  TrainConfig t = train;
  if (variant == Variant::kNoGlobalAttentionNoCl) {
    t.loss.alpha = 0.0;
    t.loss.beta = 0.0;
    t.contrastive = false;
  }
  return t;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (ts_percent != 40 && ts_percent != 60 && ts_percent != 80 && ts_percent != 100)
    throw ConfigError("ts must be one of 40, 60, 80, 100");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must be in (0, 1)");
  if (!(rating_max > rating_min)) throw ConfigError("rating_max must exceed rating_min");
  if (train.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (train.anchor_refresh < 1) throw ConfigError("anchor_refresh must be at least 1");
  if (!(train.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (encoder.heads < 1 || encoder.feature_dim < 1 || encoder.hidden_dim < 1)
    throw ConfigError("encoder sizes must be positive");
  if (knn_neighbors < 1) throw ConfigError("knn_neighbors must be at least 1");
  train.loss.validate();
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return serialize_config(*this) == serialize_config(other);
}

namespace {

enum class Kind { kString, kInt, kReal, kBool };

struct Field {
  const char* key;
  Kind kind;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw ConfigError("cannot format value");
  return {buf, end};
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
}

template <class T>
Field int_field(const char* key, T ExperimentConfig::*member) {
  return {key, Kind::kInt,
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member, key](ExperimentConfig& c, const std::string& s) {
            c.*member = parse_number<T>(key, s);
          }};
}

template <class Get>
Field real_field(const char* key, Get access) {
  return {key, Kind::kReal,
          [access](const ExperimentConfig& c) {
            return format_real(access(const_cast<ExperimentConfig&>(c)));
          },
          [access, key](ExperimentConfig& c, const std::string& s) {
            access(c) = parse_number<double>(key, s);
          }};
}

template <class T, class Get>
Field nested_int(const char* key, Get access) {
  return {key, Kind::kInt,
          [access](const ExperimentConfig& c) {
            return std::to_string(access(const_cast<ExperimentConfig&>(c)));
          },
          [access, key](ExperimentConfig& c, const std::string& s) {
            access(c) = parse_number<T>(key, s);
          }};
}

template <class Get>
Field bool_field(const char* key, Get access) {
  return {key, Kind::kBool,
          [access](const ExperimentConfig& c) {
            return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          },
          [access, key](ExperimentConfig& c, const std::string& s) { access(c) = parse_bool(key, s); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"data", Kind::kString, [](const C& c) { return c.data; },
       [](C& c, const std::string& s) { c.data = s; }},
      int_field("seed", &C::seed),
      int_field("runs", &C::runs),
      int_field("ts", &C::ts_percent),
      {"variant", Kind::kString, [](const C& c) { return std::string(variant_name(c.variant)); },
       [](C& c, const std::string& s) { c.variant = parse_variant(s); }},
      int_field("criteria", &C::criteria),
      int_field("jobs", &C::jobs),
      real_field("test_fraction", [](C& c) -> double& { return c.test_fraction; }),
      int_field("split_seed", &C::split_seed),
      real_field("rating_min", [](C& c) -> double& { return c.rating_min; }),
      real_field("rating_max", [](C& c) -> double& { return c.rating_max; }),
      int_field("max_users", &C::max_users),

      nested_int<int>("heads", [](C& c) -> int& { return c.encoder.heads; }),
      nested_int<int>("feature_dim", [](C& c) -> int& { return c.encoder.feature_dim; }),
      nested_int<int>("hidden_dim", [](C& c) -> int& { return c.encoder.hidden_dim; }),
      real_field("leaky_slope", [](C& c) -> double& { return c.encoder.leaky_slope; }),
      real_field("init_std", [](C& c) -> double& { return c.encoder.init_std; }),
      bool_field("global_attention", [](C& c) -> bool& { return c.encoder.global_attention; }),

      real_field("tau", [](C& c) -> double& { return c.train.loss.tau; }),
      real_field("alpha", [](C& c) -> double& { return c.train.loss.alpha; }),
      real_field("beta", [](C& c) -> double& { return c.train.loss.beta; }),
      real_field("lambda", [](C& c) -> double& { return c.train.loss.lambda; }),
      nested_int<int>("negatives", [](C& c) -> int& { return c.train.loss.negatives; }),
      real_field("theta_pos", [](C& c) -> double& { return c.train.loss.theta_pos; }),
      real_field("theta_neg", [](C& c) -> double& { return c.train.loss.theta_neg; }),
      nested_int<int>("epochs", [](C& c) -> int& { return c.train.epochs; }),
      nested_int<int>("anchor_refresh", [](C& c) -> int& { return c.train.anchor_refresh; }),
      real_field("learning_rate", [](C& c) -> double& { return c.train.learning_rate; }),
      real_field("grad_clip", [](C& c) -> double& { return c.train.grad_clip; }),
      bool_field("contrastive", [](C& c) -> bool& { return c.train.contrastive; }),

      real_field("svr_epsilon", [](C& c) -> double& { return c.predictor.epsilon; }),
      real_field("svr_regularization", [](C& c) -> double& { return c.predictor.regularization; }),
      nested_int<int>("svr_epochs", [](C& c) -> int& { return c.predictor.epochs; }),
      real_field("svr_learning_rate", [](C& c) -> double& { return c.predictor.learning_rate; }),
      int_field("knn_neighbors", &C::knn_neighbors),

      nested_int<std::size_t>("synthetic_users", [](C& c) -> std::size_t& { return c.synthetic.users; }),
      nested_int<std::size_t>("synthetic_items", [](C& c) -> std::size_t& { return c.synthetic.items; }),
      nested_int<std::size_t>("synthetic_criteria", [](C& c) -> std::size_t& { return c.synthetic.criteria; }),
      nested_int<std::size_t>("synthetic_rank", [](C& c) -> std::size_t& { return c.synthetic.rank; }),
      real_field("synthetic_density", [](C& c) -> double& { return c.synthetic.density; }),
      nested_int<std::size_t>("synthetic_min_per_user",
                              [](C& c) -> std::size_t& { return c.synthetic.min_per_user; }),
      real_field("synthetic_mean", [](C& c) -> double& { return c.synthetic.mean; }),
      real_field("synthetic_user_bias", [](C& c) -> double& { return c.synthetic.user_bias; }),
      real_field("synthetic_item_bias", [](C& c) -> double& { return c.synthetic.item_bias; }),
      real_field("synthetic_factor_std", [](C& c) -> double& { return c.synthetic.factor_std; }),
      real_field("synthetic_noise", [](C& c) -> double& { return c.synthetic.noise; }),
      int_field("synthetic_seed", &C::synthetic_seed),
  };
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
  return find_field(key).get(cfg);
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(base, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
  return out.str();
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  nlohmann::ordered_json j;
  for (const auto& f : fields()) {
    const std::string v = f.get(cfg);
    switch (f.kind) {
      case Kind::kString: j[f.key] = v; break;
      case Kind::kBool: j[f.key] = v == "true"; break;
      case Kind::kInt:
      case Kind::kReal: j[f.key] = nlohmann::ordered_json::parse(v); break;
    }
  }
  return j.dump(indent);
}

}  // namespace mcgraph
