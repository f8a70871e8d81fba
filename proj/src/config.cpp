#include "lesionpipe/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace lesionpipe {

Scenario scenario_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Scenario::A;
  if (s == "B" || s == "b") return Scenario::B;
  if (s == "C" || s == "c") return Scenario::C;
  if (s == "D" || s == "d") return Scenario::D;
  throw ConfigError("unknown scenario '" + s + "' (expected A, B, C or D)");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::A: return "A";
    case Scenario::B: return "B";
    case Scenario::C: return "C";
    case Scenario::D: return "D";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  if (image_size < 8) throw ConfigError("image_size must be >= 8");
  if (border < 0 || border >= image_size)
    throw ConfigError("border must be in [0, image_size)");
  net.validate();
  train.validate();
  if (net.in_channels != channels())
    throw ConfigError("net.in_channels inconsistent with scenario " +
                      to_string(scenario));
  const int input = net_input_size();
  if (input % net.pool_factor() != 0)
    throw ConfigError("network input size " + std::to_string(input) +
                      " not divisible by pool factor " +
                      std::to_string(net.pool_factor()));
  if (wavelet_levels() > 0 && input % (1 << wavelet_levels()) != 0)
    throw ConfigError("network input size incompatible with wavelet levels");
  if (eval_batches < 1 || eval_batch_size < 1)
    throw ConfigError("eval_batches/eval_batch_size must be >= 1");
}

ScenarioConfig profile_config(Profile profile) {
  ScenarioConfig cfg;
  if (profile == Profile::Paper) {
    cfg.image_size = 216;
    cfg.border = 20;
    cfg.net.levels = 3;
    cfg.net.base_filters = 64;
    cfg.train.epochs = 20;
  } else {
    cfg.image_size = 56;
    cfg.border = 4;
    cfg.net.levels = 2;
    cfg.net.base_filters = 8;
    cfg.train.epochs = 10;
  }
  cfg.net.in_channels = cfg.channels();
  return cfg;
}

Profile profile_from_env() {
  const char* env = std::getenv("LESIONPIPE_PROFILE");
  if (!env || std::string(env) == "paper") return Profile::Paper;
  if (std::string(env) == "toy") return Profile::Toy;
  throw ConfigError("LESIONPIPE_PROFILE must be 'paper' or 'toy'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

// Flattens [section] key = value into "section.key" -> value.
std::map<std::string, std::string> parse_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    kv[key] = unquote(trim(line.substr(eq + 1)));
  }
  return kv;
}

template <typename T>
T parse_num(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T out;
  ss >> out;
  if (ss.fail() || !ss.eof())
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

}  // namespace

ScenarioConfig load_config(const std::filesystem::path& path) {
  auto kv = parse_kv(path);
  ScenarioConfig cfg = profile_config(profile_from_env());

  const auto take = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) return "";
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("scenario"); !v.empty()) cfg.scenario = scenario_from_string(v);
  if (auto v = take("seed"); !v.empty()) cfg.seed = parse_num<uint64_t>("seed", v);
  if (auto v = take("jobs"); !v.empty()) cfg.jobs = parse_num<int>("jobs", v);
  if (auto v = take("out_dir"); !v.empty()) cfg.out_dir = v;

  if (auto v = take("data.root"); !v.empty()) cfg.data_root = v;
  if (auto v = take("data.synth_train"); !v.empty())
    cfg.synth_train = parse_num<int>("data.synth_train", v);
  if (auto v = take("data.synth_test"); !v.empty())
    cfg.synth_test = parse_num<int>("data.synth_test", v);
  if (auto v = take("data.synth_size"); !v.empty())
    cfg.synth_size = parse_num<int>("data.synth_size", v);

  if (auto v = take("prepare.image_size"); !v.empty())
    cfg.image_size = parse_num<int>("prepare.image_size", v);
  if (auto v = take("prepare.border"); !v.empty())
    cfg.border = parse_num<int>("prepare.border", v);

  if (auto v = take("network.levels"); !v.empty())
    cfg.net.levels = parse_num<int>("network.levels", v);
  if (auto v = take("network.base_filters"); !v.empty())
    cfg.net.base_filters = parse_num<int>("network.base_filters", v);
  if (auto v = take("network.conv_size"); !v.empty())
    cfg.net.conv_size = parse_num<int>("network.conv_size", v);

  if (auto v = take("train.learning_rate"); !v.empty())
    cfg.train.learning_rate = parse_num<double>("train.learning_rate", v);
  if (auto v = take("train.epochs"); !v.empty())
    cfg.train.epochs = parse_num<int>("train.epochs", v);
  if (auto v = take("train.iterations_per_epoch"); !v.empty())
    cfg.train.iterations_per_epoch = parse_num<int>("train.iterations_per_epoch", v);
  if (auto v = take("train.batch_size"); !v.empty())
    cfg.train.batch_size = parse_num<int>("train.batch_size", v);

  if (auto v = take("eval.batches"); !v.empty())
    cfg.eval_batches = parse_num<int>("eval.batches", v);
  if (auto v = take("eval.batch_size"); !v.empty())
    cfg.eval_batch_size = parse_num<int>("eval.batch_size", v);

  if (!kv.empty())
    throw ConfigError("config key '" + kv.begin()->first + "' is not recognized");

  cfg.net.in_channels = cfg.channels();
  cfg.train.rng_seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void save_config(const std::filesystem::path& path, const ScenarioConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << "scenario = \"" << to_string(cfg.scenario) << "\"\n";
  out << "seed = " << cfg.seed << "\n";
  out << "jobs = " << cfg.jobs << "\n";
  out << "out_dir = \"" << cfg.out_dir.string() << "\"\n\n";
  out << "[data]\n";
  if (!cfg.data_root.empty()) out << "root = \"" << cfg.data_root.string() << "\"\n";
  out << "synth_train = " << cfg.synth_train << "\n";
  out << "synth_test = " << cfg.synth_test << "\n";
  out << "synth_size = " << cfg.synth_size << "\n\n";
  out << "[prepare]\n";
  out << "image_size = " << cfg.image_size << "\n";
  out << "border = " << cfg.border << "\n\n";
  out << "[network]\n";
  out << "levels = " << cfg.net.levels << "\n";
  out << "base_filters = " << cfg.net.base_filters << "\n";
  out << "conv_size = " << cfg.net.conv_size << "\n\n";
  out << "[train]\n";
  out << "learning_rate = " << cfg.train.learning_rate << "\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "iterations_per_epoch = " << cfg.train.iterations_per_epoch << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n\n";
  out << "[eval]\n";
  out << "batches = " << cfg.eval_batches << "\n";
  out << "batch_size = " << cfg.eval_batch_size << "\n";
}

}  // namespace lesionpipe
