#include "salreg/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "salreg/error.hpp"

namespace salreg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("bad value for " + key + ": '" + text + "'");
  return value;
}

std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

PipelineConfig Config::pipeline() const {
  PipelineConfig p;
  p.n_superpixels = n_superpixels;
  p.compactness = slic_compactness;
  p.seed = seed;
  p.rho = rho;
  p.gamma_a = gamma_a;
  p.gamma_i = gamma_i;
  p.beta = beta;
  return p;
}

tinynet::TrainConfig Config::training() const {
  tinynet::TrainConfig t;
  t.rounds = rounds;
  t.steps_per_phase = steps_per_phase;
  t.batch_size = batch_size;
  t.hyper = {lr, momentum, weight_decay};
  t.seed = seed;
  return t;
}

void Config::set(const std::string& key, const std::string& value) {
  if (key == "n_superpixels") n_superpixels = parse_number<int>(key, value);
  else if (key == "rho") rho = parse_number<double>(key, value);
  else if (key == "gamma_A" || key == "gamma_a") gamma_a = parse_number<double>(key, value);
  else if (key == "gamma_I" || key == "gamma_i") gamma_i = parse_number<double>(key, value);
  else if (key == "beta") beta = parse_number<double>(key, value);
  else if (key == "slic_compactness") slic_compactness = parse_number<double>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "eta2") eta2 = parse_number<double>(key, value);
  else if (key == "rounds") rounds = parse_number<int>(key, value);
  else if (key == "steps_per_phase") steps_per_phase = parse_number<int>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "lr") lr = parse_number<double>(key, value);
  else if (key == "momentum") momentum = parse_number<double>(key, value);
  else if (key == "weight_decay") weight_decay = parse_number<double>(key, value);
  else if (key == "toy_size") toy_size = parse_number<int>(key, value);
  else if (key == "toy_count") toy_count = parse_number<int>(key, value);
  else throw std::invalid_argument("unknown config key: " + key);
}

void Config::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(n_superpixels >= 1, "n_superpixels must be >= 1");
  require(rho > 0, "rho must be > 0");
  require(gamma_a > 0, "gamma_A must be > 0");
  require(gamma_i >= 0, "gamma_I must be >= 0");
  require(beta >= 0 && beta <= 1, "beta must lie in [0,1]");
  require(slic_compactness > 0, "slic_compactness must be > 0");
  require(eta2 > 0, "eta2 must be > 0");
  require(rounds >= 1 && steps_per_phase >= 1 && batch_size >= 1, "training counts must be >= 1");
  require(lr > 0 && momentum >= 0 && momentum < 1 && weight_decay >= 0, "bad SGD hyper-parameters");
  require(toy_size >= 4 && toy_size % 2 == 0, "toy_size must be even and >= 4");
  require(toy_count >= 1, "toy_count must be >= 1");
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  return {{"n_superpixels", std::to_string(n_superpixels)},
          {"rho", show(rho)},
          {"gamma_A", show(gamma_a)},
          {"gamma_I", show(gamma_i)},
          {"beta", show(beta)},
          {"slic_compactness", show(slic_compactness)},
          {"seed", std::to_string(seed)},
          {"eta2", show(eta2)},
          {"rounds", std::to_string(rounds)},
          {"steps_per_phase", std::to_string(steps_per_phase)},
          {"batch_size", std::to_string(batch_size)},
          {"lr", show(lr)},
          {"momentum", show(momentum)},
          {"weight_decay", show(weight_decay)},
          {"toy_size", std::to_string(toy_size)},
          {"toy_count", std::to_string(toy_count)}};
}

Config load_config_file(const std::filesystem::path& path, Config base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

}  // namespace salreg
