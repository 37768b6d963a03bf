#include "drn/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace drn {

namespace {

using K = ConfigType;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_size(const std::string& s, std::size_t& out) {
  if (s.empty() || s[0] == '-') return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return out = true, true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return out = false, true;
  return false;
}

}  // namespace

const std::vector<ConfigKey>& RunConfig::schema() {
  static const std::vector<ConfigKey> keys = {
      {"data_root", "", K::String, "dataset directory; empty uses DARTSRENET_DATA"},
      {"dataset", "cifar10", K::String, "cifar10 | raw"},
      {"train_file", "", K::String, "DRIM training file (dataset = raw)"},
      {"test_file", "", K::String, "DRIM test file (dataset = raw)"},
      {"subset", "0", K::Size, "use only the first N training images; 0 = all"},
      {"test_limit", "0", K::Size, "evaluate on the first N test images; 0 = all"},
      {"variant", "vanilla", K::String, "vanilla | sigmoid_weighting | dws"},
      {"cell", "vanilla", K::String, "preset name, genotype file, gru or lstm (train/eval)"},
      {"feed_mode", "current", K::String, "current | previous: which step of a predecessor feeds a vertex"},
      {"init_gain", "1", K::Real, "scale on the U(+-1/sqrt(fan_in)) init of searched-cell matrices"},
      {"num_vertices", "8", K::Size, "vertices of a search cell"},
      {"hidden", "256", K::Size, "ReNet hidden size per direction"},
      {"head_hidden", "1024", K::Size, "width of the hidden fully connected layer"},
      {"stem_channels", "64", K::Size, "output channels of each stem conv"},
      {"stem_kernel", "3", K::Size, "stem conv kernel size (stride 1, same padding)"},
      {"window", "2", K::Size, "ReNet patch window"},
      {"batch_size", "32", K::Size, "mini-batch size"},
      {"epochs", "50", K::Size, "maximum epochs"},
      {"patience", "5", K::Size, "early-stopping patience in epochs"},
      {"max_batches_per_epoch", "0", K::Size, "search only: cap on paired batches per epoch; 0 = full pass"},
      {"lr", "0.001", K::Real, "weight optimizer learning rate"},
      {"alpha_lr", "0.0003", K::Real, "architecture optimizer learning rate"},
      {"optimizer", "adam", K::String, "adam | sgd (weights)"},
      {"weight_decay", "0", K::Real, "weight decay on network weights"},
      {"clip_norm", "0.25", K::Real, "global gradient-norm clip"},
      {"augment", "true", K::Bool, "flip / crop / cutout on training batches"},
      {"hflip_prob", "0.5", K::Real, "horizontal flip probability"},
      {"crop_pad", "4", K::Size, "zero padding before the random crop"},
      {"cutout", "16", K::Size, "cutout square side; 0 disables"},
      {"train_fraction", "0.5", K::Real, "search: share of Train used as train_cs"},
      {"validation_count", "5000", K::Size, "retrain: images carved from Train for early stopping"},
      {"search_runs", "1", K::Size, "independent searches with seeds seed, seed+1, ..."},
      {"seed", "1", K::Seed, "run seed"},
      {"threads", "0", K::Size, "OpenMP threads; 0 = runtime default"},
  };
  return keys;
}

bool RunConfig::known(std::string_view key) {
  for (const auto& k : schema()) {
    if (k.name == key) return true;
  }
  return false;
}

RunConfig::RunConfig() {
  for (const auto& k : schema()) values_[k.name] = k.default_value;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(body.substr(0, eq));
    if (!known(key)) throw ConfigError("line " + std::to_string(number) + ": unknown key '" + key + "'");
    c.values_[key] = trim(body.substr(eq + 1));
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = trim(value);
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  std::size_t v;
  if (!parse_size(get(key), v)) throw ConfigError(key + ": expected a non-negative integer, got '" + get(key) + "'");
  return v;
}

double RunConfig::get_real(const std::string& key) const {
  double v;
  if (!parse_real(get(key), v)) throw ConfigError(key + ": expected a number, got '" + get(key) + "'");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  bool v;
  if (!parse_bool(get(key), v)) throw ConfigError(key + ": expected true or false, got '" + get(key) + "'");
  return v;
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
  std::uint64_t v;
  const std::string& s = get(key);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(key + ": expected an unsigned 64-bit integer, got '" + s + "'");
  }
  return v;
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&problems](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  };
  for (const auto& k : schema()) {
    check([&] {
      switch (k.type) {
        case K::String: break;
        case K::Size: (void)get_size(k.name); break;
        case K::Real: (void)get_real(k.name); break;
        case K::Bool: (void)get_bool(k.name); break;
        case K::Seed: (void)get_seed(k.name); break;
      }
    });
  }
  check([&] {
    const auto& d = get("dataset");
    if (d != "cifar10" && d != "raw") throw ConfigError("dataset: expected cifar10 or raw, got '" + d + "'");
  });
  check([&] {
    try {
      (void)parse_variant(get("variant"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("variant: ") + e.what());
    }
  });
  check([&] { (void)feed_mode(); });
  check([&] {
    if (!(get_real("init_gain") > 0.0)) throw ConfigError("init_gain: must be positive");
  });
  check([&] {
    const auto& o = get("optimizer");
    if (o != "adam" && o != "sgd") throw ConfigError("optimizer: expected adam or sgd, got '" + o + "'");
  });
  for (const char* key : {"num_vertices", "hidden", "head_hidden", "stem_channels", "stem_kernel", "window",
                          "batch_size", "epochs", "search_runs"}) {
    check([&] {
      if (get_size(key) == 0) throw ConfigError(std::string(key) + ": must be positive");
    });
  }
  check([&] {
    const double f = get_real("train_fraction");
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("train_fraction: must lie in (0, 1)");
  });
  check([&] {
    const double p = get_real("hflip_prob");
    if (p < 0.0 || p > 1.0) throw ConfigError("hflip_prob: must lie in [0, 1]");
  });
  check([&] {
    if (get_real("lr") < 0.0 || get_real("alpha_lr") < 0.0) throw ConfigError("lr/alpha_lr: must be non-negative");
  });
  check([&] {
    if (!(get_real("clip_norm") > 0.0)) throw ConfigError("clip_norm: must be positive");
  });
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

std::string RunConfig::format() const {
  std::ostringstream os;
  for (const auto& k : schema()) os << k.name << " = " << get(k.name) << '\n';
  return os.str();
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << format();
}

FeedMode RunConfig::feed_mode() const {
  const auto& m = get("feed_mode");
  if (m == "current") return FeedMode::CurrentStep;
  if (m == "previous") return FeedMode::PreviousStep;
  throw ConfigError("feed_mode: expected current or previous, got '" + m + "'");
}

NetworkConfig RunConfig::network_config() const {
  NetworkConfig n;
  for (auto& s : n.stem) {
    s.out_channels = get_size("stem_channels");
    s.kernel = get_size("stem_kernel");
    s.stride = 1;
    s.padding = s.kernel / 2;
  }
  for (auto& r : n.renet) {
    r.window_h = r.window_w = get_size("window");
    r.hidden_dim = get_size("hidden");
    r.variant = parse_variant(get("variant"));
  }
  n.head_hidden = get_size("head_hidden");
  n.search_vertices = get_size("num_vertices");
  return n;
}

namespace {
OptimizerConfig weight_optimizer(const RunConfig& c) {
  OptimizerConfig o;
  o.kind = c.get("optimizer") == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  o.learning_rate = c.get_real("lr");
  o.weight_decay = c.get_real("weight_decay");
  return o;
}

AugmentConfig augment_config(const RunConfig& c) {
  AugmentConfig a;
  a.enabled = c.get_bool("augment");
  a.hflip_prob = c.get_real("hflip_prob");
  a.crop_pad = c.get_size("crop_pad");
  a.cutout_size = c.get_size("cutout");
  return a;
}
}  // namespace

SearchConfig RunConfig::search_config() const {
  SearchConfig s;
  s.batch_size = get_size("batch_size");
  s.max_epochs = get_size("epochs");
  s.patience = get_size("patience");
  s.max_batches_per_epoch = get_size("max_batches_per_epoch");
  s.train_fraction = get_real("train_fraction");
  s.clip_norm = get_real("clip_norm");
  s.weight_optimizer = weight_optimizer(*this);
  s.alpha_optimizer = OptimizerConfig{OptimizerKind::Adam, get_real("alpha_lr")};
  s.augment = augment_config(*this);
  s.seed = get_seed("seed");
  s.feed = feed_mode();
  s.init_gain = get_real("init_gain");
  return s;
}

RetrainConfig RunConfig::retrain_config() const {
  RetrainConfig r;
  r.batch_size = get_size("batch_size");
  r.max_epochs = get_size("epochs");
  r.patience = get_size("patience");
  r.validation_count = get_size("validation_count");
  r.test_limit = get_size("test_limit");
  r.clip_norm = get_real("clip_norm");
  r.optimizer = weight_optimizer(*this);
  r.augment = augment_config(*this);
  r.seed = get_seed("seed");
  return r;
}

std::filesystem::path RunConfig::data_root() const {
  const auto& root = get("data_root");
  if (!root.empty()) return root;
  const char* env = std::getenv("DARTSRENET_DATA");
  return env ? std::filesystem::path(env) : std::filesystem::path();
}

}  // namespace drn
