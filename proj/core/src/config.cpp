#include "divkernel/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace divkernel::config {

using estimation::Method;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint32_t narrow32(const ConfigFile& cfg, std::string_view key, std::uint64_t fallback) {
  const auto v = cfg.get_uint(key, fallback);
  if (v > 0xffffffffULL)
    throw ConfigError("config:" + cfg.source() + ": " + std::string(key) + " is too large");
  return static_cast<std::uint32_t>(v);
}

// Re-raises validation failures as configuration errors.
template <class F>
auto validated(const ConfigFile& cfg, F&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("config:" + cfg.source() + ": " + e.what());
  }
}

}  // namespace

const std::vector<std::string_view>& ConfigFile::known_keys() {
  static const std::vector<std::string_view> keys{
      "truth",       "n0",          "division_rate", "growth_rate", "initial_toxicity",
      "horizon",     "horizons",    "seed",          "genealogy",   "snapshot_times",
      "snapshot_step", "methods",   "replicates",    "epsilon",     "epsilons",
      "delta",       "cap",         "grid_lo",       "grid_hi",     "grid_points",
      "oracle_mode", "smoothness",  "threads",       "n_trees",     "beta_params",
      "time_start",  "time_step",   "time_end",      "sample",      "method",
      "bandwidth",   "dmax_floor"};
  return keys;
}

ConfigFile ConfigFile::parse(std::string_view text, std::string source) {
  ConfigFile cfg;
  cfg.source_ = std::move(source);
  const auto& keys = known_keys();
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config:" + cfg.source_ + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError(where + "empty value for '" + std::string(key) + "'");
    if (!cfg.values_.emplace(std::string(key), std::string(value)).second)
      throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config:" + path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  ConfigFile cfg = parse(buf.str(), path.string());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

bool ConfigFile::has(std::string_view key) const { return find(key) != nullptr; }

void ConfigFile::set(std::string_view key, std::string value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw ConfigError("config:" + source_ + ": unknown key '" + std::string(key) + "'");
  values_[std::string(key)] = std::move(value);
}

const std::string* ConfigFile::find(std::string_view key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void ConfigFile::fail(std::string_view key, const std::string& message) const {
  throw ConfigError("config:" + source_ + ": " + std::string(key) + ": " + message);
}

std::string ConfigFile::get_string(std::string_view key, std::string fallback) const {
  const auto* v = find(key);
  return v ? *v : std::move(fallback);
}

double ConfigFile::get_double(std::string_view key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  const auto d = to_double(*v);
  if (!d) fail(key, "expected a finite number, got '" + *v + "'");
  return *d;
}

std::uint64_t ConfigFile::get_uint(std::string_view key, std::uint64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  const auto u = to_uint(*v);
  if (!u) fail(key, "expected a nonnegative integer, got '" + *v + "'");
  return *u;
}

bool ConfigFile::get_bool(std::string_view key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  const auto s = lower(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(key, "expected a boolean, got '" + *v + "'");
}

std::vector<double> ConfigFile::get_doubles(std::string_view key, std::vector<double> fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& w : split_words(*v)) {
    const auto d = to_double(w);
    if (!d) fail(key, "expected a list of finite numbers, got '" + w + "'");
    out.push_back(*d);
  }
  return out;
}

std::vector<std::string> ConfigFile::get_words(std::string_view key) const {
  const auto* v = find(key);
  return v ? split_words(*v) : std::vector<std::string>{};
}

DivisionKernelModel parse_truth(std::string_view text, const std::filesystem::path& base_dir) {
  const auto words = split_words(text);
  if (words.empty()) throw ConfigError("truth: empty specification");
  const auto kind = lower(words[0]);
  std::vector<double> nums;
  auto numbers = [&](std::size_t count) {
    if (words.size() != count + 1)
      throw ConfigError("truth: '" + kind + "' takes " + std::to_string(count) + " numbers");
    for (std::size_t i = 1; i < words.size(); ++i) {
      const auto d = to_double(words[i]);
      if (!d) throw ConfigError("truth: not a number: '" + words[i] + "'");
      nums.push_back(*d);
    }
  };
  try {
    if (kind == "beta") {
      numbers(1);
      return DivisionKernelModel::beta(nums[0]);
    }
    if (kind == "mixture") {
      numbers(5);
      return DivisionKernelModel::beta_mixture(nums[0], nums[1], nums[2], nums[3], nums[4]);
    }
    if (kind == "tabulated") {
      if (words.size() != 2) throw ConfigError("truth: 'tabulated' takes one path");
      std::filesystem::path p = words[1];
      if (p.is_relative()) p = base_dir / p;
      std::ifstream in(p);
      if (!in) throw ConfigError("truth: cannot open '" + p.string() + "'");
      std::vector<double> xs, hs;
      std::string line;
      while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto cols = split_words(line);
        if (cols.empty()) continue;
        const auto x = cols.size() == 2 ? to_double(cols[0]) : std::nullopt;
        const auto h = cols.size() == 2 ? to_double(cols[1]) : std::nullopt;
        if (!x || !h) {
          if (xs.empty()) continue;  // header
          throw ConfigError("truth: malformed row in '" + p.string() + "'");
        }
        xs.push_back(*x);
        hs.push_back(*h);
      }
      return DivisionKernelModel::tabulated(std::move(xs), std::move(hs));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("truth: ") + e.what());
  }
  throw ConfigError("truth: unknown model '" + words[0] + "'");
}

std::vector<Method> parse_methods(std::string_view text) {
  std::vector<Method> out;
  try {
    for (const auto& w : split_words(text)) out.push_back(estimation::parse_method(w));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("methods: ") + e.what());
  }
  if (out.empty()) throw ConfigError("methods: empty list");
  return out;
}

EvaluationGrid grid_from(const ConfigFile& cfg) {
  EvaluationGrid g;
  g.lo = cfg.get_double("grid_lo", g.lo);
  g.hi = cfg.get_double("grid_hi", g.hi);
  g.n_points = cfg.get_uint("grid_points", g.n_points);
  validated(cfg, [&] {
    g.validate();
    return 0;
  });
  return g;
}

namespace {

DivisionKernelModel truth_from(const ConfigFile& cfg, DivisionKernelModel fallback) {
  if (!cfg.has("truth")) return fallback;
  try {
    return parse_truth(cfg.get_string("truth", ""), cfg.base_dir());
  } catch (const ConfigError& e) {
    throw ConfigError("config:" + cfg.source() + ": " + e.what());
  }
}

std::vector<Method> methods_from(const ConfigFile& cfg, std::vector<Method> fallback) {
  if (!cfg.has("methods")) return fallback;
  try {
    return parse_methods(cfg.get_string("methods", ""));
  } catch (const ConfigError& e) {
    throw ConfigError("config:" + cfg.source() + ": " + e.what());
  }
}

}  // namespace

sim::SimConfig sim_config_from(const ConfigFile& cfg) {
  sim::SimConfig sc;
  sc.n0 = narrow32(cfg, "n0", sc.n0);
  sc.division_rate = cfg.get_double("division_rate", sc.division_rate);
  sc.growth_rate = cfg.get_double("growth_rate", sc.growth_rate);
  sc.horizon = cfg.get_double("horizon", sc.horizon);
  sc.initial_toxicity = cfg.get_doubles("initial_toxicity", sc.initial_toxicity);
  sc.kernel = truth_from(cfg, sc.kernel);
  sc.seed = cfg.get_uint("seed", sc.seed);
  sc.genealogy = cfg.get_bool("genealogy", sc.genealogy);
  if (cfg.has("snapshot_times") && cfg.has("snapshot_step"))
    throw ConfigError("config:" + cfg.source() + ": give snapshot_times or snapshot_step, not both");
  if (cfg.has("snapshot_times")) {
    sc.snapshot_times = cfg.get_doubles("snapshot_times", {});
  } else if (cfg.has("snapshot_step")) {
    const double step = cfg.get_double("snapshot_step", 1.0);
    sc.snapshot_times = validated(cfg, [&] { return experiments::time_grid(0.0, step, sc.horizon); });
  }
  validated(cfg, [&] {
    sc.validate();
    return 0;
  });
  return sc;
}

experiments::ExperimentConfig experiment_config_from(const ConfigFile& cfg) {
  experiments::ExperimentConfig ec;
  ec.n0 = narrow32(cfg, "n0", ec.n0);
  ec.division_rate = cfg.get_double("division_rate", ec.division_rate);
  ec.growth_rate = cfg.get_double("growth_rate", ec.growth_rate);
  ec.initial_toxicity = cfg.get_double("initial_toxicity", ec.initial_toxicity);
  ec.horizons = cfg.get_doubles("horizons", ec.horizons);
  ec.truth = truth_from(cfg, ec.truth);
  ec.methods = methods_from(cfg, ec.methods);
  ec.replicates = narrow32(cfg, "replicates", ec.replicates);
  ec.epsilon = cfg.get_double("epsilon", ec.epsilon);
  ec.delta = cfg.get_double("delta", ec.delta);
  ec.cap = narrow32(cfg, "cap", ec.cap);
  ec.dmax_floor = narrow32(cfg, "dmax_floor", ec.dmax_floor);
  ec.grid = grid_from(cfg);
  ec.master_seed = cfg.get_uint("seed", ec.master_seed);
  ec.threads = narrow32(cfg, "threads", ec.threads);
  const auto mode = lower(cfg.get_string("oracle_mode", "montecarlo"));
  if (mode == "montecarlo" || mode == "mc") {
    ec.oracle_mode = experiments::OracleMode::MonteCarlo;
  } else if (mode == "persample" || mode == "per_sample") {
    ec.oracle_mode = experiments::OracleMode::PerSample;
  } else {
    throw ConfigError("config:" + cfg.source() + ": oracle_mode: expected montecarlo or persample");
  }
  validated(cfg, [&] {
    ec.validate();
    return 0;
  });
  return ec;
}

experiments::MeanAgeConfig mean_age_config_from(const ConfigFile& cfg) {
  experiments::MeanAgeConfig mc;
  mc.n0 = narrow32(cfg, "n0", mc.n0);
  mc.division_rate = cfg.get_double("division_rate", mc.division_rate);
  mc.growth_rate = cfg.get_double("growth_rate", mc.growth_rate);
  mc.initial_toxicity = cfg.get_double("initial_toxicity", mc.initial_toxicity);
  mc.beta_params = cfg.get_doubles("beta_params", mc.beta_params);
  mc.n_trees = narrow32(cfg, "n_trees", mc.n_trees);
  mc.master_seed = cfg.get_uint("seed", mc.master_seed);
  mc.threads = narrow32(cfg, "threads", mc.threads);
  const double start = cfg.get_double("time_start", 6.0);
  const double step = cfg.get_double("time_step", 0.36);
  const double end = cfg.get_double("time_end", 24.0);
  mc.times = validated(cfg, [&] { return experiments::time_grid(start, step, end); });
  validated(cfg, [&] {
    mc.validate();
    return 0;
  });
  return mc;
}

std::vector<double> epsilons_from(const ConfigFile& cfg) {
  std::vector<double> fallback;
  for (int i = -18; i <= 10; ++i) fallback.push_back(i / 20.0);
  auto eps = cfg.get_doubles("epsilons", std::move(fallback));
  if (eps.empty()) throw ConfigError("config:" + cfg.source() + ": epsilons: empty list");
  for (double e : eps)
    if (!(e > -1.0)) throw ConfigError("config:" + cfg.source() + ": epsilons: every value must exceed -1");
  return eps;
}

EstimateConfig estimate_config_from(const ConfigFile& cfg) {
  EstimateConfig ec;
  if (!cfg.has("sample")) throw ConfigError("config:" + cfg.source() + ": sample: required");
  ec.sample = cfg.get_string("sample", "");
  if (ec.sample.is_relative()) ec.sample = cfg.base_dir() / ec.sample;
  try {
    ec.method = estimation::parse_method(cfg.get_string("method", "GL"));
  } catch (const InvalidArgument& e) {
    throw ConfigError("config:" + cfg.source() + ": method: " + e.what());
  }
  ec.bandwidth = cfg.get_double("bandwidth", ec.bandwidth);
  ec.epsilon = cfg.get_double("epsilon", ec.epsilon);
  ec.delta = cfg.get_double("delta", ec.delta);
  ec.cap = narrow32(cfg, "cap", ec.cap);
  ec.dmax_floor = narrow32(cfg, "dmax_floor", ec.dmax_floor);
  ec.grid = grid_from(cfg);
  if (cfg.has("truth")) ec.truth = truth_from(cfg, DivisionKernelModel::beta(2.0));
  const std::string where = "config:" + cfg.source() + ": ";
  if (ec.method == Method::Fixed && !(ec.bandwidth > 0.0))
    throw ConfigError(where + "method Fixed needs a positive bandwidth");
  if (ec.method == Method::Oracle && !ec.truth) throw ConfigError(where + "method Oracle needs a truth");
  if (!(1.0 + ec.epsilon > 0.0)) throw ConfigError(where + "epsilon must exceed -1");
  if (!(ec.delta > 0.0)) throw ConfigError(where + "delta must be positive");
  if (ec.cap < 1) throw ConfigError(where + "cap must be at least 1");
  if (ec.dmax_floor < 1) throw ConfigError(where + "dmax_floor must be at least 1");
  return ec;
}

std::vector<double> read_sample(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("sample:" + path.string() + ": cannot open file");
  std::vector<double> out;
  std::string line;
  std::optional<std::size_t> column;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char c : view) {
      if (c == ',') {
        cells.push_back(std::string(trim(cur)));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cells.push_back(std::string(trim(cur)));
    if (out.empty() && !column) {
      const auto it = std::find(cells.begin(), cells.end(), "gamma");
      if (it != cells.end()) {
        column = static_cast<std::size_t>(it - cells.begin());
        continue;
      }
    }
    const std::size_t c = column.value_or(0);
    const auto d = c < cells.size() ? to_double(cells[c]) : std::nullopt;
    if (!d)
      throw ConfigError("sample:" + path.string() + ":" + std::to_string(line_no) + ": not a number");
    out.push_back(*d);
  }
  return out;
}

}  // namespace divkernel::config
