#include "fxnet/pipeline.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "fxnet/csv.hpp"
#include "fxnet/econometrics.hpp"
#include "fxnet/error.hpp"
#include "fxnet/parallel.hpp"
#include "fxnet/strategy.hpp"

#ifndef FXNET_VERSION
#define FXNET_VERSION "dev"
#endif

namespace fxnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view version() { return FXNET_VERSION; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim_copy(std::string_view s) { return std::string(csv::trim(s)); }

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  for (auto part : csv::split(s, sep)) {
    std::string t = trim_copy(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << bytes;
  if (!out) throw IoError("write failed for " + path);
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (double d : v) a.push_back(num(d));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- configuration ---------------------------------------------------------

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"general", {"seed", "threads"}},
      {"data", {"options", "fx", "tenor"}},
      {"output", {"dir"}},
      {"synthetic",
       {"generate", "n_currencies", "n_days", "start", "seed", "transmitter", "zero_linkage", "own_persistence",
        "transmission", "shock_sd", "shock_correlation", "carry_spread", "rate_noise", "usd_rate", "spread_bp",
        "dollar_factor_share", "staggered_entry"}},
      {"civ", {"n_grid", "range_multiplier"}},
      {"qbll", {"lags", "shrinkage", "first_lag_center", "n_draws", "bandwidth", "seed", "log_levels", "mode"}},
      {"network", {"short_edge", "medium_edge", "horizon", "absolute", "graph_dates", "graph_threshold"}},
      {"backtest", {"freq", "costs", "momentum_lookback", "strategies"}},
      {"pricing", {"test_assets", "models", "beta_factors", "pca_aux", "p_value_draws", "seed", "r2_demeaned"}},
      {"report", {"focus"}},
  };
  return keys;
}

class IniReader {
 public:
  explicit IniReader(const boost::property_tree::ptree& t) : t_(t) {}

  std::optional<std::string> str(const std::string& sec, const std::string& key) const {
    auto s = t_.get_child_optional(sec);
    if (!s) return std::nullopt;
    auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim_copy(*v);
  }
  void number(const std::string& sec, const std::string& key, double& out) const {
    if (auto v = str(sec, key)) {
      auto d = csv::parse_double(*v);
      if (!d) throw ConfigError(sec + "." + key + ": not a number: '" + *v + "'");
      out = *d;
    }
  }
  void integer(const std::string& sec, const std::string& key, int& out) const {
    double d = out;
    number(sec, key, d);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(sec + "." + key + ": not an integer");
    out = static_cast<int>(d);
  }
  bool seed(const std::string& sec, const std::string& key, std::uint64_t& out) const {
    if (auto v = str(sec, key)) {
      try {
        std::size_t used = 0;
        out = std::stoull(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(sec + "." + key + ": not a non-negative integer");
      }
      return true;
    }
    return false;
  }
  void boolean(const std::string& sec, const std::string& key, bool& out) const {
    if (auto v = str(sec, key)) {
      std::string s = *v;
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "true" || s == "1" || s == "yes" || s == "on") out = true;
      else if (s == "false" || s == "0" || s == "no" || s == "off") out = false;
      else throw ConfigError(sec + "." + key + ": not a boolean");
    }
  }

 private:
  const boost::property_tree::ptree& t_;
};

// ---- strategy names --------------------------------------------------------

struct StrategySpec {
  bool network = false;
  std::string measure;  // net, to, from
  NetworkMode mode = NetworkMode::Causal;
  int band = 0;         // 0..3 = S, M, L, T
  Benchmark bench = Benchmark::Dollar;
};

StrategySpec parse_strategy(const std::string& name) {
  StrategySpec s;
  const auto parts = split_list(name, ':');
  if (parts.size() == 3) {
    s.network = true;
    s.measure = parts[0];
    if (s.measure != "net" && s.measure != "to" && s.measure != "from") {
      throw ConfigError("strategy '" + name + "': measure must be net, to or from");
    }
    s.mode = parse_network_mode(parts[1]);
    s.band = -1;
    for (int b = 0; b < 4; ++b)
      if (parts[2] == band_label(b)) s.band = b;
    if (s.band < 0) throw ConfigError("strategy '" + name + "': band must be S, M, L or T");
    return s;
  }
  if (parts.size() == 1) {
    s.bench = parse_benchmark(parts[0]);
    return s;
  }
  throw ConfigError("unknown strategy '" + name + "'");
}

LongLeg orientation_of(const StrategySpec& s) { return s.network ? LongLeg::P5 : benchmark_orientation(s.bench); }

std::string network_key(const std::string& measure, NetworkMode mode, int band) {
  return measure + ":" + std::string(to_string(mode)) + ":" + std::string(band_label(band));
}

// ---- caching ---------------------------------------------------------------

struct StageSpec {
  std::string name;
  std::vector<std::string> inputs;  // absolute paths hashed by content
  std::string settings;             // canonical config subset
  // file name inside the cache entry -> destination path
  std::vector<std::pair<std::string, std::string>> outputs;
};

StageOutcome cached_stage(const PipelineConfig& cfg, const StageSpec& spec,
                          const std::function<void(const std::string& dir)>& compute) {
  std::uint64_t h = fnv1a(version());
  h = fnv1a(spec.name, h);
  h = fnv1a(spec.settings, h);
  for (const std::string& in : spec.inputs) {
    h = fnv1a(fs::path(in).filename().string(), h);
    h = fnv1a(read_file(in), h);
  }
  StageOutcome outcome{spec.name, false, hex16(h)};
  const fs::path entry = fs::path(cfg.out("cache")) / (spec.name + "-" + outcome.key);
  bool complete = fs::is_directory(entry);
  for (const auto& [file, dest] : spec.outputs) complete = complete && fs::is_regular_file(entry / file);

  if (complete) {
    outcome.cache_hit = true;
  } else {
    const fs::path partial = entry.string() + ".partial";
    fs::remove_all(partial);
    fs::remove_all(entry);
    fs::create_directories(partial);
    try {
      compute(partial.string());
    } catch (const ConfigError& e) {
      throw ConfigError(spec.name + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(spec.name + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(spec.name + ": " + e.what());
    }
    for (const auto& [file, dest] : spec.outputs) {
      if (!fs::is_regular_file(partial / file)) throw Error(spec.name + ": stage did not produce " + file);
    }
    fs::rename(partial, entry);
  }
  for (const auto& [file, dest] : spec.outputs) {
    const fs::path d(dest);
    if (d.has_parent_path()) fs::create_directories(d.parent_path());
    fs::copy_file(entry / file, d, fs::copy_options::overwrite_existing);
  }
  return outcome;
}

std::string settings_line(const std::string& key, const std::string& value) { return key + "=" + value + "\n"; }
std::string settings_line(const std::string& key, double value) { return settings_line(key, csv::fmt(value)); }

// ---- shared loading --------------------------------------------------------

AlignedDataset load_aligned(const PipelineConfig& cfg) {
  const VolSurfacePanel surface = load_option_surface(cfg.resolve(cfg.options_path));
  const std::vector<FxRecord> fx = load_fx_panel(cfg.resolve(cfg.fx_path));
  return align(surface, fx, cfg.tenor);
}

// CIV values on the aligned date/currency grid.
Eigen::MatrixXd civ_on_grid(const CivPanel& p, const AlignedDataset& data) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(data.n_dates()),
                                                  static_cast<Eigen::Index>(data.n_currencies()), kNaN);
  for (std::size_t c = 0; c < p.currencies.size(); ++c) {
    const auto ci = data.currency_index(p.currencies[c]);
    if (!ci) continue;
    for (std::size_t t = 0; t < p.dates.size(); ++t) {
      const auto ti = data.date_index(p.dates[t]);
      if (ti) out(static_cast<Eigen::Index>(*ti), static_cast<Eigen::Index>(*ci)) = p.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

json stats_json(const Eigen::VectorXd& series, Frequency freq) {
  try {
    const SummaryStats s = performance_stats(series, freq);
    return json{{"n", s.n},         {"mean_pct", num(s.mean)},     {"t_stat", num(s.t_stat)},
                {"sharpe", num(s.sharpe)}, {"std_pct", num(s.std)}, {"skewness", num(s.skewness)},
                {"kurtosis", num(s.kurtosis)}, {"ac1", num(s.ac1)}, {"degenerate", s.degenerate}};
  } catch (const TooShort& e) {
    return json{{"error", e.what()}};
  }
}

double annualized_mean_pct(const Eigen::VectorXd& x, Frequency freq) {
  double sum = 0.0;
  int n = 0;
  for (double v : x)
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  return n ? 100.0 * periods_per_year(freq) * sum / n : kNaN;
}

// Rows where every listed column is finite.
std::vector<Eigen::Index> complete_rows(const std::vector<const Eigen::VectorXd*>& cols) {
  std::vector<Eigen::Index> rows;
  if (cols.empty()) return rows;
  for (Eigen::Index r = 0; r < cols.front()->size(); ++r) {
    bool ok = true;
    for (const auto* c : cols) ok = ok && std::isfinite((*c)[r]);
    if (ok) rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd gather(const WideTable& t, const std::vector<std::string>& names, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const Eigen::Index c = t.column(names[j]);
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.values(rows[i], c);
  }
  return out;
}

std::vector<Eigen::Index> finite_rows(const WideTable& t, const std::vector<std::string>& names) {
  std::vector<Eigen::Index> cols;
  for (const auto& n : names) cols.push_back(t.column(n));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    bool ok = true;
    for (Eigen::Index c : cols) ok = ok && std::isfinite(t.values(r, c));
    if (ok) rows.push_back(r);
  }
  return rows;
}

}  // namespace

// ---- PipelineConfig --------------------------------------------------------

std::vector<std::string> default_strategies() {
  std::vector<std::string> out;
  for (const char* mode : {"aggregate", "causal"})
    for (int b = 0; b < 4; ++b) out.push_back(std::string("net:") + mode + ":" + std::string(band_label(b)));
  for (const char* m : {"to", "from"})
    for (int b = 0; b < 4; ++b) out.push_back(std::string(m) + ":causal:" + std::string(band_label(b)));
  for (const char* b : {"dol", "car", "vol", "vrp", "mom"}) out.emplace_back(b);
  return out;
}

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  if (!pinned_seeds[0]) synthetic.seed = mix_seed(s, 1);
  if (!pinned_seeds[1]) qbll.seed = mix_seed(s, 2);
  if (!pinned_seeds[2]) fit.seed = mix_seed(s, 3);
}

std::string PipelineConfig::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path.lexically_normal().string() : (fs::path(config_dir) / path).lexically_normal().string();
}

std::string PipelineConfig::out(const std::string& name) const { return (fs::path(resolve(out_dir)) / name).string(); }

void PipelineConfig::validate() const {
  if (threads < 1) throw ConfigError("general.threads must be >= 1");
  if (!(tenor > 0.0)) throw ConfigError("data.tenor must be positive");
  if (civ.n_grid < 4) throw ConfigError("civ.n_grid must be >= 4");
  if (!(civ.range_multiplier > 1.0)) throw ConfigError("civ.range_multiplier must exceed 1");
  qbll.validate();
  bands.validate();
  if (!(costs >= 0.0)) throw ConfigError("backtest.costs must be >= 0");
  if (momentum_lookback < 1) throw ConfigError("backtest.momentum_lookback must be >= 1");
  if (strategies.empty()) throw ConfigError("backtest.strategies is empty");
  if (fit.p_value_draws < 1) throw ConfigError("pricing.p_value_draws must be >= 1");
  std::set<std::string> names;
  for (const auto& s : strategies) {
    parse_strategy(s);
    if (!names.insert(s).second) throw ConfigError("backtest.strategies lists '" + s + "' twice");
  }
  auto need = [&](const std::string& s, const std::string& where) {
    if (!names.count(s)) throw ConfigError(where + " refers to '" + s + "', which is not in backtest.strategies");
  };
  need(test_assets, "pricing.test_assets");
  if (test_assets == "dol") throw ConfigError("pricing.test_assets must be a sorted strategy");
  need(focus, "report.focus");
  for (const auto& m : models) {
    if (m.empty()) throw ConfigError("pricing.models has an empty model");
    for (const auto& f : m) need(f, "pricing.models");
  }
  for (const auto& f : beta_factors) need(f, "pricing.beta_factors");
  for (const auto& f : pca_aux) need(f, "pricing.pca_aux");
  if (!generate) {
    for (const auto& p : {resolve(options_path), resolve(fx_path)})
      if (!fs::is_regular_file(p)) throw ConfigError("input file does not exist: " + p);
  }
}

PipelineConfig parse_config(const std::string& text, const std::string& config_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [sec, body] : tree) {
    auto it = known_keys().find(sec);
    if (it == known_keys().end()) {
      if (body.empty()) throw ConfigError("config: key '" + sec + "' outside any section");
      throw ConfigError("config: unknown section [" + sec + "]");
    }
    for (const auto& [key, v] : body)
      if (!it->second.count(key)) throw ConfigError("config: unknown key " + sec + "." + key);
  }

  PipelineConfig c;
  c.config_dir = config_dir;
  c.strategies = default_strategies();
  c.models = {{"dol", "car"}, {"dol", "vol"}, {"dol", "vrp"}, {"dol", "mom"}, {"dol", "net:causal:S"},
              {"dol", "car", "net:causal:S"}};
  c.beta_factors = {"dol", "net:causal:S"};
  c.pca_aux = {"dol", "car", "vol", "vrp", "mom"};

  const IniReader r(tree);
  std::uint64_t seed = c.seed;
  r.seed("general", "seed", seed);
  r.integer("general", "threads", c.threads);
  if (auto v = r.str("data", "options")) c.options_path = *v;
  if (auto v = r.str("data", "fx")) c.fx_path = *v;
  if (auto v = r.str("data", "tenor")) {
    auto t = parse_tenor(*v);
    if (!t) throw ConfigError("data.tenor: cannot parse '" + *v + "'");
    c.tenor = *t;
  }
  if (auto v = r.str("output", "dir")) c.out_dir = *v;

  SyntheticConfig& s = c.synthetic;
  r.boolean("synthetic", "generate", c.generate);
  r.integer("synthetic", "n_currencies", s.n_currencies);
  r.integer("synthetic", "n_days", s.n_days);
  if (auto v = r.str("synthetic", "start")) {
    try {
      s.start = Date::parse(*v);
    } catch (const std::invalid_argument&) {
      throw ConfigError("synthetic.start: not a date");
    }
  }
  c.pinned_seeds[0] = r.seed("synthetic", "seed", s.seed);
  r.boolean("synthetic", "transmitter", s.transmitter);
  r.boolean("synthetic", "zero_linkage", s.zero_linkage);
  r.number("synthetic", "own_persistence", s.own_persistence);
  r.number("synthetic", "transmission", s.transmission);
  r.number("synthetic", "shock_sd", s.shock_sd);
  r.number("synthetic", "shock_correlation", s.shock_correlation);
  r.number("synthetic", "carry_spread", s.carry_spread);
  r.number("synthetic", "rate_noise", s.rate_noise);
  r.number("synthetic", "usd_rate", s.usd_rate);
  r.number("synthetic", "spread_bp", s.spread_bp);
  r.number("synthetic", "dollar_factor_share", s.dollar_factor_share);
  r.boolean("synthetic", "staggered_entry", s.staggered_entry);

  r.integer("civ", "n_grid", c.civ.n_grid);
  r.number("civ", "range_multiplier", c.civ.range_multiplier);

  QbllConfig& q = c.qbll;
  r.integer("qbll", "lags", q.lags);
  r.number("qbll", "shrinkage", q.shrinkage);
  r.number("qbll", "first_lag_center", q.first_lag_center);
  r.integer("qbll", "n_draws", q.n_draws);
  r.number("qbll", "bandwidth", q.bandwidth);
  c.pinned_seeds[1] = r.seed("qbll", "seed", q.seed);
  r.boolean("qbll", "log_levels", q.log_levels);
  if (auto v = r.str("qbll", "mode")) {
    if (*v == "point") q.mode = PosteriorMode::Point;
    else if (*v == "draws") q.mode = PosteriorMode::Draws;
    else throw ConfigError("qbll.mode must be point or draws");
  }

  r.integer("network", "short_edge", c.bands.short_edge);
  r.integer("network", "medium_edge", c.bands.medium_edge);
  r.integer("network", "horizon", c.bands.horizon);
  r.boolean("network", "absolute", c.absolute_measures);
  if (auto v = r.str("network", "graph_dates")) {
    for (const auto& d : split_list(*v, ',')) {
      try {
        c.graph_dates.push_back(Date::parse(d));
      } catch (const std::invalid_argument&) {
        throw ConfigError("network.graph_dates: bad date '" + d + "'");
      }
    }
  }
  r.number("network", "graph_threshold", c.graph_threshold);

  if (auto v = r.str("backtest", "freq")) c.freq = parse_frequency(*v);
  r.number("backtest", "costs", c.costs);
  r.integer("backtest", "momentum_lookback", c.momentum_lookback);
  if (auto v = r.str("backtest", "strategies")) c.strategies = split_list(*v, ',');

  if (auto v = r.str("pricing", "test_assets")) c.test_assets = *v;
  if (auto v = r.str("pricing", "models")) {
    c.models.clear();
    for (const auto& m : split_list(*v, ';')) c.models.push_back(split_list(m, ','));
  }
  if (auto v = r.str("pricing", "beta_factors")) c.beta_factors = split_list(*v, ',');
  if (auto v = r.str("pricing", "pca_aux")) c.pca_aux = split_list(*v, ',');
  r.integer("pricing", "p_value_draws", c.fit.p_value_draws);
  c.pinned_seeds[2] = r.seed("pricing", "seed", c.fit.seed);
  r.boolean("pricing", "r2_demeaned", c.fit.r2_demeaned);

  if (auto v = r.str("report", "focus")) c.focus = *v;

  c.set_seed(seed);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config file " + path);
  }
  const fs::path dir = fs::absolute(path).parent_path();
  return parse_config(text, dir.string());
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- lock ------------------------------------------------------------------

OutputLock::OutputLock(const std::string& dir) : path_((fs::path(dir) / ".lock").string()) {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw ConfigError("output directory " + dir + " is locked by another run (remove " + path_ + " if stale)");
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ---- tables ----------------------------------------------------------------

Eigen::Index WideTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  throw DataError("column '" + name + "' not found");
}

WideTable read_wide_csv(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (!lines) throw IoError("cannot read " + path);
  if (lines->empty()) throw EmptyFile(path + " is empty");
  const auto head = csv::split((*lines)[0]);
  if (head.empty() || csv::trim(head[0]) != "date") throw MalformedRow(1, "header must start with 'date'");
  WideTable t;
  for (std::size_t i = 1; i < head.size(); ++i) t.columns.push_back(trim_copy(head[i]));
  std::vector<std::vector<double>> rows;
  for (std::size_t ln = 1; ln < lines->size(); ++ln) {
    const std::string& line = (*lines)[ln];
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != head.size()) throw MalformedRow(ln + 1, "expected " + std::to_string(head.size()) + " fields");
    try {
      t.dates.push_back(Date::parse(csv::trim(f[0])));
    } catch (const std::invalid_argument&) {
      throw MalformedRow(ln + 1, "bad date");
    }
    std::vector<double> row;
    for (std::size_t i = 1; i < f.size(); ++i) {
      auto v = csv::parse_double(f[i]);
      if (!v) throw MalformedRow(ln + 1, "bad number '" + std::string(f[i]) + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < t.columns.size(); ++c) t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return t;
}

void write_wide_csv(const WideTable& t, const std::string& path) {
  std::string s = "date";
  for (const auto& c : t.columns) s += "," + c;
  s += "\n";
  for (std::size_t r = 0; r < t.dates.size(); ++r) {
    s += t.dates[r].str();
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) s += "," + csv::fmt(t.values(static_cast<Eigen::Index>(r), c));
    s += "\n";
  }
  write_file(path, s);
}

CivPanel load_civ(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (!lines) throw IoError("cannot read " + path);
  if (lines->empty()) throw EmptyFile(path + " is empty");
  if (csv::trim((*lines)[0]) != "date,currency,civ") throw MalformedRow(1, "expected header date,currency,civ");
  std::vector<std::tuple<Date, std::string, double>> recs;
  std::set<Date> dates;
  std::set<std::string> codes;
  for (std::size_t ln = 1; ln < lines->size(); ++ln) {
    if (csv::trim((*lines)[ln]).empty()) continue;
    const auto f = csv::split((*lines)[ln]);
    if (f.size() != 3) throw MalformedRow(ln + 1, "expected 3 fields");
    Date d;
    try {
      d = Date::parse(csv::trim(f[0]));
    } catch (const std::invalid_argument&) {
      throw MalformedRow(ln + 1, "bad date");
    }
    const auto v = csv::parse_double(f[2]);
    if (!v) throw MalformedRow(ln + 1, "bad civ value");
    recs.emplace_back(d, trim_copy(f[1]), *v);
    dates.insert(d);
    codes.insert(trim_copy(f[1]));
  }
  CivPanel p;
  p.dates.assign(dates.begin(), dates.end());
  p.currencies.assign(codes.begin(), codes.end());
  p.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p.dates.size()), static_cast<Eigen::Index>(p.currencies.size()), kNaN);
  for (const auto& [d, code, v] : recs) {
    const auto t = std::lower_bound(p.dates.begin(), p.dates.end(), d) - p.dates.begin();
    const auto c = std::lower_bound(p.currencies.begin(), p.currencies.end(), code) - p.currencies.begin();
    p.values(t, c) = v;
  }
  return p;
}

void save_civ(const CivPanel& panel, const std::string& path) {
  std::string s = "date,currency,civ\n";
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    for (std::size_t c = 0; c < panel.currencies.size(); ++c) {
      const double v = panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
      if (std::isfinite(v)) s += panel.dates[t].str() + "," + panel.currencies[c] + "," + csv::fmt(v) + "\n";
    }
  }
  write_file(path, s);
}

// ---- pricing ---------------------------------------------------------------

std::string price_models(const WideTable& assets, const std::vector<std::string>& asset_columns, const WideTable& factors,
                         const std::vector<std::vector<std::string>>& models, const std::vector<std::string>& beta_factors,
                         const std::vector<std::string>& pca_aux, const FitConfig& fit, Frequency freq) {
  if (assets.dates != factors.dates) throw LengthMismatch("price: assets and factors have different dates");
  // one table with both blocks so row filtering is shared
  WideTable all = assets;
  all.columns.clear();
  all.values.resize(assets.values.rows(), static_cast<Eigen::Index>(asset_columns.size() + factors.columns.size()));
  std::vector<std::string> asset_keys;
  for (std::size_t i = 0; i < asset_columns.size(); ++i) {
    asset_keys.push_back("asset:" + asset_columns[i]);
    all.columns.push_back(asset_keys.back());
    all.values.col(static_cast<Eigen::Index>(i)) = assets.values.col(assets.column(asset_columns[i]));
  }
  for (std::size_t j = 0; j < factors.columns.size(); ++j) {
    all.columns.push_back("factor:" + factors.columns[j]);
    all.values.col(static_cast<Eigen::Index>(asset_columns.size() + j)) = factors.values.col(static_cast<Eigen::Index>(j));
  }
  auto factor_keys = [](const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const auto& n : names) out.push_back("factor:" + n);
    return out;
  };
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  json doc;
  doc["test_assets"] = asset_columns;
  doc["frequency"] = std::string(to_string(freq));
  json battery = json::array();
  for (const auto& model : models) {
    json row;
    row["factors"] = model;
    try {
      const auto fk = factor_keys(model);
      const auto rows = finite_rows(all, with(asset_keys, fk));
      const Eigen::MatrixXd r = gather(all, asset_keys, rows);
      const Eigen::MatrixXd f = gather(all, fk, rows);
      const SdfModel m = gmm_estimate(r, f, model);
      const FitStats st = fit_stats(m, r, f, fit);
      row["n_obs"] = static_cast<int>(rows.size());
      row["b"] = vec_json(m.b);
      row["t_b"] = vec_json(m.t_b);
      row["lambda"] = vec_json(m.lambda);
      row["t_lambda"] = vec_json(m.t_lambda);
      row["factor_mean"] = vec_json(m.mu_f);
      row["r2_pct"] = num(100.0 * st.r2);
      row["rmse_pct"] = num(100.0 * st.rmse);
      row["hj"] = num(st.hj);
      row["p_value"] = num(st.p_value);
      row["pricing_errors_pct"] = vec_json(100.0 * st.pricing_errors);
      row["lag"] = m.lag;
    } catch (const Error& e) {
      row["error"] = e.what();
    }
    battery.push_back(row);
  }
  doc["models"] = battery;

  json pca;
  try {
    const auto ak = factor_keys(pca_aux);
    const auto rows = finite_rows(all, with(asset_keys, ak));
    const PcaResult p = pca_decomposition(gather(all, asset_keys, rows), gather(all, ak, rows));
    pca["n_obs"] = static_cast<int>(rows.size());
    pca["cumulative_pct"] = vec_json(p.cumulative);
    pca["loadings"] = mat_json(p.loadings);
    json corr;
    for (std::size_t j = 0; j < pca_aux.size(); ++j) corr[pca_aux[j]] = vec_json(p.aux_correlations.col(static_cast<Eigen::Index>(j)));
    pca["aux_correlations"] = corr;
  } catch (const std::exception& e) {
    pca["error"] = e.what();
  }
  doc["pca"] = pca;

  json betas;
  betas["factors"] = beta_factors;
  try {
    const auto fk = factor_keys(beta_factors);
    const auto rows = finite_rows(all, with(asset_keys, fk));
    const auto regs = factor_betas(gather(all, asset_keys, rows), gather(all, fk, rows), freq);
    json list = json::array();
    for (std::size_t i = 0; i < regs.size(); ++i) {
      list.push_back({{"asset", asset_columns[i]},
                      {"alpha_pct", num(100.0 * regs[i].alpha)},
                      {"alpha_t", num(regs[i].alpha_t)},
                      {"betas", vec_json(regs[i].betas)},
                      {"beta_t", vec_json(regs[i].beta_t)},
                      {"adj_r2_pct", num(100.0 * regs[i].adj_r2)}});
    }
    betas["rows"] = list;
    betas["n_obs"] = static_cast<int>(rows.size());
  } catch (const Error& e) {
    betas["error"] = e.what();
  }
  doc["betas"] = betas;
  return doc.dump(2) + "\n";
}

// ---- stages ----------------------------------------------------------------

StageOutcome stage_gen_data(const PipelineConfig& cfg) {
  const SyntheticConfig& s = cfg.synthetic;
  std::string settings;
  settings += settings_line("n_currencies", std::to_string(s.n_currencies));
  settings += settings_line("n_days", std::to_string(s.n_days));
  settings += settings_line("start", s.start.str());
  settings += settings_line("seed", std::to_string(s.seed));
  settings += settings_line("transmitter", s.transmitter ? "1" : "0");
  settings += settings_line("zero_linkage", s.zero_linkage ? "1" : "0");
  settings += settings_line("own_persistence", s.own_persistence);
  settings += settings_line("transmission", s.transmission);
  settings += settings_line("shock_sd", s.shock_sd);
  settings += settings_line("shock_correlation", s.shock_correlation);
  settings += settings_line("carry_spread", s.carry_spread);
  settings += settings_line("rate_noise", s.rate_noise);
  settings += settings_line("usd_rate", s.usd_rate);
  settings += settings_line("spread_bp", s.spread_bp);
  settings += settings_line("dollar_factor_share", s.dollar_factor_share);
  settings += settings_line("staggered_entry", s.staggered_entry ? "1" : "0");
  const std::string opt = cfg.resolve(cfg.options_path);
  const StageSpec spec{"gen-data",
                       {},
                       settings,
                       {{"options.csv", opt},
                        {"fx.csv", cfg.resolve(cfg.fx_path)},
                        {"truth.json", (fs::path(opt).parent_path() / "truth.json").string()}}};
  return cached_stage(cfg, spec, [&](const std::string& dir) { write_synthetic(generate_synthetic(s), dir); });
}

StageOutcome stage_synth_iv(const PipelineConfig& cfg) {
  std::string settings = settings_line("tenor", cfg.tenor) + settings_line("n_grid", std::to_string(cfg.civ.n_grid)) +
                         settings_line("range_multiplier", cfg.civ.range_multiplier);
  const StageSpec spec{"synth-iv",
                       {cfg.resolve(cfg.options_path), cfg.resolve(cfg.fx_path)},
                       settings,
                       {{"civ.csv", cfg.out("civ.csv")}}};
  return cached_stage(cfg, spec, [&](const std::string& dir) {
    const AlignedDataset data = load_aligned(cfg);
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t t = 0; t < data.n_dates(); ++t)
      for (std::size_t c = 0; c < data.n_currencies(); ++c)
        if (data.available(t, c)) cells.emplace_back(t, c);
    CivPanel panel;
    panel.dates = data.dates();
    panel.currencies = data.currencies();
    panel.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(data.n_dates()), static_cast<Eigen::Index>(data.n_currencies()), kNaN);
    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
      const auto [t, c] = cells[i];
      try {
        panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = civ_for_cell(data.cell(t, c), data.tenor(), cfg.civ).civ;
      } catch (const NumericalError& e) {
        throw NumericalError(data.dates()[t].str() + " " + data.currencies()[c] + ": " + e.what());
      }
    });
    save_civ(panel, (fs::path(dir) / "civ.csv").string());
  });
}

namespace {

DirectionalMeasures measures_of(const VarParams& p, const PipelineConfig& cfg, NetworkMode mode) {
  return directional_measures(network_from_var(p.lag_coefs, p.sigma, cfg.bands, mode), cfg.absolute_measures);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DirectionalMeasures median_measures(const DateEstimate& est, const PipelineConfig& cfg, NetworkMode mode) {
  std::vector<DirectionalMeasures> all;
  all.reserve(est.draws.size());
  for (const VarParams& d : est.draws) all.push_back(measures_of(d, cfg, mode));
  DirectionalMeasures out = all.front();
  const Eigen::Index n = out.net[0].size();
  for (int b = 0; b < 4; ++b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> f, t, x;
      for (const auto& m : all) {
        f.push_back(m.from[static_cast<std::size_t>(b)][i]);
        t.push_back(m.to[static_cast<std::size_t>(b)][i]);
        x.push_back(m.net[static_cast<std::size_t>(b)][i]);
      }
      out.from[static_cast<std::size_t>(b)][i] = median(f);
      out.to[static_cast<std::size_t>(b)][i] = median(t);
      out.net[static_cast<std::size_t>(b)][i] = median(x);
    }
  }
  return out;
}

}  // namespace

StageOutcome stage_estimate_network(const PipelineConfig& cfg) {
  const QbllConfig& q = cfg.qbll;
  std::string settings;
  settings += settings_line("lags", std::to_string(q.lags));
  settings += settings_line("shrinkage", q.shrinkage);
  settings += settings_line("first_lag_center", q.first_lag_center);
  settings += settings_line("n_draws", std::to_string(q.n_draws));
  settings += settings_line("bandwidth", q.bandwidth);
  settings += settings_line("seed", std::to_string(q.seed));
  settings += settings_line("log_levels", q.log_levels ? "1" : "0");
  settings += settings_line("mode", q.mode == PosteriorMode::Point ? "point" : "draws");
  settings += settings_line("bands", std::to_string(cfg.bands.short_edge) + "," + std::to_string(cfg.bands.medium_edge) +
                                         "," + std::to_string(cfg.bands.horizon));
  settings += settings_line("absolute", cfg.absolute_measures ? "1" : "0");
  settings += settings_line("graph_threshold", cfg.graph_threshold);
  std::vector<std::pair<std::string, std::string>> outputs = {{"network.csv", cfg.out("network.csv")},
                                                              {"network_checks.json", cfg.out("network_checks.json")}};
  std::vector<std::string> graph_names;
  for (const Date& d : cfg.graph_dates) {
    settings += settings_line("graph_date", d.str());
    for (NetworkMode mode : {NetworkMode::Aggregate, NetworkMode::Causal}) {
      for (Band b : kBands) {
        for (const char* ext : {".graphml", ".dot"}) {
          const std::string name = d.str() + "_" + std::string(to_string(mode)) + "_" + std::string(to_string(b)) + ext;
          graph_names.push_back(name);
          outputs.emplace_back(name, cfg.out("graphs/" + name));
        }
      }
    }
  }
  const StageSpec spec{"estimate-network", {cfg.out("civ.csv")}, settings, outputs};
  return cached_stage(cfg, spec, [&](const std::string& dir) {
    const CivPanel panel = load_civ(cfg.out("civ.csv"));
    std::vector<Eigen::Index> positions(panel.dates.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<Eigen::Index>(i);
    const TvpVarPath path = estimate_path(panel, positions, q, cfg.threads);

    const std::size_t n_est = path.estimates.size();
    std::vector<std::array<DirectionalMeasures, 2>> measures(n_est);
    std::vector<std::array<AdjacencySet, 2>> sets(n_est);
    parallel_for(n_est, cfg.threads, [&](std::size_t i) {
      const DateEstimate& e = path.estimates[i];
      for (int m = 0; m < 2; ++m) {
        const NetworkMode mode = m == 0 ? NetworkMode::Aggregate : NetworkMode::Causal;
        sets[i][static_cast<std::size_t>(m)] = network_from_var(e.point.lag_coefs, e.point.sigma, cfg.bands, mode);
        measures[i][static_cast<std::size_t>(m)] = q.mode == PosteriorMode::Draws && !e.draws.empty()
                                                       ? median_measures(e, cfg, mode)
                                                       : directional_measures(sets[i][static_cast<std::size_t>(m)], cfg.absolute_measures);
      }
    });

    std::string s = "date,currency,band,mode,from,to,net\n";
    double partition_err = 0.0, row_err = 0.0, causal_raw_err = 0.0;
    int degenerate = 0;
    for (std::size_t i = 0; i < n_est; ++i) {
      const DateEstimate& e = path.estimates[i];
      for (int m = 0; m < 2; ++m) {
        const AdjacencySet& set = sets[i][static_cast<std::size_t>(m)];
        const DirectionalMeasures& dm = measures[i][static_cast<std::size_t>(m)];
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(set.raw_total.rows(), set.raw_total.cols());
        for (const auto& b : set.bands) {
          sum += b.raw;
          for (Eigen::Index r = 0; r < b.normalized.rows(); ++r)
            if (!b.degenerate_rows[static_cast<std::size_t>(r)]) row_err = std::max(row_err, std::abs(b.normalized.row(r).sum() - 1.0));
        }
        partition_err = std::max(partition_err, (sum - set.raw_total).cwiseAbs().maxCoeff());
        if (set.mode == NetworkMode::Causal)
          causal_raw_err = std::max(causal_raw_err, (set.raw_total.rowwise().sum().array() - 1.0).abs().maxCoeff());
        degenerate += set.any_degenerate();
        for (int b = 0; b < 4; ++b) {
          for (std::size_t a = 0; a < e.active.size(); ++a) {
            const auto ai = static_cast<Eigen::Index>(a);
            s += e.date.str() + "," + panel.currencies[static_cast<std::size_t>(e.active[a])] + "," +
                 std::string(band_label(b)) + "," + std::string(to_string(set.mode)) + "," +
                 csv::fmt(dm.from[static_cast<std::size_t>(b)][ai]) + "," + csv::fmt(dm.to[static_cast<std::size_t>(b)][ai]) +
                 "," + csv::fmt(dm.net[static_cast<std::size_t>(b)][ai]) + "\n";
          }
        }
      }
    }
    write_file((fs::path(dir) / "network.csv").string(), s);
    const json checks{{"dates", static_cast<int>(n_est)},
                      {"max_band_partition_error", partition_err},
                      {"max_normalized_row_error", row_err},
                      {"max_causal_raw_row_error", causal_raw_err},
                      {"degenerate_networks", degenerate}};
    write_file((fs::path(dir) / "network_checks.json").string(), checks.dump(2) + "\n");

    std::size_t gi = 0;
    for (const Date& d : cfg.graph_dates) {
      auto it = std::find_if(path.estimates.begin(), path.estimates.end(), [&](const DateEstimate& e) { return e.date == d; });
      if (it == path.estimates.end()) throw DataError("graph date " + d.str() + " was not estimated");
      const std::size_t i = static_cast<std::size_t>(it - path.estimates.begin());
      std::vector<std::string> names;
      for (int a : it->active) names.push_back(panel.currencies[static_cast<std::size_t>(a)]);
      for (int m = 0; m < 2; ++m) {
        for (Band b : kBands) {
          const BandAdjacency& adj = sets[i][static_cast<std::size_t>(m)].bands[static_cast<std::size_t>(b)];
          const Eigen::MatrixXd& theta = cfg.absolute_measures ? adj.raw : adj.normalized;
          const Eigen::VectorXd& net = measures[i][static_cast<std::size_t>(m)].net[static_cast<std::size_t>(b)];
          export_graphml(theta, net, names, cfg.graph_threshold, (fs::path(dir) / graph_names[gi++]).string());
          export_dot(theta, net, names, cfg.graph_threshold, (fs::path(dir) / graph_names[gi++]).string());
        }
      }
    }
  });
}

namespace {

struct NetworkSignals {
  // key "measure:mode:band" -> dates x currencies on the aligned grid
  std::map<std::string, Eigen::MatrixXd> values;
};

NetworkSignals load_network(const std::string& path, const AlignedDataset& data) {
  auto lines = csv::read_lines(path);
  if (!lines) throw IoError("cannot read " + path);
  if (lines->empty() || csv::trim((*lines)[0]) != "date,currency,band,mode,from,to,net") {
    throw MalformedRow(1, "expected header date,currency,band,mode,from,to,net");
  }
  NetworkSignals out;
  const Eigen::MatrixXd blank = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(data.n_dates()), static_cast<Eigen::Index>(data.n_currencies()), kNaN);
  for (std::size_t ln = 1; ln < lines->size(); ++ln) {
    if (csv::trim((*lines)[ln]).empty()) continue;
    const auto f = csv::split((*lines)[ln]);
    if (f.size() != 7) throw MalformedRow(ln + 1, "expected 7 fields");
    const auto t = data.date_index(Date::parse(csv::trim(f[0])));
    const auto c = data.currency_index(csv::trim(f[1]));
    if (!t || !c) continue;
    const std::string suffix = ":" + trim_copy(f[3]) + ":" + trim_copy(f[2]);
    const char* measures[] = {"from", "to", "net"};
    for (int k = 0; k < 3; ++k) {
      const auto v = csv::parse_double(f[static_cast<std::size_t>(4 + k)]);
      if (!v) throw MalformedRow(ln + 1, "bad number");
      auto [it, inserted] = out.values.try_emplace(measures[k] + suffix, blank);
      it->second(static_cast<Eigen::Index>(*t), static_cast<Eigen::Index>(*c)) = *v;
    }
  }
  return out;
}

}  // namespace

StageOutcome stage_backtest(const PipelineConfig& cfg) {
  std::string settings = settings_line("tenor", cfg.tenor) + settings_line("freq", std::string(to_string(cfg.freq))) +
                         settings_line("costs", cfg.costs) +
                         settings_line("momentum_lookback", std::to_string(cfg.momentum_lookback)) +
                         settings_line("strategies", join(cfg.strategies, ","));
  const StageSpec spec{"backtest",
                       {cfg.resolve(cfg.options_path), cfg.resolve(cfg.fx_path), cfg.out("civ.csv"), cfg.out("network.csv")},
                       settings,
                       {{"returns_gross.csv", cfg.out("returns_gross.csv")},
                        {"returns_net.csv", cfg.out("returns_net.csv")},
                        {"assignments.csv", cfg.out("assignments.csv")},
                        {"backtest_stats.json", cfg.out("backtest_stats.json")}}};
  return cached_stage(cfg, spec, [&](const std::string& dir) {
    const AlignedDataset data = load_aligned(cfg);
    const std::vector<Date> ends = sample_period_ends(data, cfg.freq);
    const ExcessReturnPanel rx = excess_returns(data, ends);
    const Eigen::MatrixXd civ = civ_on_grid(load_civ(cfg.out("civ.csv")), data);
    const NetworkSignals net = load_network(cfg.out("network.csv"), data);
    BenchmarkInputs bin{&data, &rx, &civ, cfg.momentum_lookback};

    WideTable gross, netc;
    gross.dates = netc.dates = rx.end;
    std::vector<Eigen::VectorXd> gross_cols, net_cols;
    std::string assign = "date,strategy,currency,quintile\n";
    json stats;
    stats["frequency"] = std::string(to_string(cfg.freq));
    stats["costs"] = cfg.costs;
    stats["periods"] = static_cast<int>(rx.periods());

    for (const std::string& name : cfg.strategies) {
      const StrategySpec sp = parse_strategy(name);
      json js;
      if (!sp.network && sp.bench == Benchmark::Dollar) {
        const Eigen::VectorXd g = dollar_portfolio(rx);
        Eigen::VectorXd n = Eigen::VectorXd::Constant(rx.periods(), kNaN);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(rx.periods());
        Eigen::VectorXi cnt = Eigen::VectorXi::Zero(rx.periods());
        for (Eigen::Index c = 0; c < rx.n_currencies(); ++c) {
          std::vector<int> sides(static_cast<std::size_t>(rx.periods()));
          for (Eigen::Index p = 0; p < rx.periods(); ++p) sides[static_cast<std::size_t>(p)] = std::isfinite(rx.rx(p, c)) ? 1 : 0;
          const Eigen::VectorXd led = position_ledger(sides, rx, c, cfg.costs);
          for (Eigen::Index p = 0; p < rx.periods(); ++p)
            if (std::isfinite(led[p])) {
              sum[p] += led[p];
              ++cnt[p];
            }
        }
        for (Eigen::Index p = 0; p < rx.periods(); ++p)
          if (cnt[p] > 0) n[p] = sum[p] / cnt[p];
        gross.columns.push_back(name + ":LS");
        netc.columns.push_back(name + ":LS");
        gross_cols.push_back(g);
        net_cols.push_back(n);
        js["orientation"] = "long all";
        js["gross"]["LS"] = stats_json(g, cfg.freq);
        js["net"]["LS"] = stats_json(n, cfg.freq);
        stats["strategies"][name] = js;
        continue;
      }

      Eigen::MatrixXd signal;
      if (sp.network) {
        const std::string key = network_key(sp.measure, sp.mode, sp.band);
        auto it = net.values.find(key);
        if (it == net.values.end()) throw DataError("network.csv has no rows for " + key);
        signal = Eigen::MatrixXd::Constant(rx.periods(), rx.n_currencies(), kNaN);
        for (Eigen::Index p = 0; p < rx.periods(); ++p) {
          const auto t = *data.date_index(rx.start[static_cast<std::size_t>(p)]);
          signal.row(p) = it->second.row(static_cast<Eigen::Index>(t));
        }
      } else {
        signal = benchmark_signals(sp.bench, bin);
      }
      const LongLeg orient = orientation_of(sp);
      const StrategyTrack g = long_short_returns(name, signal, rx, orient);
      const StrategyTrack n = apply_transaction_costs(g, rx, cfg.costs);
      for (int q = 0; q < 5; ++q) {
        const std::string col = name + ":P" + std::to_string(q + 1);
        gross.columns.push_back(col);
        netc.columns.push_back(col);
        gross_cols.push_back(g.quintile.col(q));
        net_cols.push_back(n.quintile.col(q));
      }
      gross.columns.push_back(name + ":LS");
      netc.columns.push_back(name + ":LS");
      gross_cols.push_back(g.long_short);
      net_cols.push_back(n.long_short);

      for (std::size_t p = 0; p < g.assignments.size(); ++p)
        for (std::size_t c = 0; c < g.assignments[p].size(); ++c)
          if (g.assignments[p][c] > 0)
            assign += rx.end[p].str() + "," + name + "," + rx.currencies[c] + "," + std::to_string(g.assignments[p][c]) + "\n";

      js["orientation"] = orient == LongLeg::P5 ? "P5-P1" : "P1-P5";
      json fx = json::array(), ir = json::array();
      for (int q = 0; q < 5; ++q) {
        const std::string k = "P" + std::to_string(q + 1);
        js["gross"][k] = stats_json(g.quintile.col(q), cfg.freq);
        js["net"][k] = stats_json(n.quintile.col(q), cfg.freq);
        fx.push_back(num(annualized_mean_pct(g.quintile_fx.col(q), cfg.freq)));
        ir.push_back(num(annualized_mean_pct(g.quintile_ir.col(q), cfg.freq)));
      }
      js["gross"]["LS"] = stats_json(g.long_short, cfg.freq);
      js["net"]["LS"] = stats_json(n.long_short, cfg.freq);
      fx.push_back(num(annualized_mean_pct(g.long_short_fx, cfg.freq)));
      ir.push_back(num(annualized_mean_pct(g.long_short_ir, cfg.freq)));
      js["fx_mean_pct"] = fx;
      js["ir_mean_pct"] = ir;
      js["signal_mean"] = vec_json(g.signal_mean);
      stats["strategies"][name] = js;
    }
    auto fill = [&](WideTable& t, const std::vector<Eigen::VectorXd>& cols) {
      t.values.resize(rx.periods(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) t.values.col(static_cast<Eigen::Index>(j)) = cols[j];
    };
    fill(gross, gross_cols);
    fill(netc, net_cols);
    write_wide_csv(gross, (fs::path(dir) / "returns_gross.csv").string());
    write_wide_csv(netc, (fs::path(dir) / "returns_net.csv").string());
    write_file((fs::path(dir) / "assignments.csv").string(), assign);
    write_file((fs::path(dir) / "backtest_stats.json").string(), stats.dump(2) + "\n");
  });
}

StageOutcome stage_price(const PipelineConfig& cfg) {
  std::string settings = settings_line("freq", std::string(to_string(cfg.freq))) + settings_line("test_assets", cfg.test_assets);
  for (const auto& m : cfg.models) settings += settings_line("model", join(m, ","));
  settings += settings_line("beta_factors", join(cfg.beta_factors, ","));
  settings += settings_line("pca_aux", join(cfg.pca_aux, ","));
  settings += settings_line("p_value_draws", std::to_string(cfg.fit.p_value_draws));
  settings += settings_line("seed", std::to_string(cfg.fit.seed));
  settings += settings_line("r2_demeaned", cfg.fit.r2_demeaned ? "1" : "0");
  const StageSpec spec{"price", {cfg.out("returns_gross.csv")}, settings, {{"pricing.json", cfg.out("pricing.json")}}};
  return cached_stage(cfg, spec, [&](const std::string& dir) {
    const WideTable ret = read_wide_csv(cfg.out("returns_gross.csv"));
    std::vector<std::string> assets;
    for (int q = 1; q <= 5; ++q) assets.push_back(cfg.test_assets + ":P" + std::to_string(q));
    WideTable factors;
    factors.dates = ret.dates;
    std::vector<std::string> names;
    for (const auto& c : ret.columns)
      if (c.size() > 3 && c.compare(c.size() - 3, 3, ":LS") == 0) names.push_back(c.substr(0, c.size() - 3));
    factors.columns = names;
    factors.values.resize(ret.values.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) factors.values.col(static_cast<Eigen::Index>(j)) = ret.values.col(ret.column(names[j] + ":LS"));
    write_file((fs::path(dir) / "pricing.json").string(),
               price_models(ret, assets, factors, cfg.models, cfg.beta_factors, cfg.pca_aux, cfg.fit, cfg.freq));
  });
}

StageOutcome stage_report(const PipelineConfig& cfg) {
  const std::string settings = settings_line("freq", std::string(to_string(cfg.freq))) + settings_line("focus", cfg.focus) +
                               settings_line("strategies", join(cfg.strategies, ","));
  const StageSpec spec{"report",
                       {cfg.out("returns_gross.csv"), cfg.out("returns_net.csv"), cfg.out("assignments.csv"),
                        cfg.out("backtest_stats.json"), cfg.out("pricing.json")},
                       settings,
                       {{"report.json", cfg.out("report.json")}}};
  return cached_stage(cfg, spec, [&](const std::string& dir) {
    const WideTable gross = read_wide_csv(cfg.out("returns_gross.csv"));
    const json stats = json::parse(read_file(cfg.out("backtest_stats.json")));
    const json pricing = json::parse(read_file(cfg.out("pricing.json")));
    auto ls = [&](const std::string& name) -> Eigen::VectorXd { return gross.values.col(gross.column(name + ":LS")); };

    json rep;
    rep["version"] = std::string(version());
    rep["frequency"] = std::string(to_string(cfg.freq));
    rep["costs"] = stats["costs"];
    std::vector<std::string> benches, network;
    for (const auto& s : cfg.strategies) (parse_strategy(s).network ? network : benches).push_back(s);

    for (const auto& s : network) {
      const std::string table = s.rfind("net:", 0) == 0 ? "table1_net_directional" : "table2_to_from";
      rep[table][s] = stats["strategies"][s];
    }
    for (const auto& s : benches) rep["table3_benchmarks"][s] = stats["strategies"][s];

    // correlations of long-short returns over the common sample
    {
      std::vector<std::string> names = cfg.strategies;
      std::vector<Eigen::VectorXd> cols;
      for (const auto& s : names) cols.push_back(ls(s));
      std::vector<const Eigen::VectorXd*> ptrs;
      for (const auto& c : cols) ptrs.push_back(&c);
      const auto rows = complete_rows(ptrs);
      json corr;
      corr["strategies"] = names;
      corr["n_obs"] = static_cast<int>(rows.size());
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][rows[i]];
      Eigen::MatrixXd r = Eigen::MatrixXd::Constant(m.cols(), m.cols(), kNaN);
      if (m.rows() > 2) {
        const Eigen::MatrixXd c = demean_columns(m);
        const Eigen::VectorXd sd = c.colwise().norm().transpose();
        for (Eigen::Index a = 0; a < m.cols(); ++a)
          for (Eigen::Index b = 0; b < m.cols(); ++b)
            if (sd[a] > 0 && sd[b] > 0) r(a, b) = c.col(a).dot(c.col(b)) / (sd[a] * sd[b]);
      }
      corr["matrix"] = mat_json(r);
      rep["table3_correlations"] = corr;
    }

    // spanning regressions of network long-short returns on the benchmarks
    for (const auto& s : network) {
      json row;
      try {
        std::vector<Eigen::VectorXd> cols{ls(s)};
        for (const auto& b : benches) cols.push_back(ls(b));
        std::vector<const Eigen::VectorXd*> ptrs;
        for (const auto& c : cols) ptrs.push_back(&c);
        const auto rows = complete_rows(ptrs);
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(benches.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          y[static_cast<Eigen::Index>(i)] = cols[0][rows[i]];
          for (std::size_t j = 0; j < benches.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j + 1][rows[i]];
        }
        const SpanningResult sr = spanning_regression(y, x, cfg.freq);
        row["n_obs"] = static_cast<int>(rows.size());
        row["alpha_pct"] = num(100.0 * sr.alpha);
        row["alpha_t"] = num(sr.alpha_t);
        for (std::size_t j = 0; j < benches.size(); ++j)
          row["betas"][benches[j]] = {num(sr.betas[static_cast<Eigen::Index>(j)]), num(sr.beta_t[static_cast<Eigen::Index>(j)])};
        row["adj_r2_pct"] = num(100.0 * sr.adj_r2);
      } catch (const Error& e) {
        row["error"] = e.what();
      }
      rep["table4_spanning"][s] = row;
    }

    // 50/50 combinations of the focus strategy with each benchmark
    for (const auto& b : benches) {
      const Eigen::VectorXd combo = 0.5 * ls(cfg.focus) + 0.5 * ls(b);
      rep["table5_combinations"][cfg.focus + "+" + b] = stats_json(combo, cfg.freq);
    }

    // allocation of the focus strategy against each sorted benchmark
    {
      std::map<std::string, std::map<Date, std::map<std::string, int>>> labels;
      std::set<std::string> codes;
      auto lines = csv::read_lines(cfg.out("assignments.csv"));
      if (!lines) throw IoError("cannot read assignments.csv");
      for (std::size_t ln = 1; ln < lines->size(); ++ln) {
        if (csv::trim((*lines)[ln]).empty()) continue;
        const auto f = csv::split((*lines)[ln]);
        if (f.size() != 4) throw MalformedRow(ln + 1, "assignments.csv: expected 4 fields");
        labels[trim_copy(f[1])][Date::parse(csv::trim(f[0]))][trim_copy(f[2])] = std::stoi(trim_copy(f[3]));
        codes.insert(trim_copy(f[2]));
      }
      const std::vector<std::string> currencies(codes.begin(), codes.end());
      auto track_of = [&](const std::string& name) {
        StrategyTrack t;
        t.name = name;
        t.orientation = orientation_of(parse_strategy(name));
        t.dates = gross.dates;
        for (const Date& d : gross.dates) {
          Assignment a(currencies.size(), 0);
          auto sit = labels.find(name);
          if (sit != labels.end()) {
            auto dit = sit->second.find(d);
            if (dit != sit->second.end())
              for (std::size_t c = 0; c < currencies.size(); ++c) {
                auto cit = dit->second.find(currencies[c]);
                if (cit != dit->second.end()) a[c] = cit->second;
              }
          }
          t.assignments.push_back(std::move(a));
        }
        return t;
      };
      const StrategyTrack focus = track_of(cfg.focus);
      for (const auto& b : cfg.strategies) {
        if (b == cfg.focus || b == "dol") continue;
        if (parse_strategy(b).network) continue;
        const AllocationReport ar = allocation_report(focus, track_of(b), currencies);
        json rows = json::array();
        auto row_json = [](const AllocationRow& r) {
          return json{{"currency", r.currency}, {"buy_a", r.buy_a}, {"sell_a", r.sell_a},
                      {"buy_b", r.buy_b},       {"sell_b", r.sell_b}, {"diff", r.diff}};
        };
        for (const auto& r : ar.rows) rows.push_back(row_json(r));
        rep["table6_allocation"][cfg.focus + " vs " + b] = {{"rows", rows}, {"average", row_json(ar.average)}};
      }
    }

    for (const auto& s : cfg.strategies) rep["table_costs"][s] = stats["strategies"][s]["net"]["LS"];
    rep["table10_pca"] = pricing["pca"];
    rep["table11_pricing"] = pricing["models"];
    rep["table12_betas"] = pricing["betas"];
    write_file((fs::path(dir) / "report.json").string(), rep.dump(2) + "\n");
  });
}

std::vector<StageOutcome> run_pipeline(const PipelineConfig& cfg) {
  OutputLock lock(cfg.resolve(cfg.out_dir));
  std::vector<StageOutcome> out;
  if (cfg.generate) out.push_back(stage_gen_data(cfg));
  cfg.validate();
  out.push_back(stage_synth_iv(cfg));
  out.push_back(stage_estimate_network(cfg));
  out.push_back(stage_backtest(cfg));
  out.push_back(stage_price(cfg));
  out.push_back(stage_report(cfg));
  return out;
}

}  // namespace fxnet
