// fxnet command line: pipeline stages, the full run, and standalone pricing.

#include <CLI11.hpp>
#include <json.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "fxnet/csv.hpp"
#include "fxnet/error.hpp"
#include "fxnet/pipeline.hpp"

namespace {

using namespace fxnet;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumerical = 4 };

void report(const StageOutcome& o) {
  std::cout << o.stage << (o.cache_hit ? " cache-hit " : " computed ") << o.key << "\n";
}

std::vector<std::vector<std::string>> read_model_spec(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (!lines) throw ConfigError("cannot read model spec " + path);
  std::vector<std::vector<std::string>> models;
  for (const auto& line : *lines) {
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> m;
    for (auto f : csv::split(t)) {
      const auto name = csv::trim(f);
      if (!name.empty()) m.emplace_back(name);
    }
    models.push_back(std::move(m));
  }
  if (models.empty()) throw ConfigError("model spec " + path + " lists no models");
  return models;
}

int price_standalone(const std::string& portfolios, const std::string& factors, const std::string& models_path,
                     const std::string& out, const PipelineConfig& cfg) {
  const WideTable assets = read_wide_csv(portfolios);
  const WideTable f = read_wide_csv(factors);
  const auto models = read_model_spec(models_path);
  std::set<std::string> known(f.columns.begin(), f.columns.end());
  for (const auto& m : models)
    for (const auto& name : m)
      if (!known.count(name)) throw ConfigError("model factor '" + name + "' is not a column of " + factors);
  const std::string json = price_models(assets, assets.columns, f, models, models.front(), f.columns, cfg.fit, cfg.freq);
  if (out.empty()) {
    std::cout << json;
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw IoError("cannot write " + out);
    os << json;
  }
  // the battery records failed models instead of aborting; surface them in the exit status
  int rc = kOk;
  const auto doc = nlohmann::json::parse(json);
  for (const auto& row : doc["models"]) {
    if (!row.contains("error")) continue;
    std::cerr << "numerical error: " << row["error"].get<std::string>() << "\n";
    rc = kNumerical;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FX volatility connectedness networks and currency portfolio tests"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string config_path;
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "global seed; derived seeds follow unless pinned");

  auto* gen = app.add_subcommand("gen-data", "write a seeded synthetic options and FX panel");
  std::string gen_out;
  gen->add_option("--out", gen_out, "directory for options.csv, fx.csv and truth.json");

  auto* iv = app.add_subcommand("synth-iv", "model-free implied variance per date and currency");
  std::string iv_in, iv_fx, iv_out;
  iv->add_option("--in", iv_in, "option surface CSV");
  iv->add_option("--fx", iv_fx, "FX panel CSV");
  iv->add_option("--out", iv_out, "copy civ.csv to this path");

  auto* net = app.add_subcommand("estimate-network", "QBLL TVP-VAR and horizon-band connectedness");
  double threshold = 0.0;
  std::vector<std::string> graph_dates;
  auto* thr_opt = net->add_option("--threshold", threshold, "minimum edge weight in graph exports");
  net->add_option("--graph-date", graph_dates, "export GraphML/DOT for this date (repeatable)");

  auto* bt = app.add_subcommand("backtest", "quintile portfolios and long-short returns");
  std::string signal, mode = "causal", band = "S", freq;
  double costs = 0.0;
  bt->add_option("--signal", signal, "net, to, from, dol, car, vol, vrp or mom");
  bt->add_option("--mode", mode, "aggregate or causal");
  bt->add_option("--band", band, "S, M, L or T");
  bt->add_option("--freq", freq, "d, w or m");
  auto* costs_opt = bt->add_option("--costs", costs, "fraction of the quoted half-spread paid");

  auto* pr = app.add_subcommand("price", "GMM SDF estimation, HJ distance, PCA and betas");
  std::string portfolios, factors, models, price_out;
  pr->add_option("--portfolios", portfolios, "wide CSV of test-asset returns");
  pr->add_option("--factors", factors, "wide CSV of factor returns");
  pr->add_option("--models", models, "one model per line, factor names comma separated");
  pr->add_option("--out", price_out, "output JSON (stdout when omitted)");

  auto* rep = app.add_subcommand("report", "aggregate stage outputs into report.json");
  auto* run = app.add_subcommand("run", "every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else {
      cfg.config_dir = std::filesystem::current_path().string();
      cfg.strategies = default_strategies();
      cfg.models = {{"dol", "car"}, {"dol", "net:causal:S"}};
      cfg.beta_factors = {"dol", "net:causal:S"};
      cfg.pca_aux = {"dol", "car", "vol", "vrp", "mom"};
    }
    if (*threads_opt) cfg.threads = threads;
    if (*seed_opt) cfg.set_seed(seed);

    if (*pr && !portfolios.empty()) {
      if (factors.empty() || models.empty()) throw ConfigError("price: --portfolios needs --factors and --models");
      return price_standalone(portfolios, factors, models, price_out, cfg);
    }

    if (*gen) {
      if (!gen_out.empty()) {
        cfg.options_path = (std::filesystem::path(gen_out) / "options.csv").string();
        cfg.fx_path = (std::filesystem::path(gen_out) / "fx.csv").string();
        // without a config there is no output tree, so keep the cache next to the data
        if (config_path.empty()) cfg.out_dir = gen_out;
      }
      OutputLock lock(cfg.resolve(cfg.out_dir));
      report(stage_gen_data(cfg));
      return kOk;
    }
    if (*iv) {
      if (!iv_in.empty()) cfg.options_path = iv_in;
      if (!iv_fx.empty()) cfg.fx_path = iv_fx;
    }
    if (*net) {
      if (*thr_opt) cfg.graph_threshold = threshold;
      for (const auto& d : graph_dates) {
        try {
          cfg.graph_dates.push_back(Date::parse(d));
        } catch (const std::invalid_argument&) {
          throw ConfigError("--graph-date: bad date '" + d + "'");
        }
      }
    }
    if (*bt) {
      if (!freq.empty()) cfg.freq = parse_frequency(freq);
      if (*costs_opt) cfg.costs = costs;
      if (!signal.empty()) {
        const bool network = signal == "net" || signal == "to" || signal == "from";
        const std::string name = network ? signal + ":" + mode + ":" + band : signal;
        if (std::find(cfg.strategies.begin(), cfg.strategies.end(), name) == cfg.strategies.end()) cfg.strategies.push_back(name);
      }
    }
    if (*run) {
      for (const auto& o : run_pipeline(cfg)) report(o);
      return kOk;
    }
    cfg.validate();
    OutputLock lock(cfg.resolve(cfg.out_dir));
    if (*iv) {
      report(stage_synth_iv(cfg));
      if (!iv_out.empty()) std::filesystem::copy_file(cfg.out("civ.csv"), iv_out, std::filesystem::copy_options::overwrite_existing);
    } else if (*net) {
      report(stage_estimate_network(cfg));
    } else if (*bt) {
      report(stage_backtest(cfg));
    } else if (*pr) {
      report(stage_price(cfg));
    } else if (*rep) {
      report(stage_report(cfg));
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
}
