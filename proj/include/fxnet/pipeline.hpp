#pragma once

// End-to-end orchestration: gen-data -> synth-iv -> estimate-network ->
// backtest -> price -> report. Every stage is cached under
// <out>/cache/<stage>-<key>/ where key is a 64-bit FNV-1a hash of the stage's
// input file bytes, its configuration subset and the library version.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fxnet/asset_pricing.hpp"
#include "fxnet/connectedness.hpp"
#include "fxnet/implied_variance.hpp"
#include "fxnet/market_data.hpp"
#include "fxnet/qbll.hpp"
#include "fxnet/synthetic.hpp"

namespace fxnet {

std::string_view version();

struct PipelineConfig {
  std::string config_dir = ".";    // relative paths below resolve against this
  std::string options_path = "data/options.csv";
  std::string fx_path = "data/fx.csv";
  std::string out_dir = "out";
  std::uint64_t seed = 20240101;
  int threads = 1;

  bool generate = false;           // run gen-data before the other stages
  SyntheticConfig synthetic;

  double tenor = kOneMonth;
  CivConfig civ;

  QbllConfig qbll;
  HorizonBands bands;
  bool absolute_measures = false;  // raw theta instead of within-band normalized
  std::vector<Date> graph_dates;   // GraphML/DOT exports
  double graph_threshold = 0.0;

  Frequency freq = Frequency::Monthly;
  double costs = 0.5;
  int momentum_lookback = 6;
  std::vector<std::string> strategies;

  std::string test_assets = "net:causal:S";
  std::vector<std::vector<std::string>> models;
  std::vector<std::string> beta_factors;
  std::vector<std::string> pca_aux;
  FitConfig fit;

  std::string focus = "net:causal:S";  // strategy featured in the spanning, combination and allocation tables

  // Sets the global seed and every derived seed not pinned in its own section.
  void set_seed(std::uint64_t s);
  std::array<bool, 3> pinned_seeds{};  // synthetic, qbll, pricing

  std::string resolve(const std::string& p) const;
  std::string out(const std::string& name) const;  // path inside out_dir
  void validate() const;
};

// Parses the INI text. Unknown sections or keys are a ConfigError so typos do not pass silently.
PipelineConfig parse_config(const std::string& text, const std::string& config_dir = ".");
PipelineConfig load_config(const std::string& path);
std::vector<std::string> default_strategies();

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

struct StageOutcome {
  std::string stage;
  bool cache_hit = false;
  std::string key;  // 16 hex digits
};

// Stage entry points. Each writes its artifacts into out_dir.
StageOutcome stage_gen_data(const PipelineConfig& cfg);
StageOutcome stage_synth_iv(const PipelineConfig& cfg);
StageOutcome stage_estimate_network(const PipelineConfig& cfg);
StageOutcome stage_backtest(const PipelineConfig& cfg);
StageOutcome stage_price(const PipelineConfig& cfg);
StageOutcome stage_report(const PipelineConfig& cfg);

// All stages in order under an exclusive lock on out_dir.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& cfg);

// Holds <out>/.lock for its lifetime; throws ConfigError if another writer holds it.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

// Wide CSV: "date,<col>,<col>..." with NaN written as "nan".
struct WideTable {
  std::vector<Date> dates;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  Eigen::Index column(const std::string& name) const;  // throws DataError when absent
};
WideTable read_wide_csv(const std::string& path);
void write_wide_csv(const WideTable& t, const std::string& path);

// Reads "date,currency,civ" into a panel over the sorted union of dates and currencies.
CivPanel load_civ(const std::string& path);
void save_civ(const CivPanel& panel, const std::string& path);

// Evaluates a battery of SDF models on the test assets. Rows with a NaN in any
// used column are dropped per model. Returns the JSON document as text.
std::string price_models(const WideTable& assets, const std::vector<std::string>& asset_columns, const WideTable& factors,
                         const std::vector<std::vector<std::string>>& models, const std::vector<std::string>& beta_factors,
                         const std::vector<std::string>& pca_aux, const FitConfig& fit, Frequency freq);

}  // namespace fxnet
