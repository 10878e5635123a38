#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fxnet/date.hpp"

namespace fxnet {

// Quoted smile points, ordered from the low-strike (put) wing to the high-strike (call) wing.
enum class DeltaBucket : std::uint8_t { Put10 = 0, Put25 = 1, Atm = 2, Call25 = 3, Call10 = 4 };

inline constexpr std::array<DeltaBucket, 5> kDeltaBuckets = {DeltaBucket::Put10, DeltaBucket::Put25, DeltaBucket::Atm,
                                                             DeltaBucket::Call25, DeltaBucket::Call10};

// One month in years; the core pipeline works on 1M quotes only.
inline constexpr double kOneMonth = 1.0 / 12.0;

std::string_view to_string(DeltaBucket b);
std::optional<DeltaBucket> parse_bucket(std::string_view s);

// "1W", "1M", "3M", "1Y" or a decimal number of years.
std::optional<double> parse_tenor(std::string_view s);
std::string format_tenor(double tenor);

struct OptionQuote {
  std::string currency;
  Date date;
  double tenor = kOneMonth;
  DeltaBucket bucket = DeltaBucket::Atm;
  double implied_vol = 0.0;
};

// The quotes of one (currency, date, tenor) cell. vols are indexed by DeltaBucket.
struct SmileQuotes {
  std::string currency;
  Date date;
  double tenor = kOneMonth;
  std::array<double, 5> vols{};
  std::uint8_t present = 0;  // bit i set when bucket i was quoted

  bool complete() const { return present == 0x1F; }
  bool operator==(const SmileQuotes&) const = default;
};

class VolSurfacePanel {
 public:
  using Key = std::tuple<std::string, Date, double>;  // currency, date, tenor

  VolSurfacePanel() = default;

  // Throws DuplicateQuote if (date, currency, tenor, bucket) repeats.
  void add(const OptionQuote& q);

  const SmileQuotes* find(const std::string& currency, Date date, double tenor = kOneMonth) const;
  const std::map<Key, SmileQuotes>& smiles() const { return smiles_; }
  std::size_t size() const { return smiles_.size(); }
  std::size_t complete_count(double tenor = kOneMonth) const;

  bool operator==(const VolSurfacePanel&) const = default;

 private:
  std::map<Key, SmileQuotes> smiles_;
};

struct FxRecord {
  std::string currency;
  Date date;
  double spot_bid = 0, spot_mid = 0, spot_ask = 0;  // foreign currency per USD
  double fwd_bid = 0, fwd_mid = 0, fwd_ask = 0;     // 1M outright forward, same units
  double rate_dom = 0;                              // USD simple annual rate
  double rate_for = 0;                              // foreign simple annual rate

  bool operator==(const FxRecord&) const = default;
};

// Throws CrossedMarket unless bid <= mid <= ask on both legs, MalformedRow-style
// DataError on non-positive prices. `line` is only used for messages.
void validate(const FxRecord& r, std::size_t line = 0);

VolSurfacePanel load_option_surface(const std::string& path);
void save_option_surface(const VolSurfacePanel& panel, const std::string& path);

std::vector<FxRecord> load_fx_panel(const std::string& path);
void save_fx_panel(std::span<const FxRecord> records, const std::string& path);

// Rejects panels where a currency leaves the sample or has an interior gap
// relative to the union date grid (NonMonotoneEntry).
void check_monotone_entry(const std::vector<std::pair<std::string, Date>>& coverage);

class AlignedDataset {
 public:
  struct Cell {
    bool has_smile = false;
    bool has_fx = false;
    std::array<double, 5> vols{};
    FxRecord fx;
    bool available() const { return has_smile && has_fx; }
  };

  AlignedDataset(std::vector<Date> dates, std::vector<std::string> currencies, std::vector<Cell> cells, double tenor);

  const std::vector<Date>& dates() const { return dates_; }
  const std::vector<std::string>& currencies() const { return currencies_; }
  std::size_t n_dates() const { return dates_.size(); }
  std::size_t n_currencies() const { return currencies_.size(); }
  double tenor() const { return tenor_; }

  const Cell& cell(std::size_t t, std::size_t c) const { return cells_[t * currencies_.size() + c]; }
  bool available(std::size_t t, std::size_t c) const { return cell(t, c).available(); }

  std::optional<std::size_t> currency_index(std::string_view code) const;
  std::optional<std::size_t> date_index(Date d) const;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> currencies_;
  std::vector<Cell> cells_;
  double tenor_;
};

// Cells are available iff a complete smile at `tenor` and an FX record exist.
// Dates are the union grid of both sources. Throws NoOverlap if no cell is available.
AlignedDataset align(const VolSurfacePanel& surface, std::span<const FxRecord> fx, double tenor = kOneMonth);

enum class Frequency { Daily, Weekly, Monthly };

Frequency parse_frequency(std::string_view s);  // "d"/"daily", "w"/"weekly", "m"/"monthly"
std::string_view to_string(Frequency f);
int periods_per_year(Frequency f);  // 252, 52, 12

// Last available date of each calendar month / ISO week; identity for daily.
std::vector<Date> sample_period_ends(std::span<const Date> dates, Frequency freq);
std::vector<Date> sample_period_ends(const AlignedDataset& data, Frequency freq);

}  // namespace fxnet
