#include "fxnet/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "fxnet/csv.hpp"
#include "fxnet/error.hpp"

namespace fxnet {

std::string_view to_string(DeltaBucket b) {
  switch (b) {
    case DeltaBucket::Put10: return "10d-put";
    case DeltaBucket::Put25: return "25d-put";
    case DeltaBucket::Atm: return "ATM";
    case DeltaBucket::Call25: return "25d-call";
    case DeltaBucket::Call10: return "10d-call";
  }
  return "?";
}

std::optional<DeltaBucket> parse_bucket(std::string_view s) {
  s = csv::trim(s);
  for (DeltaBucket b : kDeltaBuckets) {
    if (s == to_string(b)) return b;
  }
  if (s == "atm") return DeltaBucket::Atm;
  return std::nullopt;
}

std::optional<double> parse_tenor(std::string_view s) {
  s = csv::trim(s);
  if (s.size() >= 2) {
    const char unit = s.back();
    if (unit == 'W' || unit == 'M' || unit == 'Y') {
      unsigned n = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size() - 1, n);
      if (ec != std::errc{} || ptr != s.data() + s.size() - 1 || n == 0) return std::nullopt;
      if (unit == 'W') return n * 7.0 / 365.0;
      if (unit == 'M') return n / 12.0;
      return static_cast<double>(n);
    }
  }
  auto v = csv::parse_double(s);
  if (!v || !(*v > 0.0)) return std::nullopt;
  return v;
}

std::string format_tenor(double tenor) {
  for (unsigned n = 1; n <= 120; ++n) {
    if (tenor == n / 12.0) return std::to_string(n) + "M";
  }
  return csv::fmt(tenor);
}

void VolSurfacePanel::add(const OptionQuote& q) {
  Key key{q.currency, q.date, q.tenor};
  auto [it, inserted] = smiles_.try_emplace(key);
  SmileQuotes& s = it->second;
  if (inserted) {
    s.currency = q.currency;
    s.date = q.date;
    s.tenor = q.tenor;
  }
  const auto bit = static_cast<std::uint8_t>(1u << static_cast<unsigned>(q.bucket));
  if (s.present & bit) {
    throw DuplicateQuote("duplicate quote " + q.date.str() + " " + q.currency + " " + std::string(to_string(q.bucket)));
  }
  s.present |= bit;
  s.vols[static_cast<std::size_t>(q.bucket)] = q.implied_vol;
}

const SmileQuotes* VolSurfacePanel::find(const std::string& currency, Date date, double tenor) const {
  auto it = smiles_.find(Key{currency, date, tenor});
  return it == smiles_.end() ? nullptr : &it->second;
}

std::size_t VolSurfacePanel::complete_count(double tenor) const {
  return static_cast<std::size_t>(std::count_if(smiles_.begin(), smiles_.end(), [&](const auto& kv) {
    return kv.second.tenor == tenor && kv.second.complete();
  }));
}

void check_monotone_entry(const std::vector<std::pair<std::string, Date>>& coverage) {
  std::set<Date> grid;
  std::map<std::string, std::set<Date>> by_currency;
  for (const auto& [cur, d] : coverage) {
    grid.insert(d);
    by_currency[cur].insert(d);
  }
  for (const auto& [cur, dates] : by_currency) {
    auto first = grid.find(*dates.begin());
    const auto expected = static_cast<std::size_t>(std::distance(first, grid.end()));
    if (dates.size() != expected) {
      throw NonMonotoneEntry("currency " + cur + " leaves the sample or has gaps after entering on " +
                             dates.begin()->str());
    }
  }
}

namespace {

std::vector<std::string> read_or_throw(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (!lines) throw IoError("cannot read " + path);
  // drop trailing blank lines
  while (!lines->empty() && csv::trim(lines->back()).empty()) lines->pop_back();
  if (lines->size() <= 1) throw EmptyFile(path + " has no data rows");
  return std::move(*lines);
}

void expect_header(const std::string& got, std::string_view want, const std::string& path) {
  if (csv::trim(got) != want) throw MalformedRow(1, path + ": expected header '" + std::string(want) + "'");
}

Date parse_date_field(std::string_view s, std::size_t line) {
  try {
    return Date::parse(csv::trim(s));
  } catch (const std::invalid_argument& e) {
    throw MalformedRow(line, e.what());
  }
}

double parse_field(std::string_view s, std::size_t line, const char* name) {
  auto v = csv::parse_double(s);
  if (!v || !std::isfinite(*v)) throw MalformedRow(line, std::string("bad or missing ") + name);
  return *v;
}

}  // namespace

VolSurfacePanel load_option_surface(const std::string& path) {
  const auto lines = read_or_throw(path);
  expect_header(lines[0], "date,currency,tenor,bucket,vol", path);
  VolSurfacePanel panel;
  std::vector<std::pair<std::string, Date>> coverage;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const auto f = csv::split(lines[i]);
    if (f.size() != 5) throw MalformedRow(lineno, "expected 5 fields");
    OptionQuote q;
    q.date = parse_date_field(f[0], lineno);
    q.currency = std::string(csv::trim(f[1]));
    if (q.currency.empty()) throw MalformedRow(lineno, "missing currency");
    auto tenor = parse_tenor(f[2]);
    if (!tenor) throw MalformedRow(lineno, "bad or missing tenor");
    q.tenor = *tenor;
    auto bucket = parse_bucket(f[3]);
    if (!bucket) throw MalformedRow(lineno, "unknown delta bucket");
    q.bucket = *bucket;
    q.implied_vol = parse_field(f[4], lineno, "vol");
    if (!(q.implied_vol > 0.0)) throw MalformedRow(lineno, "implied vol must be positive");
    panel.add(q);
    coverage.emplace_back(q.currency, q.date);
  }
  check_monotone_entry(coverage);
  return panel;
}

void save_option_surface(const VolSurfacePanel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "date,currency,tenor,bucket,vol\n";
  // date-major order
  std::vector<const SmileQuotes*> rows;
  for (const auto& [key, s] : panel.smiles()) rows.push_back(&s);
  std::stable_sort(rows.begin(), rows.end(), [](const SmileQuotes* a, const SmileQuotes* b) {
    return std::tie(a->date, a->currency, a->tenor) < std::tie(b->date, b->currency, b->tenor);
  });
  for (const SmileQuotes* s : rows) {
    for (DeltaBucket b : kDeltaBuckets) {
      const auto i = static_cast<std::size_t>(b);
      if (!(s->present & (1u << i))) continue;
      out << s->date.str() << ',' << s->currency << ',' << format_tenor(s->tenor) << ',' << to_string(b) << ','
          << csv::fmt(s->vols[i]) << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

void validate(const FxRecord& r, std::size_t line) {
  const std::string where = line ? "line " + std::to_string(line) + ": " : std::string(r.date.str() + " " + r.currency + ": ");
  for (double p : {r.spot_bid, r.spot_mid, r.spot_ask, r.fwd_bid, r.fwd_mid, r.fwd_ask}) {
    if (!(p > 0.0)) {
      if (line) throw MalformedRow(line, "prices must be positive");
      throw DataError(where + "prices must be positive");
    }
  }
  if (!(r.spot_bid <= r.spot_mid && r.spot_mid <= r.spot_ask)) throw CrossedMarket(where + "crossed spot quote");
  if (!(r.fwd_bid <= r.fwd_mid && r.fwd_mid <= r.fwd_ask)) throw CrossedMarket(where + "crossed forward quote");
}

std::vector<FxRecord> load_fx_panel(const std::string& path) {
  const auto lines = read_or_throw(path);
  expect_header(lines[0], "date,currency,spot_bid,spot_mid,spot_ask,fwd_bid,fwd_mid,fwd_ask,rate_dom,rate_for", path);
  std::vector<FxRecord> out;
  out.reserve(lines.size() - 1);
  std::set<std::pair<std::string, Date>> seen;
  std::vector<std::pair<std::string, Date>> coverage;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const auto f = csv::split(lines[i]);
    if (f.size() != 10) throw MalformedRow(lineno, "expected 10 fields");
    FxRecord r;
    r.date = parse_date_field(f[0], lineno);
    r.currency = std::string(csv::trim(f[1]));
    if (r.currency.empty()) throw MalformedRow(lineno, "missing currency");
    r.spot_bid = parse_field(f[2], lineno, "spot_bid");
    r.spot_mid = parse_field(f[3], lineno, "spot_mid");
    r.spot_ask = parse_field(f[4], lineno, "spot_ask");
    r.fwd_bid = parse_field(f[5], lineno, "fwd_bid");
    r.fwd_mid = parse_field(f[6], lineno, "fwd_mid");
    r.fwd_ask = parse_field(f[7], lineno, "fwd_ask");
    r.rate_dom = parse_field(f[8], lineno, "rate_dom");
    r.rate_for = parse_field(f[9], lineno, "rate_for");
    validate(r, lineno);
    if (!seen.emplace(r.currency, r.date).second) {
      throw DuplicateQuote("duplicate FX record " + r.date.str() + " " + r.currency);
    }
    coverage.emplace_back(r.currency, r.date);
    out.push_back(std::move(r));
  }
  check_monotone_entry(coverage);
  return out;
}

void save_fx_panel(std::span<const FxRecord> records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "date,currency,spot_bid,spot_mid,spot_ask,fwd_bid,fwd_mid,fwd_ask,rate_dom,rate_for\n";
  for (const FxRecord& r : records) {
    out << r.date.str() << ',' << r.currency << ',' << csv::fmt(r.spot_bid) << ',' << csv::fmt(r.spot_mid) << ','
        << csv::fmt(r.spot_ask) << ',' << csv::fmt(r.fwd_bid) << ',' << csv::fmt(r.fwd_mid) << ','
        << csv::fmt(r.fwd_ask) << ',' << csv::fmt(r.rate_dom) << ',' << csv::fmt(r.rate_for) << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

AlignedDataset::AlignedDataset(std::vector<Date> dates, std::vector<std::string> currencies, std::vector<Cell> cells,
                               double tenor)
    : dates_(std::move(dates)), currencies_(std::move(currencies)), cells_(std::move(cells)), tenor_(tenor) {
  if (cells_.size() != dates_.size() * currencies_.size()) {
    throw std::invalid_argument("AlignedDataset: cell count does not match grid");
  }
  if (!std::is_sorted(dates_.begin(), dates_.end()) ||
      std::adjacent_find(dates_.begin(), dates_.end()) != dates_.end()) {
    throw std::invalid_argument("AlignedDataset: dates must be strictly increasing");
  }
}

std::optional<std::size_t> AlignedDataset::currency_index(std::string_view code) const {
  auto it = std::find(currencies_.begin(), currencies_.end(), code);
  if (it == currencies_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - currencies_.begin());
}

std::optional<std::size_t> AlignedDataset::date_index(Date d) const {
  auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - dates_.begin());
}

AlignedDataset align(const VolSurfacePanel& surface, std::span<const FxRecord> fx, double tenor) {
  std::set<Date> date_set;
  std::set<std::string> currency_set;
  for (const auto& [key, s] : surface.smiles()) {
    if (s.tenor != tenor) continue;
    date_set.insert(s.date);
    currency_set.insert(s.currency);
  }
  for (const FxRecord& r : fx) {
    date_set.insert(r.date);
    currency_set.insert(r.currency);
  }
  std::vector<Date> dates(date_set.begin(), date_set.end());
  std::vector<std::string> currencies(currency_set.begin(), currency_set.end());
  const std::size_t nc = currencies.size();
  auto date_pos = [&](Date d) { return static_cast<std::size_t>(std::lower_bound(dates.begin(), dates.end(), d) - dates.begin()); };
  auto cur_pos = [&](const std::string& c) {
    return static_cast<std::size_t>(std::lower_bound(currencies.begin(), currencies.end(), c) - currencies.begin());
  };

  std::vector<AlignedDataset::Cell> cells(dates.size() * nc);
  for (const auto& [key, s] : surface.smiles()) {
    if (s.tenor != tenor || !s.complete()) continue;
    auto& cell = cells[date_pos(s.date) * nc + cur_pos(s.currency)];
    cell.has_smile = true;
    cell.vols = s.vols;
  }
  for (const FxRecord& r : fx) {
    auto& cell = cells[date_pos(r.date) * nc + cur_pos(r.currency)];
    cell.has_fx = true;
    cell.fx = r;
  }
  const bool any = std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.available(); });
  if (!any) throw NoOverlap("option surface and FX panel share no (date, currency) cell");
  return AlignedDataset(std::move(dates), std::move(currencies), std::move(cells), tenor);
}

Frequency parse_frequency(std::string_view s) {
  if (s == "d" || s == "daily") return Frequency::Daily;
  if (s == "w" || s == "weekly") return Frequency::Weekly;
  if (s == "m" || s == "monthly") return Frequency::Monthly;
  throw ConfigError("unknown frequency '" + std::string(s) + "'");
}

std::string_view to_string(Frequency f) {
  switch (f) {
    case Frequency::Daily: return "daily";
    case Frequency::Weekly: return "weekly";
    case Frequency::Monthly: return "monthly";
  }
  return "?";
}

int periods_per_year(Frequency f) {
  switch (f) {
    case Frequency::Daily: return 252;
    case Frequency::Weekly: return 52;
    case Frequency::Monthly: return 12;
  }
  return 12;
}

std::vector<Date> sample_period_ends(std::span<const Date> dates, Frequency freq) {
  std::vector<Date> out;
  if (freq == Frequency::Daily) return {dates.begin(), dates.end()};
  auto bucket = [freq](Date d) -> std::pair<int, unsigned> {
    if (freq == Frequency::Monthly) return {d.year(), d.month()};
    return d.iso_week();
  };
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i + 1 == dates.size() || bucket(dates[i + 1]) != bucket(dates[i])) out.push_back(dates[i]);
  }
  return out;
}

std::vector<Date> sample_period_ends(const AlignedDataset& data, Frequency freq) {
  return sample_period_ends(std::span<const Date>(data.dates()), freq);
}

}  // namespace fxnet
