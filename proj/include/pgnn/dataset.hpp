#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pgnn/error.hpp"
#include "pgnn/matrix.hpp"
#include "pgnn/physics.hpp"

namespace pgnn {

inline constexpr std::size_t kChannelCount = 10;

// Input roster: ground field (nT), GSM IMF (nT), plasma T (K), rho (cm^-3),
// V (km/s), P (nPa). Ground and IMF Z components are separate channels.
enum Channel : std::size_t { B_N, B_E, Bz_geo, Bx_imf, By_imf, Bz_imf, T, Rho, V, P };

inline constexpr std::array<const char*, kChannelCount> kChannelNames = {
    "B_N", "B_E", "Bz_geo", "Bx_imf", "By_imf", "Bz_imf", "T", "rho", "V", "P"};
inline constexpr std::array<const char*, kChannelCount> kChannelUnits = {
    "nT", "nT", "nT", "nT", "nT", "nT", "K", "cm^-3", "km/s", "nPa"};

inline std::optional<std::size_t> channel_index(std::string_view name) {
  for (std::size_t c = 0; c < kChannelCount; ++c)
    if (name == kChannelNames[c]) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Timestamps are whole UTC minutes since 1970-01-01T00:00Z.

inline std::int64_t parse_timestamp(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  std::string buf(s);
  int n = std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n < 6 || (sep != 'T' && sep != ' '))
    throw DataError("unparseable timestamp '" + buf + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 ||
      sec > 59)
    throw DataError("timestamp out of range '" + buf + "'");
  if (sec != 0) throw DataError("timestamp not on a whole minute '" + buf + "'");
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + buf + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 1440 + h * 60 + mi;
}

inline std::string format_timestamp(std::int64_t minutes) {
  using namespace std::chrono;
  std::int64_t days = minutes >= 0 ? minutes / 1440 : -((-minutes + 1439) / 1440);
  const std::int64_t rem = minutes - days * 1440;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char out[32];
  std::snprintf(out, sizeof out, "%04d-%02u-%02uT%02d:%02d:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return out;
}

// ---------------------------------------------------------------------------
// Schema file: versioned `key = value` lines, '#' comments.
//
//   version = 1
//   time_column = timestamp
//   max_fill_minutes = 60
//   channel.V.column = flow_speed
//   channel.V.unit = km/s
//   channel.V.sentinel = 99999.9
//
// Unlisted channels read the column named like the channel, unit per roster,
// sentinel from `default_sentinel`.

struct ChannelSchema {
  std::string column;
  std::string unit;
  std::optional<double> sentinel;
};

struct CsvSchema {
  int version = 1;
  std::string time_column = "timestamp";
  std::int64_t max_fill_minutes = 60;
  std::array<ChannelSchema, kChannelCount> channels;

  static CsvSchema defaults(double sentinel = 999999.0) {
    CsvSchema s;
    for (std::size_t c = 0; c < kChannelCount; ++c)
      s.channels[c] = {kChannelNames[c], kChannelUnits[c], sentinel};
    return s;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline CsvSchema parse_schema(std::string_view text) {
  CsvSchema s = CsvSchema::defaults();
  bool have_version = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    auto line = detail::trim(text.substr(pos, end == std::string_view::npos ? end : end - pos));
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("schema line " + std::to_string(line_no) + ": expected key = value");
    auto key = std::string(detail::trim(line.substr(0, eq)));
    auto value = std::string(detail::trim(line.substr(eq + 1)));
    auto where = [&] { return "schema line " + std::to_string(line_no) + ": "; };
    if (key == "version") {
      if (value != "1") throw ConfigError(where() + "unsupported schema version " + value);
      have_version = true;
    } else if (key == "time_column") {
      s.time_column = value;
    } else if (key == "max_fill_minutes") {
      auto v = detail::parse_double(value);
      if (!v || *v < 0 || *v != std::floor(*v)) throw ConfigError(where() + "bad max_fill_minutes");
      s.max_fill_minutes = static_cast<std::int64_t>(*v);
    } else if (key == "default_sentinel") {
      auto v = detail::parse_double(value);
      if (!v) throw ConfigError(where() + "bad default_sentinel");
      for (auto& c : s.channels) c.sentinel = *v;
    } else if (key.rfind("channel.", 0) == 0) {
      auto rest = std::string_view(key).substr(8);
      auto dot = rest.find('.');
      if (dot == std::string_view::npos) throw ConfigError(where() + "bad channel key " + key);
      auto idx = channel_index(rest.substr(0, dot));
      if (!idx) throw ConfigError(where() + "unknown channel " + std::string(rest.substr(0, dot)));
      auto field = rest.substr(dot + 1);
      auto& ch = s.channels[*idx];
      if (field == "column") {
        ch.column = value;
      } else if (field == "unit") {
        ch.unit = value;
      } else if (field == "sentinel") {
        if (value == "none") {
          ch.sentinel.reset();
        } else {
          auto v = detail::parse_double(value);
          if (!v) throw ConfigError(where() + "bad sentinel " + value);
          ch.sentinel = *v;
        }
      } else {
        throw ConfigError(where() + "unknown channel field " + std::string(field));
      }
    } else {
      throw ConfigError(where() + "unknown key " + key);
    }
  }
  if (!have_version) throw ConfigError("schema is missing its version line");
  return s;
}

inline CsvSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

// ---------------------------------------------------------------------------

struct RawSeries {
  std::vector<std::int64_t> minutes;
  // values[c][t], gaps[c][t] != 0 where the cell was missing.
  std::array<std::vector<double>, kChannelCount> values;
  std::array<std::vector<std::uint8_t>, kChannelCount> gaps;
  // First index of each block of consecutive minutes; always starts with 0.
  std::vector<std::size_t> segment_starts;

  std::size_t size() const { return minutes.size(); }

  std::vector<RowRange> segments() const {
    std::vector<RowRange> out;
    for (std::size_t s = 0; s < segment_starts.size(); ++s) {
      std::size_t end = s + 1 < segment_starts.size() ? segment_starts[s + 1] : size();
      out.push_back({segment_starts[s], end});
    }
    return out;
  }

  std::size_t gap_count() const {
    std::size_t n = 0;
    for (const auto& g : gaps)
      for (auto f : g) n += f ? 1 : 0;
    return n;
  }

  void push_row(std::int64_t minute, const std::array<double, kChannelCount>& row,
                const std::array<bool, kChannelCount>& missing) {
    minutes.push_back(minute);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      values[c].push_back(missing[c] ? 0.0 : row[c]);
      gaps[c].push_back(missing[c] ? 1 : 0);
    }
  }

  friend bool operator==(const RawSeries&, const RawSeries&) = default;
};

// Reads a minute-cadence CSV. Cells that are empty or equal the channel
// sentinel are flagged as gaps. Missing minutes up to max_fill_minutes are
// inserted as all-gap rows; longer jumps start a new segment.
inline RawSeries ingest_csv(std::istream& in, const CsvSchema& schema,
                            const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  ++line_no;
  auto header = detail::split_csv(line);
  std::optional<std::size_t> time_col;
  std::array<std::optional<std::size_t>, kChannelCount> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.time_column) {
      time_col = i;
      continue;
    }
    bool found = false;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      if (header[i] == schema.channels[c].column) {
        if (col_of[c]) throw fail("duplicate column " + std::string(header[i]));
        col_of[c] = i;
        found = true;
      }
    }
    if (!found) throw fail("unknown column " + std::string(header[i]));
  }
  if (!time_col) throw fail("missing time column " + schema.time_column);
  for (std::size_t c = 0; c < kChannelCount; ++c)
    if (!col_of[c]) throw fail("missing column for channel " + std::string(kChannelNames[c]));

  RawSeries s;
  const std::array<bool, kChannelCount> all_missing = [] {
    std::array<bool, kChannelCount> a;
    a.fill(true);
    return a;
  }();
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw fail("expected " + std::to_string(header.size()) + " cells, found " +
                 std::to_string(cells.size()));
    std::int64_t minute = 0;
    try {
      minute = parse_timestamp(cells[*time_col]);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    std::array<double, kChannelCount> row{};
    std::array<bool, kChannelCount> missing{};
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      auto cell = cells[*col_of[c]];
      if (cell.empty()) {
        missing[c] = true;
        continue;
      }
      auto v = detail::parse_double(cell);
      if (!v) throw fail("malformed value '" + std::string(cell) + "' in column " +
                         schema.channels[c].column);
      const auto& sentinel = schema.channels[c].sentinel;
      missing[c] = !std::isfinite(*v) || (sentinel && *v == *sentinel);
      row[c] = *v;
    }
    if (s.size() == 0) {
      s.segment_starts.push_back(0);
    } else {
      const std::int64_t prev = s.minutes.back();
      if (minute <= prev)
        throw fail("timestamp " + format_timestamp(minute) + " does not increase");
      const std::int64_t jump = minute - prev;
      if (jump - 1 <= schema.max_fill_minutes) {
        for (std::int64_t m = prev + 1; m < minute; ++m) s.push_row(m, {}, all_missing);
      } else {
        s.segment_starts.push_back(s.size());
      }
    }
    s.push_row(minute, row, missing);
  }
  if (s.size() == 0) throw DataError(source + ": no data rows");
  return s;
}

inline RawSeries ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return ingest_csv(in, schema, path.string());
}

// Gap cells are written as the channel sentinel (or left empty without one).
inline void write_csv(std::ostream& out, const RawSeries& s, const CsvSchema& schema) {
  out << schema.time_column;
  for (const auto& c : schema.channels) out << ',' << c.column;
  out << '\n';
  for (std::size_t t = 0; t < s.size(); ++t) {
    out << format_timestamp(s.minutes[t]);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      out << ',';
      if (s.gaps[c][t]) {
        if (schema.channels[c].sentinel) out << detail::format_double(*schema.channels[c].sentinel);
      } else {
        out << detail::format_double(s.values[c][t]);
      }
    }
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const RawSeries& s,
                      const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(out, s, schema);
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

struct GapReport {
  std::array<std::size_t, kChannelCount> gap_cells{};
  std::size_t total_cells = 0;
  std::size_t trimmed_rows = 0;

  double fraction(std::size_t channel) const {
    const std::size_t rows = total_cells / kChannelCount;
    return rows == 0 ? 0.0 : static_cast<double>(gap_cells[channel]) / static_cast<double>(rows);
  }
  double overall_fraction() const {
    std::size_t n = 0;
    for (auto g : gap_cells) n += g;
    return total_cells == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total_cells);
  }
};

// Linear interpolation across gaps within each segment. Rows at segment
// edges where any channel is missing are trimmed.
inline RawSeries interpolate_gaps(const RawSeries& in, GapReport* report = nullptr) {
  GapReport rep;
  rep.total_cells = in.size() * kChannelCount;
  for (std::size_t c = 0; c < kChannelCount; ++c)
    for (auto f : in.gaps[c]) rep.gap_cells[c] += f ? 1 : 0;

  RawSeries out;
  for (const auto& seg : in.segments()) {
    std::size_t lo = seg.begin, hi = seg.end;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      std::size_t first = seg.end, last = seg.begin;
      for (std::size_t t = seg.begin; t < seg.end; ++t) {
        if (!in.gaps[c][t]) {
          first = std::min(first, t);
          last = t;
        }
      }
      if (first == seg.end)
        throw DataError(std::string("channel ") + kChannelNames[c] +
                        " is entirely missing in the segment starting " +
                        format_timestamp(in.minutes[seg.begin]));
      lo = std::max(lo, first);
      hi = std::min(hi, last + 1);
    }
    if (lo >= hi) {
      rep.trimmed_rows += seg.size();
      continue;
    }
    rep.trimmed_rows += seg.size() - (hi - lo);
    out.segment_starts.push_back(out.size());
    const std::size_t base = out.size();
    for (std::size_t t = lo; t < hi; ++t) out.minutes.push_back(in.minutes[t]);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto& v = in.values[c];
      const auto& g = in.gaps[c];
      auto& ov = out.values[c];
      ov.insert(ov.end(), v.begin() + static_cast<std::ptrdiff_t>(lo),
                v.begin() + static_cast<std::ptrdiff_t>(hi));
      out.gaps[c].insert(out.gaps[c].end(), hi - lo, 0);
      std::size_t prev = lo;  // last present index, lo is present by construction
      for (std::size_t t = lo + 1; t < hi; ++t) {
        if (g[t]) continue;
        if (t > prev + 1) {
          const double a = v[prev], b = v[t];
          const double span = static_cast<double>(t - prev);
          for (std::size_t k = prev + 1; k < t; ++k)
            ov[base + (k - lo)] = a + (b - a) * (static_cast<double>(k - prev) / span);
        }
        prev = t;
      }
    }
  }
  if (report) *report = rep;
  return out;
}

// ---------------------------------------------------------------------------

struct SupervisedSet {
  Matrix x;  // N x 10 channels at time t
  Matrix y;  // N x 7 targets at time t+1
  std::vector<std::int64_t> times;  // target minute of each row
  std::vector<std::size_t> segment_starts;

  std::size_t rows() const { return x.rows(); }

  std::vector<RowRange> segments() const {
    std::vector<RowRange> out;
    for (std::size_t s = 0; s < segment_starts.size(); ++s) {
      std::size_t end = s + 1 < segment_starts.size() ? segment_starts[s + 1] : rows();
      out.push_back({segment_starts[s], end});
    }
    return out;
  }

  // Rows [begin, end) with segment boundaries carried over.
  SupervisedSet slice(std::size_t begin, std::size_t end) const {
    SupervisedSet s;
    s.x = x.slice_rows(begin, end);
    s.y = y.slice_rows(begin, end);
    s.times.assign(times.begin() + static_cast<std::ptrdiff_t>(begin),
                   times.begin() + static_cast<std::ptrdiff_t>(end));
    if (end > begin) s.segment_starts.push_back(0);
    for (auto st : segment_starts)
      if (st > begin && st < end) s.segment_starts.push_back(st - begin);
    return s;
  }

  friend bool operator==(const SupervisedSet&, const SupervisedSet&) = default;
};

// One-step-ahead supervised rows. Row k of a segment pairs the 10 channels
// at minute s_k with the targets at s_{k+1}:
//   dBN/dt = (B_N(s_{k+1}) - B_N(s_k)) / dt, likewise dBE/dt,
//   dBH/dt = sqrt(dBN^2 + dBE^2), theta = clock_angle(By, Bz),
//   dPhi/dt = newell_coupling(V, Bz_imf, theta).
inline SupervisedSet derive_targets(const RawSeries& s, const TargetLayout& layout = {},
                                    double dt_minutes = 1.0) {
  layout.validate();
  for (const auto& g : s.gaps)
    for (auto f : g)
      if (f) throw DataError("derive_targets: series still has gaps; interpolate first");
  std::size_t n = 0;
  for (const auto& seg : s.segments()) {
    if (seg.size() < 2)
      throw DataError("segment starting " + format_timestamp(s.minutes[seg.begin]) +
                      " is shorter than 2 minutes");
    n += seg.size() - 1;
  }
  SupervisedSet out;
  out.x = Matrix(n, kChannelCount);
  out.y = Matrix(n, kTargetCount);
  out.times.reserve(n);
  std::size_t r = 0;
  for (const auto& seg : s.segments()) {
    out.segment_starts.push_back(r);
    for (std::size_t t = seg.begin; t + 1 < seg.end; ++t, ++r) {
      for (std::size_t c = 0; c < kChannelCount; ++c) out.x(r, c) = s.values[c][t];
      const std::size_t u = t + 1;
      const double dn = (s.values[B_N][u] - s.values[B_N][t]) / dt_minutes;
      const double de = (s.values[B_E][u] - s.values[B_E][t]) / dt_minutes;
      const double theta = clock_angle(s.values[By_imf][u], s.values[Bz_imf][u]);
      out.y(r, layout.dbh_dt) = std::sqrt(dn * dn + de * de);
      out.y(r, layout.b_n) = s.values[B_N][u];
      out.y(r, layout.b_e) = s.values[B_E][u];
      out.y(r, layout.dphi_dt) = newell_coupling(s.values[V][u], s.values[Bz_imf][u], theta);
      out.y(r, layout.v) = s.values[V][u];
      out.y(r, layout.bz_imf) = s.values[Bz_imf][u];
      out.y(r, layout.theta) = theta;
      out.times.push_back(s.minutes[u]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.2;  // of the training part
  bool chronological = true;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw ConfigError("train fraction must lie in (0, 1)");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw ConfigError("validation fraction must lie in (0, 1)");
    if (!chronological) throw ConfigError("only chronological splits are supported");
  }
};

struct SplitSets {
  SupervisedSet train;
  SupervisedSet validation;
  SupervisedSet test;
};

// Chronological partition: [train | validation | test].
inline SplitSets split(const SupervisedSet& set, const SplitSpec& spec = {}) {
  spec.validate();
  const std::size_t n = set.rows();
  if (n < 10) throw DataError("split needs at least 10 rows, have " + std::to_string(n));
  const auto train_all =
      static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
  const auto val =
      static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(train_all)));
  const std::size_t train = train_all - val;
  if (train == 0 || val == 0 || train_all == n) throw DataError("split leaves an empty part");
  return {set.slice(0, train), set.slice(train, train_all), set.slice(train_all, n)};
}

// ---------------------------------------------------------------------------

// Per-column min-max scaling. A constant column maps to 0 and inverts to its
// value.
struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  static MinMaxScaler fit(const Matrix& rows) {
    if (rows.rows() == 0) throw DataError("cannot fit a scaler on zero rows");
    MinMaxScaler s;
    s.min.assign(rows.cols(), 0.0);
    s.max.assign(rows.cols(), 0.0);
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      double lo = rows(0, c), hi = rows(0, c);
      for (std::size_t r = 1; r < rows.rows(); ++r) {
        lo = std::min(lo, rows(r, c));
        hi = std::max(hi, rows(r, c));
      }
      s.min[c] = lo;
      s.max[c] = hi;
    }
    return s;
  }

  std::size_t width() const { return min.size(); }
  double range(std::size_t c) const { return max[c] - min[c]; }

  Matrix apply(const Matrix& m) const {
    check(m);
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) {
        const double d = range(c);
        out(r, c) = d > 0.0 ? (m(r, c) - min[c]) / d : 0.0;
      }
    return out;
  }

  Matrix invert(const Matrix& m) const {
    check(m);
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = min[c] + range(c) * m(r, c);
    return out;
  }

  double invert_value(std::size_t c, double v) const { return min[c] + range(c) * v; }

  // Network output -> physical units, for the physics residuals.
  TargetScaling as_target_scaling() const {
    TargetScaling t;
    t.offset = min;
    t.scale.resize(width());
    for (std::size_t c = 0; c < width(); ++c) t.scale[c] = range(c);
    return t;
  }

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;

 private:
  void check(const Matrix& m) const {
    if (m.cols() != width())
      throw ShapeError("scaler fitted on " + std::to_string(width()) + " columns, got " +
                       std::to_string(m.cols()));
  }
};

// Split plus scalers fitted on the training rows only. `train`,
// `validation` and `test` hold scaled features and targets; `raw` keeps the
// physical-unit copies for metrics.
struct PreparedData {
  SplitSets raw;
  MinMaxScaler feature_scaler;
  MinMaxScaler target_scaler;
  SupervisedSet train;
  SupervisedSet validation;
  SupervisedSet test;
};

inline SupervisedSet scale_set(const SupervisedSet& set, const MinMaxScaler& xs,
                               const MinMaxScaler& ys) {
  SupervisedSet out = set;
  out.x = xs.apply(set.x);
  out.y = ys.apply(set.y);
  return out;
}

inline PreparedData prepare(const SupervisedSet& set, const SplitSpec& spec = {}) {
  PreparedData p;
  p.raw = split(set, spec);
  p.feature_scaler = MinMaxScaler::fit(p.raw.train.x);
  p.target_scaler = MinMaxScaler::fit(p.raw.train.y);
  p.train = scale_set(p.raw.train, p.feature_scaler, p.target_scaler);
  p.validation = scale_set(p.raw.validation, p.feature_scaler, p.target_scaler);
  p.test = scale_set(p.raw.test, p.feature_scaler, p.target_scaler);
  return p;
}

// ---------------------------------------------------------------------------
// Persisted as <prefix>_features.csv, <prefix>_targets.csv and
// <prefix>_segments.csv (one starting row index per line).

inline void save_supervised(const SupervisedSet& set, const std::filesystem::path& prefix,
                            const TargetLayout& layout = {}) {
  auto open = [&](const std::string& suffix) {
    std::ofstream f(prefix.string() + suffix);
    if (!f) throw DataError("cannot write " + prefix.string() + suffix);
    return f;
  };
  {
    auto f = open("_features.csv");
    f << "timestamp";
    for (auto n : kChannelNames) f << ',' << n;
    f << '\n';
    for (std::size_t r = 0; r < set.rows(); ++r) {
      f << format_timestamp(set.times[r] - 1);
      for (std::size_t c = 0; c < set.x.cols(); ++c) f << ',' << detail::format_double(set.x(r, c));
      f << '\n';
    }
  }
  {
    auto f = open("_targets.csv");
    f << "timestamp";
    for (std::size_t j = 0; j < kTargetCount; ++j) f << ',' << layout.name_of(j);
    f << '\n';
    for (std::size_t r = 0; r < set.rows(); ++r) {
      f << format_timestamp(set.times[r]);
      for (std::size_t c = 0; c < set.y.cols(); ++c) f << ',' << detail::format_double(set.y(r, c));
      f << '\n';
    }
  }
  {
    auto f = open("_segments.csv");
    f << "segment_start_row\n";
    for (auto s : set.segment_starts) f << s << '\n';
  }
}

}  // namespace pgnn
