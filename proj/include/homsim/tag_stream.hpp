#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "homsim/errors.hpp"

namespace homsim {

/// One detector event: channel, absolute timestamp on a 1 ps integer grid,
/// and the repetition-period slot the timestamp falls in.
struct TagRecord {
  std::int64_t timestamp_ps;
  std::int64_t pulse_index;
  std::uint8_t channel;

  friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

/// Time-ordered detector events with sync metadata; the synthetic-experiment
/// interchange format (PTAG1 text files).
struct TagStream {
  std::int64_t sync_period_ps = 0;
  std::string source;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::vector<TagRecord> records;

  void validate() const {
    if (sync_period_ps <= 0) throw DataError("sync_period_ps must be positive");
    std::int64_t prev = -1;
    for (const auto& r : records) {
      if (r.channel > 1) throw DataError("channel outside {0,1}");
      if (r.timestamp_ps < 0) throw DataError("negative timestamp");
      if (r.timestamp_ps < prev) throw DataError("timestamps not monotone");
      prev = r.timestamp_ps;
    }
  }

  /// Sort into the canonical record order (timestamp, then channel).
  void canonicalize() {
    std::sort(records.begin(), records.end(),
              [](const TagRecord& a, const TagRecord& b) {
                return a.timestamp_ps != b.timestamp_ps
                           ? a.timestamp_ps < b.timestamp_ps
                           : a.channel < b.channel;
              });
  }
};

namespace detail {

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

inline bool parse_i64(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

} // namespace detail

/// Parses a PTAG1 time-tag file. The format is a bit-exact contract:
///   line 1:      PTAG1
///   header:      key=value lines (sync_period_ps required; source, seed,
///                mode optional), terminated by a line "---"
///   records:     <channel>\t<timestamp_ps>, timestamps non-decreasing
/// LF endings, no trailing whitespace. Violations raise DataError with the
/// offending line number.
inline TagStream parse_tags(std::istream& in) {
  TagStream stream;
  std::string line;
  long line_no = 0;

  auto next_line = [&](bool required) -> bool {
    if (!std::getline(in, line)) {
      if (required) throw DataError("unexpected end of file", line_no);
      return false;
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      throw DataError("CR line ending; PTAG1 requires LF", line_no);
    if (!line.empty() && (line.back() == ' ' || line.back() == '\t'))
      throw DataError("trailing whitespace", line_no);
    return true;
  };

  next_line(true);
  if (line != "PTAG1") {
    if (line.rfind("PTAG", 0) == 0)
      throw DataError("unknown tag-file version '" + line + "'", line_no);
    throw DataError("missing PTAG1 magic", line_no);
  }

  bool have_sync = false;
  for (;;) {
    next_line(true);
    if (line == "---") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("malformed header line (expected key=value)", line_no);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "sync_period_ps") {
      std::int64_t v = 0;
      if (!detail::parse_i64(value, v) || v <= 0)
        throw DataError("sync_period_ps must be a positive integer", line_no);
      stream.sync_period_ps = v;
      have_sync = true;
    } else if (key == "source") {
      stream.source = value;
    } else if (key == "seed") {
      std::uint64_t v = 0;
      if (!detail::parse_u64(value, v))
        throw DataError("seed must be an unsigned integer", line_no);
      stream.seed = v;
    } else if (key == "mode") {
      stream.mode = value;
    } else {
      throw DataError("unknown header key '" + key + "'", line_no);
    }
  }
  if (!have_sync) throw DataError("missing sync_period_ps header", line_no);

  std::int64_t prev_ts = -1;
  while (next_line(false)) {
    if (line.empty()) throw DataError("empty record line", line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("malformed record (expected channel<TAB>timestamp)",
                      line_no);
    const std::string_view ch_s(line.data(), tab);
    const std::string_view ts_s(line.data() + tab + 1, line.size() - tab - 1);
    if (ch_s != "0" && ch_s != "1")
      throw DataError("channel outside {0,1}", line_no);
    std::int64_t ts = 0;
    if (!detail::parse_i64(ts_s, ts) || ts < 0)
      throw DataError("timestamp must be a non-negative integer", line_no);
    if (ts < prev_ts) throw DataError("timestamps not monotone", line_no);
    prev_ts = ts;
    stream.records.push_back(TagRecord{
        ts, ts / stream.sync_period_ps, static_cast<std::uint8_t>(ch_s == "1")});
  }
  return stream;
}

inline TagStream parse_tags_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tag file '" + path + "'");
  return parse_tags(in);
}

/// Writes the canonical PTAG1 form: fixed header key order, records sorted
/// by (timestamp, channel), LF endings.
inline void write_tags(const TagStream& stream, std::ostream& out) {
  if (stream.sync_period_ps <= 0)
    throw DataError("sync_period_ps must be positive");
  TagStream canon = stream;
  canon.canonicalize();
  canon.validate();
  out << "PTAG1\n";
  out << "sync_period_ps=" << canon.sync_period_ps << "\n";
  if (!canon.source.empty()) out << "source=" << canon.source << "\n";
  if (canon.seed) out << "seed=" << *canon.seed << "\n";
  if (!canon.mode.empty()) out << "mode=" << canon.mode << "\n";
  out << "---\n";
  for (const auto& r : canon.records)
    out << int(r.channel) << '\t' << r.timestamp_ps << '\n';
}

inline void write_tags_file(const TagStream& stream, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output tag file '" + path + "'");
  write_tags(stream, out);
  if (!out) throw DataError("failed writing tag file '" + path + "'");
}

} // namespace homsim
