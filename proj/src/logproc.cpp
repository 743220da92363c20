// Copyright 2026 The ARCA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "arca/logproc.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "arca/error.hpp"
#include "arca/hash.hpp"
#include "arca/llm.hpp"

namespace arca::logproc {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string truncate_utf8(std::string_view s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return std::string(s);
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return std::string(s.substr(0, cut));
}

int read_digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return -1;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_digit(s[pos + i])) return -1;
    v = v * 10 + (s[pos + i] - '0');
  }
  return v;
}

double civil_seconds(int y, int mo, int d, int h, int mi, int s) {
  using namespace std::chrono;
  const auto days = sys_days(year{y} / month{static_cast<unsigned>(mo)} / day{static_cast<unsigned>(d)});
  return static_cast<double>(days.time_since_epoch().count()) * 86400.0 + h * 3600.0 + mi * 60.0 + s;
}

// Optional "[...]" wrapper around a leading timestamp.
std::size_t skip_open_bracket(std::string_view s) { return !s.empty() && s.front() == '[' ? 1 : 0; }

double read_fraction(std::string_view s, std::size_t& pos) {
  if (pos < s.size() && (s[pos] == '.' || s[pos] == ',') && pos + 1 < s.size() && is_digit(s[pos + 1])) {
    ++pos;
    double scale = 0.1, frac = 0.0;
    while (pos < s.size() && is_digit(s[pos])) {
      frac += (s[pos] - '0') * scale;
      scale /= 10.0;
      ++pos;
    }
    return frac;
  }
  return 0.0;
}

bool at_boundary(std::string_view s, std::size_t pos, bool bracketed) {
  if (bracketed) return pos < s.size() && s[pos] == ']';
  return pos == s.size() || is_space(s[pos]);
}

// ISO-8601: YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|+HH:MM|+HHMM]
std::optional<double> try_iso(std::string_view s, std::size_t& consumed) {
  const std::size_t b = skip_open_bracket(s);
  const int y = read_digits(s, b, 4), mo = read_digits(s, b + 5, 2), d = read_digits(s, b + 8, 2);
  if (y < 0 || mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  if (s[b + 4] != '-' || s[b + 7] != '-' || b + 10 >= s.size() || (s[b + 10] != 'T' && s[b + 10] != ' ')) return std::nullopt;
  const int h = read_digits(s, b + 11, 2), mi = read_digits(s, b + 14, 2), se = read_digits(s, b + 17, 2);
  if (h < 0 || mi < 0 || se < 0 || s[b + 13] != ':' || s[b + 16] != ':') return std::nullopt;
  std::size_t pos = b + 19;
  double t = civil_seconds(y, mo, d, h, mi, se) + read_fraction(s, pos);
  if (pos < s.size() && s[pos] == 'Z') {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '+' ? 1 : -1;
    const int oh = read_digits(s, pos + 1, 2);
    std::size_t mpos = pos + 3;
    if (mpos < s.size() && s[mpos] == ':') ++mpos;
    const int om = read_digits(s, mpos, 2);
    if (oh >= 0 && om >= 0) {
      t -= sign * (oh * 3600.0 + om * 60.0);
      pos = mpos + 2;
    }
  }
  if (!at_boundary(s, pos, b == 1)) return std::nullopt;
  consumed = pos + b;
  return t;
}

// Epoch seconds (10 digits) or milliseconds (13 digits), optional fraction.
std::optional<double> try_epoch(std::string_view s, std::size_t& consumed) {
  const std::size_t b = skip_open_bracket(s);
  std::size_t pos = b;
  while (pos < s.size() && is_digit(s[pos])) ++pos;
  const std::size_t ndig = pos - b;
  if (ndig != 10 && ndig != 13) return std::nullopt;
  double t = 0.0;
  for (std::size_t i = b; i < pos; ++i) t = t * 10.0 + (s[i] - '0');
  t += read_fraction(s, pos);
  if (ndig == 13) t /= 1000.0;
  if (!at_boundary(s, pos, b == 1)) return std::nullopt;
  consumed = pos + b;
  return t;
}

// Syslog: "Mon DD HH:MM:SS" (no year; seconds since the start of 1970).
std::optional<double> try_syslog(std::string_view s, std::size_t& consumed) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  if (s.size() < 15) return std::nullopt;
  int mo = 0;
  for (int i = 0; i < 12; ++i) {
    if (s.substr(0, 3) == kMonths[static_cast<std::size_t>(i)]) mo = i + 1;
  }
  if (mo == 0 || s[3] != ' ') return std::nullopt;
  std::size_t pos = 4;
  if (s[pos] == ' ') ++pos;
  int d = 0;
  while (pos < s.size() && is_digit(s[pos])) d = d * 10 + (s[pos++] - '0');
  if (d < 1 || d > 31 || pos >= s.size() || s[pos] != ' ') return std::nullopt;
  ++pos;
  const int h = read_digits(s, pos, 2), mi = read_digits(s, pos + 3, 2), se = read_digits(s, pos + 6, 2);
  if (h < 0 || mi < 0 || se < 0 || s[pos + 2] != ':' || s[pos + 5] != ':') return std::nullopt;
  pos += 8;
  if (!at_boundary(s, pos, false)) return std::nullopt;
  consumed = pos;
  return civil_seconds(1970, mo, d, h, mi, se);
}

std::optional<Level> parse_level(std::string_view tok) {
  if (!tok.empty() && tok.front() == '[' && tok.back() == ']') tok = tok.substr(1, tok.size() - 2);
  if (!tok.empty() && tok.back() == ':') tok.remove_suffix(1);
  std::string up;
  for (char c : tok) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "TRACE") return Level::kTrace;
  if (up == "DEBUG") return Level::kDebug;
  if (up == "INFO" || up == "NOTICE") return Level::kInfo;
  if (up == "WARN" || up == "WARNING") return Level::kWarn;
  if (up == "ERROR" || up == "ERR") return Level::kError;
  if (up == "FATAL" || up == "CRITICAL" || up == "CRIT" || up == "PANIC") return Level::kFatal;
  return std::nullopt;
}

std::string_view next_token(std::string_view s) {
  std::size_t end = 0;
  while (end < s.size() && !is_space(s[end])) ++end;
  return s.substr(0, end);
}

// "svc:" or "svc[123]:" -> "svc".
std::optional<std::string> parse_source(std::string_view tok) {
  if (tok.size() < 2 || tok.back() != ':') return std::nullopt;
  tok.remove_suffix(1);
  if (auto br = tok.find('['); br != std::string_view::npos && tok.back() == ']') tok = tok.substr(0, br);
  if (tok.empty()) return std::nullopt;
  for (char c : tok) {
    if (!(is_alpha(c) || is_digit(c) || c == '_' || c == '-' || c == '.' || c == '/')) return std::nullopt;
  }
  return std::string(tok);
}

LogRecord parse_line(std::string_view line, std::size_t line_no) {
  LogRecord r;
  r.line_no = line_no;
  std::size_t consumed = 0;
  std::optional<double> ts = try_iso(line, consumed);
  bool syslog = false;
  if (!ts) ts = try_epoch(line, consumed);
  if (!ts) {
    ts = try_syslog(line, consumed);
    syslog = ts.has_value();
  }
  if (!ts) {
    // Without a timestamp, metadata is only trusted when a level leads.
    r.message = std::string(trim(line));
    if (!parse_level(next_token(trim(line)))) return r;
    consumed = 0;
  }
  r.timestamp = ts;
  std::string_view rest = trim(line.substr(consumed));
  if (syslog) {
    // Hostname precedes "tag:" in syslog lines.
    const std::string_view host = next_token(rest);
    const std::string_view after = trim(rest.substr(host.size()));
    if (!host.empty() && host.back() != ':' && parse_source(next_token(after))) rest = after;
  }
  if (auto lvl = parse_level(next_token(rest))) {
    r.level = *lvl;
    rest = trim(rest.substr(next_token(rest).size()));
  }
  if (auto src = parse_source(next_token(rest))) {
    r.source = *src;
    rest = trim(rest.substr(next_token(rest).size()));
  }
  r.message = std::string(rest);
  if (r.message.empty()) r.message = std::string(trim(line));
  return r;
}

// ---- masking ---------------------------------------------------------------

bool is_delim(char c) {
  switch (c) {
    case ',': case ';': case '=': case '(': case ')': case '[': case ']':
    case '{': case '}': case '"': case '\'': case '<': case '>': case '|':
      return true;
    default:
      return is_space(c);
  }
}

bool is_uuid(std::string_view s) {
  if (s.size() != 36) return false;
  for (std::size_t i = 0; i < 36; ++i) {
    const bool dash = i == 8 || i == 13 || i == 18 || i == 23;
    if (dash ? s[i] != '-' : !is_hex(s[i])) return false;
  }
  return true;
}

// Dotted quad, optionally ":port". Returns the masked form or nullopt.
std::optional<std::string> mask_ip(std::string_view s) {
  std::size_t pos = 0;
  for (int octet = 0; octet < 4; ++octet) {
    std::size_t start = pos;
    int v = 0;
    while (pos < s.size() && is_digit(s[pos]) && pos - start < 3) v = v * 10 + (s[pos++] - '0');
    if (pos == start || v > 255) return std::nullopt;
    if (octet < 3) {
      if (pos >= s.size() || s[pos] != '.') return std::nullopt;
      ++pos;
    }
  }
  if (pos == s.size()) return std::string("<IP>");
  if (s[pos] != ':' || pos + 1 == s.size()) return std::nullopt;
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    if (!is_digit(s[i])) return std::nullopt;
  }
  return std::string("<IP>:<NUM>");
}

bool is_path(std::string_view s) {
  if (s.find("://") != std::string_view::npos) return true;
  if (s.size() > 1 && s[0] == '/') return true;
  return s.starts_with("./") || s.starts_with("../") || s.starts_with("~/");
}

// Number with an optional alphabetic or % unit: "12", "-3.5e2", "45%", "12ms".
std::optional<std::string> mask_number(std::string_view s) {
  std::size_t pos = 0;
  if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
  const std::size_t digits_start = pos;
  while (pos < s.size() && is_digit(s[pos])) ++pos;
  if (pos == digits_start) return std::nullopt;
  if (pos + 1 < s.size() && s[pos] == '.' && is_digit(s[pos + 1])) {
    ++pos;
    while (pos < s.size() && is_digit(s[pos])) ++pos;
  }
  if (pos + 1 < s.size() && (s[pos] == 'e' || s[pos] == 'E') &&
      (is_digit(s[pos + 1]) || ((s[pos + 1] == '-' || s[pos + 1] == '+') && pos + 2 < s.size() && is_digit(s[pos + 2])))) {
    pos += 2;
    while (pos < s.size() && is_digit(s[pos])) ++pos;
  }
  const std::string_view unit = s.substr(pos);
  for (char c : unit) {
    if (!is_alpha(c) && c != '%') return std::nullopt;
  }
  return "<NUM>" + std::string(unit);
}

bool is_hex_blob(std::string_view s, std::size_t min_len) {
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    return std::all_of(s.begin() + 2, s.end(), is_hex);
  }
  if (s.size() < min_len) return false;
  bool digit = false, letter = false;
  for (char c : s) {
    if (!is_hex(c)) return false;
    digit |= is_digit(c);
    letter |= !is_digit(c);
  }
  return digit && letter;
}

std::string mask_digit_runs(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (is_digit(s[i])) {
      while (i < s.size() && is_digit(s[i])) ++i;
      out += "<NUM>";
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

bool is_part_sep(char c) {
  return c == '-' || c == '_' || c == '.' || c == ':' || c == '/' || c == '@' || c == '#' || c == '+';
}

std::string mask_parts(std::string_view chunk) {
  std::string out;
  std::size_t i = 0;
  while (i < chunk.size()) {
    if (is_part_sep(chunk[i])) {
      out.push_back(chunk[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < chunk.size() && !is_part_sep(chunk[j])) ++j;
    const std::string_view part = chunk.substr(i, j - i);
    if (auto num = mask_number(part)) {
      out += *num;
    } else if (is_hex_blob(part, 6)) {
      out += "<HEX>";
    } else {
      out += mask_digit_runs(part);
    }
    i = j;
  }
  return out;
}

bool is_prefixed_hex(std::string_view s) {
  return s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X') && std::all_of(s.begin() + 2, s.end(), is_hex);
}

std::string mask_chunk(std::string_view chunk) {
  if (is_uuid(chunk)) return "<UUID>";
  if (auto ip = mask_ip(chunk)) return *ip;
  if (is_path(chunk)) return "<PATH>";
  if (is_prefixed_hex(chunk)) return "<HEX>";
  if (auto num = mask_number(chunk)) return *num;
  if (is_hex_blob(chunk, 8)) return "<HEX>";
  // "12/tmp/x": the tail is masked as it would be on its own
  const std::size_t slash = chunk.find('/');
  if (slash != std::string_view::npos && slash > 0 && is_path(chunk.substr(slash))) {
    return mask_parts(chunk.substr(0, slash)) + "<PATH>";
  }
  return mask_parts(chunk);
}

int severity(Level l) { return l == Level::kUnknown ? -1 : static_cast<int>(l); }

std::string render_record(const LogRecord& r, std::size_t max_chars) {
  std::string s(level_name(r.level));
  s.push_back(' ');
  if (!r.source.empty()) s += r.source + ": ";
  s += r.message;
  return truncate_utf8(s, max_chars);
}

std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string histogram_line(const std::pair<std::string, std::size_t>& h) {
  return std::to_string(h.second) + " x " + h.first;
}

constexpr std::string_view kSummaryHeader = "== error summary ==\n";
constexpr std::string_view kLinesHeader = "== distinguishing lines ==\n";
constexpr std::string_view kMetricsHeader = "== inline metrics ==\n";
constexpr std::string_view kHistogramHeader = "== template histogram ==\n";
constexpr std::string_view kNone = "none";

// Greedily fill a digest in priority order without exceeding the budget.
LogDigest fit_digest(std::string summary, const std::vector<std::string>& lines,
                     const std::vector<std::string>& metric_lines,
                     const std::vector<std::pair<std::string, std::size_t>>& histogram,
                     std::size_t budget) {
  LogDigest d;
  const std::size_t fixed = kSummaryHeader.size() + kLinesHeader.size() + kMetricsHeader.size() +
                            kHistogramHeader.size() + 1;
  if (fixed + kNone.size() > budget) return d;
  const std::size_t summary_room = budget - fixed;
  d.error_summary = truncate_utf8(summary, summary_room);
  std::size_t used = fixed + (d.error_summary.empty() ? kNone.size() : d.error_summary.size());

  auto try_add = [&](const std::string& s) {
    if (used + s.size() + 1 > budget) return false;
    used += s.size() + 1;
    return true;
  };
  for (const auto& l : lines) {
    if (try_add(l)) d.distinguishing_lines.push_back(l);
  }
  for (const auto& m : metric_lines) {
    if (!try_add(m)) continue;
    if (!d.inline_metrics_text.empty()) d.inline_metrics_text.push_back('\n');
    d.inline_metrics_text += m;
  }
  for (const auto& h : histogram) {
    if (try_add(histogram_line(h))) d.template_histogram.push_back(h);
  }
  return d;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    if (!line.empty()) out.emplace_back(line);
    pos = nl + 1;
  }
  return out;
}

struct LocalParts {
  std::string summary;
  std::vector<std::string> notable;  // WARN and above, first-occurrence order
  std::vector<std::uint64_t> notable_ids;
  std::vector<std::string> metric_lines;
  std::vector<std::pair<std::string, std::size_t>> histogram;
};

LocalParts local_parts(std::span<const LogRecord> records, std::span<const LogTemplate> templates,
                       const DigestOptions& options) {
  std::unordered_map<std::size_t, const LogRecord*> by_line;
  by_line.reserve(records.size());
  for (const auto& r : records) by_line.emplace(r.line_no, &r);

  LocalParts p;
  std::vector<const LogTemplate*> notable;
  std::size_t n_warn = 0, n_err = 0, n_fatal = 0;
  for (const auto& t : templates) {
    if (severity(t.max_level) >= severity(Level::kWarn)) notable.push_back(&t);
  }
  for (const auto& r : records) {
    n_warn += r.level == Level::kWarn;
    n_err += r.level == Level::kError;
    n_fatal += r.level == Level::kFatal;
  }
  std::sort(notable.begin(), notable.end(), [](const LogTemplate* a, const LogTemplate* b) {
    // errors before warnings, then chronological
    const bool ea = severity(a->max_level) >= severity(Level::kError);
    const bool eb = severity(b->max_level) >= severity(Level::kError);
    if (ea != eb) return ea;
    return a->example_line_nos.front() < b->example_line_nos.front();
  });
  for (const LogTemplate* t : notable) {
    const LogRecord* r = by_line.at(t->example_line_nos.front());
    p.notable.push_back(render_record(*r, options.max_line_chars) + " [x" + std::to_string(t->count) + "]");
    p.notable_ids.push_back(t->template_id);
  }
  if (n_warn + n_err + n_fatal > 0) {
    p.summary = std::to_string(n_fatal) + " fatal, " + std::to_string(n_err) + " error, " +
                std::to_string(n_warn) + " warning lines in " + std::to_string(notable.size()) +
                " templates";
  }
  p.metric_lines = split_lines(inline_metrics(records));
  for (const auto& t : templates) p.histogram.emplace_back(t.pattern, t.count);
  return p;
}

std::vector<std::string> rare_lines(std::span<const LogRecord> records,
                                    std::span<const LogTemplate> templates,
                                    const std::vector<std::uint64_t>& exclude,
                                    const DigestOptions& options) {
  std::unordered_map<std::size_t, const LogRecord*> by_line;
  for (const auto& r : records) by_line.emplace(r.line_no, &r);
  std::vector<const LogTemplate*> rest;
  for (const auto& t : templates) {
    if (std::find(exclude.begin(), exclude.end(), t.template_id) == exclude.end()) rest.push_back(&t);
  }
  std::stable_sort(rest.begin(), rest.end(), [](const LogTemplate* a, const LogTemplate* b) {
    if (a->count != b->count) return a->count < b->count;
    return a->example_line_nos.front() < b->example_line_nos.front();
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rest.size() && i < options.rare_templates; ++i) {
    const LogTemplate* t = rest[i];
    std::string line = render_record(*by_line.at(t->example_line_nos.front()), options.max_line_chars);
    if (t->count > 1) line += " [x" + std::to_string(t->count) + "]";
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kTrace: return "TRACE";
    case Level::kDebug: return "DEBUG";
    case Level::kInfo: return "INFO";
    case Level::kWarn: return "WARN";
    case Level::kError: return "ERROR";
    case Level::kFatal: return "FATAL";
    case Level::kUnknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string sanitize_utf8(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  const auto* s = reinterpret_cast<const unsigned char*>(raw.data());
  const std::size_t n = raw.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = s[i];
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= n;
    for (std::size_t k = 1; ok && k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) ok = false;
      else cp = (cp << 6) | (s[i + k] & 0x3F);
    }
    if (ok) {
      const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
      ok = !overlong && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.append(raw.substr(i, len));
      i += len;
    } else {
      out += "\xEF\xBF\xBD";
      ++i;
    }
  }
  return out;
}

std::vector<LogRecord> parse_log(std::string_view raw) {
  const std::string text = sanitize_utf8(raw);
  std::vector<LogRecord> records;
  std::size_t pos = 0, line_no = 0;
  const std::string_view all(text);
  while (pos < all.size()) {
    std::size_t nl = all.find('\n', pos);
    if (nl == std::string_view::npos) nl = all.size();
    std::string_view line = all.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    records.push_back(parse_line(line, line_no));
  }
  if (records.empty()) throw Error(Errc::kEmptyLog, "log has no non-blank lines");
  return records;
}

std::string mask_message(std::string_view message) {
  std::string out;
  out.reserve(message.size());
  std::size_t i = 0;
  while (i < message.size()) {
    if (is_delim(message[i])) {
      out.push_back(message[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < message.size() && !is_delim(message[j])) ++j;
    out += mask_chunk(message.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<LogTemplate> templateize(std::span<const LogRecord> records) {
  std::vector<LogTemplate> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    std::string pattern = mask_message(r.message);
    auto [it, fresh] = index.try_emplace(pattern, out.size());
    if (fresh) {
      LogTemplate t;
      t.template_id = fnv1a64(pattern);
      t.pattern = std::move(pattern);
      out.push_back(std::move(t));
    }
    LogTemplate& t = out[it->second];
    ++t.count;
    if (t.example_line_nos.size() < 3) t.example_line_nos.push_back(r.line_no);
    if (severity(r.level) > severity(t.max_level)) t.max_level = r.level;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LogTemplate& a, const LogTemplate& b) { return a.count > b.count; });
  return out;
}

std::string inline_metrics(std::span<const LogRecord> records) {
  struct Series {
    std::size_t n = 0;
    double lo = 0, hi = 0, sum = 0, first = 0, last = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, Series> series;
  for (const auto& r : records) {
    std::vector<std::pair<std::string, double>> pairs;
    const std::string_view m = r.message;
    std::size_t pos = 0;
    while ((pos = m.find('=', pos)) != std::string_view::npos) {
      std::size_t k = pos;
      while (k > 0 && (is_alpha(m[k - 1]) || is_digit(m[k - 1]) || m[k - 1] == '_' || m[k - 1] == '.')) --k;
      std::size_t v = pos + 1, e = v;
      while (e < m.size() && !is_space(m[e]) && m[e] != ',' && m[e] != ';') ++e;
      const std::string_view key = m.substr(k, pos - k), val = m.substr(v, e - v);
      pos = e;
      if (key.empty() || !is_alpha(key.front()) || val.empty()) continue;
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), x);
      if (ec != std::errc() || !std::isfinite(x)) continue;
      const std::string_view unit = val.substr(static_cast<std::size_t>(ptr - val.data()));
      if (!std::all_of(unit.begin(), unit.end(), [](char c) { return is_alpha(c) || c == '%'; })) continue;
      pairs.emplace_back(std::string(key), x);
    }
    if (pairs.size() < 2) continue;  // a single number is prose, not a table row
    for (const auto& [key, x] : pairs) {
      auto [it, fresh] = series.try_emplace(key);
      Series& s = it->second;
      if (fresh) {
        order.push_back(key);
        s.lo = s.hi = s.first = x;
      }
      ++s.n;
      s.lo = std::min(s.lo, x);
      s.hi = std::max(s.hi, x);
      s.sum += x;
      s.last = x;
    }
  }
  std::string out;
  for (const auto& key : order) {
    const Series& s = series.at(key);
    const double range = s.hi - s.lo;
    std::string trend = "flat";
    if (range > 0) {
      const double rel = (s.last - s.first) / range;
      trend = rel > 0.2 ? "rising" : rel < -0.2 ? "falling" : "fluctuating";
    }
    if (!out.empty()) out.push_back('\n');
    out += key + ": n=" + std::to_string(s.n) + " min=" + format_num(s.lo) + " max=" + format_num(s.hi) +
           " mean=" + format_num(s.sum / static_cast<double>(s.n)) + " first=" + format_num(s.first) +
           " last=" + format_num(s.last) + " trend=" + trend;
  }
  return out;
}

LogDigest RuleBasedExtractor::extract(std::span<const LogRecord> records,
                                      std::span<const LogTemplate> templates,
                                      const DigestOptions& options) const {
  LocalParts p = local_parts(records, templates, options);
  std::vector<std::string> lines = p.notable;
  for (auto& l : rare_lines(records, templates, p.notable_ids, options)) lines.push_back(std::move(l));
  return fit_digest(std::move(p.summary), lines, p.metric_lines, p.histogram, options.char_budget);
}

LlmFeatureExtractor::LlmFeatureExtractor(std::shared_ptr<LanguageModel> model, std::string prompt,
                                         std::size_t max_log_chars)
    : model_(std::move(model)), prompt_(std::move(prompt)), max_log_chars_(max_log_chars) {}

std::string LlmFeatureExtractor::tag() const { return "llm:" + (model_ ? model_->tag() : std::string("none")); }

std::string LlmFeatureExtractor::build_prompt(std::span<const LogRecord> records,
                                              std::span<const LogTemplate> templates) const {
  std::unordered_map<std::size_t, const LogRecord*> by_line;
  for (const auto& r : records) by_line.emplace(r.line_no, &r);
  std::vector<const LogTemplate*> chrono;
  for (const auto& t : templates) chrono.push_back(&t);
  std::sort(chrono.begin(), chrono.end(), [](const LogTemplate* a, const LogTemplate* b) {
    return a->example_line_nos.front() < b->example_line_nos.front();
  });
  std::string log;
  for (const LogTemplate* t : chrono) {
    std::string line = render_record(*by_line.at(t->example_line_nos.front()), 400);
    if (t->count > 1) line += " [repeated " + std::to_string(t->count) + " times]";
    if (log.size() + line.size() + 1 > max_log_chars_) break;
    log += line;
    log.push_back('\n');
  }
  return prompt_ + "\n\nLOG:\n" + log;
}

LogDigest LlmFeatureExtractor::extract(std::span<const LogRecord> records,
                                       std::span<const LogTemplate> templates,
                                       const DigestOptions& options) const {
  if (!model_) throw Error(Errc::kExtractorFailure, "no language model configured");
  Completion reply;
  try {
    reply = model_->complete(build_prompt(records, templates));
  } catch (const std::exception& e) {
    throw Error(Errc::kExtractorFailure, e.what());
  }
  LocalParts p = local_parts(records, templates, options);
  std::vector<std::string> lines = p.notable;
  for (auto& l : split_lines(reply.text)) {
    l = truncate_utf8(l, options.max_line_chars);
    if (std::find(lines.begin(), lines.end(), l) == lines.end()) lines.push_back(std::move(l));
  }
  return fit_digest(std::move(p.summary), lines, p.metric_lines, p.histogram, options.char_budget);
}

LogDigest extract_features(std::span<const LogRecord> records, std::span<const LogTemplate> templates,
                           const FeatureExtractor& extractor, const DigestOptions& options) {
  return extractor.extract(records, templates, options);
}

std::string digest_to_text(const LogDigest& d) {
  std::string out;
  out += kSummaryHeader;
  out += d.error_summary.empty() ? std::string(kNone) : d.error_summary;
  out.push_back('\n');
  out += kLinesHeader;
  for (const auto& l : d.distinguishing_lines) {
    out += l;
    out.push_back('\n');
  }
  out += kMetricsHeader;
  if (!d.inline_metrics_text.empty()) {
    out += d.inline_metrics_text;
    out.push_back('\n');
  }
  out += kHistogramHeader;
  for (const auto& h : d.template_histogram) {
    out += histogram_line(h);
    out.push_back('\n');
  }
  return out;
}

ProcessedLog process_log(std::string_view raw, const FeatureExtractor& extractor,
                         const DigestOptions& options) {
  const auto records = parse_log(raw);
  const auto templates = templateize(records);
  ProcessedLog out;
  try {
    out.digest = extractor.extract(records, templates, options);
    out.extractor_tag = extractor.tag();
  } catch (const Error& e) {
    if (e.code() != Errc::kExtractorFailure) throw;
    spdlog::warn("feature extractor {} failed ({}); using rule-based extractor", extractor.tag(), e.what());
    out.digest = RuleBasedExtractor{}.extract(records, templates, options);
    out.extractor_tag = "rule-based";
    out.fell_back = true;
  }
  out.text = digest_to_text(out.digest);
  return out;
}

}  // namespace arca::logproc
