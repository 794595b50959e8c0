#include "uxfb/timeutil.hpp"

#include <cctype>
#include <cstdio>

namespace uxfb {

namespace {

using namespace std::chrono;

bool read_int(std::string_view s, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<sys_days> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, m) || !read_int(s, 8, 2, d)) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

std::string two(int v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  if (s.size() < 20) return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(s, 11, 2, hh) || s[13] != ':' || !read_int(s, 14, 2, mm) || s[16] != ':' ||
      !read_int(s, 17, 2, ss))
    return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t digits = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == digits) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  int offset_minutes = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh = 0, om = 0;
    if (!read_int(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_int(s, pos + 4, 2, om))
      return std::nullopt;
    offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_rfc3339(Timestamp ts) {
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Period> parse_period(std::string_view text) {
  int y = 0;
  std::string compact;
  if (text.size() == 7 && text[4] == '-' && (text[5] == 'Q' || text[5] == 'q')) {
    compact = std::string(text.substr(0, 4)) + std::string(text.substr(5));
    text = compact;
  }
  if (text.size() == 4 && read_int(text, 0, 4, y)) {
    return Period{Timestamp{sys_days{year{y} / January / 1}}, Timestamp{sys_days{year{y + 1} / January / 1}},
                  std::string(text)};
  }
  if (text.size() == 6 && read_int(text, 0, 4, y) && (text[4] == 'Q' || text[4] == 'q') && text[5] >= '1' &&
      text[5] <= '4') {
    const unsigned q = static_cast<unsigned>(text[5] - '0');
    const auto start = year{y} / month{(q - 1) * 3 + 1} / 1;
    const auto end = q == 4 ? year{y + 1} / January / 1 : year{y} / month{q * 3 + 1} / 1;
    return Period{Timestamp{sys_days{start}}, Timestamp{sys_days{end}}, std::to_string(y) + "Q" + std::to_string(q)};
  }
  const auto sep = text.find("..");
  if (sep != std::string_view::npos) {
    auto a = parse_date(text.substr(0, sep));
    auto b = parse_date(text.substr(sep + 2));
    if (a && b && *a < *b) return Period{Timestamp{*a}, Timestamp{*b}, std::string(text)};
  }
  return std::nullopt;
}

Period previous_period(const Period& p) {
  if (p.name.size() == 4) {
    return *parse_period(std::to_string(std::stoi(p.name) - 1));
  }
  if (p.name.size() == 6 && (p.name[4] == 'Q' || p.name[4] == 'q')) {
    int y = std::stoi(p.name.substr(0, 4));
    int q = p.name[5] - '0' - 1;
    if (q == 0) {
      q = 4;
      --y;
    }
    return *parse_period(std::to_string(y) + "Q" + std::to_string(q));
  }
  const auto length = p.end - p.start;
  const Timestamp start = p.start - length;
  const year_month_day a{floor<days>(start)};
  const year_month_day b{floor<days>(p.start)};
  auto date = [](const year_month_day& d) {
    return std::to_string(static_cast<int>(d.year())) + "-" + two(static_cast<int>(static_cast<unsigned>(d.month()))) +
           "-" + two(static_cast<int>(static_cast<unsigned>(d.day())));
  };
  return Period{start, p.start, date(a) + ".." + date(b)};
}

}  // namespace uxfb
