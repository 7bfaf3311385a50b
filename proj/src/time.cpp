#include "octwin/time.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace octwin {

namespace {

int digits(std::string_view s, std::size_t& pos, std::size_t n) {
  if (pos + n > s.size()) throw std::invalid_argument("timestamp too short: " + std::string(s));
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw std::invalid_argument("bad timestamp: " + std::string(s));
    v = v * 10 + (c - '0');
  }
  pos += n;
  return v;
}

void expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) throw std::invalid_argument("bad timestamp: " + std::string(s));
  ++pos;
}

}  // namespace

Instant parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = digits(s, pos, 4);
  expect(s, pos, '-');
  int mo = digits(s, pos, 2);
  expect(s, pos, '-');
  int d = digits(s, pos, 2);
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw std::invalid_argument("bad date: " + std::string(s));
  Millis tod{0};
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ')
      throw std::invalid_argument("bad timestamp: " + std::string(s));
    ++pos;
    int hh = digits(s, pos, 2);
    expect(s, pos, ':');
    int mm = digits(s, pos, 2);
    int ss = 0;
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      ss = digits(s, pos, 2);
    }
    if (hh > 23 || mm > 59 || ss > 60) throw std::invalid_argument("bad time: " + std::string(s));
    tod = hours{hh} + minutes{mm} + seconds{ss};
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      int ms = 0, scale = 100, n = 0;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        if (n < 3) ms += (s[pos] - '0') * scale;
        scale /= 10;
        ++n;
        ++pos;
      }
      if (n == 0) throw std::invalid_argument("bad fraction: " + std::string(s));
      tod += Millis{ms};
    }
    if (pos < s.size()) {
      char z = s[pos];
      if (z == 'Z' || z == 'z') {
        ++pos;
      } else if (z == '+' || z == '-') {
        ++pos;
        int oh = digits(s, pos, 2);
        if (pos < s.size() && s[pos] == ':') ++pos;
        int om = digits(s, pos, 2);
        auto off = hours{oh} + minutes{om};
        tod -= (z == '+') ? duration_cast<Millis>(off) : -duration_cast<Millis>(off);
      }
    }
  }
  if (pos != s.size()) throw std::invalid_argument("trailing characters in timestamp: " + std::string(s));
  return Instant{sys_days{ymd}} + tod;
}

std::string format_rfc3339(Instant t) {
  using namespace std::chrono;
  auto day_start = floor<days>(t);
  year_month_day ymd{day_start};
  hh_mm_ss<Millis> hms{t - day_start};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

StepClock default_step_clock() {
  using namespace std::chrono;
  return StepClock{Instant{sys_days{year{2021} / 12 / 20}} + hours{9}, kDay};
}

}  // namespace octwin
