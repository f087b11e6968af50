#include "pmsys/time_util.hpp"

#include <cctype>
#include <fmt/format.h>

#include "pmsys/error.hpp"

namespace pmsys {
namespace {

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
  if (pos + count > text.size()) throw ValidationError("truncated timestamp '" + std::string(text) + "'");
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ValidationError("invalid timestamp '" + std::string(text) + "'");
    }
    value = value * 10 + (c - '0');
  }
  pos += count;
  return value;
}

void expect(std::string_view text, std::size_t& pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    throw ValidationError("invalid timestamp '" + std::string(text) + "'");
  }
  ++pos;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

  std::size_t pos = 0;
  const int y = read_digits(text, pos, 4);
  expect(text, pos, "-");
  const int mo = read_digits(text, pos, 2);
  expect(text, pos, "-");
  const int d = read_digits(text, pos, 2);
  expect(text, pos, "T ");
  const int h = read_digits(text, pos, 2);
  expect(text, pos, ":");
  const int mi = read_digits(text, pos, 2);
  expect(text, pos, ":");
  const int s = read_digits(text, pos, 2);

  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) throw ValidationError("invalid timestamp '" + std::string(text) + "'");
  }

  int offset_minutes = 0;
  if (pos < text.size()) {
    const char zone = text[pos];
    if (zone == 'Z' || zone == 'z') {
      ++pos;
    } else if (zone == '+' || zone == '-') {
      ++pos;
      const int oh = read_digits(text, pos, 2);
      if (pos < text.size() && text[pos] == ':') ++pos;
      const int om = read_digits(text, pos, 2);
      offset_minutes = (zone == '+' ? 1 : -1) * (oh * 60 + om);
    }
  }
  if (pos != text.size()) throw ValidationError("trailing characters in timestamp '" + std::string(text) + "'");

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw ValidationError("out-of-range timestamp '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  return fmt::format("{:04d}-{:02d}-{:02d} {:02d}:{:02d}:{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

}  // namespace pmsys
