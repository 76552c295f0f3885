#include "mdtune/numfmt.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace mdtune {

namespace {

std::string to_chars_str(double v, std::chars_format fmt) {
  char buf[512];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, fmt);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, p);
}

}  // namespace

std::string format_shortest(double v) { return to_chars_str(v, std::chars_format::general); }

std::string format_fixed(double v, int digits) {
  if (!std::isfinite(v)) return to_chars_str(v, std::chars_format::general);
  std::string s = to_chars_str(v, std::chars_format::fixed);
  bool neg = false;
  if (!s.empty() && s[0] == '-') {
    neg = true;
    s.erase(0, 1);
  }
  const auto dot = s.find('.');
  std::string ip = dot == std::string::npos ? s : s.substr(0, dot);
  std::string fp = dot == std::string::npos ? "" : s.substr(dot + 1);
  bool round_up = false;
  if (static_cast<int>(fp.size()) > digits) {
    round_up = fp[static_cast<std::size_t>(digits)] >= '5';
    fp.resize(static_cast<std::size_t>(digits));
  } else {
    fp.append(static_cast<std::size_t>(digits) - fp.size(), '0');
  }
  std::string all = ip + fp;
  if (round_up) {
    int i = static_cast<int>(all.size()) - 1;
    while (i >= 0) {
      if (all[static_cast<std::size_t>(i)] == '9') {
        all[static_cast<std::size_t>(i)] = '0';
        --i;
      } else {
        ++all[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) all.insert(all.begin(), '1');
  }
  const std::size_t int_len = all.size() - fp.size();
  std::string out = all.substr(0, int_len);
  if (digits > 0) out += "." + all.substr(int_len);
  const bool is_zero = out.find_first_not_of("0.") == std::string::npos;
  return (neg && !is_zero ? "-" : "") + out;
}

std::string format_exact(double v, int digits) {
  std::string s = format_fixed(v, digits);
  double back = 0.0;
  if (parse_double(s, back) && back == v) return s;
  return format_shortest(v);
}

double round_display(double v, int digits) {
  double out = 0.0;
  parse_double(format_fixed(v, digits), out);
  return out;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* b = text.data();
  const char* e = b + text.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace mdtune
