#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace nafd {

/// Comma-separated rows, LF endings, floats at 12 significant digits.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  template <typename... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((put(fields, first)), ...);
    os_ << '\n';
  }

  static std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
  }

 private:
  template <typename T>
  void put(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      os_ << format(static_cast<double>(v));
    } else {
      os_ << v;
    }
  }

  std::ostream& os_;
};

}  // namespace nafd
