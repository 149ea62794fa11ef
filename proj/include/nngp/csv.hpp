#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nngp/version.hpp"

namespace nngp {

/// Shortest round-trip decimal form of a double, identical across runs.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::strtod(probe, nullptr) == v) return probe;
  }
  return buf;
}

/// CSV writer that prefixes every file with a '#'-commented metadata block
/// (tool version plus caller-supplied key=value pairs) so any output can be
/// traced back to the command that produced it.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::pair<std::string, std::string>>& meta) {
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    out_ << "# nngp " << kVersion << "\n";
    for (const auto& [key, value] : meta) out_ << "# " << key << "=" << value << "\n";
  }

  void header(const std::string& line) { out_ << line << "\n"; }

  CsvWriter& field(const std::string& s) {
    if (!first_) out_ << ",";
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  void end_row() {
    out_ << "\n";
    first_ = true;
  }

  void close() {
    out_.close();
    if (out_.fail()) throw std::runtime_error("CSV write failure");
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

}  // namespace nngp
