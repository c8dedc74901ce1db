#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "fkpz/errors.hpp"

namespace fkpz {

// CSV output: UTF-8, header row, comma separator, floats with 17 significant
// digits so re-runs are byte-identical.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : os_(path), ncols_(columns.size()) {
    if (!os_) throw Error("IoError", "cannot open " + path);
    for (size_t i = 0; i < columns.size(); ++i)
      os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
  }

  void row(const std::vector<double>& values) {
    if (values.size() != ncols_) throw Error("IoError", "csv row width mismatch");
    char buf[64];
    for (size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      os_ << (i ? "," : "") << buf;
    }
    os_ << "\n";
  }

private:
  std::ofstream os_;
  size_t ncols_;
};

}  // namespace fkpz
