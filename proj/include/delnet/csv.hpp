#pragma once

// Long-format trace CSV: `kind,seed,time,metric,value`, one metric per row.
// Values are printed with %.17g so a rewrite of the same run is
// byte-identical and a parse loses nothing.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "delnet/trace.hpp"

namespace delnet {

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SeedRun {
  std::uint64_t seed = 0;
  Trace trace;
};

inline constexpr const char* kCsvHeader = "kind,seed,time,metric,value";

// Rows come out grouped by seed, then metric name (alphabetical), then
// sample index, so identical runs serialize identically.
inline void write_trace_csv(std::ostream& os, const std::string& kind,
                            const std::vector<SeedRun>& runs) {
  os << kCsvHeader << '\n';
  for (const SeedRun& run : runs) {
    for (const auto& [metric, values] : run.trace.series) {
      if (values.size() != run.trace.times.size()) {
        throw std::logic_error("csv: series '" + metric +
                               "' does not match the sample grid");
      }
      for (std::size_t k = 0; k < values.size(); ++k) {
        os << kind << ',' << run.seed << ',' << format_value(run.trace.times[k])
           << ',' << metric << ',' << format_value(values[k]) << '\n';
      }
    }
  }
}

inline std::string trace_csv_text(const std::string& kind,
                                  const std::vector<SeedRun>& runs) {
  std::ostringstream os;
  write_trace_csv(os, kind, runs);
  return os.str();
}

struct CsvRow {
  std::string kind;
  std::uint64_t seed = 0;
  double time = 0.0;
  std::string metric;
  double value = 0.0;
};

// Strict reader for the schema above; rejects anything else.
inline std::vector<CsvRow> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw std::invalid_argument("csv: missing 'kind,seed,time,metric,value' header");
  }
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t pos = 0; pos <= line.size(); ++pos) {
      if (pos == line.size() || line[pos] == ',') {
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
      }
    }
    if (fields.size() != 5) {
      throw std::invalid_argument("csv: line " + std::to_string(lineno) +
                                  ": expected 5 fields");
    }
    CsvRow row;
    row.kind = fields[0];
    row.metric = fields[3];
    char* end = nullptr;
    row.seed = std::strtoull(fields[1].c_str(), &end, 10);
    if (end == fields[1].c_str() || *end != '\0') {
      throw std::invalid_argument("csv: line " + std::to_string(lineno) +
                                  ": bad seed");
    }
    row.time = std::strtod(fields[2].c_str(), &end);
    if (end == fields[2].c_str() || *end != '\0') {
      throw std::invalid_argument("csv: line " + std::to_string(lineno) +
                                  ": bad time");
    }
    row.value = std::strtod(fields[4].c_str(), &end);
    if (end == fields[4].c_str() || *end != '\0') {
      throw std::invalid_argument("csv: line " + std::to_string(lineno) +
                                  ": bad value");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace delnet
