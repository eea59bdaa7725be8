#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irkit/grid.hpp"

namespace irkit {

// Grids tagged "mV" are taken as millivolts; anything else as volts.
double millivolts_per_unit(const ScalarGrid& g);

// Mean absolute error in millivolts. Throws DimensionError on shape mismatch.
double mae(const ScalarGrid& pred, const ScalarGrid& gold);

// Maximum absolute error in millivolts.
double max_error(const ScalarGrid& pred, const ScalarGrid& gold);

struct HotspotScore {
  double f1 = 1.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double threshold_v = 0.0;
};

// 2TP / (2TP + FP + FN); 1 when both hot sets are empty.
double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

// Pixels strictly above 0.9 * max(gold) are hot, for both grids.
HotspotScore f1_hotspot(const ScalarGrid& pred, const ScalarGrid& gold);

struct EvalReport {
  double e_avg_mv = 0.0;
  double e_max_mv = 0.0;
  double f1 = 1.0;
  double tau_v = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double runtime_s = 0.0;

  bool operator==(const EvalReport&) const = default;
};

EvalReport evaluate(const ScalarGrid& pred, const ScalarGrid& gold, double runtime_s = 0.0);

// Single-line JSON object: e_avg_mv, e_max_mv, f1, tau_v, tp, fp, fn, runtime_s.
std::string to_json_line(const EvalReport& r);
EvalReport report_from_json(std::string_view line);

// Header plus one row per named report.
void write_report_csv(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows);

}  // namespace irkit
