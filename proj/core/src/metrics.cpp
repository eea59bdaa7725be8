#include "irkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "irkit/errors.hpp"

namespace irkit {

namespace {

void require_same_shape(const ScalarGrid& pred, const ScalarGrid& gold) {
  if (!pred.same_shape(gold)) {
    throw DimensionError("prediction is " + std::to_string(pred.width()) + "x" +
                         std::to_string(pred.height()) + " but golden map is " +
                         std::to_string(gold.width()) + "x" + std::to_string(gold.height()));
  }
}

}  // namespace

double millivolts_per_unit(const ScalarGrid& g) { return g.units() == "mV" ? 1.0 : 1000.0; }

double mae(const ScalarGrid& pred, const ScalarGrid& gold) {
  require_same_shape(pred, gold);
  const double sp = millivolts_per_unit(pred);
  const double sg = millivolts_per_unit(gold);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] * sp - gold[i] * sg);
  return total / static_cast<double>(pred.size());
}

double max_error(const ScalarGrid& pred, const ScalarGrid& gold) {
  require_same_shape(pred, gold);
  const double sp = millivolts_per_unit(pred);
  const double sg = millivolts_per_unit(gold);
  double worst = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    worst = std::max(worst, std::abs(pred[i] * sp - gold[i] * sg));
  }
  return worst;
}

double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const auto denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

HotspotScore f1_hotspot(const ScalarGrid& pred, const ScalarGrid& gold) {
  require_same_shape(pred, gold);
  const double sp = millivolts_per_unit(pred);
  const double sg = millivolts_per_unit(gold);
  const double tau_mv = 0.9 * gold.max() * sg;
  HotspotScore s;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] * sp > tau_mv;
    const bool g = gold[i] * sg > tau_mv;
    s.tp += p && g;
    s.fp += p && !g;
    s.fn += !p && g;
  }
  s.f1 = f1_from_counts(s.tp, s.fp, s.fn);
  s.threshold_v = tau_mv / 1000.0;
  return s;
}

EvalReport evaluate(const ScalarGrid& pred, const ScalarGrid& gold, double runtime_s) {
  EvalReport r;
  r.e_avg_mv = mae(pred, gold);
  r.e_max_mv = max_error(pred, gold);
  const auto hs = f1_hotspot(pred, gold);
  r.f1 = hs.f1;
  r.tau_v = hs.threshold_v;
  r.tp = hs.tp;
  r.fp = hs.fp;
  r.fn = hs.fn;
  r.runtime_s = runtime_s;
  return r;
}

std::string to_json_line(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["e_avg_mv"] = r.e_avg_mv;
  j["e_max_mv"] = r.e_max_mv;
  j["f1"] = r.f1;
  j["tau_v"] = r.tau_v;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["runtime_s"] = r.runtime_s;
  return j.dump();
}

EvalReport report_from_json(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  EvalReport r;
  r.e_avg_mv = j.at("e_avg_mv").get<double>();
  r.e_max_mv = j.at("e_max_mv").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.tau_v = j.at("tau_v").get<double>();
  r.tp = j.at("tp").get<std::uint64_t>();
  r.fp = j.at("fp").get<std::uint64_t>();
  r.fn = j.at("fn").get<std::uint64_t>();
  r.runtime_s = j.at("runtime_s").get<double>();
  return r;
}

void write_report_csv(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows) {
  out << "name,e_avg_mv,e_max_mv,f1,tau_v,tp,fp,fn,runtime_s\n";
  const auto old_precision = out.precision(10);
  for (const auto& [name, r] : rows) {
    out << name << ',' << r.e_avg_mv << ',' << r.e_max_mv << ',' << r.f1 << ',' << r.tau_v << ','
        << r.tp << ',' << r.fp << ',' << r.fn << ',' << r.runtime_s << '\n';
  }
  out.precision(old_precision);
}

}  // namespace irkit
