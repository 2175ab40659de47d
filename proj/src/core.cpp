#include "sentinel/core.hpp"

#include <set>
#include <stdexcept>

namespace sentinel {

void validate(const GaussianSpec& spec) {
  if (spec.sigma < 0.0) throw std::invalid_argument("GaussianSpec: sigma must be >= 0");
}

void validate(const SpatialUnit& unit) {
  if (unit.id.empty()) throw std::invalid_argument("SpatialUnit: empty id");
  if (!(unit.x1 > unit.x0) || !(unit.y1 > unit.y0))
    throw std::invalid_argument("SpatialUnit '" + unit.id + "': degenerate bounds");
}

void validate(const SensingTask& task) {
  if (task.values_per_report < 1)
    throw std::invalid_argument("SensingTask: values_per_report must be >= 1");
  if (task.interval < 1) throw std::invalid_argument("SensingTask: interval must be >= 1");
  if (task.units.empty()) throw std::invalid_argument("SensingTask: at least one spatial unit required");
  std::set<std::string> ids;
  for (const auto& unit : task.units) {
    validate(unit);
    if (!ids.insert(unit.id).second)
      throw std::invalid_argument("SensingTask: duplicate spatial unit id '" + unit.id + "'");
  }
  validate(task.legit_spec);
}

void validate(const Report& report, const SensingTask& task) {
  if (report.values.empty()) throw std::invalid_argument("Report: empty values");
  if (static_cast<int>(report.values.size()) != task.values_per_report)
    throw std::invalid_argument("Report: expected " + std::to_string(task.values_per_report) +
                                " values, got " + std::to_string(report.values.size()));
  if (report.tick < 0) throw std::invalid_argument("Report: tick must be >= 0");
  for (const auto& unit : task.units)
    if (unit.id == report.unit_id) return;
  throw std::invalid_argument("Report: unknown spatial unit '" + report.unit_id + "'");
}

}  // namespace sentinel
