#pragma once

#include <string>
#include <vector>

namespace sentinel {

struct GaussianSpec {
  double mu = 0.0;
  double sigma = 0.0;  // must be >= 0
};

void validate(const GaussianSpec& spec);

/// Axis-aligned planar rectangle for a spatial unit.
struct SpatialUnit {
  std::string id;
  double x0 = 0.0, y0 = 0.0;
  double x1 = 0.0, y1 = 0.0;  // must be strictly greater than x0/y0
};

void validate(const SpatialUnit& unit);

struct SensingTask {
  std::string phenomenon;
  int values_per_report = 1;  // n measurements per report
  int interval = 1;           // ticks per reporting round
  std::vector<SpatialUnit> units;
  GaussianSpec legit_spec;  // distribution of legitimate reports (synthetic mode)
};

void validate(const SensingTask& task);

/// One user submission. Signature and certificate are carried as opaque
/// bytes and never verified.
struct Report {
  std::vector<double> values;
  long tick = 0;
  std::string unit_id;
  double x = 0.0, y = 0.0;
  std::string reporter_id;
  std::string signature;
  std::string cert;
};

void validate(const Report& report, const SensingTask& task);

enum class Provenance { kGroundTruth, kClusterDerived, kClassifierPredicted };

inline constexpr int kLegitimate = +1;
inline constexpr int kMalicious = -1;

struct Label {
  int value = kLegitimate;  // +1 legitimate, -1 malicious
  Provenance provenance = Provenance::kGroundTruth;
};

}  // namespace sentinel
