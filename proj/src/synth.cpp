#include "sentinel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sentinel {

void validate(const AdversaryProfile& profile) {
  if (profile.fraction < 0.0 || profile.fraction >= 0.5)
    throw std::invalid_argument("AdversaryProfile: fraction must lie in [0, 0.5)");
  if (profile.strategy == Strategy::kDrifting && !(profile.delta > 0.0))
    throw std::invalid_argument("AdversaryProfile: drifting strategy requires delta > 0");
  if (profile.noise_sigma < 0.0)
    throw std::invalid_argument("AdversaryProfile: noise_sigma must be >= 0");
  if (profile.strategy == Strategy::kStaticCase1 || profile.strategy == Strategy::kStaticCase2 ||
      profile.strategy == Strategy::kStaticCase3)
    validate(profile.adv_spec);
}

void validate(const PopulationConfig& config) {
  if (config.n_users < 2) throw std::invalid_argument("PopulationConfig: n_users must be >= 2");
  if (config.ticks < 1) throw std::invalid_argument("PopulationConfig: ticks must be >= 1");
  validate(config.task);
  validate(config.adversary);
  if (config.adversary.fraction > 0.0 && config.adversary.strategy != Strategy::kNone &&
      malicious_user_count(config) < 1)
    throw std::invalid_argument("PopulationConfig: fraction * n_users < 1, vacuous attack config");
  if (config.concept_drift && config.concept_drift->end_tick <= config.concept_drift->start_tick)
    throw std::invalid_argument("ConceptDrift: end_tick must be > start_tick");
}

double adversarial_sample(double x_true, long tick, double delta, double target, double eta) {
  if (!(delta > 0.0)) throw std::invalid_argument("adversarial_sample: delta must be > 0");
  if (tick < 0) throw std::invalid_argument("adversarial_sample: tick must be >= 0");
  return std::min(x_true + static_cast<double>(tick) * delta + eta, target);
}

GaussianSpec case_spec(int case_id, const GaussianSpec& legit, double severity) {
  validate(legit);
  if (!(severity > 0.0)) throw std::invalid_argument("case_spec: severity must be > 0");
  switch (case_id) {
    case 1:
      return {legit.mu + severity * legit.mu, legit.sigma};
    case 2:
      return {legit.mu, legit.sigma * (1.0 + severity)};
    case 3:
      return {legit.mu, legit.sigma / (1.0 + severity)};
    default:
      throw std::invalid_argument("case_spec: case must be 1, 2 or 3");
  }
}

GaussianSpec legit_spec_at(const PopulationConfig& config, long tick) {
  GaussianSpec spec = config.task.legit_spec;
  if (!config.concept_drift) return spec;
  const ConceptDrift& drift = *config.concept_drift;
  if (tick <= drift.start_tick) return spec;
  if (tick >= drift.end_tick) {
    spec.mu = drift.target_mu;
    return spec;
  }
  double frac = static_cast<double>(tick - drift.start_tick) /
                static_cast<double>(drift.end_tick - drift.start_tick);
  spec.mu += frac * (drift.target_mu - spec.mu);
  return spec;
}

int malicious_user_count(const PopulationConfig& config) {
  return static_cast<int>(std::floor(config.adversary.fraction * config.n_users));
}

std::vector<LabeledReport> generate_stream(const PopulationConfig& config, Rng& rng) {
  validate(config);
  const SensingTask& task = config.task;
  const AdversaryProfile& adv = config.adversary;
  const int n_mal = adv.strategy == Strategy::kNone ? 0 : malicious_user_count(config);
  const int n_values = task.values_per_report;

  std::vector<LabeledReport> out;
  out.reserve(static_cast<std::size_t>(config.n_users) * static_cast<std::size_t>(config.ticks));

  for (long tick = 0; tick < config.ticks; ++tick) {
    const GaussianSpec legit = legit_spec_at(config, tick);
    for (int user = 0; user < config.n_users; ++user) {
      const bool malicious = user < n_mal;
      LabeledReport entry;
      Report& report = entry.report;
      report.tick = tick;
      report.reporter_id = "u" + std::to_string(user);
      const SpatialUnit& unit = task.units[static_cast<std::size_t>(user) % task.units.size()];
      report.unit_id = unit.id;
      report.x = unit.x0 + rng.uniform() * (unit.x1 - unit.x0);
      report.y = unit.y0 + rng.uniform() * (unit.y1 - unit.y0);
      report.values.resize(static_cast<std::size_t>(n_values));

      if (!malicious) {
        for (double& v : report.values) v = rng.gaussian(legit.mu, legit.sigma);
      } else if (adv.strategy == Strategy::kDrifting) {
        // Shared delta/target schedule, one noise draw per user and tick.
        double eta = rng.gaussian(0.0, adv.noise_sigma);
        for (double& v : report.values) {
          double x_true = rng.gaussian(legit.mu, legit.sigma);
          v = adversarial_sample(x_true, tick, adv.delta, adv.target, eta);
        }
      } else {
        // Colluding static strategies draw i.i.d. from the shared adv_spec.
        for (double& v : report.values) v = rng.gaussian(adv.adv_spec.mu, adv.adv_spec.sigma);
      }

      entry.label = {malicious ? kMalicious : kLegitimate, Provenance::kGroundTruth};
      out.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace sentinel
