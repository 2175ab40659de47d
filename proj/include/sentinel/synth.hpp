#pragma once

#include <optional>
#include <vector>

#include "sentinel/core.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {

enum class Strategy { kNone, kStaticCase1, kStaticCase2, kStaticCase3, kDrifting };

struct AdversaryProfile {
  double fraction = 0.0;  // N_a / N, must stay below 0.5
  Strategy strategy = Strategy::kNone;
  GaussianSpec adv_spec;     // (mu_a, sigma_a) for the static strategies
  double delta = 0.0;        // drift step per tick, > 0 for drifting
  double target = 0.0;       // malicious target value
  double noise_sigma = 0.0;  // std of the per-user noise eta_i(tau)
};

void validate(const AdversaryProfile& profile);

/// Linear drift of the legitimate phenomenon mean between two ticks,
/// holding the endpoint value afterwards.
struct ConceptDrift {
  double target_mu = 0.0;
  long start_tick = 0;
  long end_tick = 0;  // must be > start_tick
};

struct PopulationConfig {
  int n_users = 0;
  long ticks = 0;
  SensingTask task;
  AdversaryProfile adversary;
  std::optional<ConceptDrift> concept_drift;
};

void validate(const PopulationConfig& config);

struct LabeledReport {
  Report report;
  Label label;  // ground-truth provenance
};

/// One malicious measurement at the given tick:
/// min(x_true + tick * delta + eta, target).
double adversarial_sample(double x_true, long tick, double delta, double target, double eta);

/// Static adversarial distribution for the three attack cases.
/// Case 1 shifts the mean, case 2 inflates sigma, case 3 shrinks it.
GaussianSpec case_spec(int case_id, const GaussianSpec& legit, double severity);

/// Effective legitimate spec at a tick, applying the concept drift if any.
GaussianSpec legit_spec_at(const PopulationConfig& config, long tick);

/// Count of users flagged malicious for the whole run.
int malicious_user_count(const PopulationConfig& config);

/// Full report stream with ground-truth labels: per tick, every user emits
/// one report; the first malicious_user_count users follow the adversarial
/// strategy, the rest draw from the (possibly drifting) legitimate spec.
std::vector<LabeledReport> generate_stream(const PopulationConfig& config, Rng& rng);

}  // namespace sentinel
