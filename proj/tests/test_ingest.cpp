#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sentinel/ingest.hpp"
#include "sentinel/synth.hpp"

using namespace sentinel;

namespace {

SensingTask small_task(int n_values, GaussianSpec legit) {
  SensingTask task;
  task.phenomenon = "temp";
  task.values_per_report = n_values;
  task.interval = 1;
  task.units = {SpatialUnit{"u0", 0.0, 0.0, 1.0, 1.0}};
  task.legit_spec = legit;
  return task;
}

Report report_with(std::vector<double> values) {
  Report r;
  r.values = std::move(values);
  r.unit_id = "u0";
  r.reporter_id = "r";
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("featurize puts a single value in its half-open bin") {
  FeatureVector fv = featurize(report_with({16.0}), 2, 12.0, 20.0);
  REQUIRE(fv.pmf.size() == 2);
  CHECK(fv.pmf[0] == doctest::Approx(0.0));
  CHECK(fv.pmf[1] == doctest::Approx(1.0));
}

TEST_CASE("featurize splits symmetric values evenly") {
  FeatureVector fv = featurize(report_with({12.0, 13.0, 14.0, 15.0}), 2, 12.0, 16.0);
  CHECK(fv.pmf[0] == doctest::Approx(0.5));
  CHECK(fv.pmf[1] == doctest::Approx(0.5));
}

TEST_CASE("featurize clips out-of-range values to the edge bins") {
  FeatureVector fv = featurize(report_with({-100.0, 100.0}), 4, 0.0, 1.0);
  CHECK(fv.pmf[0] == doctest::Approx(0.5));
  CHECK(fv.pmf[3] == doctest::Approx(0.5));
}

TEST_CASE("pmf always sums to one") {
  Rng rng(3, 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> values(static_cast<std::size_t>(rng.uniform_int(1, 30)));
    for (double& v : values) v = rng.gaussian(16.0, 4.0);
    FeatureVector fv = featurize(report_with(values), 10, 6.0, 26.0);
    CHECK(std::accumulate(fv.pmf.begin(), fv.pmf.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("featurize raw moments match the direct formulas") {
  FeatureVector fv = featurize(report_with({1.0, 2.0, 3.0, 4.0}), 2, 0.0, 5.0);
  CHECK(fv.raw_mean == doctest::Approx(2.5));
  CHECK(fv.raw_std == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("featurize validates its inputs") {
  CHECK_THROWS_AS(featurize(report_with({}), 2, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(featurize(report_with({1.0}), 1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(featurize(report_with({1.0}), 2, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("FeatureSpec::for_task spans mu +- 5 sigma with 10 bins") {
  FeatureSpec spec = FeatureSpec::for_task(small_task(4, {16.0, 2.0}));
  CHECK(spec.bins == 10);
  CHECK(spec.lo == doctest::Approx(6.0));
  CHECK(spec.hi == doctest::Approx(26.0));
  CHECK(spec.sigma_legit == doctest::Approx(2.0));
  CHECK(spec.dim() == 11);
}

TEST_CASE("feature_coords appends the scaled raw mean") {
  FeatureSpec spec = FeatureSpec::for_task(small_task(2, {16.0, 2.0}));
  auto coords = feature_coords(report_with({16.0, 16.0}), spec);
  REQUIRE(coords.size() == 11);
  CHECK(coords.back() == doctest::Approx(16.0 / 20.0));
}

TEST_CASE("load_csv parses a well-formed labeled file") {
  SensingTask task = small_task(2, {16.0, 2.0});
  auto path = temp_file("sentinel_test_load.csv");
  {
    std::ofstream out(path);
    out << "reporter_id,tick,unit_id,x,y,v1,v2,label\n";
    out << "a,0,u0,0.5,0.5,15.1,16.2,1\n";
    out << "b,0,u0,0.1,0.9,21.8,22.4,-1\n";
    out << "c,1,u0,0.4,0.2,16.0,15.5,1\n";
  }
  Dataset ds = load_csv(path, task);
  REQUIRE(ds.size() == 3);
  CHECK(ds.source == Source::kFile);
  CHECK(ds.reports[1].values[1] == doctest::Approx(22.4));
  REQUIRE(ds.labels[1].has_value());
  CHECK(ds.labels[1]->value == kMalicious);
  std::filesystem::remove(path);
}

TEST_CASE("load_csv names the offending row on a bad value") {
  SensingTask task = small_task(2, {16.0, 2.0});
  auto path = temp_file("sentinel_test_badrow.csv");
  {
    std::ofstream out(path);
    out << "reporter_id,tick,unit_id,x,y,v1,v2\n";
    out << "a,0,u0,0.5,0.5,15.1,16.2\n";
    out << "b,0,u0,0.5,0.5,abc,16.2\n";
  }
  CHECK_THROWS_WITH_AS(load_csv(path, task),
                       doctest::Contains("row 3"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects a mismatched header") {
  SensingTask task = small_task(2, {16.0, 2.0});
  auto path = temp_file("sentinel_test_badheader.csv");
  {
    std::ofstream out(path);
    out << "id,tick\n";
  }
  CHECK_THROWS_AS(load_csv(path, task), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("write_csv then load_csv round-trips byte-identically") {
  PopulationConfig pop;
  pop.n_users = 20;
  pop.ticks = 2;
  pop.task = small_task(3, {16.0, 2.0});
  pop.adversary.fraction = 0.4;
  pop.adversary.strategy = Strategy::kStaticCase1;
  pop.adversary.adv_spec = {22.0, 2.0};
  Rng rng(17, 0);
  auto stream = generate_stream(pop, rng);

  Dataset ds;
  ds.task = pop.task;
  for (const auto& entry : stream) {
    ds.reports.push_back(entry.report);
    ds.labels.emplace_back(entry.label);
  }

  auto first = temp_file("sentinel_test_rt1.csv");
  auto second = temp_file("sentinel_test_rt2.csv");
  write_csv(first, ds);
  Dataset loaded = load_csv(first, pop.task);
  write_csv(second, loaded);
  CHECK(file_bytes(first) == file_bytes(second));
  std::filesystem::remove(first);
  std::filesystem::remove(second);
}

TEST_CASE("holdout split has the configured sizes and is a partition") {
  Dataset ds;
  ds.task = small_task(1, {16.0, 2.0});
  for (int i = 0; i < 10; ++i) {
    Report r = Report{{16.0 + i}, 0, "u0", 0.0, 0.0, "r" + std::to_string(i), "", ""};
    ds.reports.push_back(r);
    ds.labels.emplace_back(Label{i < 6 ? kLegitimate : kMalicious, Provenance::kGroundTruth});
  }
  SplitSpec spec;
  spec.mode = SplitSpec::Mode::kHoldout;
  spec.train_fraction = 0.7;
  Rng rng(5, 0);
  auto parts = split(ds, spec, rng);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].first.size() == 7);
  CHECK(parts[0].second.size() == 3);
}

TEST_CASE("stratified k-fold is an exact partition with balanced strata") {
  // 100 labels, 40% negative; every fold's held-out slice gets 4 +- 1 negatives.
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(kLegitimate);
  for (int i = 0; i < 40; ++i) labels.push_back(kMalicious);
  Rng rng(7, 0);
  auto fold = stratified_folds(labels, 10, rng);
  REQUIRE(fold.size() == labels.size());

  std::vector<int> sizes(10, 0), negs(10, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    REQUIRE(fold[i] >= 0);
    REQUIRE(fold[i] < 10);
    ++sizes[static_cast<std::size_t>(fold[i])];
    if (labels[i] == kMalicious) ++negs[static_cast<std::size_t>(fold[i])];
  }
  int total = 0;
  for (int f = 0; f < 10; ++f) {
    total += sizes[static_cast<std::size_t>(f)];
    CHECK(std::abs(negs[static_cast<std::size_t>(f)] - 4) <= 1);
  }
  CHECK(total == 100);
}

TEST_CASE("kfold split covers the dataset with disjoint evaluation folds") {
  Dataset ds;
  ds.task = small_task(1, {16.0, 2.0});
  for (int i = 0; i < 25; ++i) {
    ds.reports.push_back(Report{{16.0}, 0, "u0", 0.0, 0.0, "r" + std::to_string(i), "", ""});
    ds.labels.emplace_back(Label{i % 3 == 0 ? kMalicious : kLegitimate, Provenance::kGroundTruth});
  }
  SplitSpec spec;
  spec.mode = SplitSpec::Mode::kKfold;
  spec.k = 5;
  Rng rng(9, 0);
  auto parts = split(ds, spec, rng);
  REQUIRE(parts.size() == 5);
  std::size_t covered = 0;
  for (const auto& [ts, es] : parts) {
    CHECK(ts.size() + es.size() == 25);
    covered += es.size();
  }
  CHECK(covered == 25);
}

TEST_CASE("stratified_folds validates k") {
  std::vector<int> labels(5, kLegitimate);
  Rng rng(1, 0);
  CHECK_THROWS_AS(stratified_folds(labels, 1, rng), std::invalid_argument);
  CHECK_THROWS_AS(stratified_folds(labels, 6, rng), std::invalid_argument);
}
