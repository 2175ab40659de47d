#include "sentinel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sentinel {

FeatureVector featurize(const Report& report, int bins, double lo, double hi) {
  if (report.values.empty()) throw std::invalid_argument("featurize: empty values list");
  if (bins < 2) throw std::invalid_argument("featurize: bins must be >= 2");
  if (!(lo < hi)) throw std::invalid_argument("featurize: lo must be < hi");

  FeatureVector fv;
  fv.pmf.assign(static_cast<std::size_t>(bins), 0.0);
  const double width = (hi - lo) / bins;
  double sum = 0.0, sq = 0.0;
  for (double v : report.values) {
    // Half-open bins [edge_j, edge_{j+1}); out-of-range values clip to the
    // edge bins, which also closes the last bin.
    int j = static_cast<int>(std::floor((v - lo) / width));
    j = std::clamp(j, 0, bins - 1);
    fv.pmf[static_cast<std::size_t>(j)] += 1.0;
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(report.values.size());
  for (double& p : fv.pmf) p /= n;
  fv.raw_mean = sum / n;
  fv.raw_std = std::sqrt(std::max(0.0, sq / n - fv.raw_mean * fv.raw_mean));
  return fv;
}

FeatureSpec FeatureSpec::for_task(const SensingTask& task) {
  FeatureSpec spec;
  spec.bins = 10;
  spec.lo = task.legit_spec.mu - 5.0 * task.legit_spec.sigma;
  spec.hi = task.legit_spec.mu + 5.0 * task.legit_spec.sigma;
  spec.sigma_legit = task.legit_spec.sigma;
  return spec;
}

std::vector<double> feature_coords(const FeatureVector& fv, double sigma_legit) {
  std::vector<double> coords = fv.pmf;
  coords.push_back(fv.raw_mean / (10.0 * sigma_legit));
  return coords;
}

std::vector<double> feature_coords(const Report& report, const FeatureSpec& spec) {
  return feature_coords(featurize(report, spec.bins, spec.lo, spec.hi), spec.sigma_legit);
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& cell, int row, const std::string& column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw std::runtime_error("load_csv: row " + std::to_string(row) + ": non-numeric " + column +
                             " value '" + cell + "'");
  return v;
}

long parse_long(const std::string& cell, int row, const std::string& column) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw std::runtime_error("load_csv: row " + std::to_string(row) + ": non-integer " + column +
                             " value '" + cell + "'");
  return v;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string expected_header(const SensingTask& task, bool with_label) {
  std::string header = "reporter_id,tick,unit_id,x,y";
  for (int i = 1; i <= task.values_per_report; ++i) header += ",v" + std::to_string(i);
  if (with_label) header += ",label";
  return header;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const SensingTask& task) {
  validate(task);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file '" + path.string() + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  bool with_label;
  if (line == expected_header(task, false)) {
    with_label = false;
  } else if (line == expected_header(task, true)) {
    with_label = true;
  } else {
    throw std::runtime_error("load_csv: header mismatch, expected '" + expected_header(task, true) +
                             "' (label column optional)");
  }

  Dataset dataset;
  dataset.task = task;
  dataset.source = Source::kFile;
  const std::size_t n_cells = 5 + static_cast<std::size_t>(task.values_per_report) + (with_label ? 1 : 0);

  int row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_cells(line);
    if (cells.size() != n_cells)
      throw std::runtime_error("load_csv: row " + std::to_string(row) + ": expected " +
                               std::to_string(n_cells) + " columns, got " + std::to_string(cells.size()));
    Report report;
    report.reporter_id = cells[0];
    report.tick = parse_long(cells[1], row, "tick");
    report.unit_id = cells[2];
    report.x = parse_double(cells[3], row, "x");
    report.y = parse_double(cells[4], row, "y");
    for (int i = 0; i < task.values_per_report; ++i)
      report.values.push_back(parse_double(cells[5 + static_cast<std::size_t>(i)], row,
                                           "v" + std::to_string(i + 1)));
    try {
      validate(report, task);
    } catch (const std::invalid_argument& err) {
      throw std::runtime_error("load_csv: row " + std::to_string(row) + ": " + err.what());
    }
    std::optional<Label> label;
    if (with_label) {
      long value = parse_long(cells.back(), row, "label");
      if (value != kLegitimate && value != kMalicious)
        throw std::runtime_error("load_csv: row " + std::to_string(row) + ": label must be 1 or -1");
      label = Label{static_cast<int>(value), Provenance::kGroundTruth};
    }
    dataset.reports.push_back(std::move(report));
    dataset.labels.push_back(label);
  }
  return dataset;
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
  const bool with_label =
      !dataset.labels.empty() &&
      std::all_of(dataset.labels.begin(), dataset.labels.end(), [](const auto& l) { return l.has_value(); });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path.string() + "'");
  out << expected_header(dataset.task, with_label) << '\n';
  for (std::size_t i = 0; i < dataset.reports.size(); ++i) {
    const Report& r = dataset.reports[i];
    out << r.reporter_id << ',' << r.tick << ',' << r.unit_id << ',' << format_double(r.x) << ','
        << format_double(r.y);
    for (double v : r.values) out << ',' << format_double(v);
    if (with_label) out << ',' << dataset.labels[i]->value;
    out << '\n';
  }
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int k, Rng& rng) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
  if (static_cast<std::size_t>(k) > labels.size())
    throw std::invalid_argument("stratified_folds: k exceeds dataset size");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] >= 0 ? pos : neg).push_back(i);
  std::vector<int> fold(labels.size(), 0);
  int next = 0;
  for (auto* group : {&pos, &neg}) {
    rng.shuffle(*group);
    for (std::size_t i = 0; i < group->size(); ++i) {
      fold[(*group)[i]] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

namespace {

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.task = dataset.task;
  out.source = dataset.source;
  out.reports.reserve(idx.size());
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    out.reports.push_back(dataset.reports[i]);
    out.labels.push_back(dataset.labels[i]);
  }
  return out;
}

}  // namespace

std::vector<std::pair<Dataset, Dataset>> split(const Dataset& dataset, const SplitSpec& spec,
                                               Rng& rng) {
  if (dataset.size() == 0) throw std::invalid_argument("split: empty dataset");

  std::vector<int> strata(dataset.size(), 0);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset.labels[i]) strata[i] = dataset.labels[i]->value;

  if (spec.mode == SplitSpec::Mode::kHoldout) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
      throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(dataset.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, dataset.size() - 1);
    std::vector<std::size_t> ts(order.begin(), order.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> es(order.begin() + static_cast<long>(n_train), order.end());
    return {{subset(dataset, ts), subset(dataset, es)}};
  }

  auto fold = stratified_folds(strata, spec.k, rng);
  std::vector<std::pair<Dataset, Dataset>> out;
  for (int f = 0; f < spec.k; ++f) {
    std::vector<std::size_t> ts, es;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      (fold[i] == f ? es : ts).push_back(i);
    out.emplace_back(subset(dataset, ts), subset(dataset, es));
  }
  return out;
}

}  // namespace sentinel
