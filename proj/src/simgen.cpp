#include "conscope/simgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "conscope/errors.hpp"

namespace conscope {

double correlation_schedule(int instance_id) {
  static constexpr std::array<double, kSimInstances> kSchedule{0.0, 0.5, 1.0, 0.5, 0.5, 1.0, 0.5, 0.0};
  if (instance_id < 1 || instance_id > kSimInstances)
    throw DomainError("instance id must be in 1..8, got " + std::to_string(instance_id));
  return kSchedule[static_cast<std::size_t>(instance_id - 1)];
}

SimInstanceSpec instance_spec(int instance_id, std::size_t n, std::uint64_t seed) {
  SimInstanceSpec spec;
  spec.rho = correlation_schedule(instance_id);
  spec.instance_id = instance_id;
  spec.n = n;
  spec.seed = seed;
  const double shift = instance_id <= 4 ? kTopRowShift : kBottomRowShift;
  spec.label_shift = shift;
  spec.confounder_shift = shift;
  spec.noise_sd = kSimNoiseSd;
  return spec;
}

SimBundle generate_instance(int instance_id, std::size_t n, std::uint64_t seed) {
  SimBundle bundle;
  bundle.spec = instance_spec(instance_id, n, seed);
  if (n < 100) throw DomainError("simulation needs n >= 100, got " + std::to_string(n));
  const auto& spec = bundle.spec;

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution agree(spec.agreement_probability());
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  std::normal_distribution<double> standard(0.0, 1.0);

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd H(rows, 2);
  Eigen::VectorXd y(rows);
  CovariateColumn c_col(n), noise_col(n);
  std::vector<std::string> ids(n);
  const int width = static_cast<int>(std::to_string(n - 1).size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const bool yi = coin(rng);
    const bool ci = agree(rng) ? yi : !yi;
    const double e0 = noise(rng);
    const double e1 = noise(rng);
    H(i, 0) = spec.label_shift * (yi ? 1.0 : -1.0) + e0;
    H(i, 1) = spec.confounder_shift * (ci ? 1.0 : -1.0) + e1;
    y(i) = yi ? 1.0 : 0.0;
    const auto u = static_cast<std::size_t>(i);
    c_col[u] = ci ? 1.0 : 0.0;
    noise_col[u] = standard(rng);
    char id[32];
    std::snprintf(id, sizeof id, "s%0*zu", width, u);
    ids[u] = id;
  }

  bundle.trained_layer = fit_logistic_probe(H, y, kDefaultLogisticRidge);
  if (!bundle.trained_layer.converged)
    throw DomainError("simulated final layer did not converge for instance " + std::to_string(instance_id));

  LoadedRun& run = bundle.run;
  run.meta.run_id = "sim-instance-" + std::to_string(instance_id) + "-n" + std::to_string(n) + "-seed" + std::to_string(seed);
  run.meta.task = Task::BinaryClassification;
  run.meta.n = n;
  run.meta.d = 2;
  run.meta.checkpoints = {std::string(kSimCheckpoint)};
  run.meta.covariates = {{"c", CovariateKind::Categorical, {"0", "1"}}, {"noise", CovariateKind::Continuous, {}}};
  run.sample_ids = std::move(ids);

  CheckpointData ckpt;
  ckpt.representation.checkpoint = std::string(kSimCheckpoint);
  ckpt.representation.values = H;
  ckpt.final_layer.checkpoint = std::string(kSimCheckpoint);
  ckpt.final_layer.weights = bundle.trained_layer.weights;
  ckpt.final_layer.bias = bundle.trained_layer.intercept;
  ckpt.final_layer.link = Link::Sigmoid;
  run.checkpoints.push_back(std::move(ckpt));

  run.labels.y_true = y;
  const Eigen::VectorXd eta = predict_linear(bundle.trained_layer, H);
  run.labels.y_score = eta.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  run.covariates = {std::move(c_col), std::move(noise_col)};
  return bundle;
}

LoadedRun resample_deconfound(const LoadedRun& run, std::string_view covariate, std::uint64_t seed) {
  if (run.meta.task != Task::BinaryClassification)
    throw DomainError("resampling requires a binary-classification run");
  const auto& desc = run.descriptor(covariate);
  if (desc.kind != CovariateKind::Categorical || desc.categories.size() != 2)
    throw DomainError("covariate '" + desc.name + "' must be binary categorical for resampling");
  const auto& column = run.covariate(covariate);

  // cells[2c + y]
  std::array<std::vector<std::size_t>, 4> cells;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (!column[i]) continue;
    const int c = static_cast<int>(*column[i]);
    const int y = run.labels.y_true(static_cast<Eigen::Index>(i)) == 1.0 ? 1 : 0;
    cells[static_cast<std::size_t>(2 * c + y)].push_back(i);
  }
  std::size_t smallest = cells[0].size();
  for (const auto& cell : cells) smallest = std::min(smallest, cell.size());
  if (smallest == 0) {
    std::string counts;
    for (std::size_t k = 0; k < 4; ++k)
      counts += (k ? ", " : "") + desc.name + "=" + desc.categories[k / 2] + "/y=" + std::to_string(k % 2) + ": " +
                std::to_string(cells[k].size());
    throw DomainError("cannot balance: empty cell (" + counts + ")");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (auto cell : cells) {
    std::shuffle(cell.begin(), cell.end(), rng);
    keep.insert(keep.end(), cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(smallest));
  }
  std::sort(keep.begin(), keep.end());

  LoadedRun out = subset_rows(run, keep);
  out.meta.run_id = run.meta.run_id + "-balanced-" + desc.name;
  return out;
}

}  // namespace conscope
