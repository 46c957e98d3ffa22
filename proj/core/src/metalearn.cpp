#include "metaadapt/metalearn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "metaadapt/errors.hpp"
#include "metaadapt/rng.hpp"

namespace metaadapt::meta {

using kernels::CotangentTerm;
using kernels::FeatureBatch;
using kernels::KernelModel;
using kernels::Parameters;

void MetaConfig::validate() const {
  require(learning_rate >= 0.0, ErrorKind::BadParams, "learning rate must be nonnegative");
  require(max_epochs >= 1, ErrorKind::BadParams, "max epochs must be >= 1");
  require(patience >= 1, ErrorKind::BadParams, "patience must be >= 1");
  require(adapt_fraction > 0.0 && adapt_fraction < 1.0, ErrorKind::BadParams, "adapt fraction must be in (0, 1)");
  require(validation_fraction > 0.0 && validation_fraction < 1.0, ErrorKind::BadParams,
          "validation fraction must be in (0, 1)");
  require(ridge >= 0.0 && fallback_ridge >= 0.0, ErrorKind::BadParams, "ridge must be nonnegative");
  require(line_search_halvings >= 0 && line_search_growth >= 1.0, ErrorKind::BadParams, "line-search settings");
}

GradientPolicy parse_gradient_policy(const std::string& s) {
  if (s == "stop" || s == "stop-gradient") return GradientPolicy::StopGradient;
  if (s == "full") return GradientPolicy::Full;
  fail(ErrorKind::BadParams, "unknown gradient policy '" + s + "' (expected stop|full)");
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "momentum") return OptimizerKind::Momentum;
  if (s == "adam") return OptimizerKind::Adam;
  fail(ErrorKind::BadParams, "unknown optimizer '" + s + "' (expected sgd|momentum|adam)");
}

std::size_t adaptation_size(const KernelModel& model, std::size_t dataset_size, const MetaConfig& cfg) {
  const auto minimum = static_cast<std::size_t>(2 * model.coefficient_count());
  const auto share = static_cast<std::size_t>(std::llround(cfg.adapt_fraction * static_cast<double>(dataset_size)));
  return std::max(minimum, share);
}

MetaSplit draw_split(std::size_t dataset_size, std::size_t adapt_size, bool full_batch, std::uint64_t seed) {
  MetaSplit split;
  if (full_batch) {
    split.adapt.resize(dataset_size);
    std::iota(split.adapt.begin(), split.adapt.end(), std::size_t{0});
    split.train = split.adapt;
    return split;
  }
  require(adapt_size >= 1 && adapt_size < dataset_size, ErrorKind::BadParams,
          "split needs 1 <= K < L (K = " + std::to_string(adapt_size) + ", L = " + std::to_string(dataset_size) + ")");
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < adapt_size; ++i) std::swap(idx[i], idx[i + rng.below(dataset_size - i)]);
  split.adapt.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(adapt_size));
  split.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(adapt_size), idx.end());
  std::sort(split.adapt.begin(), split.adapt.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

std::vector<Sample> gather(const ConditionDataset& d, const std::vector<std::size_t>& idx) {
  std::vector<Sample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(d.samples.at(i));
  return out;
}

Vector a_ls(const KernelModel& model, std::span<const Sample> subset, const MetaConfig& cfg) {
  require(!subset.empty(), ErrorKind::BadParams, "a_ls needs samples");
  const FeatureBatch phi = kernels::features(model, stacked_inputs(subset));
  return kernels::fit_coefficients(phi, stacked_forces(subset), cfg.ridge, cfg.fallback_ridge).a;
}

double cost_j(const KernelModel& model, const Vector& a, std::span<const Sample> subset, double dt) {
  if (subset.empty()) return 0.0;
  const FeatureBatch phi = kernels::features(model, stacked_inputs(subset));
  return dt * (stacked_forces(subset) - phi.predict(a)).squaredNorm();
}

double pipeline_cost(const KernelModel& model, std::span<const Sample> adapt, std::span<const Sample> train, double dt,
                     const MetaConfig& cfg) {
  return cost_j(model, a_ls(model, adapt, cfg), train, dt);
}

namespace {

void add_scaled(Parameters& acc, const Parameters& g, double s) {
  for (std::size_t i = 0; i < acc.size(); ++i)
    for (std::size_t l = 0; l < acc[i].layers.size(); ++l) {
      acc[i].layers[l].weight += s * g[i].layers[l].weight;
      acc[i].layers[l].bias += s * g[i].layers[l].bias;
    }
}

}  // namespace

MetaGradient meta_gradient(const KernelModel& model, std::span<const Sample> adapt, std::span<const Sample> train,
                           double dt, const MetaConfig& cfg) {
  require(!adapt.empty() && !train.empty(), ErrorKind::BadParams, "meta gradient needs both splits");
  const Matrix adapt_inputs = stacked_inputs(adapt);
  const Matrix adapt_forces = stacked_forces(adapt);
  const kernels::ForwardPass adapt_pass = kernels::forward(model, adapt_inputs);
  const kernels::CoefficientFit fit =
      kernels::fit_coefficients(adapt_pass.features, adapt_forces, cfg.ridge, cfg.fallback_ridge);

  const kernels::ForwardPass train_pass = kernels::forward(model, stacked_inputs(train));
  const Matrix resid = stacked_forces(train) - train_pass.features.predict(fit.a);

  MetaGradient out;
  out.a = fit.a;
  out.ridge = fit.ridge;
  out.cost = dt * resid.squaredNorm();

  std::vector<CotangentTerm> train_terms{{-2.0 * dt * resid, fit.a}};
  out.gradient = kernels::backprop(model, train_pass, train_terms);

  if (cfg.gradient_policy == GradientPolicy::Full && model.formulation() != kernels::Formulation::Constant) {
    // a = G⁻¹ Φ_aᵀ F_a with G = Φ_aᵀΦ_a + ρI. For dJ = g_aᵀ da and z = G⁻¹ g_a:
    //   ∂J/∂φ_k (k ∈ D^a) = r_k zᵀ − (φ_k z) aᵀ,  r_k = f_k − φ_k a.
    const Matrix phi_train = train_pass.features.regressor();
    const Vector g_a = -2.0 * dt * phi_train.transpose() * Eigen::Map<const Vector>(resid.data(), resid.size());
    const Matrix phi_adapt = adapt_pass.features.regressor();
    Matrix gram = phi_adapt.transpose() * phi_adapt;
    gram.diagonal().array() += fit.ridge;
    const Vector z = gram.ldlt().solve(g_a);
    const Matrix adapt_resid = adapt_forces - adapt_pass.features.predict(fit.a);
    std::vector<CotangentTerm> adapt_terms{{adapt_resid, z}, {-adapt_pass.features.predict(z), fit.a}};
    add_scaled(out.gradient, kernels::backprop(model, adapt_pass, adapt_terms), 1.0);
  }
  return out;
}

Vector OptimizerState::direction(const Vector& grad, const MetaConfig& cfg) {
  ++steps_;
  switch (kind_) {
    case OptimizerKind::Sgd: return grad;
    case OptimizerKind::Momentum:
      if (first_.size() != grad.size()) first_ = Vector::Zero(grad.size());
      first_ = cfg.momentum * first_ + grad;
      return first_;
    case OptimizerKind::Adam: {
      if (first_.size() != grad.size()) {
        first_ = Vector::Zero(grad.size());
        second_ = Vector::Zero(grad.size());
      }
      first_ = cfg.adam_beta1 * first_ + (1.0 - cfg.adam_beta1) * grad;
      second_ = (cfg.adam_beta2 * second_.array() + (1.0 - cfg.adam_beta2) * grad.array().square()).matrix();
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(steps_));
      return ((first_.array() / c1) / ((second_.array() / c2).sqrt() + cfg.adam_epsilon)).matrix();
    }
  }
  return grad;
}

MetaStepResult meta_step(const KernelModel& model, const ConditionDataset& dataset, const MetaConfig& cfg,
                         std::uint64_t seed, OptimizerState* optimizer) {
  cfg.validate();
  dataset.validate();
  const std::size_t K = adaptation_size(model, dataset.size(), cfg);
  MetaStepResult result{model, 0.0, 0.0, 0.0, draw_split(dataset.size(), K, cfg.full_batch, seed)};
  const std::vector<Sample> adapt = gather(dataset, result.split.adapt);
  const std::vector<Sample> train = gather(dataset, result.split.train);

  if (model.formulation() == kernels::Formulation::Constant) {
    result.pre_cost = result.cost = pipeline_cost(model, adapt, train, dataset.dt, cfg);
    return result;
  }

  const MetaGradient g = meta_gradient(model, adapt, train, dataset.dt, cfg);
  result.pre_cost = g.cost;

  OptimizerState local(cfg);
  OptimizerState& opt = optimizer ? *optimizer : local;
  const Vector theta = kernels::flatten(model.networks());
  const Vector dir = opt.direction(kernels::flatten(g.gradient), cfg);

  auto trial = [&](double beta) {
    return kernels::normalize(model.with_parameters(kernels::unflatten(model.networks(), theta - beta * dir)));
  };

  if (!cfg.line_search) {
    const double beta = cfg.learning_rate;
    result.model = beta == 0.0 ? kernels::normalize(model) : trial(beta);
    result.step = beta;
    result.cost = pipeline_cost(result.model, adapt, train, dataset.dt, cfg);
    return result;
  }

  double beta = cfg.learning_rate * opt.step_scale();
  for (int h = 0; h <= cfg.line_search_halvings; ++h) {
    KernelModel candidate = trial(beta);
    const double c = pipeline_cost(candidate, adapt, train, dataset.dt, cfg);
    if (c <= g.cost) {
      result.model = std::move(candidate);
      result.cost = c;
      result.step = beta;
      opt.set_step_scale(opt.step_scale() * (h == 0 ? cfg.line_search_growth : 1.0));
      return result;
    }
    beta *= 0.5;
    opt.set_step_scale(opt.step_scale() * 0.5);
  }
  result.cost = g.cost;  // every trial increased the cost: keep Θ
  return result;
}

namespace {

std::size_t validation_split(const ConditionDataset& d, const KernelModel& model, double fraction) {
  const auto K = std::max(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(d.size()))),
                          static_cast<std::size_t>(model.coefficient_count()));
  require(K < d.size(), ErrorKind::BadParams, "validation dataset '" + d.label + "' too short");
  return K;
}

}  // namespace

double validation_cost(const KernelModel& model, const ConditionDataset& d, double fraction, const MetaConfig& cfg) {
  const std::size_t K = validation_split(d, model, fraction);
  std::span<const Sample> all(d.samples);
  const Vector a = a_ls(model, all.first(K), cfg);
  const auto rest = all.subspan(K);
  return cost_j(model, a, rest, d.dt) / static_cast<double>(rest.size());
}

double validation_rmse(const KernelModel& model, const ConditionDataset& d, double fraction, const MetaConfig& cfg) {
  const std::size_t K = validation_split(d, model, fraction);
  std::span<const Sample> all(d.samples);
  const Vector a = a_ls(model, all.first(K), cfg);
  const auto rest = all.subspan(K);
  return std::sqrt(cost_j(model, a, rest, 1.0) / static_cast<double>(rest.size()));
}

KernelModel initial_model(kernels::Formulation f, const std::vector<ConditionDataset>& datasets,
                          const kernels::Architecture& arch, std::uint64_t seed) {
  require(!datasets.empty(), ErrorKind::BadParams, "initial model needs training data");
  const Eigen::Index n = datasets.front().samples.at(0).q.size();
  KernelModel model = KernelModel::random(f, n, arch, seed);
  std::vector<Sample> all;
  for (const auto& d : datasets) all.insert(all.end(), d.samples.begin(), d.samples.end());
  return model.with_standardization(kernels::Standardization::fit(stacked_inputs(all)));
}

MetaTrainResult meta_train(const std::vector<ConditionDataset>& datasets, const std::vector<ConditionDataset>& validation,
                           const KernelModel& initial, const MetaConfig& cfg) {
  cfg.validate();
  require(!datasets.empty(), ErrorKind::BadParams, "meta_train needs at least one dataset");
  for (const auto& d : datasets) {
    d.validate();
    require(d.size() >= static_cast<std::size_t>(2 * initial.coefficient_count()), ErrorKind::BadParams,
            "dataset '" + d.label + "' has fewer than 2·dim(a) samples");
  }
  const auto& val_sets = validation.empty() ? datasets : validation;
  auto val_cost = [&](const KernelModel& m) {
    double total = 0.0;
    for (const auto& d : val_sets) total += validation_cost(m, d, cfg.validation_fraction, cfg);
    return total / static_cast<double>(val_sets.size());
  };

  MetaTrainResult result{kernels::normalize(initial), {}, 0, false};
  KernelModel model = result.model;
  double best_val = val_cost(model);
  {
    double c0 = 0.0;
    for (const auto& d : datasets) {
      const std::size_t K = adaptation_size(model, d.size(), cfg);
      const MetaSplit split = draw_split(d.size(), K, cfg.full_batch, mix_seed(cfg.seed, 0xC0FFEE));
      c0 += pipeline_cost(model, gather(d, split.adapt), gather(d, split.train), d.dt, cfg);
    }
    result.curve.push_back({0, c0 / static_cast<double>(datasets.size()), best_val});
  }

  OptimizerState opt(cfg);
  Rng order_rng(mix_seed(cfg.seed, 0x0DE5));
  std::vector<std::size_t> order(datasets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> best_train{result.curve.front().train_cost};

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    double train_cost = 0.0;
    for (std::size_t visit = 0; visit < order.size(); ++visit) {
      const auto step_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) * order.size() + visit);
      MetaStepResult step = meta_step(model, datasets[order[visit]], cfg, step_seed, &opt);
      model = std::move(step.model);
      train_cost += step.cost;
    }
    train_cost /= static_cast<double>(order.size());
    const double v = val_cost(model);
    if (train_cost > result.curve.back().train_cost) ++result.cost_increases;
    result.curve.push_back({epoch, train_cost, v});
    if (v < best_val) {
      best_val = v;
      result.model = model;
      result.best_epoch = epoch;
    }
    best_train.push_back(std::min(best_train.back(), train_cost));
    if (epoch >= cfg.patience) {
      const double before = best_train[static_cast<std::size_t>(epoch - cfg.patience)];
      const double now = best_train.back();
      if (before > 0.0 && (before - now) / before < cfg.tolerance) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

void save_training_curve(const std::vector<EpochRecord>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "epoch,train_cost,val_cost\n";
  char buf[96];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.epoch, r.train_cost, r.val_cost);
    out << buf;
  }
}

std::vector<ConditionDataset> teacher_datasets(const KernelModel& teacher, std::span<const Vector> coefficients,
                                               std::size_t samples, double dt, const Vector& lo, const Vector& hi,
                                               std::uint64_t seed) {
  const Eigen::Index n = teacher.output_dim();
  require_shape(lo, 2 * n, 1, "teacher box lo");
  require_shape(hi, 2 * n, 1, "teacher box hi");
  std::vector<ConditionDataset> out;
  Rng rng(seed);
  for (std::size_t c = 0; c < coefficients.size(); ++c) {
    ConditionDataset d{"teacher_" + std::to_string(c), 0.0, dt, {}};
    Matrix x(2 * n, static_cast<Eigen::Index>(samples));
    for (Eigen::Index k = 0; k < x.cols(); ++k)
      for (Eigen::Index i = 0; i < 2 * n; ++i) x(i, k) = rng.uniform(lo(i), hi(i));
    const Matrix f = kernels::features(teacher, x).predict(coefficients[c]);
    for (Eigen::Index k = 0; k < x.cols(); ++k)
      d.samples.push_back({static_cast<double>(k) * dt, x.col(k).head(n), x.col(k).tail(n), f.col(k)});
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace metaadapt::meta
