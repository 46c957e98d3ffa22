#include "metaadapt/kernel_model.hpp"

#include <algorithm>
#include <cmath>

#include "metaadapt/errors.hpp"
#include "metaadapt/rng.hpp"

namespace metaadapt::kernels {

namespace {

constexpr std::uint64_t kNormSeed = 0x5A17E5C0FFEEULL;

std::uint64_t layer_seed(std::size_t net, std::size_t layer) {
  return mix_seed(kNormSeed, net * 1024 + layer);
}

Matrix standardized_tanh_forward(const Network& net, const Matrix& x, std::vector<Matrix>* cache) {
  Matrix a = x;
  if (cache) cache->push_back(a);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    if (l + 1 < net.layers.size()) z = z.array().tanh().matrix();
    a = std::move(z);
    if (cache) cache->push_back(a);
  }
  return a;
}

Network backward_network(const Network& net, const std::vector<Matrix>& acts, Matrix grad) {
  Network g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const Matrix& input = acts[l];
    g.layers[l].weight = grad * input.transpose();
    g.layers[l].bias = grad.rowwise().sum();
    if (l > 0) {
      Matrix up = net.layers[l].weight.transpose() * grad;
      // acts[l] is tanh output of layer l-1: d tanh = 1 − tanh².
      grad = (up.array() * (1.0 - input.array().square())).matrix();
    }
  }
  return g;
}

Network random_network(const std::vector<Eigen::Index>& widths, Rng& rng) {
  Network net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Eigen::Index in = widths[l];
    const Eigen::Index out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Matrix(out, in), Vector(out)};
    for (Eigen::Index j = 0; j < in; ++j)
      for (Eigen::Index i = 0; i < out; ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < out; ++i) layer.bias(i) = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::Constant: return "constant";
    case Formulation::Vector: return "vector";
    case Formulation::Scalar: return "scalar";
  }
  return "constant";
}

Formulation parse_formulation(const std::string& s) {
  if (s == "constant") return Formulation::Constant;
  if (s == "vector") return Formulation::Vector;
  if (s == "scalar") return Formulation::Scalar;
  fail(ErrorKind::BadParams, "unknown kernel formulation '" + s + "' (expected constant|vector|scalar)");
}

Standardization Standardization::identity(Eigen::Index dim) {
  return {Vector::Zero(dim), Vector::Ones(dim)};
}

Standardization Standardization::fit(const Matrix& inputs) {
  require(inputs.cols() > 0, ErrorKind::BadParams, "standardization needs at least one sample");
  Standardization s;
  s.mean = inputs.rowwise().mean();
  const Matrix centered = inputs.colwise() - s.mean;
  s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(inputs.cols())).sqrt().matrix();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale(i) > 1e-6)) s.scale(i) = 1.0;
  return s;
}

Matrix Standardization::apply(const Matrix& inputs) const {
  require(inputs.rows() == mean.size(), ErrorKind::ShapeMismatch, "standardization input dimension");
  return ((inputs.colwise() - mean).array().colwise() / scale.array()).matrix();
}

KernelModel KernelModel::constant(Eigen::Index n) {
  KernelModel k;
  k.formulation_ = Formulation::Constant;
  k.n_ = n;
  k.m_ = n;
  k.standardization_ = Standardization::identity(2 * n);
  return k;
}

KernelModel KernelModel::random(Formulation f, Eigen::Index n, const Architecture& arch, std::uint64_t seed) {
  if (f == Formulation::Constant) return constant(n);
  require(arch.kernel_count >= 1, ErrorKind::BadParams, "kernel count must be >= 1");
  require(arch.sigma_bar > 0.0, ErrorKind::BadParams, "spectral bound must be positive");
  Rng rng(seed);
  std::vector<Eigen::Index> widths{2 * n};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  Parameters nets;
  if (f == Formulation::Vector) {
    widths.push_back(n);
    for (Eigen::Index i = 0; i < arch.kernel_count; ++i) nets.push_back(random_network(widths, rng));
  } else {
    widths.push_back(arch.kernel_count);
    nets.push_back(random_network(widths, rng));
  }
  KernelModel k = from_parts(f, n, arch.kernel_count, std::move(nets), Standardization::identity(2 * n),
                             arch.sigma_bar, arch.power_iters);
  return normalize(k);
}

KernelModel KernelModel::from_parts(Formulation f, Eigen::Index n, Eigen::Index m, Parameters networks,
                                    Standardization standardization, double sigma_bar, int power_iters) {
  KernelModel k;
  k.formulation_ = f;
  k.n_ = n;
  k.m_ = f == Formulation::Constant ? n : m;
  k.networks_ = std::move(networks);
  k.standardization_ = std::move(standardization);
  k.sigma_bar_ = sigma_bar;
  k.power_iters_ = power_iters;
  k.validate();
  return k;
}

Eigen::Index KernelModel::coefficient_count() const noexcept {
  switch (formulation_) {
    case Formulation::Constant: return n_;
    case Formulation::Vector: return m_;
    case Formulation::Scalar: return m_ * n_;
  }
  return n_;
}

void KernelModel::validate() const {
  require(n_ >= 1, ErrorKind::BadParams, "kernel output dimension must be >= 1");
  require(sigma_bar_ > 0.0, ErrorKind::BadParams, "spectral bound must be positive");
  require(power_iters_ >= 1, ErrorKind::BadParams, "power iterations must be >= 1");
  require_shape(standardization_.mean, 2 * n_, 1, "standardization mean");
  require_shape(standardization_.scale, 2 * n_, 1, "standardization scale");
  require((standardization_.scale.array() > 0.0).all(), ErrorKind::BadParams, "standardization scale must be positive");
  const std::size_t expected = formulation_ == Formulation::Constant ? 0
                               : formulation_ == Formulation::Vector ? static_cast<std::size_t>(m_)
                                                                     : 1;
  require(networks_.size() == expected, ErrorKind::ShapeMismatch,
          "formulation " + to_string(formulation_) + " expects " + std::to_string(expected) + " networks");
  const Eigen::Index out = formulation_ == Formulation::Vector ? n_ : m_;
  for (const Network& net : networks_) {
    require(!net.layers.empty(), ErrorKind::ShapeMismatch, "network without layers");
    require(net.input_dim() == 2 * n_, ErrorKind::ShapeMismatch, "network input must be 2n");
    require(net.output_dim() == out, ErrorKind::ShapeMismatch, "network output dimension");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const DenseLayer& layer = net.layers[l];
      require(layer.bias.size() == layer.weight.rows(), ErrorKind::ShapeMismatch, "bias length");
      if (l > 0) {
        require(layer.weight.cols() == net.layers[l - 1].weight.rows(), ErrorKind::ShapeMismatch, "layer chaining");
      }
      require(layer.weight.allFinite() && layer.bias.allFinite(), ErrorKind::NonFinite, "network weights");
    }
  }
}

KernelModel KernelModel::with_parameters(Parameters p) const {
  KernelModel k = *this;
  k.networks_ = std::move(p);
  k.validate();
  return k;
}

KernelModel KernelModel::with_standardization(Standardization s) const {
  KernelModel k = *this;
  k.standardization_ = std::move(s);
  k.validate();
  return k;
}

Matrix KernelModel::eval(const dynamics::State& x) const {
  require_shape(x.q, n_, 1, "kernel state q");
  require_shape(x.qdot, n_, 1, "kernel state qdot");
  return features(*this, x.stacked()).at(0);
}

FeatureBatch::FeatureBatch(Formulation f, Eigen::Index n, Eigen::Index m, Eigen::Index count,
                           std::vector<Matrix> vector_outputs, Matrix scalar_features)
    : formulation_(f),
      n_(n),
      m_(m),
      count_(count),
      vector_outputs_(std::move(vector_outputs)),
      scalar_features_(std::move(scalar_features)) {}

Eigen::Index FeatureBatch::coefficient_count() const noexcept {
  switch (formulation_) {
    case Formulation::Constant: return n_;
    case Formulation::Vector: return m_;
    case Formulation::Scalar: return m_ * n_;
  }
  return n_;
}

Matrix FeatureBatch::regressor() const {
  const Eigen::Index p = coefficient_count();
  Matrix phi = Matrix::Zero(count_ * n_, p);
  for (Eigen::Index k = 0; k < count_; ++k) phi.middleRows(k * n_, n_) = at(k);
  return phi;
}

Matrix FeatureBatch::predict(const Vector& a) const {
  require_shape(a, coefficient_count(), 1, "coefficient vector");
  switch (formulation_) {
    case Formulation::Constant: return a.replicate(1, count_);
    case Formulation::Vector: {
      Matrix out = Matrix::Zero(n_, count_);
      for (Eigen::Index i = 0; i < m_; ++i) out += a(i) * vector_outputs_[static_cast<std::size_t>(i)];
      return out;
    }
    case Formulation::Scalar: {
      // Row j of the coefficient block matrix is a_j (length m).
      const Matrix blocks = Eigen::Map<const Matrix>(a.data(), m_, n_).transpose();
      return blocks * scalar_features_;
    }
  }
  return {};
}

Matrix FeatureBatch::at(Eigen::Index k) const {
  const Eigen::Index p = coefficient_count();
  Matrix phi = Matrix::Zero(n_, p);
  switch (formulation_) {
    case Formulation::Constant: phi.setIdentity(); break;
    case Formulation::Vector:
      for (Eigen::Index i = 0; i < m_; ++i) phi.col(i) = vector_outputs_[static_cast<std::size_t>(i)].col(k);
      break;
    case Formulation::Scalar:
      for (Eigen::Index j = 0; j < n_; ++j) phi.block(j, j * m_, 1, m_) = scalar_features_.col(k).transpose();
      break;
  }
  return phi;
}

namespace {

ForwardPass run_forward(const KernelModel& model, const Matrix& raw_inputs, bool keep) {
  const Eigen::Index n = model.output_dim();
  require(raw_inputs.rows() == 2 * n, ErrorKind::ShapeMismatch, "kernel inputs must have 2n rows");
  const Eigen::Index count = raw_inputs.cols();
  ForwardPass pass{{}, FeatureBatch(model.formulation(), n, model.kernel_count(), count, {}, {})};
  if (model.formulation() == Formulation::Constant) return pass;

  const Matrix x = model.standardization().apply(raw_inputs);
  std::vector<Matrix> outputs;
  for (const Network& net : model.networks()) {
    std::vector<Matrix> cache;
    outputs.push_back(standardized_tanh_forward(net, x, keep ? &cache : nullptr));
    if (keep) pass.activations.push_back(std::move(cache));
  }
  if (model.formulation() == Formulation::Vector) {
    pass.features = FeatureBatch(Formulation::Vector, n, model.kernel_count(), count, std::move(outputs), {});
  } else {
    pass.features = FeatureBatch(Formulation::Scalar, n, model.kernel_count(), count, {}, std::move(outputs.front()));
  }
  return pass;
}

}  // namespace

FeatureBatch features(const KernelModel& model, const Matrix& raw_inputs) {
  return run_forward(model, raw_inputs, false).features;
}

ForwardPass forward(const KernelModel& model, const Matrix& raw_inputs) { return run_forward(model, raw_inputs, true); }

Parameters backprop(const KernelModel& model, const ForwardPass& pass, std::span<const CotangentTerm> terms) {
  const Eigen::Index n = model.output_dim();
  const Eigen::Index m = model.kernel_count();
  const Eigen::Index p = model.coefficient_count();
  const Eigen::Index count = pass.features.count();
  for (const CotangentTerm& t : terms) {
    require_shape(t.u, n, count, "cotangent u");
    require_shape(t.v, p, 1, "cotangent v");
  }
  Parameters grads;
  if (model.formulation() == Formulation::Constant) return grads;
  require(pass.activations.size() == model.networks().size(), ErrorKind::ShapeMismatch,
          "forward pass was run without activations");

  if (model.formulation() == Formulation::Vector) {
    for (Eigen::Index i = 0; i < m; ++i) {
      Matrix g = Matrix::Zero(n, count);
      for (const CotangentTerm& t : terms) g += t.v(i) * t.u;
      const auto idx = static_cast<std::size_t>(i);
      grads.push_back(backward_network(model.networks()[idx], pass.activations[idx], std::move(g)));
    }
  } else {
    Matrix g = Matrix::Zero(m, count);
    for (const CotangentTerm& t : terms) {
      const Matrix blocks = Eigen::Map<const Matrix>(t.v.data(), m, n).transpose();  // n × m
      g += blocks.transpose() * t.u;
    }
    grads.push_back(backward_network(model.networks().front(), pass.activations.front(), std::move(g)));
  }
  return grads;
}

Parameters kernel_jacobian_theta(const KernelModel& model, const dynamics::State& x, const Vector& a,
                                 const Vector& residual) {
  require_shape(residual, model.output_dim(), 1, "residual");
  const ForwardPass pass = forward(model, x.stacked());
  const CotangentTerm term{2.0 * residual, a};
  return backprop(model, pass, std::span<const CotangentTerm>(&term, 1));
}

KernelModel normalize(const KernelModel& model) {
  Parameters nets = model.networks();
  bool changed = false;
  const double cap = model.sigma_bar();
  for (std::size_t i = 0; i < nets.size(); ++i) {
    for (std::size_t l = 0; l < nets[i].layers.size(); ++l) {
      Matrix& w = nets[i].layers[l].weight;
      const double sigma = spectral_norm(w, model.power_iters(), layer_seed(i, l));
      if (sigma > cap * (1.0 + 1e-9)) {
        w *= cap / sigma;
        changed = true;
      }
    }
  }
  if (!changed) return model;
  return model.with_parameters(std::move(nets));
}

std::vector<std::vector<double>> layer_norms(const KernelModel& model) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < model.networks().size(); ++i) {
    std::vector<double> norms;
    const auto& layers = model.networks()[i].layers;
    for (std::size_t l = 0; l < layers.size(); ++l)
      norms.push_back(spectral_norm(layers[l].weight, model.power_iters(), layer_seed(i, l)));
    out.push_back(std::move(norms));
  }
  return out;
}

double lipschitz_bound(const KernelModel& model) {
  if (model.formulation() == Formulation::Constant) return 0.0;
  const double input_gain = 1.0 / model.standardization().scale.minCoeff();
  double sum_sq = 0.0;
  for (const Network& net : model.networks()) {
    double prod = input_gain;
    // Exact σ_max here: the bound must hold even where power iteration has
    // not fully converged.
    for (const DenseLayer& layer : net.layers) prod *= Eigen::JacobiSVD<Matrix>(layer.weight).singularValues()(0);
    sum_sq += prod * prod;
  }
  if (model.formulation() == Formulation::Scalar) sum_sq *= static_cast<double>(model.output_dim());
  return std::sqrt(sum_sq);
}

CoefficientFit fit_coefficients(const FeatureBatch& phi, const Matrix& forces, double ridge, double fallback_ridge) {
  require(forces.cols() == phi.count(), ErrorKind::ShapeMismatch, "force batch size");
  const Matrix A = phi.regressor();
  const Matrix b = Eigen::Map<const Matrix>(forces.data(), forces.size(), 1);
  if (ridge > 0.0) return {solve_least_squares(A, b, ridge), ridge};
  try {
    return {solve_least_squares(A, b, 0.0), 0.0};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RankDeficient || !(fallback_ridge > 0.0)) throw;
    return {solve_least_squares(A, b, fallback_ridge), fallback_ridge};
  }
}

RepresentationError representation_error(const KernelModel& model, std::span<const Sample> samples) {
  require(!samples.empty(), ErrorKind::BadParams, "representation error needs samples");
  const FeatureBatch phi = features(model, stacked_inputs(samples));
  const Matrix forces = stacked_forces(samples);
  RepresentationError out;
  out.a = fit_coefficients(phi, forces).a;
  const Matrix resid = phi.predict(out.a) - forces;
  out.pointwise = resid.colwise().norm().transpose();
  out.d = out.pointwise.maxCoeff();
  return out;
}

Vector flatten(const Parameters& p) {
  Vector flat(static_cast<Eigen::Index>(parameter_count(p)));
  Eigen::Index off = 0;
  for (const Network& net : p) {
    for (const DenseLayer& layer : net.layers) {
      flat.segment(off, layer.weight.size()) = Eigen::Map<const Vector>(layer.weight.data(), layer.weight.size());
      off += layer.weight.size();
      flat.segment(off, layer.bias.size()) = layer.bias;
      off += layer.bias.size();
    }
  }
  return flat;
}

Parameters unflatten(const Parameters& layout, const Vector& flat) {
  require(static_cast<std::size_t>(flat.size()) == parameter_count(layout), ErrorKind::ShapeMismatch,
          "flat parameter length");
  Parameters out = layout;
  Eigen::Index off = 0;
  for (Network& net : out) {
    for (DenseLayer& layer : net.layers) {
      Eigen::Map<Vector>(layer.weight.data(), layer.weight.size()) = flat.segment(off, layer.weight.size());
      off += layer.weight.size();
      layer.bias = flat.segment(off, layer.bias.size());
      off += layer.bias.size();
    }
  }
  return out;
}

Parameters zeros_like(const Parameters& p) {
  Parameters out = p;
  for (Network& net : out)
    for (DenseLayer& layer : net.layers) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
  return out;
}

std::size_t parameter_count(const Parameters& p) {
  std::size_t count = 0;
  for (const Network& net : p)
    for (const DenseLayer& layer : net.layers) count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return count;
}

}  // namespace metaadapt::kernels
