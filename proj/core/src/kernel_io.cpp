#include "metaadapt/kernel_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metaadapt/errors.hpp"

namespace metaadapt::kernels {

namespace {

using nlohmann::json;

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  return v;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from(const json& rows, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const json& row = rows.at(r);
    require(static_cast<Eigen::Index>(row.size()) == cols, ErrorKind::ShapeMismatch, "ragged weight matrix");
    for (std::size_t c = 0; c < row.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

std::string model_to_json(const KernelModel& model) {
  json j;
  j["format"] = "metaadapt.kernel_model";
  j["version"] = kModelFormatVersion;
  j["formulation"] = to_string(model.formulation());
  j["n"] = model.output_dim();
  j["m"] = model.kernel_count();
  j["sigma_bar"] = model.sigma_bar();
  j["power_iters"] = model.power_iters();
  j["standardization"] = {{"mean", vector_json(model.standardization().mean)},
                          {"scale", vector_json(model.standardization().scale)}};
  json nets = json::array();
  for (const Network& net : model.networks()) {
    json widths = json::array({net.input_dim()});
    json layers = json::array();
    for (const DenseLayer& layer : net.layers) {
      widths.push_back(layer.weight.rows());
      layers.push_back({{"weight", matrix_json(layer.weight)}, {"bias", vector_json(layer.bias)}});
    }
    nets.push_back({{"widths", widths}, {"layers", layers}});
  }
  j["networks"] = nets;
  return j.dump(1);
}

KernelModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    require(j.at("format").get<std::string>() == "metaadapt.kernel_model", ErrorKind::Io, "not a kernel model file");
    const int version = j.at("version").get<int>();
    require(version == kModelFormatVersion, ErrorKind::Io, "unsupported model format version " + std::to_string(version));
    const Formulation f = parse_formulation(j.at("formulation").get<std::string>());
    const auto n = j.at("n").get<Eigen::Index>();
    const auto m = j.at("m").get<Eigen::Index>();
    Standardization s{vector_from(j.at("standardization").at("mean")), vector_from(j.at("standardization").at("scale"))};
    Parameters nets;
    for (const json& jn : j.at("networks")) {
      const json& widths = jn.at("widths");
      Network net;
      std::size_t l = 0;
      for (const json& jl : jn.at("layers")) {
        const auto in = widths.at(l).get<Eigen::Index>();
        net.layers.push_back({matrix_from(jl.at("weight"), in), vector_from(jl.at("bias"))});
        require(net.layers.back().weight.rows() == widths.at(l + 1).get<Eigen::Index>(), ErrorKind::ShapeMismatch,
                "layer width does not match header");
        ++l;
      }
      nets.push_back(std::move(net));
    }
    return KernelModel::from_parts(f, n, m, std::move(nets), std::move(s), j.at("sigma_bar").get<double>(),
                                   j.at("power_iters").get<int>());
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed model file: ") + e.what());
  }
}

void save_model(const KernelModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write model file " + path.string());
  out << model_to_json(model) << '\n';
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing model file " + path.string());
}

KernelModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace metaadapt::kernels
