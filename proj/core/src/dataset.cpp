#include "metaadapt/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metaadapt/errors.hpp"

namespace metaadapt {

namespace {

constexpr const char* kHeader = "t,qx,qy,qz,vx,vy,vz,fx,fy,fz";

void append_number(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

double parse_number(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    fail(ErrorKind::Io, "dataset line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void ConditionDataset::validate() const {
  require(dt > 0.0, ErrorKind::BadParams, "dataset sample period must be positive");
  for (const Sample& s : samples) {
    require(s.q.size() == s.qdot.size() && s.q.size() == s.f.size() && s.q.size() > 0, ErrorKind::ShapeMismatch,
            "dataset sample dimensions disagree");
    require(s.q.allFinite() && s.qdot.allFinite() && s.f.allFinite() && std::isfinite(s.t), ErrorKind::NonFinite,
            "dataset '" + label + "' has non-finite entries");
  }
}

Matrix stacked_inputs(std::span<const Sample> samples) {
  require(!samples.empty(), ErrorKind::BadParams, "empty sample set");
  const Eigen::Index n = samples.front().q.size();
  Matrix x(2 * n, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    x.col(c).head(n) = samples[k].q;
    x.col(c).tail(n) = samples[k].qdot;
  }
  return x;
}

Matrix stacked_forces(std::span<const Sample> samples) {
  require(!samples.empty(), ErrorKind::BadParams, "empty sample set");
  const Eigen::Index n = samples.front().f.size();
  Matrix f(n, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) f.col(static_cast<Eigen::Index>(k)) = samples[k].f;
  return f;
}

void save_dataset(const ConditionDataset& d, const std::filesystem::path& stem) {
  d.validate();
  std::filesystem::path csv = stem;
  csv += ".csv";
  std::ofstream out(csv);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + csv.string());
  out << kHeader << '\n';
  std::string line;
  for (const Sample& s : d.samples) {
    require(s.q.size() == 3, ErrorKind::ShapeMismatch, "dataset CSV format requires n = 3");
    line.clear();
    append_number(line, s.t);
    for (const Vector* v : {&s.q, &s.qdot, &s.f})
      for (Eigen::Index i = 0; i < 3; ++i) {
        line.push_back(',');
        append_number(line, (*v)(i));
      }
    out << line << '\n';
  }

  std::filesystem::path meta = stem;
  meta += ".json";
  nlohmann::json j{{"condition", d.label}, {"wind_speed", d.wind_speed}, {"dt", d.dt},
                   {"samples", d.samples.size()}};
  std::ofstream jout(meta);
  require(static_cast<bool>(jout), ErrorKind::Io, "cannot write " + meta.string());
  jout << j.dump(1) << '\n';
}

ConditionDataset load_dataset(const std::filesystem::path& stem) {
  std::filesystem::path meta = stem;
  meta += ".json";
  std::ifstream jin(meta);
  require(static_cast<bool>(jin), ErrorKind::Io, "cannot open " + meta.string());
  ConditionDataset d;
  try {
    const nlohmann::json j = nlohmann::json::parse(jin);
    d.label = j.at("condition").get<std::string>();
    d.wind_speed = j.value("wind_speed", 0.0);
    d.dt = j.at("dt").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, "bad dataset sidecar " + meta.string() + ": " + e.what());
  }

  std::filesystem::path csv = stem;
  csv += ".csv";
  std::ifstream in(csv);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  require(line == kHeader, ErrorKind::Io, "unexpected dataset header in " + csv.string());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double vals[10];
    std::size_t field = 0;
    std::size_t start = 0;
    while (field < 10) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      vals[field++] = parse_number(std::string_view(line).substr(start, end - start), line_no);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    require(field == 10, ErrorKind::Io, "dataset line " + std::to_string(line_no) + " must have 10 fields");
    Sample s;
    s.t = vals[0];
    s.q = Eigen::Map<const Vector>(vals + 1, 3);
    s.qdot = Eigen::Map<const Vector>(vals + 4, 3);
    s.f = Eigen::Map<const Vector>(vals + 7, 3);
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

ConditionDataset decimate(const ConditionDataset& d, std::size_t stride) {
  require(stride >= 1, ErrorKind::BadParams, "decimation stride must be >= 1");
  if (stride == 1) return d;
  ConditionDataset out{d.label, d.wind_speed, d.dt * static_cast<double>(stride), {}};
  for (std::size_t k = 0; k < d.samples.size(); k += stride) out.samples.push_back(d.samples[k]);
  return out;
}

}  // namespace metaadapt
