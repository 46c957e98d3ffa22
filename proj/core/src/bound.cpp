#include "metaadapt/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metaadapt/errors.hpp"

namespace metaadapt::adapt {

BoundConstants bound_constants(const BoundInputs& in) {
  require(in.h_min > 0.0 && in.pbar_min > 0.0 && in.pbar_max >= in.pbar_min && in.h_max >= in.h_min,
          ErrorKind::BadParams, "bound_constants: eigenvalue extremes must be positive and ordered");
  require(in.k > 0.0 && in.lambda > 0.0 && in.gamma > 0.0, ErrorKind::BadParams, "bound_constants: gains");
  BoundConstants c;
  const double pinv_min = 1.0 / in.pbar_max;
  const double pinv_max = 1.0 / in.pbar_min;
  c.m_min = std::min(in.h_min, pinv_min);
  c.m_max = std::max(in.h_max, pinv_max);
  c.kappa = c.m_max / c.m_min;
  const double rate = std::min(in.k, 0.5 * in.lambda * (pinv_min + in.gamma));
  c.lambda_con = rate / c.m_max;
  c.d_bar = in.disturbance / std::sqrt(c.m_min);
  c.ball_radius = c.d_bar / (c.lambda_con * std::sqrt(c.m_min));
  const double kappa_sup = std::max(in.h_max / in.h_min, pinv_max / pinv_min);
  c.theorem_radius = kappa_sup / rate * in.disturbance;
  return c;
}

BoundReport theorem_bound(const Gains& gains, const EpisodeLog& log) {
  require(!log.steps.empty(), ErrorKind::BadParams, "theorem_bound: empty log");
  BoundReport rep;
  BoundInputs& in = rep.inputs;
  in.k = symmetric_eigen_range(symmetrized(gains.K)).min;
  in.lambda = gains.lambda;
  in.gamma = gains.gamma;
  in.h_min = log.h_min;
  in.h_max = log.h_max;
  in.pbar_min = std::numeric_limits<double>::infinity();
  in.pbar_max = 0.0;
  const std::size_t segments = std::max<std::size_t>(1, log.segment_a_star.size());
  for (const auto& r : log.steps) {
    in.pbar_min = std::min(in.pbar_min, r.pbar_min);
    in.pbar_max = std::max(in.pbar_max, r.pbar_max);
    const Vector& a = log.segment_a_star.at(std::min(r.segment, segments - 1));
    const Vector d = r.phi * a - r.f;
    const Vector d1 = r.W * a - r.y1;
    const Vector lower = r.W.transpose() * d1 + gains.lambda * gains.gamma * a;
    in.disturbance = std::max(in.disturbance, std::sqrt(d.squaredNorm() + lower.squaredNorm()));
  }
  rep.constants = bound_constants(in);
  const BoundConstants& c = rep.constants;

  const std::size_t N = log.steps.size();
  rep.t.reserve(N);
  rep.measured.reserve(N);
  rep.envelope.reserve(N);
  double t0 = log.steps.front().t;
  double y0 = 0.0;
  std::size_t seg = std::numeric_limits<std::size_t>::max();
  for (const auto& r : log.steps) {
    const double y = std::sqrt(r.s.squaredNorm() + r.a_tilde.squaredNorm());
    if (r.segment != seg) {
      seg = r.segment;
      t0 = r.t;
      y0 = y;
    }
    const double decay = std::exp(-c.lambda_con * (r.t - t0));
    const double env = std::sqrt(c.kappa) * y0 * decay + c.ball_radius * (1.0 - decay);
    rep.t.push_back(r.t);
    rep.measured.push_back(y);
    rep.envelope.push_back(env);
    if (y > env * (1.0 + 1e-9) + 1e-12) ++rep.violations;
  }
  rep.violation_fraction = static_cast<double>(rep.violations) / static_cast<double>(N);
  return rep;
}

}  // namespace metaadapt::adapt
