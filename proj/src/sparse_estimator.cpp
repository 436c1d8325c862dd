#include "aot/sparse_estimator.hpp"

namespace aot {

ConcentrationBound concentration(const ConcentrationParams& p, std::size_t depth) {
  if (p.obs_samples == 0 || p.horizon == 0 || p.num_actions == 0 || !(p.lambda > 0.0) || !(p.v_max > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "concentration parameters must be positive");
  }
  if (depth >= p.horizon) throw Error(ErrorKind::InvalidArgument, "depth must be below the horizon");
  const double remaining = static_cast<double>(p.horizon - depth);
  ConcentrationBound out;
  out.error_bound = remaining * (remaining - 1.0) / 2.0 * p.lambda;
  const double actions = static_cast<double>(p.num_actions);
  const double samples = static_cast<double>(p.obs_samples);
  // log of 2|A|(|A|C)^(L-d) exp(-C lambda^2 / 2 Vmax^2), to keep large powers finite.
  const double log_failure = std::log(2.0 * actions) + remaining * std::log(actions * samples) -
                             samples * p.lambda * p.lambda / (2.0 * p.v_max * p.v_max);
  out.probability = std::clamp(1.0 - std::exp(log_failure), 0.0, 1.0);
  return out;
}

double v_max_for(const TabularPomdp& model) { return model.r_max * static_cast<double>(model.horizon); }

double v_max_for(std::optional<double> configured) {
  if (!configured) throw Error(ErrorKind::MissingVmax, "generative model needs a configured V_max");
  return *configured;
}

}  // namespace aot
